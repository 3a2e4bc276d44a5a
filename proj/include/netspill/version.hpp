#pragma once

namespace netspill {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace netspill
