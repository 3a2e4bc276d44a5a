#include "netspill/log.hpp"

#include <iostream>
#include <mutex>

namespace netspill {

namespace {

std::mutex sink_lock;

WarningSink& current_sink() {
  static WarningSink sink = [](const std::string& message) { std::cerr << "warning: " << message << '\n'; };
  return sink;
}

}  // namespace

WarningSink set_warning_sink(WarningSink sink) {
  std::scoped_lock guard(sink_lock);
  WarningSink previous = std::move(current_sink());
  current_sink() = std::move(sink);
  return previous;
}

void warn(const std::string& message) {
  std::scoped_lock guard(sink_lock);
  if (current_sink()) current_sink()(message);
}

}  // namespace netspill
