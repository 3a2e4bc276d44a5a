#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace netspill {

using NodeId = std::int32_t;

/// Per-node observations: exposure A, covariates Z, censoring indicator C and
/// outcome Y. Y is present exactly when C == 0.
struct StudyData {
  std::vector<int> exposure;
  Eigen::MatrixXd covariates;  // n x q, no intercept column
  std::vector<std::string> covariate_names;
  std::vector<int> censored;
  std::vector<std::optional<double>> outcome;

  std::size_t size() const noexcept { return exposure.size(); }

  /// Throws InputError on length mismatches, non-binary A or C, an outcome
  /// present for a censored node (or missing for an uncensored one), or
  /// non-finite values.
  void validate() const;

  /// Rows in the given order.
  StudyData subset(std::span<const NodeId> rows) const;
};

}  // namespace netspill
