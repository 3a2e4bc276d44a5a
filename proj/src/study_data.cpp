#include "netspill/study_data.hpp"

#include "netspill/errors.hpp"

#include <cmath>
#include <string>

namespace netspill {

void StudyData::validate() const {
  const std::size_t n = exposure.size();
  if (censored.size() != n || outcome.size() != n || static_cast<std::size_t>(covariates.rows()) != n) {
    throw InputError("study data: column lengths differ");
  }
  if (!covariate_names.empty() && covariate_names.size() != static_cast<std::size_t>(covariates.cols())) {
    throw InputError("study data: covariate names do not match covariate columns");
  }
  if (!covariates.allFinite()) throw InputError("study data: non-finite covariate");
  for (std::size_t i = 0; i < n; ++i) {
    if (exposure[i] != 0 && exposure[i] != 1) {
      throw InputError("study data: exposure must be 0/1 (row " + std::to_string(i) + ")");
    }
    if (censored[i] != 0 && censored[i] != 1) {
      throw InputError("study data: censoring indicator must be 0/1 (row " + std::to_string(i) + ")");
    }
    if (censored[i] == 1 && outcome[i].has_value()) {
      throw InputError("study data: outcome present for censored row " + std::to_string(i));
    }
    if (censored[i] == 0 && !outcome[i].has_value()) {
      throw InputError("study data: outcome missing for uncensored row " + std::to_string(i));
    }
    if (outcome[i] && !std::isfinite(*outcome[i])) {
      throw InputError("study data: non-finite outcome at row " + std::to_string(i));
    }
  }
}

StudyData StudyData::subset(std::span<const NodeId> rows) const {
  StudyData out;
  out.covariate_names = covariate_names;
  out.covariates.resize(static_cast<Eigen::Index>(rows.size()), covariates.cols());
  out.exposure.reserve(rows.size());
  out.censored.reserve(rows.size());
  out.outcome.reserve(rows.size());
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const auto r = static_cast<std::size_t>(rows[k]);
    out.exposure.push_back(exposure.at(r));
    out.censored.push_back(censored.at(r));
    out.outcome.push_back(outcome.at(r));
    out.covariates.row(static_cast<Eigen::Index>(k)) = covariates.row(static_cast<Eigen::Index>(r));
  }
  return out;
}

}  // namespace netspill
