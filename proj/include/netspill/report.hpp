#pragma once

#include "netspill/estimator.hpp"
#include "netspill/models.hpp"
#include "netspill/sim.hpp"
#include "netspill/variance.hpp"
#include "netspill/weights.hpp"

#include "json.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace netspill {

/// `estimand,true,bias,ese,ase,ecp`. With more than one report the estimand
/// is prefixed by "<scenario>/<variant>/". A missing ESE is left blank.
void write_simreport_csv(std::ostream& out, const std::vector<SimReport>& reports);

/// Metadata, summary rows and per-replicate values of every report.
nlohmann::json simreport_json(const std::vector<SimReport>& reports);

/// `kind,alpha1,alpha0,rd,se,ci_lo,ci_hi`; absent fields are blank.
void write_effects_csv(std::ostream& out, const std::vector<EffectEstimate>& effects);

/// `node,f,s,weight,flag`; the weight is blank for censored nodes.
void write_weights_csv(std::ostream& out, const std::vector<std::string>& ids, const WeightReport& report);

/// Coefficients, random-intercept sds and convergence flags of both models,
/// with the target estimates and their standard errors.
nlohmann::json fit_summary_json(const NuisanceFits& fits, const SandwichResult& sandwich, const WeightReport& weights);

}  // namespace netspill
