#include "netspill/report.hpp"

#include "netspill/csv_io.hpp"

#include <ostream>

namespace netspill {

using nlohmann::json;

namespace {

std::string optional_number(const std::optional<double>& v) { return v ? format_number(*v) : ""; }

json coefficient_map(const DesignMatrix& design, const Eigen::VectorXd& coefs) {
  json j = json::object();
  for (std::size_t k = 0; k < design.column_names.size(); ++k) {
    j[design.column_names[k]] = coefs[static_cast<Eigen::Index>(k)];
  }
  return j;
}

}  // namespace

void write_simreport_csv(std::ostream& out, const std::vector<SimReport>& reports) {
  out << "estimand,true,bias,ese,ase,ecp\n";
  const bool prefixed = reports.size() > 1;
  for (const auto& rep : reports) {
    const std::string prefix = prefixed ? rep.scenario_name + "/" + rep.variant.label() + "/" : "";
    for (const auto& row : rep.rows) {
      out << prefix << row.estimand << ',' << format_number(row.truth) << ',' << format_number(row.bias) << ','
          << optional_number(row.ese) << ',' << format_number(row.ase) << ',' << format_number(row.ecp) << '\n';
    }
  }
}

json simreport_json(const std::vector<SimReport>& reports) {
  json list = json::array();
  for (const auto& rep : reports) {
    json j;
    j["scenario_name"] = rep.scenario_name;
    j["variant"] = {{"censoring_fit", to_string(rep.variant.censoring_fit)},
                    {"grouping", to_string(rep.variant.grouping)}};
    j["seed"] = rep.seed;
    j["replicates"] = rep.replicates;
    j["successes"] = rep.successes;
    j["failures"] = rep.failures;
    j["warnings"] = rep.warnings;
    j["scenario_hash"] = rep.scenario_hash;
    j["scenario"] = rep.scenario;
    j["network"] = rep.network;
    json rows = json::array();
    for (const auto& row : rep.rows) {
      json r = {{"estimand", row.estimand}, {"true", row.truth},  {"bias", row.bias},
                {"ase", row.ase},           {"ecp", row.ecp},     {"ecp_fixed_truth", row.ecp_fixed_truth}};
      r["ese"] = row.ese ? json(*row.ese) : json(nullptr);
      rows.push_back(std::move(r));
    }
    j["rows"] = std::move(rows);
    j["replicate_index"] = rep.replicate_index;
    j["estimates"] = rep.estimates;
    j["standard_errors"] = rep.standard_errors;
    j["truths"] = rep.truths;
    list.push_back(std::move(j));
  }
  return json{{"reports", std::move(list)}};
}

void write_effects_csv(std::ostream& out, const std::vector<EffectEstimate>& effects) {
  out << "kind,alpha1,alpha0,rd,se,ci_lo,ci_hi\n";
  for (const auto& e : effects) {
    out << to_string(e.kind) << ',' << format_number(e.alpha1) << ',' << optional_number(e.alpha0) << ','
        << format_number(e.rd) << ',' << optional_number(e.se) << ',' << optional_number(e.ci_lo) << ','
        << optional_number(e.ci_hi) << '\n';
  }
}

void write_weights_csv(std::ostream& out, const std::vector<std::string>& ids, const WeightReport& report) {
  out << "node,f,s,weight,flag\n";
  for (std::size_t i = 0; i < ids.size(); ++i) {
    out << ids[i] << ',' << format_number(report.density[i]) << ',' << format_number(report.survival[i]) << ','
        << optional_number(report.weight[i]) << ',' << (report.flagged[i] ? 1 : 0) << '\n';
  }
}

json fit_summary_json(const NuisanceFits& fits, const SandwichResult& sandwich, const WeightReport& weights) {
  const auto& p = fits.propensity;
  const auto& c = fits.censoring;
  json j;
  j["propensity"] = {{"model", "mixed"},
                     {"coefficients", coefficient_map(p.design, p.fit.fixed_coefficients)},
                     {"re_sd", p.fit.re_sd},
                     {"converged", p.fit.converged},
                     {"log_likelihood", p.fit.log_likelihood},
                     {"iterations", p.fit.iterations},
                     {"groups", p.groups.group_count}};
  json cj = {{"model", to_string(c.kind)},
             {"coefficients", coefficient_map(c.design, c.coefficients())},
             {"re_sd", c.re_sd()},
             {"converged", c.converged()},
             {"log_likelihood", c.log_likelihood()},
             {"groups", c.groups.group_count}};
  if (c.kind == CensoringFitKind::Mixed && c.mixed.on_boundary()) {
    cj["note"] = "random-intercept sd estimated at 0; the fit equals the logistic model";
  }
  if (c.kind == CensoringFitKind::Logistic && c.logistic.separation_warning) {
    cj["note"] = "possible separation: large coefficients";
  }
  j["censoring"] = std::move(cj);

  json targets = json::array();
  const auto& st = sandwich.stack;
  for (Eigen::Index i = st.target_offset(); i < st.size(); ++i) {
    targets.push_back({{"estimand", st.names[static_cast<std::size_t>(i)]},
                       {"estimate", st.values[i]},
                       {"se", sandwich.se(i)}});
  }
  j["targets"] = std::move(targets);
  j["variance"] = {{"groups", sandwich.m}, {"mean_group_size", sandwich.k_hat}};
  j["weights"] = {{"threshold", weights.threshold},
                  {"min", weights.min_weight},
                  {"max", weights.max_weight},
                  {"cv", weights.cv},
                  {"flagged", weights.flagged_count}};
  return j;
}

}  // namespace netspill
