#include "netspill/sim.hpp"

#include "netspill/errors.hpp"
#include "netspill/log.hpp"
#include "netspill/quadrature.hpp"
#include "netspill/variance.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <limits>
#include <thread>

namespace netspill {

using nlohmann::json;

std::string to_string(CensoringMechanism mechanism) {
  return mechanism == CensoringMechanism::Independent ? "independent" : "correlated";
}

std::string to_string(VarianceGrouping grouping) {
  return grouping == VarianceGrouping::Components ? "components" : "communities";
}

std::string FitVariant::label() const { return to_string(censoring_fit) + "-" + to_string(grouping); }

namespace {

constexpr std::uint64_t kNetworkStream = std::numeric_limits<std::uint64_t>::max();

std::string fmt_g(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

void check_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!j.is_object()) throw InputError(where + " must be a JSON object");
  for (const auto& item : j.items()) {
    const bool known = std::any_of(allowed.begin(), allowed.end(), [&](const char* k) { return item.key() == k; });
    if (!known) throw InputError("unknown key '" + item.key() + "' in " + where);
  }
}

template <class T>
void read_into(const json& j, const char* key, T& out, const std::string& where) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception&) {
    throw InputError("bad value for '" + std::string(key) + "' in " + where);
  }
}

CensoringMechanism parse_mechanism(const std::string& text) {
  if (text == "independent") return CensoringMechanism::Independent;
  if (text == "correlated") return CensoringMechanism::ComponentCorrelated;
  throw InputError("unknown censoring mechanism '" + text + "' (expected independent or correlated)");
}

VarianceGrouping parse_grouping(const std::string& text) {
  if (text == "components") return VarianceGrouping::Components;
  if (text == "communities") return VarianceGrouping::Communities;
  throw InputError("unknown variance grouping '" + text + "' (expected components or communities)");
}

bool finite(double v) { return std::isfinite(v); }

}  // namespace

void Scenario::validate() const {
  if (replicates < 1) throw InputError("replicates must be at least 1");
  if (variants.empty()) throw InputError("scenario needs at least one fit variant");
  for (std::size_t i = 0; i < variants.size(); ++i) {
    for (std::size_t j = 0; j < i; ++j) {
      if (variants[i] == variants[j]) throw InputError("duplicate fit variant " + variants[i].label());
    }
  }
  if (!finite(censoring_sd) || censoring_sd < 0) throw InputError("censoring sd must be finite and non-negative");
  const auto& c = dgp;
  for (double v : {c.covariate_p, c.censor_intercept, c.censor_covariate, c.outcome_intercept, c.outcome_exposure,
                   c.outcome_fraction, c.outcome_interaction, c.outcome_covariate, c.exposure_intercept,
                   c.exposure_covariate, c.exposure_sd}) {
    if (!finite(v)) throw InputError("data-generating coefficients must be finite");
  }
  if (c.covariate_p < 0 || c.covariate_p > 1) throw InputError("covariate probability must lie in [0, 1]");
  if (c.exposure_sd < 0) throw InputError("exposure sd must be non-negative");
  if (allocs.empty()) throw InputError("at least one allocation is required");
  const auto a = allocations();
  allocation_pairs(a);  // rejects duplicates
  if (const auto* reg = std::get_if<RegularNetworkSpec>(&network)) {
    if (reg->m < 1) throw InputError("component count m must be at least 1");
    if (reg->degree < 1) throw InputError("degree must be at least 1");
    if (!finite(reg->mean_size) || reg->mean_size <= 0) throw InputError("mean component size must be positive");
  } else {
    const auto& trip = std::get<TripNetworkSpec>(network);
    if (trip.sizes.empty()) throw InputError("trip network needs component sizes");
    for (int s : trip.sizes) {
      if (s < 2) throw InputError("trip component sizes must be at least 2");
    }
  }
}

std::vector<Allocation> Scenario::allocations() const {
  std::vector<Allocation> out;
  out.reserve(allocs.size());
  for (double a : allocs) out.emplace_back(a);
  return out;
}

json to_json(const Scenario& s) {
  json j;
  j["name"] = s.name;
  if (const auto* reg = std::get_if<RegularNetworkSpec>(&s.network)) {
    j["network"] = {{"kind", "regular"}, {"m", reg->m}, {"mean_size", reg->mean_size}, {"degree", reg->degree}};
  } else {
    const auto& trip = std::get<TripNetworkSpec>(s.network);
    j["network"] = {{"kind", "trip"}, {"sizes", trip.sizes}, {"edges", trip.edges}};
  }
  j["censoring"] = {{"mechanism", to_string(s.censoring)}, {"sd", s.censoring_sd}};
  j["variants"] = json::array();
  for (const auto& v : s.variants) {
    j["variants"].push_back({{"censoring_fit", to_string(v.censoring_fit)}, {"grouping", to_string(v.grouping)}});
  }
  const auto& c = s.dgp;
  j["dgp"] = {{"covariate_p", c.covariate_p},
              {"censor_intercept", c.censor_intercept},
              {"censor_covariate", c.censor_covariate},
              {"outcome_intercept", c.outcome_intercept},
              {"outcome_exposure", c.outcome_exposure},
              {"outcome_fraction", c.outcome_fraction},
              {"outcome_interaction", c.outcome_interaction},
              {"outcome_covariate", c.outcome_covariate},
              {"exposure_intercept", c.exposure_intercept},
              {"exposure_covariate", c.exposure_covariate},
              {"exposure_sd", c.exposure_sd}};
  j["allocs"] = s.allocs;
  j["replicates"] = s.replicates;
  j["seed"] = s.seed;
  return j;
}

Scenario scenario_from_json(const json& j) {
  check_keys(j, {"name", "network", "censoring", "variants", "dgp", "allocs", "replicates", "seed"}, "scenario");
  Scenario s;
  read_into(j, "name", s.name, "scenario");
  if (j.contains("network")) {
    const json& n = j.at("network");
    std::string kind = "regular";
    if (n.is_object()) read_into(n, "kind", kind, "network");
    if (kind == "regular") {
      check_keys(n, {"kind", "m", "mean_size", "degree"}, "network");
      RegularNetworkSpec reg;
      read_into(n, "m", reg.m, "network");
      read_into(n, "mean_size", reg.mean_size, "network");
      read_into(n, "degree", reg.degree, "network");
      s.network = reg;
    } else if (kind == "trip") {
      check_keys(n, {"kind", "sizes", "edges"}, "network");
      TripNetworkSpec trip;
      read_into(n, "sizes", trip.sizes, "network");
      read_into(n, "edges", trip.edges, "network");
      s.network = trip;
    } else {
      throw InputError("unknown network kind '" + kind + "' (expected regular or trip)");
    }
  }
  if (j.contains("censoring")) {
    const json& c = j.at("censoring");
    check_keys(c, {"mechanism", "sd"}, "censoring");
    std::string mech = to_string(s.censoring);
    read_into(c, "mechanism", mech, "censoring");
    s.censoring = parse_mechanism(mech);
    read_into(c, "sd", s.censoring_sd, "censoring");
  }
  if (j.contains("variants")) {
    const json& vs = j.at("variants");
    if (!vs.is_array()) throw InputError("variants must be an array");
    s.variants.clear();
    for (const json& v : vs) {
      check_keys(v, {"censoring_fit", "grouping"}, "variant");
      FitVariant fv;
      std::string fit = to_string(fv.censoring_fit);
      std::string grouping = to_string(fv.grouping);
      read_into(v, "censoring_fit", fit, "variant");
      read_into(v, "grouping", grouping, "variant");
      fv.censoring_fit = parse_censoring_fit(fit);
      fv.grouping = parse_grouping(grouping);
      s.variants.push_back(fv);
    }
  }
  if (j.contains("dgp")) {
    const json& d = j.at("dgp");
    check_keys(d,
               {"covariate_p", "censor_intercept", "censor_covariate", "outcome_intercept", "outcome_exposure",
                "outcome_fraction", "outcome_interaction", "outcome_covariate", "exposure_intercept",
                "exposure_covariate", "exposure_sd"},
               "dgp");
    auto& c = s.dgp;
    read_into(d, "covariate_p", c.covariate_p, "dgp");
    read_into(d, "censor_intercept", c.censor_intercept, "dgp");
    read_into(d, "censor_covariate", c.censor_covariate, "dgp");
    read_into(d, "outcome_intercept", c.outcome_intercept, "dgp");
    read_into(d, "outcome_exposure", c.outcome_exposure, "dgp");
    read_into(d, "outcome_fraction", c.outcome_fraction, "dgp");
    read_into(d, "outcome_interaction", c.outcome_interaction, "dgp");
    read_into(d, "outcome_covariate", c.outcome_covariate, "dgp");
    read_into(d, "exposure_intercept", c.exposure_intercept, "dgp");
    read_into(d, "exposure_covariate", c.exposure_covariate, "dgp");
    read_into(d, "exposure_sd", c.exposure_sd, "dgp");
  }
  read_into(j, "allocs", s.allocs, "scenario");
  read_into(j, "replicates", s.replicates, "scenario");
  read_into(j, "seed", s.seed, "scenario");
  for (double a : s.allocs) {
    if (!(a > 0.0 && a < 1.0)) throw InputError("allocation " + fmt_g(a) + " is outside (0, 1)");
  }
  s.validate();
  return s;
}

std::vector<Scenario> preset_scenarios(const std::string& preset, std::optional<int> m) {
  const FitVariant logistic{CensoringFitKind::Logistic, VarianceGrouping::Components};
  const FitVariant mixed{CensoringFitKind::Mixed, VarianceGrouping::Components};
  std::vector<Scenario> out;
  if (preset == "paper-main") {
    const int comps = m.value_or(200);
    for (auto mech : {CensoringMechanism::Independent, CensoringMechanism::ComponentCorrelated}) {
      Scenario s;
      s.name = "main-m" + std::to_string(comps) + "-" + to_string(mech);
      s.network = RegularNetworkSpec{comps, 10.0, 4};
      s.censoring = mech;
      s.censoring_sd = 0.3;
      s.variants = {logistic, mixed};
      out.push_back(s);
    }
  } else if (preset == "paper-sweep") {
    const int comps = m.value_or(100);
    for (double sd : {0.1, 0.2, 0.3, 0.4, 0.5}) {
      Scenario s;
      s.name = "sweep-m" + std::to_string(comps) + "-sd" + fmt_g(sd);
      s.network = RegularNetworkSpec{comps, 10.0, 4};
      s.censoring = CensoringMechanism::ComponentCorrelated;
      s.censoring_sd = sd;
      s.variants = {logistic, mixed};
      out.push_back(s);
    }
  } else if (preset == "paper-trip") {
    if (m) throw InputError("--m does not apply to the paper-trip preset");
    for (auto mech : {CensoringMechanism::Independent, CensoringMechanism::ComponentCorrelated}) {
      Scenario base;
      base.name = "trip-" + to_string(mech);
      base.censoring = mech;
      base.variants = {mech == CensoringMechanism::Independent ? logistic : mixed};
      out.push_back(trip_structure_scenario(base));
    }
  } else {
    throw InputError("unknown preset '" + preset + "' (expected paper-main, paper-sweep or paper-trip)");
  }
  for (const auto& s : out) s.validate();
  return out;
}

SimNetwork build_scenario_network(const Scenario& scenario) {
  Rng rng = make_stream(scenario.seed, kNetworkStream);
  SimNetwork out;
  if (const auto* reg = std::get_if<RegularNetworkSpec>(&scenario.network)) {
    out.network = generate_regular_components(reg->m, reg->mean_size, reg->degree, rng, &out.stats);
  } else {
    const auto& trip = std::get<TripNetworkSpec>(scenario.network);
    out.network = generate_trip_shaped(trip.sizes, trip.edges, rng);
  }
  const bool needs_communities = std::any_of(scenario.variants.begin(), scenario.variants.end(),
                                             [](const FitVariant& v) { return v.grouping == VarianceGrouping::Communities; });
  if (needs_communities) out.communities = fast_greedy_communities(out.network);
  return out;
}

SimDataset generate_dataset(const Network& net, const Scenario& scenario, Rng& rng) {
  const auto& c = scenario.dgp;
  const std::size_t n = net.node_count();
  const Partition& comps = net.components();
  const double rho_sd = scenario.censoring == CensoringMechanism::ComponentCorrelated ? scenario.censoring_sd : 0.0;

  SimDataset out;
  StudyData& data = out.data;
  data.covariates.resize(static_cast<Eigen::Index>(n), 1);
  data.covariate_names = {"Z"};
  for (std::size_t i = 0; i < n; ++i) data.covariates(static_cast<Eigen::Index>(i), 0) = draw_bernoulli(rng, c.covariate_p);

  // Both intercept vectors are always drawn so the independent and the
  // zero-sd correlated mechanisms consume the same stream.
  std::vector<double> rho(static_cast<std::size_t>(comps.group_count));
  for (double& r : rho) r = rho_sd * draw_std_normal(rng);
  std::vector<double> b(static_cast<std::size_t>(comps.group_count));
  for (double& v : b) v = c.exposure_sd * draw_std_normal(rng);

  data.censored.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double z = data.covariates(static_cast<Eigen::Index>(i), 0);
    const double eta = c.censor_intercept + c.censor_covariate * z + rho[static_cast<std::size_t>(comps.labels[i])];
    data.censored[i] = draw_bernoulli(rng, inv_logit(eta));
  }

  std::vector<int> degrees(n);
  for (std::size_t i = 0; i < n; ++i) degrees[i] = net.degree(static_cast<NodeId>(i));
  out.outcomes = PotentialOutcomeTable(degrees);
  for (std::size_t i = 0; i < n; ++i) {
    const auto id = static_cast<NodeId>(i);
    const double z = data.covariates(static_cast<Eigen::Index>(i), 0);
    const int d = degrees[i];
    for (int a = 0; a <= 1; ++a) {
      for (int s = 0; s <= d; ++s) {
        const double frac = d > 0 ? static_cast<double>(s) / d : 0.0;
        const double eta = c.outcome_intercept + c.outcome_exposure * a + c.outcome_fraction * frac +
                           c.outcome_interaction * a * frac + c.outcome_covariate * z;
        out.outcomes.at(id, a, s) = draw_bernoulli(rng, inv_logit(eta));
      }
    }
  }

  data.exposure.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double z = data.covariates(static_cast<Eigen::Index>(i), 0);
    const double eta = c.exposure_intercept + c.exposure_covariate * z + b[static_cast<std::size_t>(comps.labels[i])];
    data.exposure[i] = draw_bernoulli(rng, inv_logit(eta));
  }

  data.outcome.assign(n, std::nullopt);
  for (std::size_t i = 0; i < n; ++i) {
    if (data.censored[i]) continue;
    const auto id = static_cast<NodeId>(i);
    int s = 0;
    for (NodeId j : net.neighbors(id)) s += data.exposure[static_cast<std::size_t>(j)];
    data.outcome[i] = out.outcomes.at(id, data.exposure[i], s);
  }
  return out;
}

namespace {

struct Estimand {
  std::string name;
  Arm arm;
  std::size_t alloc;
};

std::vector<Estimand> report_estimands(const std::vector<Allocation>& allocs) {
  std::vector<Estimand> out;
  for (Arm arm : {Arm::Exposed, Arm::Unexposed, Arm::Marginal}) {
    for (std::size_t k = 0; k < allocs.size(); ++k) {
      const std::string a = fmt_g(allocs[k].value());
      std::string name = arm == Arm::Marginal ? "Y(" + a + ")" : "Y(" + std::to_string(static_cast<int>(arm)) + "," + a + ")";
      out.push_back({name, arm, k});
    }
  }
  return out;
}

struct VariantOutcome {
  bool ok = false;
  std::string error;
  std::vector<double> estimates;
  std::vector<double> ses;
};

struct ReplicateOutcome {
  std::vector<double> truth;
  std::vector<VariantOutcome> variants;
};

template <class Fn>
void parallel_for(int count, int threads, Fn&& fn) {
  threads = std::clamp(threads, 1, std::max(1, count));
  if (threads == 1) {
    for (int i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(threads));
  for (int t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (int i = next++; i < count; i = next++) fn(i);
    });
  }
  for (auto& th : pool) th.join();
}

ReplicateOutcome run_one(const Scenario& scenario, const SimNetwork& sn, const std::vector<Allocation>& allocs,
                         const std::vector<Estimand>& estimands, int r) {
  ReplicateOutcome out;
  out.variants.resize(scenario.variants.size());
  Rng rng = make_stream(scenario.seed, static_cast<std::uint64_t>(r));
  const SimDataset ds = generate_dataset(sn.network, scenario, rng);
  const TrueValues truth = true_values(ds.outcomes, allocs);
  for (const auto& e : estimands) out.truth.push_back(truth.get(e.arm, e.alloc));

  auto fail_all = [&](const std::string& msg) {
    for (auto& v : out.variants) v.error = msg;
  };

  ModelOptions options;
  options.censoring_covariates = CensoringCovariates::CovariatesOnly;
  PropensityModel propensity;
  try {
    propensity = fit_propensity_model(sn.network, ds.data, options);
  } catch (const std::exception& e) {
    fail_all(std::string("propensity fit: ") + e.what());
    return out;
  }

  // One censoring fit per distinct kind, shared by the variants using it.
  std::vector<std::optional<CensoringModel>> cens(2);
  std::vector<std::string> cens_error(2);
  for (const auto& v : scenario.variants) {
    const auto idx = static_cast<std::size_t>(v.censoring_fit);
    if (cens[idx] || !cens_error[idx].empty()) continue;
    options.censoring_fit = v.censoring_fit;
    try {
      cens[idx] = fit_censoring_model(sn.network, ds.data, options);
    } catch (const std::exception& e) {
      cens_error[idx] = "censoring fit: " + std::string(e.what());
    }
  }

  for (std::size_t vi = 0; vi < scenario.variants.size(); ++vi) {
    const auto& v = scenario.variants[vi];
    auto& res = out.variants[vi];
    const auto idx = static_cast<std::size_t>(v.censoring_fit);
    if (!cens[idx]) {
      res.error = cens_error[idx];
      continue;
    }
    try {
      const NuisanceFits fits{propensity, *cens[idx]};
      const Partition& groups =
          v.grouping == VarianceGrouping::Components ? sn.network.components() : *sn.communities;
      const SandwichResult sw = sandwich(sn.network, ds.data, fits, allocs, groups);
      for (const auto& e : estimands) {
        const Eigen::Index i = sw.stack.target_index(e.arm, e.alloc);
        res.estimates.push_back(sw.stack.values[i]);
        res.ses.push_back(sw.se(i));
      }
      res.ok = true;
    } catch (const std::exception& e) {
      res.error = e.what();
    }
  }
  return out;
}

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

json network_json(const SimNetwork& sn) {
  json j;
  j["nodes"] = sn.network.node_count();
  j["edges"] = sn.network.edge_count();
  j["components"] = sn.network.component_count();
  j["component_sizes"] = sn.network.component_sizes();
  j["size_resamples"] = sn.stats.size_resamples;
  j["pairing_rejections"] = sn.stats.pairing_rejections;
  j["disconnected_rejections"] = sn.stats.disconnected_rejections;
  if (sn.communities) {
    j["communities"] = sn.communities->group_count;
    j["community_sizes"] = sn.communities->group_sizes();
    j["modularity"] = modularity(sn.network, *sn.communities);
  }
  return j;
}

}  // namespace

std::vector<SimReport> run_replicates(const Scenario& scenario, int threads) {
  scenario.validate();
  const SimNetwork sn = build_scenario_network(scenario);
  const auto allocs = scenario.allocations();
  const auto estimands = report_estimands(allocs);

  std::vector<ReplicateOutcome> results(static_cast<std::size_t>(scenario.replicates));
  parallel_for(scenario.replicates, threads, [&](int r) {
    results[static_cast<std::size_t>(r)] = run_one(scenario, sn, allocs, estimands, r);
  });

  const json scenario_json = to_json(scenario);
  const std::string hash = fnv1a_hex(scenario_json.dump());
  const json net_json = network_json(sn);
  const std::size_t e_count = estimands.size();

  std::vector<SimReport> reports;
  for (std::size_t vi = 0; vi < scenario.variants.size(); ++vi) {
    SimReport rep;
    rep.scenario_name = scenario.name;
    rep.variant = scenario.variants[vi];
    rep.seed = scenario.seed;
    rep.replicates = scenario.replicates;
    rep.scenario_hash = hash;
    rep.scenario = scenario_json;
    rep.network = net_json;
    for (int r = 0; r < scenario.replicates; ++r) {
      const auto& ro = results[static_cast<std::size_t>(r)];
      const auto& vo = ro.variants[vi];
      if (!vo.ok) {
        rep.failures.push_back("replicate " + std::to_string(r) + ": " + vo.error);
        continue;
      }
      rep.replicate_index.push_back(r);
      rep.estimates.push_back(vo.estimates);
      rep.standard_errors.push_back(vo.ses);
      rep.truths.push_back(ro.truth);
    }
    rep.successes = static_cast<int>(rep.replicate_index.size());
    const double fail_rate = static_cast<double>(rep.failures.size()) / scenario.replicates;
    if (fail_rate > 0.05) {
      rep.warnings.push_back(std::to_string(rep.failures.size()) + " of " + std::to_string(scenario.replicates) +
                             " replicates failed for " + rep.variant.label());
    }
    if (rep.successes == 0) {
      rep.warnings.push_back("no successful replicates for " + rep.variant.label());
    } else if (rep.successes == 1) {
      rep.warnings.push_back("a single successful replicate; ESE is undefined");
    }

    const std::size_t s_count = rep.estimates.size();
    for (std::size_t e = 0; e < e_count; ++e) {
      SimRow row;
      row.estimand = estimands[e].name;
      if (s_count == 0) {
        rep.rows.push_back(row);
        continue;
      }
      std::vector<double> est(s_count), se(s_count), tru(s_count), err(s_count);
      for (std::size_t r = 0; r < s_count; ++r) {
        est[r] = rep.estimates[r][e];
        se[r] = rep.standard_errors[r][e];
        tru[r] = rep.truths[r][e];
        err[r] = est[r] - tru[r];
      }
      row.truth = mean_of(tru);
      row.bias = mean_of(err);
      row.ase = mean_of(se);
      if (s_count > 1) {
        const double mu = mean_of(est);
        double ss = 0.0;
        for (double x : est) ss += (x - mu) * (x - mu);
        row.ese = std::sqrt(ss / static_cast<double>(s_count - 1));
      }
      int hit = 0;
      int hit_fixed = 0;
      for (std::size_t r = 0; r < s_count; ++r) {
        const double lo = est[r] - kWaldZ * se[r];
        const double hi = est[r] + kWaldZ * se[r];
        hit += lo <= tru[r] && tru[r] <= hi;
        hit_fixed += lo <= row.truth && row.truth <= hi;
      }
      row.ecp = static_cast<double>(hit) / static_cast<double>(s_count);
      row.ecp_fixed_truth = static_cast<double>(hit_fixed) / static_cast<double>(s_count);
      rep.rows.push_back(row);
    }
    for (const auto& w : rep.warnings) warn(scenario.name + ": " + w);
    reports.push_back(std::move(rep));
  }
  return reports;
}

std::vector<SimReport> sweep_re_sd(const Scenario& base, const std::vector<double>& sds, int threads) {
  std::vector<SimReport> out;
  for (double sd : sds) {
    Scenario s = base;
    s.name = base.name + "-sd" + fmt_g(sd);
    s.censoring = CensoringMechanism::ComponentCorrelated;
    s.censoring_sd = sd;
    s.variants = {FitVariant{CensoringFitKind::Logistic, VarianceGrouping::Components},
                  FitVariant{CensoringFitKind::Mixed, VarianceGrouping::Components}};
    auto reports = run_replicates(s, threads);
    for (auto& r : reports) out.push_back(std::move(r));
  }
  return out;
}

Scenario trip_structure_scenario(const Scenario& base) {
  Scenario s = base;
  if (!std::holds_alternative<TripNetworkSpec>(s.network)) s.network = TripNetworkSpec{};
  std::vector<CensoringFitKind> fits;
  for (const auto& v : base.variants) {
    if (std::find(fits.begin(), fits.end(), v.censoring_fit) == fits.end()) fits.push_back(v.censoring_fit);
  }
  s.variants.clear();
  for (auto fit : fits) {
    s.variants.push_back({fit, VarianceGrouping::Components});
    s.variants.push_back({fit, VarianceGrouping::Communities});
  }
  return s;
}

std::string fnv1a_hex(const std::string& text) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace netspill
