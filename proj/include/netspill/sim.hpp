#pragma once

#include "netspill/estimator.hpp"
#include "netspill/models.hpp"
#include "netspill/netgraph.hpp"
#include "netspill/rng.hpp"

#include "json.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace netspill {

/// m disjoint random regular components with Poisson(mean_size) sizes.
struct RegularNetworkSpec {
  int m = 200;
  double mean_size = 10.0;
  int degree = 4;
};

/// Components of fixed sizes joined by a fixed total number of edges.
struct TripNetworkSpec {
  std::vector<int> sizes{2, 2, 2, 2, 2, 4, 5, 7, 10, 239};
  std::size_t edges = 540;
};

using NetworkSpec = std::variant<RegularNetworkSpec, TripNetworkSpec>;

enum class CensoringMechanism { Independent, ComponentCorrelated };

/// Groups whose estimating equations are treated as independent.
enum class VarianceGrouping { Components, Communities };

std::string to_string(CensoringMechanism mechanism);
std::string to_string(VarianceGrouping grouping);

/// Coefficients of the data-generating process.
struct DgpCoefficients {
  double covariate_p = 0.5;
  double censor_intercept = -3.0;
  double censor_covariate = 2.0;
  double outcome_intercept = -1.75;
  double outcome_exposure = 0.5;
  double outcome_fraction = 1.0;
  double outcome_interaction = -1.5;
  double outcome_covariate = 0.5;
  double exposure_intercept = 0.7;
  double exposure_covariate = -1.4;
  double exposure_sd = 0.5;
};

/// One way of analysing the simulated data.
struct FitVariant {
  CensoringFitKind censoring_fit = CensoringFitKind::Logistic;
  VarianceGrouping grouping = VarianceGrouping::Components;

  std::string label() const;
  friend bool operator==(const FitVariant&, const FitVariant&) = default;
};

struct Scenario {
  std::string name = "custom";
  NetworkSpec network = RegularNetworkSpec{};
  CensoringMechanism censoring = CensoringMechanism::Independent;
  double censoring_sd = 0.3;  // sd of the component censoring intercept when correlated
  std::vector<FitVariant> variants{FitVariant{}};
  DgpCoefficients dgp;
  std::vector<double> allocs{0.25, 0.5, 0.75};
  int replicates = 1000;
  std::uint64_t seed = 1;

  /// Throws InputError when a field is out of range.
  void validate() const;
  std::vector<Allocation> allocations() const;
};

nlohmann::json to_json(const Scenario& scenario);
/// Missing keys keep their defaults; unknown keys and bad values throw InputError.
Scenario scenario_from_json(const nlohmann::json& j);

/// Named scenario families (paper-main, paper-sweep, paper-trip). `m`
/// overrides the component count of the regular-network presets.
std::vector<Scenario> preset_scenarios(const std::string& preset, std::optional<int> m = std::nullopt);

/// Network used by every replicate of the scenario (generated from the
/// scenario seed on a dedicated stream).
struct SimNetwork {
  Network network;
  GenerationStats stats;
  std::optional<Partition> communities;  // filled when any variant groups by community
};

SimNetwork build_scenario_network(const Scenario& scenario);

struct SimDataset {
  StudyData data;
  PotentialOutcomeTable outcomes;
};

/// Draws, in order: Z for every node, the censoring intercept per component,
/// the exposure intercept per component, C, the potential outcomes
/// y_i(a, s) for a = 0, 1 and s = 0..d_i, and A. Y = y_i(A_i, s_i) is
/// recorded when C_i = 0.
SimDataset generate_dataset(const Network& net, const Scenario& scenario, Rng& rng);

struct SimRow {
  std::string estimand;  // "Y(1,0.25)", "Y(0,0.5)", "Y(0.75)", ...
  double truth = 0.0;    // mean of the per-replicate true values
  double bias = 0.0;     // mean of estimate - truth
  std::optional<double> ese;
  double ase = 0.0;
  double ecp = 0.0;              // coverage of the per-replicate truth
  double ecp_fixed_truth = 0.0;  // coverage of the averaged truth
};

struct SimReport {
  std::string scenario_name;
  FitVariant variant;
  std::uint64_t seed = 0;
  int replicates = 0;
  int successes = 0;
  std::vector<std::string> failures;  // "replicate r: message"
  std::vector<std::string> warnings;
  std::vector<SimRow> rows;  // Y(1, .), Y(0, .), Y(.) for each allocation
  std::string scenario_hash;
  nlohmann::json scenario;
  nlohmann::json network;  // size, edges, generator bookkeeping
  /// Estimates, SEs and truths per successful replicate (row-major
  /// replicate x estimand, same order as rows), for downstream analysis.
  std::vector<int> replicate_index;
  std::vector<std::vector<double>> estimates;
  std::vector<std::vector<double>> standard_errors;
  std::vector<std::vector<double>> truths;
};

/// Runs every variant of the scenario on the same replicates; the propensity
/// fit and each censoring fit are computed once per replicate and shared.
/// Replicate r draws from stream (seed, r), so results do not depend on
/// `threads`.
std::vector<SimReport> run_replicates(const Scenario& scenario, int threads = 1);

/// Each sd runs the correlated-censoring scenario with both censoring fits
/// on the same data; returns (logistic, mixed) report pairs in sd order.
std::vector<SimReport> sweep_re_sd(const Scenario& base, const std::vector<double>& sds, int threads = 1);

/// The base scenario on a TRIP-shaped network, with variance grouping by
/// components and by detected communities.
Scenario trip_structure_scenario(const Scenario& base);

/// 64-bit FNV-1a hash as 16 hex digits.
std::string fnv1a_hex(const std::string& text);

}  // namespace netspill
