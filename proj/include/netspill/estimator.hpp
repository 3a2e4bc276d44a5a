#pragma once

#include "netspill/models.hpp"
#include "netspill/netgraph.hpp"
#include "netspill/rng.hpp"
#include "netspill/study_data.hpp"
#include "netspill/weights.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace netspill {

/// Which average potential outcome: y(0, alpha), y(1, alpha) or y(alpha).
enum class Arm { Unexposed = 0, Exposed = 1, Marginal = 2 };

std::string to_string(Arm arm);

/// Per-node IPCW contributions
///   Y_i I(C_i = 0) I(A_i = a) pi(A_N_i; alpha) / (f_i s_i)
/// with the joint allocation probability and no arm indicator for Marginal.
/// Censored and opposite-arm nodes contribute 0.
Eigen::VectorXd ipcw_terms(const StudyData& data, const NodeFactors& factors, Arm arm, Allocation alloc);

/// Mean of ipcw_terms over all n nodes. Throws InputError on empty data and
/// warns when every node is censored.
double ipcw_mean(const StudyData& data, const NodeFactors& factors, Arm arm, Allocation alloc);

struct AvgOutcomeEstimate {
  Arm arm = Arm::Marginal;
  Allocation alpha{0.5};
  double value = 0.0;
  /// Position within the target block of the parameter stack: 3 k + arm for
  /// allocation k. The variance module adds the block offset.
  Eigen::Index theta_index = 0;
};

AvgOutcomeEstimate avg_outcome(const Network& net, const StudyData& data, int a, Allocation alloc,
                               const NuisanceFits& fits);
AvgOutcomeEstimate avg_outcome_marginal(const Network& net, const StudyData& data, Allocation alloc,
                                        const NuisanceFits& fits);

/// Every target estimate for a list of allocations, ordered by allocation
/// and, within an allocation, (unexposed, exposed, marginal).
struct TargetEstimates {
  std::vector<Allocation> allocs;
  std::vector<AvgOutcomeEstimate> values;

  const AvgOutcomeEstimate& get(Arm arm, std::size_t alloc_index) const {
    return values.at(3 * alloc_index + static_cast<std::size_t>(arm));
  }
  Eigen::VectorXd as_vector() const;
};

TargetEstimates estimate_targets(const StudyData& data, const NodeFactors& factors, std::span<const Allocation> allocs);

enum class EffectKind { Direct, Indirect, Total, Overall };

std::string to_string(EffectKind kind);

struct EffectEstimate {
  EffectKind kind = EffectKind::Direct;
  double alpha1 = 0.0;
  std::optional<double> alpha0;  // absent for the direct effect
  double rd = 0.0;
  std::optional<double> se;
  std::optional<double> ci_lo;
  std::optional<double> ci_hi;
};

inline constexpr double kWaldZ = 1.959964;

/// One contrast between entries of `targets`. For Direct only `k1` is used.
/// `target_covariance` (3K x 3K, ordered like TargetEstimates) supplies the
/// standard error; without it se and the interval stay absent.
EffectEstimate contrast(const TargetEstimates& targets, EffectKind kind, std::size_t k1, std::size_t k0,
                        const Eigen::MatrixXd* target_covariance = nullptr);

/// Ordered allocation pairs (alpha1 > alpha0), neighbouring pairs first:
/// for {0.25, 0.5, 0.75} this is (0.5, 0.25), (0.75, 0.5), (0.75, 0.25).
std::vector<std::pair<std::size_t, std::size_t>> allocation_pairs(std::span<const Allocation> allocs);

/// Direct effects for each allocation, then indirect, total and overall
/// effects for each ordered pair. Allocations must be distinct.
std::vector<EffectEstimate> effects(const TargetEstimates& targets, const Eigen::MatrixXd* target_covariance = nullptr);

/// Potential outcomes y_i(a, s) indexed by the node's own exposure a and the
/// number s of exposed neighbours, s = 0..d_i.
class PotentialOutcomeTable {
 public:
  PotentialOutcomeTable() = default;
  explicit PotentialOutcomeTable(std::vector<int> degrees);

  std::size_t size() const noexcept { return degrees_.size(); }
  int degree(NodeId i) const { return degrees_.at(static_cast<std::size_t>(i)); }
  double& at(NodeId i, int a, int s) { return values_[index(i, a, s)]; }
  double at(NodeId i, int a, int s) const { return values_[index(i, a, s)]; }

 private:
  std::size_t index(NodeId i, int a, int s) const;

  std::vector<int> degrees_;
  std::vector<std::size_t> offsets_;
  std::vector<double> values_;
};

struct TrueValues {
  std::vector<Allocation> allocs;
  std::vector<double> values;  // same layout as TargetEstimates
  bool monte_carlo = false;    // some node exceeded the enumeration cap

  double get(Arm arm, std::size_t alloc_index) const {
    return values.at(3 * alloc_index + static_cast<std::size_t>(arm));
  }
};

/// Population averages of the potential outcomes under each allocation,
/// summing the binomial distribution of the exposed-neighbour count.
TrueValues true_values(const PotentialOutcomeTable& outcomes, std::span<const Allocation> allocs);

/// Potential outcome of node i for its own exposure a and a full neighbour
/// exposure vector (ordered like Network::neighbors).
using PatternOutcome = std::function<double(NodeId i, int a, std::span<const int> neighbor_exposure)>;

/// Population averages by enumerating all 2^d neighbour exposure vectors.
/// Nodes with degree above `enumeration_cap` use `mc_draws` Monte-Carlo
/// draws of the neighbour vector instead (seeded by `mc_seed` and the node).
TrueValues true_values_enumerated(const Network& net, const PatternOutcome& outcome, std::span<const Allocation> allocs,
                                  int enumeration_cap = 20, int mc_draws = 100000, std::uint64_t mc_seed = 0);

}  // namespace netspill
