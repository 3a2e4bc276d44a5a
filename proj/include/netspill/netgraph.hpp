#pragma once

#include "netspill/rng.hpp"
#include "netspill/study_data.hpp"

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace netspill {

struct Edge {
  NodeId u;
  NodeId v;
  friend bool operator==(const Edge&, const Edge&) = default;
};

/// Node -> group labelling with contiguous labels 0..group_count-1.
struct Partition {
  std::vector<int> labels;
  int group_count = 0;

  /// Relabels arbitrary integer labels to 0..k-1 in order of first appearance.
  static Partition from_labels(std::span<const int> raw);

  std::size_t size() const noexcept { return labels.size(); }
  std::vector<std::size_t> group_sizes() const;
  std::vector<std::vector<NodeId>> members() const;

  friend bool operator==(const Partition&, const Partition&) = default;
};

/// Undirected simple graph in compressed adjacency form, with its
/// connected-component labelling. Immutable once built.
class Network {
 public:
  Network() = default;

  /// Validates indices, rejects self-loops, collapses duplicate edges and
  /// labels components by BFS.
  static Network build(std::size_t node_count, std::span<const Edge> edges);

  std::size_t node_count() const noexcept { return offsets_.empty() ? 0 : offsets_.size() - 1; }
  std::size_t edge_count() const noexcept { return targets_.size() / 2; }

  /// Sorted neighbour list, excluding i itself.
  std::span<const NodeId> neighbors(NodeId i) const;
  int degree(NodeId i) const;

  const Partition& components() const noexcept { return components_; }
  std::size_t component_count() const noexcept { return static_cast<std::size_t>(components_.group_count); }
  std::vector<std::size_t> component_sizes() const { return components_.group_sizes(); }

  /// Each undirected edge once as (u, v) with u < v, sorted.
  std::vector<Edge> edge_list() const;

 private:
  std::vector<std::size_t> offsets_;
  std::vector<NodeId> targets_;
  Partition components_;
};

inline Network build_network(std::size_t node_count, std::span<const Edge> edges) {
  return Network::build(node_count, edges);
}

/// Sorted neighbour list of i; throws InputError for an invalid index.
std::vector<NodeId> neighbors(const Network& net, NodeId i);

struct IsolateRemoval {
  Network network;
  StudyData data;
  std::vector<NodeId> kept;                        // new index -> old index
  std::vector<std::optional<NodeId>> old_to_new;  // empty for removed nodes
  std::size_t removed = 0;
};

/// Subgraph induced on nodes of degree >= 1, with data rows filtered to match.
/// Throws InputError when every node is isolated.
IsolateRemoval remove_isolates(const Network& net, const StudyData& data);

/// Bookkeeping from the random generators, surfaced in simulation metadata.
struct GenerationStats {
  std::size_t size_resamples = 0;        // Poisson draws rejected (too small or odd stub count)
  std::size_t pairing_rejections = 0;    // pairings with a loop or multi-edge
  std::size_t disconnected_rejections = 0;
};

/// m disjoint random `degree`-regular components. Component sizes are
/// Poisson(mean_size) draws, redrawn until size >= degree + 1 and
/// size * degree is even. Each component is built by the pairing model with
/// whole-graph rejection (loops, multi-edges and disconnected graphs), at
/// most 10^4 attempts per component.
Network generate_regular_components(int m, double mean_size, int degree, Rng& rng,
                                    GenerationStats* stats = nullptr);

/// Components of the given sizes: size-2 components are single edges, larger
/// ones a random recursive spanning tree plus uniformly sampled extra edges.
/// Extra edges are shared out in proportion to size - 1 so that the total
/// edge count equals `edge_target`.
Network generate_trip_shaped(std::span<const int> sizes, std::size_t edge_target, Rng& rng);

/// Newman modularity of a partition.
double modularity(const Network& net, const Partition& partition);

/// Greedy agglomerative modularity maximisation (Clauset-Newman-Moore).
/// Merges the adjacent pair with the largest gain until no merge increases
/// modularity; equal gains go to the lowest label pair. Labels are numbered
/// by smallest member node.
Partition fast_greedy_communities(const Network& net);

}  // namespace netspill
