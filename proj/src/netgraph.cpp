#include "netspill/netgraph.hpp"

#include "netspill/errors.hpp"

#include <algorithm>
#include <limits>
#include <map>
#include <numeric>
#include <queue>
#include <string>
#include <unordered_map>

namespace netspill {

namespace {

constexpr int kMaxAttempts = 10000;

std::uint64_t edge_key(NodeId u, NodeId v) {
  return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(u)) << 32) | static_cast<std::uint32_t>(v);
}

bool is_connected(std::size_t n, const std::vector<Edge>& edges) {
  if (n <= 1) return true;
  std::vector<std::vector<NodeId>> adj(n);
  for (const auto& e : edges) {
    adj[static_cast<std::size_t>(e.u)].push_back(e.v);
    adj[static_cast<std::size_t>(e.v)].push_back(e.u);
  }
  std::vector<char> seen(n, 0);
  std::vector<NodeId> stack{0};
  seen[0] = 1;
  std::size_t reached = 1;
  while (!stack.empty()) {
    const NodeId x = stack.back();
    stack.pop_back();
    for (NodeId y : adj[static_cast<std::size_t>(x)]) {
      if (!seen[static_cast<std::size_t>(y)]) {
        seen[static_cast<std::size_t>(y)] = 1;
        ++reached;
        stack.push_back(y);
      }
    }
  }
  return reached == n;
}

}  // namespace

Partition Partition::from_labels(std::span<const int> raw) {
  Partition p;
  p.labels.resize(raw.size());
  std::unordered_map<int, int> remap;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    auto [it, inserted] = remap.try_emplace(raw[i], p.group_count);
    if (inserted) ++p.group_count;
    p.labels[i] = it->second;
  }
  return p;
}

std::vector<std::size_t> Partition::group_sizes() const {
  std::vector<std::size_t> sizes(static_cast<std::size_t>(group_count), 0);
  for (int g : labels) ++sizes[static_cast<std::size_t>(g)];
  return sizes;
}

std::vector<std::vector<NodeId>> Partition::members() const {
  std::vector<std::vector<NodeId>> out(static_cast<std::size_t>(group_count));
  for (std::size_t i = 0; i < labels.size(); ++i) {
    out[static_cast<std::size_t>(labels[i])].push_back(static_cast<NodeId>(i));
  }
  return out;
}

Network Network::build(std::size_t node_count, std::span<const Edge> edges) {
  if (node_count > static_cast<std::size_t>(std::numeric_limits<NodeId>::max())) {
    throw InputError("network: too many nodes");
  }
  std::vector<Edge> norm;
  norm.reserve(edges.size());
  for (const auto& e : edges) {
    if (e.u < 0 || e.v < 0 || static_cast<std::size_t>(e.u) >= node_count ||
        static_cast<std::size_t>(e.v) >= node_count) {
      throw InputError("network: edge (" + std::to_string(e.u) + "," + std::to_string(e.v) +
                       ") references a node outside 0.." + std::to_string(node_count) + "-1");
    }
    if (e.u == e.v) throw InputError("network: self-loop at node " + std::to_string(e.u));
    norm.push_back({std::min(e.u, e.v), std::max(e.u, e.v)});
  }
  std::sort(norm.begin(), norm.end(), [](const Edge& a, const Edge& b) {
    return a.u != b.u ? a.u < b.u : a.v < b.v;
  });
  norm.erase(std::unique(norm.begin(), norm.end()), norm.end());

  Network net;
  std::vector<std::size_t> degree(node_count, 0);
  for (const auto& e : norm) {
    ++degree[static_cast<std::size_t>(e.u)];
    ++degree[static_cast<std::size_t>(e.v)];
  }
  net.offsets_.assign(node_count + 1, 0);
  for (std::size_t i = 0; i < node_count; ++i) net.offsets_[i + 1] = net.offsets_[i] + degree[i];
  net.targets_.resize(net.offsets_.back());
  std::vector<std::size_t> fill(net.offsets_.begin(), net.offsets_.end() - 1);
  for (const auto& e : norm) {
    net.targets_[fill[static_cast<std::size_t>(e.u)]++] = e.v;
    net.targets_[fill[static_cast<std::size_t>(e.v)]++] = e.u;
  }
  for (std::size_t i = 0; i < node_count; ++i) {
    std::sort(net.targets_.begin() + static_cast<std::ptrdiff_t>(net.offsets_[i]),
              net.targets_.begin() + static_cast<std::ptrdiff_t>(net.offsets_[i + 1]));
  }

  // BFS component labelling; labels follow the smallest node of each component.
  std::vector<int> label(node_count, -1);
  int next = 0;
  std::queue<NodeId> frontier;
  for (std::size_t s = 0; s < node_count; ++s) {
    if (label[s] >= 0) continue;
    label[s] = next;
    frontier.push(static_cast<NodeId>(s));
    while (!frontier.empty()) {
      const NodeId x = frontier.front();
      frontier.pop();
      for (NodeId y : net.neighbors(x)) {
        if (label[static_cast<std::size_t>(y)] < 0) {
          label[static_cast<std::size_t>(y)] = next;
          frontier.push(y);
        }
      }
    }
    ++next;
  }
  net.components_.labels = std::move(label);
  net.components_.group_count = next;
  return net;
}

std::span<const NodeId> Network::neighbors(NodeId i) const {
  const auto k = static_cast<std::size_t>(i);
  return {targets_.data() + offsets_[k], offsets_[k + 1] - offsets_[k]};
}

int Network::degree(NodeId i) const {
  const auto k = static_cast<std::size_t>(i);
  return static_cast<int>(offsets_[k + 1] - offsets_[k]);
}

std::vector<Edge> Network::edge_list() const {
  std::vector<Edge> out;
  out.reserve(edge_count());
  for (std::size_t i = 0; i < node_count(); ++i) {
    for (NodeId j : neighbors(static_cast<NodeId>(i))) {
      if (static_cast<std::size_t>(j) > i) out.push_back({static_cast<NodeId>(i), j});
    }
  }
  return out;
}

std::vector<NodeId> neighbors(const Network& net, NodeId i) {
  if (i < 0 || static_cast<std::size_t>(i) >= net.node_count()) {
    throw InputError("neighbors: node index " + std::to_string(i) + " out of range");
  }
  auto nb = net.neighbors(i);
  return {nb.begin(), nb.end()};
}

IsolateRemoval remove_isolates(const Network& net, const StudyData& data) {
  if (data.size() != net.node_count()) throw InputError("remove_isolates: data rows differ from node count");
  IsolateRemoval out;
  out.old_to_new.assign(net.node_count(), std::nullopt);
  for (std::size_t i = 0; i < net.node_count(); ++i) {
    if (net.degree(static_cast<NodeId>(i)) > 0) {
      out.old_to_new[i] = static_cast<NodeId>(out.kept.size());
      out.kept.push_back(static_cast<NodeId>(i));
    }
  }
  if (out.kept.empty()) throw InputError("remove_isolates: every node is an isolate; nothing left to analyse");
  out.removed = net.node_count() - out.kept.size();
  std::vector<Edge> edges;
  for (const auto& e : net.edge_list()) {
    edges.push_back({*out.old_to_new[static_cast<std::size_t>(e.u)], *out.old_to_new[static_cast<std::size_t>(e.v)]});
  }
  out.network = Network::build(out.kept.size(), edges);
  out.data = data.subset(out.kept);
  return out;
}

Network generate_regular_components(int m, double mean_size, int degree, Rng& rng, GenerationStats* stats) {
  if (m < 1) throw InputError("regular components: m must be >= 1");
  if (degree < 1) throw InputError("regular components: degree must be >= 1");
  if (!(mean_size > degree)) throw InputError("regular components: mean size must exceed the degree");

  GenerationStats local;
  std::poisson_distribution<int> size_dist(mean_size);
  std::vector<Edge> all_edges;
  NodeId base = 0;
  for (int c = 0; c < m; ++c) {
    int size = 0;
    for (int draw = 0;; ++draw) {
      if (draw >= kMaxAttempts) throw GenerationError("regular components: could not draw a valid component size");
      size = size_dist(rng);
      if (size >= degree + 1 && (static_cast<long>(size) * degree) % 2 == 0) break;
      ++local.size_resamples;
    }

    std::vector<NodeId> stubs;
    stubs.reserve(static_cast<std::size_t>(size) * static_cast<std::size_t>(degree));
    std::vector<Edge> edges;
    bool accepted = false;
    for (int attempt = 0; attempt < kMaxAttempts && !accepted; ++attempt) {
      stubs.clear();
      for (NodeId v = 0; v < size; ++v) {
        for (int k = 0; k < degree; ++k) stubs.push_back(v);
      }
      std::shuffle(stubs.begin(), stubs.end(), rng);
      edges.clear();
      std::vector<std::uint64_t> keys;
      bool simple = true;
      for (std::size_t k = 0; k + 1 < stubs.size(); k += 2) {
        const NodeId a = std::min(stubs[k], stubs[k + 1]);
        const NodeId b = std::max(stubs[k], stubs[k + 1]);
        if (a == b) {
          simple = false;
          break;
        }
        keys.push_back(edge_key(a, b));
        edges.push_back({a, b});
      }
      if (simple) {
        std::sort(keys.begin(), keys.end());
        simple = std::adjacent_find(keys.begin(), keys.end()) == keys.end();
      }
      if (!simple) {
        ++local.pairing_rejections;
        continue;
      }
      if (!is_connected(static_cast<std::size_t>(size), edges)) {
        ++local.disconnected_rejections;
        continue;
      }
      accepted = true;
    }
    if (!accepted) {
      throw GenerationError("regular components: no simple connected " + std::to_string(degree) +
                            "-regular graph on " + std::to_string(size) + " nodes after " +
                            std::to_string(kMaxAttempts) + " attempts");
    }
    for (const auto& e : edges) all_edges.push_back({e.u + base, e.v + base});
    base += size;
  }
  if (stats) {
    stats->size_resamples += local.size_resamples;
    stats->pairing_rejections += local.pairing_rejections;
    stats->disconnected_rejections += local.disconnected_rejections;
  }
  return Network::build(static_cast<std::size_t>(base), all_edges);
}

Network generate_trip_shaped(std::span<const int> sizes, std::size_t edge_target, Rng& rng) {
  if (sizes.empty()) throw InputError("trip-shaped network: no component sizes");
  std::size_t tree_edges = 0;
  std::vector<std::size_t> capacity(sizes.size(), 0);
  for (std::size_t c = 0; c < sizes.size(); ++c) {
    if (sizes[c] < 2) throw InputError("trip-shaped network: component sizes must be >= 2");
    const auto s = static_cast<std::size_t>(sizes[c]);
    tree_edges += s - 1;
    capacity[c] = s * (s - 1) / 2 - (s - 1);
  }
  if (edge_target < tree_edges) {
    throw InputError("trip-shaped network: edge target " + std::to_string(edge_target) +
                     " is below the spanning-tree minimum " + std::to_string(tree_edges));
  }
  std::size_t extra = edge_target - tree_edges;
  const std::size_t total_capacity = std::accumulate(capacity.begin(), capacity.end(), std::size_t{0});
  if (extra > total_capacity) throw InputError("trip-shaped network: edge target exceeds a simple graph's capacity");

  // Largest-remainder apportionment of the extra edges, proportional to
  // size - 1, capped by each component's capacity.
  std::vector<std::size_t> share(sizes.size(), 0);
  while (extra > 0) {
    double weight_total = 0;
    for (std::size_t c = 0; c < sizes.size(); ++c) {
      if (share[c] < capacity[c]) weight_total += sizes[c] - 1;
    }
    std::vector<std::pair<double, std::size_t>> remainders;
    std::size_t assigned = 0;
    for (std::size_t c = 0; c < sizes.size(); ++c) {
      if (share[c] >= capacity[c]) continue;
      const double exact = static_cast<double>(extra) * (sizes[c] - 1) / weight_total;
      auto whole = std::min(static_cast<std::size_t>(exact), capacity[c] - share[c]);
      share[c] += whole;
      assigned += whole;
      if (share[c] < capacity[c]) remainders.emplace_back(exact - std::floor(exact), c);
    }
    extra -= assigned;
    std::stable_sort(remainders.begin(), remainders.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });
    for (const auto& [frac, c] : remainders) {
      if (extra == 0) break;
      ++share[c];
      --extra;
    }
  }

  std::vector<Edge> all_edges;
  NodeId base = 0;
  for (std::size_t c = 0; c < sizes.size(); ++c) {
    const int s = sizes[c];
    std::vector<NodeId> order(static_cast<std::size_t>(s));
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<char> present(static_cast<std::size_t>(s) * static_cast<std::size_t>(s), 0);
    auto add = [&](NodeId a, NodeId b) {
      present[static_cast<std::size_t>(a) * static_cast<std::size_t>(s) + static_cast<std::size_t>(b)] = 1;
      present[static_cast<std::size_t>(b) * static_cast<std::size_t>(s) + static_cast<std::size_t>(a)] = 1;
      all_edges.push_back({a + base, b + base});
    };
    for (int k = 1; k < s; ++k) {
      std::uniform_int_distribution<int> pick(0, k - 1);
      add(order[static_cast<std::size_t>(k)], order[static_cast<std::size_t>(pick(rng))]);
    }
    if (share[c] > 0) {
      std::vector<Edge> candidates;
      for (NodeId a = 0; a < s; ++a) {
        for (NodeId b = a + 1; b < s; ++b) {
          if (!present[static_cast<std::size_t>(a) * static_cast<std::size_t>(s) + static_cast<std::size_t>(b)]) {
            candidates.push_back({a, b});
          }
        }
      }
      for (std::size_t k = 0; k < share[c]; ++k) {
        std::uniform_int_distribution<std::size_t> pick(k, candidates.size() - 1);
        std::swap(candidates[k], candidates[pick(rng)]);
        add(candidates[k].u, candidates[k].v);
      }
    }
    base += s;
  }
  return Network::build(static_cast<std::size_t>(base), all_edges);
}

double modularity(const Network& net, const Partition& partition) {
  if (partition.size() != net.node_count()) throw InputError("modularity: partition size differs from node count");
  const double two_m = 2.0 * static_cast<double>(net.edge_count());
  if (two_m == 0) throw InputError("modularity: network has no edges");
  std::vector<double> inside(static_cast<std::size_t>(partition.group_count), 0.0);
  std::vector<double> degree_sum(static_cast<std::size_t>(partition.group_count), 0.0);
  for (std::size_t i = 0; i < net.node_count(); ++i) {
    const auto g = static_cast<std::size_t>(partition.labels[i]);
    degree_sum[g] += net.degree(static_cast<NodeId>(i));
    for (NodeId j : net.neighbors(static_cast<NodeId>(i))) {
      if (partition.labels[static_cast<std::size_t>(j)] == partition.labels[i]) inside[g] += 1.0;
    }
  }
  double q = 0;
  for (std::size_t g = 0; g < inside.size(); ++g) {
    q += inside[g] / two_m - (degree_sum[g] / two_m) * (degree_sum[g] / two_m);
  }
  return q;
}

Partition fast_greedy_communities(const Network& net) {
  const std::size_t n = net.node_count();
  if (net.edge_count() == 0) throw InputError("fast greedy communities: network has no edges");
  const double half_end = 1.0 / (2.0 * static_cast<double>(net.edge_count()));

  // e[i][j]: fraction of edge ends joining communities i and j; a[i]: fraction of ends in i.
  std::vector<std::map<int, double>> e(n);
  std::vector<double> a(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    a[i] = net.degree(static_cast<NodeId>(i)) * half_end;
    for (NodeId j : net.neighbors(static_cast<NodeId>(i))) e[i][j] += half_end;
  }
  std::vector<int> parent(n);
  std::iota(parent.begin(), parent.end(), 0);

  constexpr double kGainEps = 1e-14;
  for (;;) {
    double best = 0.0;
    int bi = -1, bj = -1;
    for (std::size_t i = 0; i < n; ++i) {
      for (const auto& [j, eij] : e[i]) {
        if (static_cast<std::size_t>(j) <= i) continue;
        const double gain = 2.0 * (eij - a[i] * a[static_cast<std::size_t>(j)]);
        if (gain > best + kGainEps) {
          best = gain;
          bi = static_cast<int>(i);
          bj = j;
        }
      }
    }
    if (bi < 0) break;

    // Merge bj into bi.
    const auto ui = static_cast<std::size_t>(bi), uj = static_cast<std::size_t>(bj);
    for (const auto& [k, ejk] : e[uj]) {
      if (k == bi) continue;
      e[ui][k] += ejk;
      auto& ek = e[static_cast<std::size_t>(k)];
      ek[bi] += ejk;
      ek.erase(bj);
    }
    e[ui].erase(bj);
    e[uj].clear();
    a[ui] += a[uj];
    a[uj] = 0.0;
    parent[uj] = bi;
  }

  std::vector<int> root(n);
  for (std::size_t i = 0; i < n; ++i) {
    int r = static_cast<int>(i);
    while (parent[static_cast<std::size_t>(r)] != r) r = parent[static_cast<std::size_t>(r)];
    root[i] = r;
  }
  return Partition::from_labels(root);
}

}  // namespace netspill
