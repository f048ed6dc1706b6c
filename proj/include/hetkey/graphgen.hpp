#pragma once

// Sampling of the intersection graph H = K(n; mu, K, P) ∩ G(n; mu, alpha).

#include <algorithm>
#include <bit>
#include <cstddef>
#include <cstdint>
#include <istream>
#include <limits>
#include <ostream>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "hetkey/error.hpp"
#include "hetkey/model.hpp"
#include "hetkey/rng.hpp"

namespace hetkey {

using NodeId = std::uint32_t;
using Edge = std::pair<NodeId, NodeId>;

/// Class label t_x of every node, 0-based.
using ClassAssignment = std::vector<std::uint32_t>;

/// Sorted, duplicate-free key identifiers in [0, P).
struct KeyRing {
  std::vector<std::uint32_t> keys;
  std::uint32_t owner_class = 0;

  std::size_t size() const { return keys.size(); }
};

/// Undirected simple graph in compressed sparse row form.
class IntersectionGraph {
 public:
  IntersectionGraph() = default;

  /// Builds from an arbitrary undirected edge list. Self-loops are rejected,
  /// duplicate and reversed edges collapse to one.
  static IntersectionGraph from_edges(std::size_t num_classes, ClassAssignment classes,
                                      std::vector<Edge> edges) {
    const std::size_t n = classes.size();
    for (auto& [u, v] : edges) {
      if (u >= n || v >= n) throw InvalidParameter("edge endpoint out of range");
      if (u == v) throw InvalidParameter("self-loop on node " + std::to_string(u));
      if (u > v) std::swap(u, v);
    }
    std::sort(edges.begin(), edges.end());
    edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
    return from_sorted_edges(num_classes, std::move(classes), edges);
  }

  /// Edges must be sorted lexicographically with u < v and no duplicates;
  /// neighbor lists then come out sorted without a further pass.
  static IntersectionGraph from_sorted_edges(std::size_t num_classes, ClassAssignment classes,
                                             std::span<const Edge> edges) {
    IntersectionGraph g;
    const std::size_t n = classes.size();
    for (auto c : classes)
      if (c >= num_classes) throw InvalidParameter("class label out of range");
    g.num_classes_ = num_classes;
    g.classes_ = std::move(classes);
    g.offsets_.assign(n + 1, 0);
    for (const auto& [u, v] : edges) {
      ++g.offsets_[u + 1];
      ++g.offsets_[v + 1];
    }
    for (std::size_t i = 0; i < n; ++i) g.offsets_[i + 1] += g.offsets_[i];
    g.neighbors_.resize(g.offsets_[n]);
    std::vector<std::size_t> cursor(g.offsets_.begin(), g.offsets_.end() - 1);
    for (const auto& [u, v] : edges) {
      g.neighbors_[cursor[u]++] = v;
      g.neighbors_[cursor[v]++] = u;
    }
    g.edge_count_ = edges.size();
    return g;
  }

  std::size_t size() const { return classes_.size(); }
  std::size_t num_classes() const { return num_classes_; }
  std::size_t edge_count() const { return edge_count_; }
  const ClassAssignment& classes() const { return classes_; }
  std::uint32_t class_of(NodeId v) const { return classes_[v]; }
  std::size_t degree(NodeId v) const { return offsets_[v + 1] - offsets_[v]; }

  std::span<const NodeId> neighbors(NodeId v) const {
    return {neighbors_.data() + offsets_[v], degree(v)};
  }

  /// Edges (u, v) with u < v in lexicographic order.
  std::vector<Edge> edges() const {
    std::vector<Edge> out;
    out.reserve(edge_count_);
    for (NodeId u = 0; u < size(); ++u)
      for (NodeId v : neighbors(u))
        if (u < v) out.emplace_back(u, v);
    return out;
  }

  friend bool operator==(const IntersectionGraph&, const IntersectionGraph&) = default;

 private:
  std::size_t num_classes_ = 0;
  ClassAssignment classes_;
  std::vector<std::size_t> offsets_{0};
  std::vector<NodeId> neighbors_;
  std::size_t edge_count_ = 0;
};

/// Draws each node's class independently from the distribution, in node order.
inline ClassAssignment sample_classes(std::size_t n, const ClassDistribution& dist,
                                      RngStream& rng) {
  const std::size_t r = dist.size();
  std::vector<double> cumulative(r);
  double acc = 0.0;
  for (std::size_t i = 0; i < r; ++i) {
    acc += dist[i];
    cumulative[i] = acc;
  }
  ClassAssignment classes(n);
  for (auto& c : classes) {
    const double u = rng.uniform();
    std::uint32_t cls = 0;
    while (cls + 1 < r && u >= cumulative[cls]) ++cls;
    c = cls;
  }
  return classes;
}

/// Uniform K-subset of [0, P) via Floyd's algorithm; O(K^2) worst case for
/// the sorted insert, which is cheap for the ring sizes in use.
inline KeyRing sample_key_ring(std::uint32_t cls, const KeyProfile& profile, RngStream& rng) {
  if (cls >= profile.size()) throw InvalidParameter("class index out of range for key profile");
  const std::uint32_t k = profile.ring_size(cls);
  const std::uint32_t pool = profile.pool_size();
  KeyRing ring;
  ring.owner_class = cls;
  ring.keys.reserve(k);
  auto& keys = ring.keys;
  for (std::uint32_t j = pool - k; j < pool; ++j) {
    const auto t = static_cast<std::uint32_t>(rng.below(static_cast<std::uint64_t>(j) + 1));
    auto pos = std::lower_bound(keys.begin(), keys.end(), t);
    if (pos != keys.end() && *pos == t) {
      // j is larger than every key drawn so far
      keys.push_back(j);
    } else {
      keys.insert(pos, t);
    }
  }
  return ring;
}

/// Open-addressing membership table over a small set of key identifiers.
class KeyMembership {
 public:
  explicit KeyMembership(std::span<const std::uint32_t> keys) {
    const std::size_t capacity = std::bit_ceil(std::max<std::size_t>(4, keys.size() * 2));
    mask_ = capacity - 1;
    slots_.assign(capacity, kEmpty);
    for (auto key : keys) {
      std::size_t i = slot_of(key);
      while (slots_[i] != kEmpty && slots_[i] != key) i = (i + 1) & mask_;
      slots_[i] = key;
    }
  }

  bool contains(std::uint32_t key) const {
    for (std::size_t i = slot_of(key);; i = (i + 1) & mask_) {
      if (slots_[i] == key) return true;
      if (slots_[i] == kEmpty) return false;
    }
  }

 private:
  static constexpr std::uint32_t kEmpty = std::numeric_limits<std::uint32_t>::max();

  std::size_t slot_of(std::uint32_t key) const {
    return static_cast<std::size_t>((key * 0x9E3779B1u) >> 7) & mask_;
  }

  std::size_t mask_ = 0;
  std::vector<std::uint32_t> slots_;
};

/// True iff the two rings share at least one key.
inline bool key_adjacency(const KeyRing& a, const KeyRing& b) {
  const KeyRing& small = a.size() <= b.size() ? a : b;
  const KeyRing& large = a.size() <= b.size() ? b : a;
  const KeyMembership members(large.keys);
  return std::any_of(small.keys.begin(), small.keys.end(),
                     [&](std::uint32_t key) { return members.contains(key); });
}

/// H together with the two layer graphs it was intersected from.
struct LayeredSample {
  IntersectionGraph intersection;
  std::vector<Edge> key_edges;      // edges of K
  std::vector<Edge> channel_edges;  // edges of G
};

namespace detail {

// Shared generation loop. With kLayers the key test runs for every pair so K
// is materialized; the random draws consumed are identical either way.
template <bool kLayers>
void generate_into(const ModelParams& params, RngStream& rng, ClassAssignment& classes,
                   std::vector<Edge>& edges, std::vector<Edge>* key_edges,
                   std::vector<Edge>* channel_edges) {
  params.validate();
  const std::size_t n = params.n;
  const std::size_t r = params.classes();
  classes = sample_classes(n, params.dist, rng);

  std::vector<KeyRing> rings;
  rings.reserve(n);
  for (std::size_t v = 0; v < n; ++v) rings.push_back(sample_key_ring(classes[v], params.keys, rng));

  std::vector<double> alpha(r * r);
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < r; ++j) alpha[i * r + j] = params.channel(i, j);

  // holders of each key, by counting sort; node ids ascend within a key
  const std::uint32_t pool = params.keys.pool_size();
  std::vector<std::uint32_t> start(static_cast<std::size_t>(pool) + 1, 0);
  for (const auto& ring : rings)
    for (auto key : ring.keys) ++start[key + 1];
  for (std::uint32_t k = 0; k < pool; ++k) start[k + 1] += start[k];
  std::vector<NodeId> holders(start[pool]);
  {
    std::vector<std::uint32_t> fill(start.begin(), start.end() - 1);
    for (NodeId v = 0; v < n; ++v)
      for (auto key : rings[v].keys) holders[fill[key]++] = v;
  }

  // shares[y] == x marks y as holding a key of x
  constexpr std::uint32_t kNone = std::numeric_limits<std::uint32_t>::max();
  std::vector<std::uint32_t> shares(n, kNone);

  for (NodeId x = 0; x < n; ++x) {
    for (auto key : rings[x].keys)
      for (std::uint32_t h = start[key]; h < start[key + 1]; ++h) shares[holders[h]] = x;
    const double* alpha_row = alpha.data() + classes[x] * r;
    for (NodeId y = x + 1; y < n; ++y) {
      const bool channel_on = rng.bernoulli(alpha_row[classes[y]]);
      if (!kLayers && !channel_on) continue;
      const bool share = shares[y] == x;
      if constexpr (kLayers) {
        if (share) key_edges->emplace_back(x, y);
        if (channel_on) channel_edges->emplace_back(x, y);
      }
      if (channel_on && share) edges.emplace_back(x, y);
    }
  }
}

}  // namespace detail

/// Samples one realization of H. Consumes the stream as: n class draws, the
/// key rings in node order, then one channel draw per pair (x < y) in
/// lexicographic order.
inline IntersectionGraph generate(const ModelParams& params, RngStream& rng) {
  ClassAssignment classes;
  std::vector<Edge> edges;
  detail::generate_into<false>(params, rng, classes, edges, nullptr, nullptr);
  return IntersectionGraph::from_sorted_edges(params.classes(), std::move(classes), edges);
}

/// Same draws as generate(), additionally returning the K and G edge sets.
inline LayeredSample generate_layers(const ModelParams& params, RngStream& rng) {
  ClassAssignment classes;
  std::vector<Edge> edges;
  LayeredSample out;
  detail::generate_into<true>(params, rng, classes, edges, &out.key_edges, &out.channel_edges);
  out.intersection =
      IntersectionGraph::from_sorted_edges(params.classes(), std::move(classes), edges);
  return out;
}

/// Plain-text dump: "n r", then the 1-based class of every node on one line,
/// then one "u v" line (0-based node ids, u < v) per edge.
inline void write_edge_list(std::ostream& os, const IntersectionGraph& g) {
  os << g.size() << ' ' << g.num_classes() << '\n';
  for (std::size_t v = 0; v < g.size(); ++v) os << (v ? " " : "") << g.class_of(v) + 1;
  os << '\n';
  for (const auto& [u, v] : g.edges()) os << u << ' ' << v << '\n';
}

inline IntersectionGraph read_edge_list(std::istream& is) {
  std::size_t n = 0, r = 0;
  if (!(is >> n >> r)) throw InvalidParameter("edge list: missing 'n r' header");
  ClassAssignment classes(n);
  for (auto& c : classes) {
    std::uint32_t label = 0;
    if (!(is >> label) || label < 1 || label > r)
      throw InvalidParameter("edge list: bad class label");
    c = label - 1;
  }
  std::vector<Edge> edges;
  NodeId u = 0, v = 0;
  while (is >> u >> v) edges.emplace_back(u, v);
  if (!is.eof()) throw InvalidParameter("edge list: malformed edge line");
  return IntersectionGraph::from_edges(r, std::move(classes), std::move(edges));
}

}  // namespace hetkey
