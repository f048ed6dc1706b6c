#pragma once

// Structural queries on a sampled graph.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "hetkey/graphgen.hpp"
#include "hetkey/model.hpp"
#include "hetkey/union_find.hpp"

namespace hetkey {

struct IsolationCounts {
  std::size_t total = 0;
  std::vector<std::size_t> per_class;
};

struct Connectivity {
  bool is_connected = false;
  std::size_t component_count = 0;
  std::size_t largest_component = 0;
};

/// Summary of one sampled graph.
struct TrialOutcome {
  std::size_t isolated_count = 0;
  std::vector<std::size_t> class_isolated_counts;
  bool is_connected = false;
  std::size_t component_count = 0;
  std::size_t largest_component = 0;
  std::vector<std::size_t> intra_class_edge_counts;
  std::size_t edge_count = 0;
};

inline IsolationCounts count_isolated(const IntersectionGraph& g) {
  IsolationCounts out;
  out.per_class.assign(g.num_classes(), 0);
  for (NodeId v = 0; v < g.size(); ++v) {
    if (g.degree(v) == 0) {
      ++out.total;
      ++out.per_class[g.class_of(v)];
    }
  }
  return out;
}

inline Connectivity connectivity(const IntersectionGraph& g) {
  Connectivity out;
  const std::size_t n = g.size();
  if (n == 0) return out;
  UnionFind sets(n);
  for (NodeId u = 0; u < n; ++u)
    for (NodeId v : g.neighbors(u))
      if (u < v) sets.unite(u, v);
  out.component_count = sets.set_count();
  out.is_connected = out.component_count == 1;
  for (NodeId v = 0; v < n; ++v) out.largest_component = std::max(out.largest_component, sets.set_size(v));
  return out;
}

/// Edge counts by unordered class pair, stored symmetric. Diagonal entries are
/// intra-class edges; the upper triangle (with diagonal) sums to edge_count.
inline std::vector<std::vector<std::size_t>> class_edge_audit(const IntersectionGraph& g) {
  const std::size_t r = g.num_classes();
  std::vector<std::vector<std::size_t>> counts(r, std::vector<std::size_t>(r, 0));
  for (NodeId u = 0; u < g.size(); ++u) {
    for (NodeId v : g.neighbors(u)) {
      if (u >= v) continue;
      const auto a = g.class_of(u), b = g.class_of(v);
      ++counts[a][b];
      if (a != b) ++counts[b][a];
    }
  }
  return counts;
}

inline TrialOutcome analyze(const IntersectionGraph& g) {
  TrialOutcome out;
  auto iso = count_isolated(g);
  out.isolated_count = iso.total;
  out.class_isolated_counts = std::move(iso.per_class);
  const Connectivity conn = connectivity(g);
  out.is_connected = conn.is_connected;
  out.component_count = conn.component_count;
  out.largest_component = conn.largest_component;
  const auto audit = class_edge_audit(g);
  out.intra_class_edge_counts.resize(g.num_classes());
  for (std::size_t i = 0; i < g.num_classes(); ++i) out.intra_class_edge_counts[i] = audit[i][i];
  out.edge_count = g.edge_count();
  return out;
}

}  // namespace hetkey
