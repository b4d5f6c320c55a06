#include "fmgspo/armband_graph.hpp"

#include <algorithm>
#include <string>

namespace fmgspo {

bool ArmbandTopology::has_edge(int i, int j) const {
  const Edge e{std::min(i, j), std::max(i, j)};
  return std::binary_search(edges_.begin(), edges_.end(), e);
}

int ArmbandTopology::degree(int i) const {
  return static_cast<int>(
      std::count_if(edges_.begin(), edges_.end(), [i](const Edge& e) { return e.a == i || e.b == i; }));
}

ArmbandTopology build_ring_topology(int n) {
  if (n < 3) {
    throw TopologyError("a ring needs at least 3 sensors, got " + std::to_string(n));
  }
  std::vector<Edge> edges;
  edges.reserve(n);
  for (int i = 0; i < n; ++i) {
    const int j = (i + 1) % n;
    edges.push_back({std::min(i, j), std::max(i, j)});
  }
  std::sort(edges.begin(), edges.end());
  return ArmbandTopology(n, std::move(edges), TopologyKind::ring);
}

ArmbandTopology build_custom_topology(int n, std::span<const std::pair<int, int>> pairs) {
  if (n < 1) throw TopologyError("topology needs at least one sensor");
  std::vector<Edge> edges;
  edges.reserve(pairs.size());
  for (const auto& [i, j] : pairs) {
    if (i < 0 || j < 0 || i >= n || j >= n) {
      throw TopologyError("edge (" + std::to_string(i) + "," + std::to_string(j) +
                          ") out of range for " + std::to_string(n) + " sensors");
    }
    if (i == j) throw TopologyError("self-pair on sensor " + std::to_string(i));
    edges.push_back({std::min(i, j), std::max(i, j)});
  }
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  return ArmbandTopology(n, std::move(edges), TopologyKind::custom);
}

ArmbandTopology build_banded_topology(std::span<const int> band_sizes) {
  std::vector<std::pair<int, int>> pairs;
  int offset = 0;
  for (int size : band_sizes) {
    if (size < 1) throw TopologyError("band size must be positive");
    if (size == 2) {
      pairs.emplace_back(offset, offset + 1);
    } else if (size >= 3) {
      for (int i = 0; i < size; ++i) pairs.emplace_back(offset + i, offset + (i + 1) % size);
    }
    offset += size;
  }
  return build_custom_topology(offset, pairs);
}

MatrixXd adjacency_matrix(const ArmbandTopology& topology) {
  const int n = topology.node_count();
  MatrixXd a = MatrixXd::Zero(n, n);
  for (const auto& e : topology.edges()) {
    a(e.a, e.b) = 1.0;
    a(e.b, e.a) = 1.0;
  }
  return a;
}

ArmbandTopology subgraph_topology(const ArmbandTopology& topology, const SelectionVector& keep) {
  const int n = topology.node_count();
  if (static_cast<int>(keep.size()) != n) {
    throw ShapeError("selection length " + std::to_string(keep.size()) + " != node count " +
                     std::to_string(n));
  }
  if (keep.count() == 0) throw SelectionError("empty selection");

  std::vector<int> new_index(n, -1);
  int next = 0;
  for (int i = 0; i < n; ++i) {
    if (keep.test(i)) new_index[i] = next++;
  }
  std::vector<std::pair<int, int>> pairs;
  for (const auto& e : topology.edges()) {
    if (new_index[e.a] >= 0 && new_index[e.b] >= 0) pairs.emplace_back(new_index[e.a], new_index[e.b]);
  }
  if (next == n) return topology;
  return build_custom_topology(next, pairs);
}

std::string to_string(TopologyKind kind) { return kind == TopologyKind::ring ? "ring" : "custom"; }

TopologyKind topology_kind_from_string(const std::string& s) {
  if (s == "ring") return TopologyKind::ring;
  if (s == "custom") return TopologyKind::custom;
  throw ParseError("unknown topology kind '" + s + "'");
}

}  // namespace fmgspo
