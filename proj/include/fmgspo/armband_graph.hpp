#pragma once

#include <span>
#include <string>
#include <utility>
#include <vector>

#include "fmgspo/errors.hpp"
#include "fmgspo/types.hpp"

namespace fmgspo {

/// Undirected sensor pair stored as (min, max).
struct Edge {
  int a = 0;
  int b = 0;
  friend auto operator<=>(const Edge&, const Edge&) = default;
};

enum class TopologyKind { ring, custom };

/// Sensor graph of an armband: nodes [0, N) and an undirected edge set.
/// Immutable once built; edges are canonical, sorted and unique.
class ArmbandTopology {
 public:
  int node_count() const { return node_count_; }
  const std::vector<Edge>& edges() const { return edges_; }
  TopologyKind kind() const { return kind_; }
  bool has_edge(int i, int j) const;
  int degree(int i) const;

  friend bool operator==(const ArmbandTopology&, const ArmbandTopology&) = default;

 private:
  ArmbandTopology(int n, std::vector<Edge> edges, TopologyKind kind)
      : node_count_(n), edges_(std::move(edges)), kind_(kind) {}

  friend ArmbandTopology build_ring_topology(int n);
  friend ArmbandTopology build_custom_topology(int n, std::span<const std::pair<int, int>> edges);

  int node_count_ = 0;
  std::vector<Edge> edges_;
  TopologyKind kind_ = TopologyKind::custom;
};

/// Ring over n >= 3 sensors: edges (i, i+1 mod n).
ArmbandTopology build_ring_topology(int n);

/// Arbitrary edge list. Duplicate and reversed pairs collapse; self-pairs and
/// out-of-range indices throw TopologyError. Disconnected graphs are allowed.
ArmbandTopology build_custom_topology(int n, std::span<const std::pair<int, int>> edges);

/// Several separate bands, each a ring over consecutive sensor indices.
/// Bands of size 2 become a single edge, size 1 an isolated node.
/// No edges between bands.
ArmbandTopology build_banded_topology(std::span<const int> band_sizes);

/// N x N 0/1 matrix, symmetric with zero diagonal.
MatrixXd adjacency_matrix(const ArmbandTopology& topology);

/// D^{-1/2} (A + I) D^{-1/2} where D is the degree matrix of A + I.
template <typename Derived>
Mat<typename Derived::Scalar> normalize_adjacency(const Eigen::MatrixBase<Derived>& adjacency) {
  using Scalar = typename Derived::Scalar;
  if (adjacency.rows() != adjacency.cols()) throw ShapeError("adjacency must be square");
  const Eigen::Index n = adjacency.rows();
  Mat<Scalar> with_loops = adjacency + Mat<Scalar>::Identity(n, n);
  // row sums of A + I are >= 1, so the inverse root is finite
  const Vec<Scalar> inv_sqrt_degree = with_loops.rowwise().sum().cwiseSqrt().cwiseInverse();
  return inv_sqrt_degree.asDiagonal() * with_loops * inv_sqrt_degree.asDiagonal();
}

inline MatrixXd normalized_adjacency(const ArmbandTopology& topology) {
  return normalize_adjacency(adjacency_matrix(topology));
}

/// Topology induced by the kept sensors, reindexed densely in ascending
/// original order.
ArmbandTopology subgraph_topology(const ArmbandTopology& topology, const SelectionVector& keep);

std::string to_string(TopologyKind kind);
TopologyKind topology_kind_from_string(const std::string& s);

}  // namespace fmgspo
