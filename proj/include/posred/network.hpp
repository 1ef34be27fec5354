#pragma once

#include <vector>

#include "posred/lti.hpp"

namespace posred {

// Directed edge u -> v with nonnegative weight. Node indices are 1-based.
struct Edge {
  int from = 0;
  int to = 0;
  double weight = 0.0;
};

struct WeightedDigraph {
  int node_count = 0;
  std::vector<Edge> edges;  // self-loops (from == to) allowed

  void validate() const;
};

// Disjoint nonempty clusters of 1-based node indices covering 1..n.
struct Clustering {
  std::vector<std::vector<int>> clusters;

  Index size() const { return static_cast<Index>(clusters.size()); }
};

// Binary n x r node-to-cluster assignment. Rejects non-partitions.
Matrix characteristic_matrix(const Clustering& clustering, int n);

// Inverse of characteristic_matrix: column j lists the members of cluster j.
Clustering clusters_from_characteristic(const Matrix& pi);

// (Pi^T Pi)^{-1} Pi^T M, i.e. cluster-averaged rows.
Matrix cluster_average(const Matrix& pi, const Matrix& m);

// Aggregated dynamics before the stabilizing shift.
Matrix aggregate_dynamics(const Matrix& a, const Matrix& pi);

struct ReducedInit {
  Matrix A;  // (Pi^T Pi)^{-1} Pi^T A Pi - alpha I
  Matrix B;  // (Pi^T Pi)^{-1} Pi^T B
  Matrix C;  // C Pi
  double alpha = 0.0;

  StateSpaceSystem system() const { return {A, B, C}; }
};

// Thrown when the shifted aggregate is still unstable.
class NeedsLargerShift : public UnstableSystemError {
 public:
  using UnstableSystemError::UnstableSystemError;
};

ReducedInit cluster_reduce(const StateSpaceSystem& sys, const Matrix& pi, double alpha);

// Smallest shift with a 5% margin: max(0, mu + 0.05 max(1, |mu|)), where mu is
// the spectral abscissa of the aggregated dynamics.
double choose_alpha(const Matrix& aggregated);

// Zero / nonnegativity index sets of one reduced matrix, stored as 0/1 masks.
struct BlockMask {
  Matrix zero;
  Matrix nonneg;
};

struct StructureMasks {
  BlockMask a;  // diagonal excluded from both sets
  BlockMask b;
  BlockMask c;

  // Throws ValidationError unless the sets are disjoint 0/1 masks that cover
  // every (off-diagonal, for A) index with shapes r x r, r x m, p x r.
  void validate(Index r, Index m, Index p) const;
};

inline constexpr double kMaskTolerance = 1e-12;

StructureMasks structure_masks(const ReducedInit& init, double tol = kMaskTolerance);

// A = -(D - W) - shift I, where edge u -> v adds its weight to W(v, u) and D is
// the diagonal of out-weight sums plus self-loop weights. B has a 1 at
// (inputs[k], k) and C a 1 at (k, outputs[k]).
StateSpaceSystem loopy_laplacian_system(const WeightedDigraph& graph,
                                        const std::vector<int>& input_nodes,
                                        const std::vector<int>& output_nodes, double shift);

// Deterministic balanced clustering: breadth-first order over the underlying
// undirected graph (lowest-index unvisited node first, neighbours ascending),
// cut into r consecutive runs whose sizes differ by at most one.
Clustering baseline_clustering(const WeightedDigraph& graph, int r);

}  // namespace posred
