#include "posred/network.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <set>
#include <string>

namespace posred {

void WeightedDigraph::validate() const {
  if (node_count <= 0) throw ValidationError("graph: node_count must be positive");
  for (const Edge& e : edges) {
    if (e.from < 1 || e.from > node_count || e.to < 1 || e.to > node_count) {
      throw ValidationError("graph: edge endpoint out of range");
    }
    if (!(e.weight >= 0.0) || !std::isfinite(e.weight)) {
      throw ValidationError("graph: edge weights must be finite and nonnegative");
    }
  }
}

Matrix characteristic_matrix(const Clustering& clustering, int n) {
  if (n <= 0) throw ValidationError("characteristic_matrix: n must be positive");
  const Index r = clustering.size();
  if (r == 0) throw ValidationError("characteristic_matrix: no clusters");
  Matrix pi = Matrix::Zero(n, r);
  std::vector<int> owner(static_cast<std::size_t>(n) + 1, -1);
  for (Index j = 0; j < r; ++j) {
    const auto& members = clustering.clusters[static_cast<std::size_t>(j)];
    if (members.empty()) throw ValidationError("characteristic_matrix: empty cluster");
    for (int node : members) {
      if (node < 1 || node > n) {
        throw ValidationError("characteristic_matrix: node " + std::to_string(node) +
                              " out of range");
      }
      if (owner[static_cast<std::size_t>(node)] != -1) {
        throw ValidationError("characteristic_matrix: node " + std::to_string(node) +
                              " appears in more than one cluster");
      }
      owner[static_cast<std::size_t>(node)] = static_cast<int>(j);
      pi(node - 1, j) = 1.0;
    }
  }
  for (int node = 1; node <= n; ++node) {
    if (owner[static_cast<std::size_t>(node)] == -1) {
      throw ValidationError("characteristic_matrix: node " + std::to_string(node) +
                            " is not assigned to a cluster");
    }
  }
  return pi;
}

Clustering clusters_from_characteristic(const Matrix& pi) {
  Clustering out;
  out.clusters.resize(static_cast<std::size_t>(pi.cols()));
  for (Index i = 0; i < pi.rows(); ++i) {
    int hits = 0;
    for (Index j = 0; j < pi.cols(); ++j) {
      if (pi(i, j) == 1.0) {
        out.clusters[static_cast<std::size_t>(j)].push_back(static_cast<int>(i) + 1);
        ++hits;
      } else if (pi(i, j) != 0.0) {
        throw ValidationError("clusters_from_characteristic: matrix is not binary");
      }
    }
    if (hits != 1) {
      throw ValidationError("clusters_from_characteristic: each row needs exactly one 1");
    }
  }
  for (const auto& c : out.clusters) {
    if (c.empty()) throw ValidationError("clusters_from_characteristic: empty column");
  }
  return out;
}

Matrix cluster_average(const Matrix& pi, const Matrix& m) {
  const Vector sizes = pi.colwise().sum().transpose();
  return sizes.cwiseInverse().asDiagonal() * (pi.transpose() * m);
}

Matrix aggregate_dynamics(const Matrix& a, const Matrix& pi) {
  return cluster_average(pi, a * pi);
}

ReducedInit cluster_reduce(const StateSpaceSystem& sys, const Matrix& pi, double alpha) {
  if (pi.rows() != sys.states()) {
    throw ValidationError("cluster_reduce: characteristic matrix has wrong row count");
  }
  clusters_from_characteristic(pi);  // partition check
  if (!(alpha >= 0.0) || !std::isfinite(alpha)) {
    throw ValidationError("cluster_reduce: alpha must be finite and nonnegative");
  }
  if (!is_positive_system(sys)) {
    throw ValidationError("cluster_reduce: system must have Metzler A and nonnegative B, C");
  }
  ReducedInit init;
  init.alpha = alpha;
  init.A = aggregate_dynamics(sys.A(), pi);
  init.A.diagonal().array() -= alpha;
  init.B = cluster_average(pi, sys.B());
  init.C = sys.C() * pi;
  const double abscissa = linalg::spectral_abscissa(init.A);
  if (!(abscissa < -kStabilityTolerance)) {
    throw NeedsLargerShift("cluster_reduce: aggregated dynamics unstable at alpha = " +
                               std::to_string(alpha) + "; needs larger alpha",
                           abscissa);
  }
  return init;
}

double choose_alpha(const Matrix& aggregated) {
  const double mu = linalg::spectral_abscissa(aggregated);
  const double delta = 0.05 * std::max(1.0, std::abs(mu));
  return std::max(0.0, mu + delta);
}

namespace {

BlockMask mask_of(const Matrix& v, double tol, bool skip_diagonal) {
  BlockMask m{Matrix::Zero(v.rows(), v.cols()), Matrix::Zero(v.rows(), v.cols())};
  for (Index j = 0; j < v.cols(); ++j) {
    for (Index i = 0; i < v.rows(); ++i) {
      if (skip_diagonal && i == j) continue;
      if (std::abs(v(i, j)) <= tol) {
        m.zero(i, j) = 1.0;
      } else {
        m.nonneg(i, j) = 1.0;
      }
    }
  }
  return m;
}

void validate_block(const BlockMask& m, Index rows, Index cols, bool skip_diagonal,
                    const char* name) {
  const std::string who = std::string("structure masks (") + name + "): ";
  if (m.zero.rows() != rows || m.zero.cols() != cols || m.nonneg.rows() != rows ||
      m.nonneg.cols() != cols) {
    throw ValidationError(who + "shape mismatch");
  }
  for (Index j = 0; j < cols; ++j) {
    for (Index i = 0; i < rows; ++i) {
      const double z = m.zero(i, j);
      const double nn = m.nonneg(i, j);
      if ((z != 0.0 && z != 1.0) || (nn != 0.0 && nn != 1.0)) {
        throw ValidationError(who + "masks must be 0/1");
      }
      if (skip_diagonal && i == j) {
        if (z != 0.0 || nn != 0.0) throw ValidationError(who + "diagonal must be excluded");
        continue;
      }
      if (z + nn != 1.0) {
        throw ValidationError(who + "zero and nonneg sets must partition the indices");
      }
    }
  }
}

}  // namespace

void StructureMasks::validate(Index r, Index m, Index p) const {
  validate_block(a, r, r, true, "A");
  validate_block(b, r, m, false, "B");
  validate_block(c, p, r, false, "C");
}

StructureMasks structure_masks(const ReducedInit& init, double tol) {
  return {mask_of(init.A, tol, true), mask_of(init.B, tol, false), mask_of(init.C, tol, false)};
}

StateSpaceSystem loopy_laplacian_system(const WeightedDigraph& graph,
                                        const std::vector<int>& input_nodes,
                                        const std::vector<int>& output_nodes, double shift) {
  graph.validate();
  if (!std::isfinite(shift)) throw ValidationError("loopy_laplacian_system: shift not finite");
  const int n = graph.node_count;
  Matrix w = Matrix::Zero(n, n);
  Vector degree = Vector::Zero(n);
  for (const Edge& e : graph.edges) {
    degree(e.from - 1) += e.weight;
    if (e.from != e.to) w(e.to - 1, e.from - 1) += e.weight;
  }
  Matrix a = w;
  a.diagonal() -= degree;
  a.diagonal().array() -= shift;

  auto check_nodes = [n](const std::vector<int>& nodes, const char* what) {
    if (nodes.empty()) {
      throw ValidationError(std::string("loopy_laplacian_system: no ") + what + " nodes");
    }
    for (int v : nodes) {
      if (v < 1 || v > n) {
        throw ValidationError(std::string("loopy_laplacian_system: ") + what +
                              " node out of range");
      }
    }
  };
  check_nodes(input_nodes, "input");
  check_nodes(output_nodes, "output");
  Matrix b = Matrix::Zero(n, static_cast<Index>(input_nodes.size()));
  for (std::size_t k = 0; k < input_nodes.size(); ++k) {
    b(input_nodes[k] - 1, static_cast<Index>(k)) = 1.0;
  }
  Matrix c = Matrix::Zero(static_cast<Index>(output_nodes.size()), n);
  for (std::size_t k = 0; k < output_nodes.size(); ++k) {
    c(static_cast<Index>(k), output_nodes[k] - 1) = 1.0;
  }
  return {std::move(a), std::move(b), std::move(c)};
}

Clustering baseline_clustering(const WeightedDigraph& graph, int r) {
  graph.validate();
  const int n = graph.node_count;
  if (r < 1 || r >= n) throw ValidationError("baseline_clustering: need 1 <= r < n");

  std::vector<std::set<int>> adjacent(static_cast<std::size_t>(n) + 1);
  for (const Edge& e : graph.edges) {
    if (e.from == e.to) continue;
    adjacent[static_cast<std::size_t>(e.from)].insert(e.to);
    adjacent[static_cast<std::size_t>(e.to)].insert(e.from);
  }
  std::vector<int> order;
  std::vector<bool> seen(static_cast<std::size_t>(n) + 1, false);
  for (int start = 1; start <= n; ++start) {
    if (seen[static_cast<std::size_t>(start)]) continue;
    std::queue<int> frontier;
    frontier.push(start);
    seen[static_cast<std::size_t>(start)] = true;
    while (!frontier.empty()) {
      const int v = frontier.front();
      frontier.pop();
      order.push_back(v);
      for (int w : adjacent[static_cast<std::size_t>(v)]) {
        if (!seen[static_cast<std::size_t>(w)]) {
          seen[static_cast<std::size_t>(w)] = true;
          frontier.push(w);
        }
      }
    }
  }

  Clustering out;
  const int base = n / r;
  const int larger = n % r;
  std::size_t pos = 0;
  for (int j = 0; j < r; ++j) {
    const int size = base + (j < larger ? 1 : 0);
    std::vector<int> members(order.begin() + static_cast<long>(pos),
                             order.begin() + static_cast<long>(pos) + size);
    std::sort(members.begin(), members.end());
    out.clusters.push_back(std::move(members));
    pos += static_cast<std::size_t>(size);
  }
  return out;
}

}  // namespace posred
