#pragma once

// Communication graphs and doubly-stochastic mixing matrices.
//
// A MixingMatrix is immutable once built. Every constructor path checks the
// full set of invariants: square, nonnegative, rows and columns summing to
// one, positive diagonal, symmetric sparsity pattern, connected pattern.

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "orfnet/linalg.hpp"

namespace orfnet {

inline constexpr double kStochasticTolerance = 1e-12;

/// Undirected graph on agents 0..n-1. Edges are stored once with i < j.
class CommGraph {
 public:
  using Edge = std::pair<int, int>;

  static CommGraph from_edges(int n_agents, const std::vector<Edge>& edges);
  static CommGraph ring(int n_agents);
  static CommGraph path(int n_agents);
  static CommGraph complete(int n_agents);
  /// G(n, p) resampled with derived seeds until connected.
  static CommGraph erdos(int n_agents, double edge_probability,
                         std::uint64_t seed);
  /// "ring" | "path" | "complete" | "erdos".
  static CommGraph family(const std::string& name, int n_agents,
                          double edge_probability = 0.5,
                          std::uint64_t seed = 0);

  int n_agents() const noexcept { return n_; }
  const std::vector<Edge>& edges() const noexcept { return edges_; }
  std::vector<int> degrees() const;
  bool connected() const;

 private:
  CommGraph(int n, std::vector<Edge> edges) : n_(n), edges_(std::move(edges)) {}

  int n_;
  std::vector<Edge> edges_;
};

class MixingMatrix {
 public:
  /// Metropolis-Hastings weights: a_ij = 1 / (1 + max(deg_i, deg_j)) on
  /// edges and a_ii = 1 - sum_{j != i} a_ij. Throws "graph not connected".
  static MixingMatrix metropolis(const CommGraph& graph);

  /// Validates an explicit weight matrix against every invariant.
  static MixingMatrix from_weights(const Matrix& weights,
                                   double tol = kStochasticTolerance);

  const Matrix& weights() const noexcept { return weights_; }
  int size() const noexcept { return static_cast<int>(weights_.rows()); }

  /// Smallest structurally nonzero entry (0.5 for the 1x1 matrix, whose only
  /// entry equals 1).
  double epsilon() const noexcept { return epsilon_; }

 private:
  MixingMatrix(Matrix w, double eps) : weights_(std::move(w)), epsilon_(eps) {}

  Matrix weights_;
  double epsilon_;
};

struct MixingConstants {
  double gamma;
  double alpha;
};

/// gamma = 1 - eps / (4 N^2), alpha = 2 + 60 N^2 / (1 - gamma^2).
MixingConstants mixing_constants(int n_agents, double epsilon);
double alpha_from_gamma(int n_agents, double gamma);

/// Smallest structurally nonzero entry of a square nonnegative matrix;
/// 0.5 for a 1x1 matrix.
double min_nonzero_entry(const Matrix& m);

bool verify_double_stochastic(const Matrix& m, double tol);

/// max_ij |[A^t]_ij - 1/N| by repeated multiplication, t >= 1.
double transition_deviation(const Matrix& a, int t);
double transition_deviation(const MixingMatrix& m, int t);
/// Deviations for t = 1..t_max in one pass; element k holds t = k + 1.
std::vector<double> transition_deviations(const Matrix& a, int t_max);

/// Second-largest singular value, the consensus contraction factor.
double second_singular_value(const Matrix& a);

}  // namespace orfnet
