#include "orfnet/topology.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <set>

#include "orfnet/error.hpp"
#include "orfnet/sampling.hpp"

namespace orfnet {

CommGraph CommGraph::from_edges(int n_agents, const std::vector<Edge>& edges) {
  if (n_agents < 1) throw_invalid("graph needs at least one agent");
  std::set<Edge> unique;
  for (auto [i, j] : edges) {
    if (i < 0 || j < 0 || i >= n_agents || j >= n_agents) {
      throw_invalid("edge (" + std::to_string(i) + "," + std::to_string(j) +
                    ") out of range for " + std::to_string(n_agents) +
                    " agents");
    }
    if (i == j) throw_invalid("self-loop on agent " + std::to_string(i));
    unique.insert({std::min(i, j), std::max(i, j)});
  }
  return CommGraph(n_agents, {unique.begin(), unique.end()});
}

CommGraph CommGraph::ring(int n_agents) {
  std::vector<Edge> e;
  if (n_agents == 2) e.emplace_back(0, 1);
  if (n_agents > 2) {
    for (int i = 0; i < n_agents; ++i) e.emplace_back(i, (i + 1) % n_agents);
  }
  return from_edges(n_agents, e);
}

CommGraph CommGraph::path(int n_agents) {
  std::vector<Edge> e;
  for (int i = 0; i + 1 < n_agents; ++i) e.emplace_back(i, i + 1);
  return from_edges(n_agents, e);
}

CommGraph CommGraph::complete(int n_agents) {
  std::vector<Edge> e;
  for (int i = 0; i < n_agents; ++i) {
    for (int j = i + 1; j < n_agents; ++j) e.emplace_back(i, j);
  }
  return from_edges(n_agents, e);
}

CommGraph CommGraph::erdos(int n_agents, double edge_probability,
                           std::uint64_t seed) {
  if (!(edge_probability > 0.0 && edge_probability <= 1.0)) {
    throw_invalid("edge probability must lie in (0,1]");
  }
  constexpr int kAttempts = 1000;
  for (int attempt = 0; attempt < kAttempts; ++attempt) {
    RngStream rng(derive_seed(seed, static_cast<std::uint64_t>(attempt)), 0);
    std::vector<Edge> e;
    for (int i = 0; i < n_agents; ++i) {
      for (int j = i + 1; j < n_agents; ++j) {
        if (rng.next_uniform() < edge_probability) e.emplace_back(i, j);
      }
    }
    auto g = from_edges(n_agents, e);
    if (g.connected()) return g;
  }
  throw_invalid("no connected Erdos-Renyi sample found; raise edge probability");
}

CommGraph CommGraph::family(const std::string& name, int n_agents,
                            double edge_probability, std::uint64_t seed) {
  if (name == "ring") return ring(n_agents);
  if (name == "path") return path(n_agents);
  if (name == "complete") return complete(n_agents);
  if (name == "erdos") return erdos(n_agents, edge_probability, seed);
  throw_invalid("unknown graph family '" + name + "'");
}

std::vector<int> CommGraph::degrees() const {
  std::vector<int> deg(static_cast<std::size_t>(n_), 0);
  for (auto [i, j] : edges_) {
    ++deg[static_cast<std::size_t>(i)];
    ++deg[static_cast<std::size_t>(j)];
  }
  return deg;
}

bool CommGraph::connected() const {
  std::vector<std::vector<int>> adj(static_cast<std::size_t>(n_));
  for (auto [i, j] : edges_) {
    adj[static_cast<std::size_t>(i)].push_back(j);
    adj[static_cast<std::size_t>(j)].push_back(i);
  }
  std::vector<bool> seen(static_cast<std::size_t>(n_), false);
  std::queue<int> q;
  q.push(0);
  seen[0] = true;
  int count = 1;
  while (!q.empty()) {
    int v = q.front();
    q.pop();
    for (int w : adj[static_cast<std::size_t>(v)]) {
      if (!seen[static_cast<std::size_t>(w)]) {
        seen[static_cast<std::size_t>(w)] = true;
        ++count;
        q.push(w);
      }
    }
  }
  return count == n_;
}

double min_nonzero_entry(const Matrix& m) {
  if (m.rows() == 1 && m.cols() == 1) return 0.5;
  double eps = 1.0;
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (m(i, j) > 0.0) eps = std::min(eps, m(i, j));
    }
  }
  return eps;
}

MixingMatrix MixingMatrix::metropolis(const CommGraph& graph) {
  if (!graph.connected()) throw_invalid("graph not connected");
  const int n = graph.n_agents();
  const auto deg = graph.degrees();
  Matrix w = Matrix::Zero(n, n);
  for (auto [i, j] : graph.edges()) {
    const double a =
        1.0 / (1.0 + std::max(deg[static_cast<std::size_t>(i)],
                              deg[static_cast<std::size_t>(j)]));
    w(i, j) = a;
    w(j, i) = a;
  }
  for (int i = 0; i < n; ++i) w(i, i) = 1.0 - w.row(i).sum();
  const double eps = min_nonzero_entry(w);
  return MixingMatrix(std::move(w), eps);
}

MixingMatrix MixingMatrix::from_weights(const Matrix& weights, double tol) {
  const auto n = weights.rows();
  if (n == 0 || weights.cols() != n) throw_invalid("mixing matrix must be square");
  if ((weights.array() < 0.0).any() || (weights.array() > 1.0).any()) {
    throw_invalid("mixing weights must lie in [0,1]");
  }
  if (!verify_double_stochastic(weights, tol)) {
    throw_invalid("mixing matrix is not doubly stochastic");
  }
  std::vector<CommGraph::Edge> edges;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!(weights(i, i) > 0.0)) throw_invalid("mixing matrix needs a_ii > 0");
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const bool ij = weights(i, j) > 0.0;
      const bool ji = weights(j, i) > 0.0;
      if (ij != ji) throw_invalid("mixing matrix sparsity pattern not symmetric");
      if (ij) edges.emplace_back(static_cast<int>(i), static_cast<int>(j));
    }
  }
  if (!CommGraph::from_edges(static_cast<int>(n), edges).connected()) {
    throw_invalid("graph not connected");
  }
  return MixingMatrix(weights, min_nonzero_entry(weights));
}

double alpha_from_gamma(int n_agents, double gamma) {
  const double n2 = static_cast<double>(n_agents) * n_agents;
  return 2.0 + 60.0 * n2 / (1.0 - gamma * gamma);
}

MixingConstants mixing_constants(int n_agents, double epsilon) {
  if (n_agents < 1) throw_invalid("mixing constants need n >= 1");
  if (!(epsilon > 0.0 && epsilon < 1.0)) {
    throw_invalid("epsilon must lie in (0,1)");
  }
  const double n2 = static_cast<double>(n_agents) * n_agents;
  const double gamma = 1.0 - epsilon / (4.0 * n2);
  return {gamma, alpha_from_gamma(n_agents, gamma)};
}

bool verify_double_stochastic(const Matrix& m, double tol) {
  if (m.rows() != m.cols()) throw_invalid("matrix must be square");
  if ((m.array() < 0.0).any()) return false;
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    if (std::abs(m.row(i).sum() - 1.0) > tol) return false;
    if (std::abs(m.col(i).sum() - 1.0) > tol) return false;
  }
  return true;
}

std::vector<double> transition_deviations(const Matrix& a, int t_max) {
  if (t_max < 1) throw_invalid("transition deviation needs t >= 1");
  if (a.rows() != a.cols()) throw_invalid("matrix must be square");
  const double uniform = 1.0 / static_cast<double>(a.rows());
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(t_max));
  Matrix power = a;
  for (int t = 1; t <= t_max; ++t) {
    if (t > 1) power = (power * a).eval();
    out.push_back((power.array() - uniform).abs().maxCoeff());
  }
  return out;
}

double transition_deviation(const Matrix& a, int t) {
  return transition_deviations(a, t).back();
}

double transition_deviation(const MixingMatrix& m, int t) {
  return transition_deviation(m.weights(), t);
}

double second_singular_value(const Matrix& a) {
  if (a.rows() < 2) return 0.0;
  Eigen::JacobiSVD<Matrix> svd(a);
  return svd.singularValues()(1);
}

}  // namespace orfnet
