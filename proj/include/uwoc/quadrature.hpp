#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <map>
#include <mutex>
#include <numbers>

#include "uwoc/error.hpp"

namespace uwoc {

/// Nodes and weights of the n-point Gauss-Hermite rule for the weight
/// exp(-x^2) on the real line.
template <typename Scalar>
struct GaussHermiteRule {
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  Vector nodes;
  Vector weights;

  Eigen::Index size() const { return nodes.size(); }
};

namespace detail {

// Orthonormal Hermite recurrence; returns p_n(x) and p_{n-1}(x).
template <typename Scalar>
std::pair<Scalar, Scalar> orthonormal_hermite(int n, Scalar x) {
  using std::sqrt;
  Scalar prev(0);
  Scalar cur = Scalar(1) / sqrt(sqrt(std::numbers::pi_v<Scalar>));
  for (int k = 0; k < n; ++k) {
    const Scalar next = x * sqrt(Scalar(2) / Scalar(k + 1)) * cur - sqrt(Scalar(k) / Scalar(k + 1)) * prev;
    prev = cur;
    cur = next;
  }
  return {cur, prev};
}

}  // namespace detail

/// Computes the rule from the eigenvalues of the symmetric Jacobi matrix,
/// then polishes every node with Newton steps on the three-term recurrence
/// and takes the weights from the Christoffel formula.
template <typename Scalar>
GaussHermiteRule<Scalar> make_gauss_hermite_rule(int n) {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  if (n < 1) throw ParameterError("Gauss-Hermite rule needs at least one node");

  Matrix jacobi = Matrix::Zero(n, n);
  for (int k = 1; k < n; ++k) {
    jacobi(k, k - 1) = jacobi(k - 1, k) = std::sqrt(Scalar(k) / Scalar(2));
  }
  Eigen::SelfAdjointEigenSolver<Matrix> solver(jacobi, Eigen::EigenvaluesOnly);

  GaussHermiteRule<Scalar> rule;
  rule.nodes = solver.eigenvalues();
  rule.weights.resize(n);
  for (int i = 0; i < n; ++i) {
    Scalar x = rule.nodes(i);
    for (int it = 0; it < 8; ++it) {
      const auto [pn, pn1] = detail::orthonormal_hermite(n, x);
      const Scalar dp = std::sqrt(Scalar(2 * n)) * pn1;
      const Scalar step = pn / dp;
      x -= step;
      if (std::abs(step) <= std::numeric_limits<Scalar>::epsilon() * (Scalar(1) + std::abs(x))) break;
    }
    const auto [pn, pn1] = detail::orthonormal_hermite(n, x);
    (void)pn;
    rule.nodes(i) = x;
    rule.weights(i) = Scalar(1) / (Scalar(n) * pn1 * pn1);
  }
  return rule;
}

/// Cached double-precision rule; safe to call concurrently.
inline const GaussHermiteRule<double>& gauss_hermite_rule(int n) {
  static std::mutex mutex;
  static std::map<int, GaussHermiteRule<double>> cache;
  std::lock_guard lock(mutex);
  auto it = cache.find(n);
  if (it == cache.end()) it = cache.emplace(n, make_gauss_hermite_rule<double>(n)).first;
  return it->second;
}

/// Log-normal fading values h = exp(2x), x ~ N(-s2, s2), at the nodes of an
/// n-point rule, paired with probability weights that sum to one.
struct LognormalNodes {
  Eigen::VectorXd values;
  Eigen::VectorXd probabilities;
};

inline LognormalNodes lognormal_nodes(double sigma_x_sq, int n_nodes) {
  if (sigma_x_sq < 0) throw ParameterError("log-amplitude variance must be non-negative");
  LognormalNodes out;
  if (sigma_x_sq == 0.0) {
    out.values = Eigen::VectorXd::Ones(1);
    out.probabilities = Eigen::VectorXd::Ones(1);
    return out;
  }
  const auto& rule = gauss_hermite_rule(n_nodes);
  const double sigma = std::sqrt(sigma_x_sq);
  const double mu = -sigma_x_sq;
  out.values = ((std::numbers::sqrt2 * sigma * rule.nodes.array() + mu) * 2.0).exp().matrix();
  out.probabilities = rule.weights / std::sqrt(std::numbers::pi);
  return out;
}

/// E[f(h)] for log-normal fading h with E[h] = 1 and log-amplitude variance
/// sigma_x_sq, by n-point Gauss-Hermite quadrature.
template <typename F>
double gauss_hermite_lognormal_expectation(F&& f, double sigma_x_sq, int n_nodes) {
  if (n_nodes < 1) throw ParameterError("n_nodes must be >= 1");
  const auto nodes = lognormal_nodes(sigma_x_sq, n_nodes);
  double acc = 0.0;
  for (Eigen::Index i = 0; i < nodes.values.size(); ++i) acc += nodes.probabilities(i) * f(nodes.values(i));
  return acc;
}

}  // namespace uwoc
