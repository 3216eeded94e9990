#pragma once
// Reference-element machinery on [-1, 1]: Gauss-Legendre rules and the
// nodal Lagrange basis on Gauss-Lobatto points.

#include <cmath>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace radks {

struct QuadratureRule {
  std::vector<double> points;
  std::vector<double> weights;

  [[nodiscard]] int size() const { return static_cast<int>(points.size()); }
};

namespace detail {

/// Legendre P_n(x) and P_n'(x) by the three-term recurrence.
inline std::pair<double, double> legendre_with_derivative(int n, double x) {
  if (n == 0) return {1.0, 0.0};
  double p_prev = 1.0;
  double p = x;
  for (int k = 2; k <= n; ++k) {
    double const p_next = ((2 * k - 1) * x * p - (k - 1) * p_prev) / k;
    p_prev = p;
    p = p_next;
  }
  // (1 - x^2) P_n' = n (P_{n-1} - x P_n); endpoints use the closed form.
  double dp;
  if (std::abs(1.0 - x * x) < 1e-300) {
    double const sign = (x > 0 || n % 2 == 1) ? 1.0 : -1.0;
    dp = sign * 0.5 * n * (n + 1);
  } else {
    dp = n * (p_prev - x * p) / (1.0 - x * x);
  }
  return {p, dp};
}

}  // namespace detail

/// n-point Gauss-Legendre rule on [-1, 1], exact for degree 2n-1.
inline QuadratureRule gauss_legendre(int n) {
  if (n < 1) throw std::invalid_argument("gauss_legendre: n must be >= 1, got " + std::to_string(n));
  QuadratureRule rule;
  rule.points.resize(n);
  rule.weights.resize(n);
  int const half = (n + 1) / 2;
  for (int i = 0; i < half; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      auto [p, d] = detail::legendre_with_derivative(n, x);
      dp = d;
      double const dx = p / d;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    dp = detail::legendre_with_derivative(n, x).second;
    double const w = 2.0 / ((1.0 - x * x) * dp * dp);
    rule.points[i] = -x;
    rule.points[n - 1 - i] = x;
    rule.weights[i] = w;
    rule.weights[n - 1 - i] = w;
  }
  if (n % 2 == 1) rule.points[n / 2] = 0.0;
  return rule;
}

/// The p+1 Gauss-Lobatto points: +-1 and the roots of P_p'.
inline std::vector<double> gauss_lobatto_nodes(int p) {
  if (p < 1) throw std::invalid_argument("gauss_lobatto_nodes: p must be >= 1, got " + std::to_string(p));
  std::vector<double> nodes(p + 1);
  nodes.front() = -1.0;
  nodes.back() = 1.0;
  for (int i = 1; i < p; ++i) {
    // Chebyshev-Lobatto initial guess, Newton on P_p' using the Legendre ODE
    // (1 - x^2) P'' = 2x P' - p(p+1) P.
    double x = -std::cos(std::numbers::pi * i / p);
    for (int it = 0; it < 100; ++it) {
      auto [val, d1] = detail::legendre_with_derivative(p, x);
      double const d2 = (2.0 * x * d1 - p * (p + 1.0) * val) / (1.0 - x * x);
      double const dx = d1 / d2;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    nodes[i] = x;
  }
  for (int i = 1; i < p; ++i) {
    // symmetrize to remove last-bit asymmetry
    double const s = 0.5 * (nodes[i] - nodes[p - i]);
    nodes[i] = s;
    nodes[p - i] = -s;
  }
  if (p % 2 == 0) nodes[p / 2] = 0.0;
  return nodes;
}

/// Lagrange cardinal basis of order p on Gauss-Lobatto nodes, together with
/// value/derivative tables at a quadrature rule.
class ElementBasis {
 public:
  ElementBasis(int order, QuadratureRule rule) : order_(order), nodes_(gauss_lobatto_nodes(order)), rule_(std::move(rule)) {
    denom_.resize(order_ + 1);
    for (int j = 0; j <= order_; ++j) {
      double d = 1.0;
      for (int k = 0; k <= order_; ++k)
        if (k != j) d *= nodes_[j] - nodes_[k];
      denom_[j] = d;
    }
    int const nq = rule_.size();
    values_.assign(static_cast<std::size_t>(nq) * (order_ + 1), 0.0);
    derivs_.assign(values_.size(), 0.0);
    for (int q = 0; q < nq; ++q) {
      for (int j = 0; j <= order_; ++j) {
        values_[q * (order_ + 1) + j] = value(j, rule_.points[q]);
        derivs_[q * (order_ + 1) + j] = derivative(j, rule_.points[q]);
      }
    }
  }

  [[nodiscard]] int order() const { return order_; }
  [[nodiscard]] int num_functions() const { return order_ + 1; }
  [[nodiscard]] std::span<double const> nodes() const { return nodes_; }
  [[nodiscard]] QuadratureRule const& rule() const { return rule_; }

  /// phi_j(t) in product form.
  [[nodiscard]] double value(int j, double t) const {
    double v = 1.0;
    for (int k = 0; k <= order_; ++k)
      if (k != j) v *= t - nodes_[k];
    return v / denom_[j];
  }

  /// phi_j'(t); sum over the dropped factor, stable at the nodes.
  [[nodiscard]] double derivative(int j, double t) const {
    double sum = 0.0;
    for (int m = 0; m <= order_; ++m) {
      if (m == j) continue;
      double v = 1.0;
      for (int k = 0; k <= order_; ++k)
        if (k != j && k != m) v *= t - nodes_[k];
      sum += v;
    }
    return sum / denom_[j];
  }

  /// Table lookups at quadrature point q.
  [[nodiscard]] double shape_value(int q, int j) const { return values_[q * (order_ + 1) + j]; }
  [[nodiscard]] double shape_deriv(int q, int j) const { return derivs_[q * (order_ + 1) + j]; }

 private:
  int order_;
  std::vector<double> nodes_;
  std::vector<double> denom_;
  QuadratureRule rule_;
  std::vector<double> values_;
  std::vector<double> derivs_;
};

/// Lobatto-node Lagrange basis of order p. n_quad = 0 selects p + 2 Gauss points.
inline ElementBasis lobatto_basis(int p, int n_quad = 0) {
  if (p < 1) throw std::invalid_argument("lobatto_basis: p must be >= 1, got " + std::to_string(p));
  if (n_quad < 0) throw std::invalid_argument("lobatto_basis: negative quadrature size");
  return ElementBasis(p, gauss_legendre(n_quad == 0 ? p + 2 : n_quad));
}

namespace detail {
inline void check_fe_args(ElementBasis const& basis, std::span<double const> coeffs, double t) {
  if (static_cast<int>(coeffs.size()) != basis.num_functions())
    throw std::invalid_argument("eval_fe_function: expected " + std::to_string(basis.num_functions()) +
                                " coefficients, got " + std::to_string(coeffs.size()));
  if (!(t >= -1.0 && t <= 1.0))
    throw std::invalid_argument("eval_fe_function: t = " + std::to_string(t) + " outside [-1, 1]");
}
}  // namespace detail

inline double eval_fe_function(ElementBasis const& basis, std::span<double const> coeffs, double t) {
  detail::check_fe_args(basis, coeffs, t);
  double s = 0.0;
  for (int j = 0; j < basis.num_functions(); ++j) s += coeffs[j] * basis.value(j, t);
  return s;
}

/// d/dt of the local interpolant (reference coordinate).
inline double eval_fe_derivative(ElementBasis const& basis, std::span<double const> coeffs, double t) {
  detail::check_fe_args(basis, coeffs, t);
  double s = 0.0;
  for (int j = 0; j < basis.num_functions(); ++j) s += coeffs[j] * basis.derivative(j, t);
  return s;
}

}  // namespace radks
