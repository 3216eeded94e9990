#pragma once
// Radial finite element mesh on [0, R] and the moving-mesh machinery.

#include <algorithm>
#include <cmath>
#include <memory>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "radks/errors.hpp"
#include "radks/quadrature.hpp"

namespace radks {

/// Element boundaries 0 = x_0 < ... < x_N = R, each element carrying the
/// affinely mapped Lobatto nodes of order p. Immutable once built.
class RadialMesh {
 public:
  RadialMesh(std::vector<double> boundaries, int order, int quad_points = 0)
      : boundaries_(std::move(boundaries)),
        basis_(std::make_shared<ElementBasis const>(lobatto_basis(order, quad_points))) {
    if (boundaries_.size() < 2) throw std::invalid_argument("RadialMesh: need at least one element");
    if (boundaries_.front() != 0.0) throw std::invalid_argument("RadialMesh: first boundary must be 0");
    for (std::size_t i = 1; i < boundaries_.size(); ++i)
      if (!(boundaries_[i] > boundaries_[i - 1]))
        throw std::invalid_argument("RadialMesh: boundaries must be strictly increasing (index " +
                                    std::to_string(i) + ")");
    build_tables();
  }

  [[nodiscard]] double radius() const { return boundaries_.back(); }
  [[nodiscard]] int num_elements() const { return static_cast<int>(boundaries_.size()) - 1; }
  [[nodiscard]] int order() const { return basis_->order(); }
  [[nodiscard]] int num_dofs() const { return num_elements() * order() + 1; }
  [[nodiscard]] std::span<double const> boundaries() const { return boundaries_; }
  [[nodiscard]] ElementBasis const& basis() const { return *basis_; }
  [[nodiscard]] int quad_per_element() const { return basis_->rule().size(); }
  [[nodiscard]] int num_quad_points() const { return num_elements() * quad_per_element(); }

  [[nodiscard]] double element_length(int e) const { return boundaries_[e + 1] - boundaries_[e]; }
  [[nodiscard]] double jacobian(int e) const { return 0.5 * element_length(e); }
  [[nodiscard]] int dof(int e, int j) const { return e * order() + j; }

  /// Physical coordinate of global node g.
  [[nodiscard]] double node(int g) const { return nodes_[g]; }
  [[nodiscard]] std::span<double const> nodes() const { return nodes_; }

  /// Physical quadrature abscissae and weights (Jacobian included), element-major.
  [[nodiscard]] std::span<double const> quad_points() const { return quad_x_; }
  [[nodiscard]] std::span<double const> quad_weights() const { return quad_w_; }
  [[nodiscard]] double quad_point(int e, int q) const { return quad_x_[e * quad_per_element() + q]; }
  [[nodiscard]] double quad_weight(int e, int q) const { return quad_w_[e * quad_per_element() + q]; }

  /// Element containing x (the left one at an interior boundary).
  [[nodiscard]] int locate(double x) const {
    if (x < 0.0 || x > radius()) throw std::invalid_argument("RadialMesh::locate: x outside [0, R]");
    auto it = std::lower_bound(boundaries_.begin() + 1, boundaries_.end(), x);
    return std::min(static_cast<int>(it - boundaries_.begin()) - 1, num_elements() - 1);
  }

  [[nodiscard]] double to_reference(int e, double x) const {
    double const t = (2.0 * x - boundaries_[e] - boundaries_[e + 1]) / element_length(e);
    return std::clamp(t, -1.0, 1.0);
  }

  [[nodiscard]] std::span<double const> element_coeffs(std::span<double const> coeffs, int e) const {
    return coeffs.subspan(static_cast<std::size_t>(e) * order(), order() + 1);
  }

  /// FE function value at physical x.
  [[nodiscard]] double evaluate(std::span<double const> coeffs, double x) const {
    int const e = locate(x);
    return eval_fe_function(*basis_, element_coeffs(coeffs, e), to_reference(e, x));
  }

  /// d/dx of the FE function at physical x.
  [[nodiscard]] double evaluate_derivative(std::span<double const> coeffs, double x) const {
    int const e = locate(x);
    return eval_fe_derivative(*basis_, element_coeffs(coeffs, e), to_reference(e, x)) / jacobian(e);
  }

  /// Values of an FE vector at every quadrature point.
  [[nodiscard]] std::vector<double> at_quadrature(std::span<double const> coeffs) const {
    check_length(coeffs);
    std::vector<double> out(num_quad_points(), 0.0);
    int const nq = quad_per_element();
    for (int e = 0; e < num_elements(); ++e)
      for (int q = 0; q < nq; ++q) {
        double s = 0.0;
        for (int j = 0; j <= order(); ++j) s += coeffs[dof(e, j)] * basis_->shape_value(q, j);
        out[e * nq + q] = s;
      }
    return out;
  }

  /// d/dx of an FE vector at every quadrature point.
  [[nodiscard]] std::vector<double> derivative_at_quadrature(std::span<double const> coeffs) const {
    check_length(coeffs);
    std::vector<double> out(num_quad_points(), 0.0);
    int const nq = quad_per_element();
    for (int e = 0; e < num_elements(); ++e)
      for (int q = 0; q < nq; ++q) {
        double s = 0.0;
        for (int j = 0; j <= order(); ++j) s += coeffs[dof(e, j)] * basis_->shape_deriv(q, j);
        out[e * nq + q] = s / jacobian(e);
      }
    return out;
  }

  [[nodiscard]] bool same_as(RadialMesh const& other) const {
    return order() == other.order() && quad_per_element() == other.quad_per_element() &&
           boundaries_ == other.boundaries_;
  }

  void check_length(std::span<double const> coeffs) const {
    if (static_cast<int>(coeffs.size()) != num_dofs())
      throw std::invalid_argument("FE vector length " + std::to_string(coeffs.size()) + " does not match " +
                                  std::to_string(num_dofs()) + " mesh DOFs");
  }

 private:
  void build_tables() {
    int const p = order();
    auto const ref_nodes = basis_->nodes();
    nodes_.assign(num_dofs(), 0.0);
    for (int e = 0; e < num_elements(); ++e)
      for (int j = 0; j <= p; ++j)
        nodes_[dof(e, j)] = boundaries_[e] + 0.5 * (ref_nodes[j] + 1.0) * element_length(e);
    // interface and end nodes exactly on the boundaries
    for (int e = 0; e <= num_elements(); ++e) nodes_[e * p] = boundaries_[e];

    auto const& rule = basis_->rule();
    int const nq = rule.size();
    quad_x_.resize(static_cast<std::size_t>(num_elements()) * nq);
    quad_w_.resize(quad_x_.size());
    for (int e = 0; e < num_elements(); ++e)
      for (int q = 0; q < nq; ++q) {
        quad_x_[e * nq + q] = boundaries_[e] + 0.5 * (rule.points[q] + 1.0) * element_length(e);
        quad_w_[e * nq + q] = rule.weights[q] * jacobian(e);
      }
  }

  std::vector<double> boundaries_;
  std::shared_ptr<ElementBasis const> basis_;
  std::vector<double> nodes_;
  std::vector<double> quad_x_;
  std::vector<double> quad_w_;
};

inline RadialMesh uniform_mesh(double radius, int n_ele, int p, int quad_points = 0) {
  if (!(radius > 0.0)) throw std::invalid_argument("uniform_mesh: radius must be positive");
  if (n_ele < 1) throw std::invalid_argument("uniform_mesh: n_ele must be >= 1");
  if (p < 1) throw std::invalid_argument("uniform_mesh: p must be >= 1");
  std::vector<double> b(n_ele + 1);
  for (int i = 0; i <= n_ele; ++i) b[i] = radius * i / n_ele;
  b.back() = radius;
  return RadialMesh(std::move(b), p, quad_points);
}

/// One monitor value per element, M_{i+1/2} >= sqrt(alpha).
struct MonitorSamples {
  std::vector<double> values;
  double alpha = 0.01;
};

enum class MonitorSampling {
  element_mean,  // (1/h) * integral of M over the element, element quadrature
  midpoint       // M at the element midpoint
};

/// M = sqrt(alpha + sum (dP/dx)^2) per element, summed over the given
/// (occupied) orbitals.
inline MonitorSamples monitor_from_orbitals(std::span<std::vector<double> const> orbitals, RadialMesh const& mesh,
                                            double alpha, MonitorSampling sampling = MonitorSampling::element_mean) {
  if (orbitals.empty()) throw std::invalid_argument("monitor_from_orbitals: empty orbital list");
  if (!(alpha > 0.0)) throw std::invalid_argument("monitor_from_orbitals: alpha must be positive");
  for (auto const& P : orbitals) mesh.check_length(P);
  MonitorSamples m;
  m.alpha = alpha;
  m.values.resize(mesh.num_elements());
  if (sampling == MonitorSampling::midpoint) {
    for (int e = 0; e < mesh.num_elements(); ++e) {
      double s = alpha;
      for (auto const& P : orbitals) {
        double const d = eval_fe_derivative(mesh.basis(), mesh.element_coeffs(P, e), 0.0) / mesh.jacobian(e);
        s += d * d;
      }
      m.values[e] = std::sqrt(s);
    }
    return m;
  }
  std::vector<double> sum(mesh.num_quad_points(), alpha);
  for (auto const& P : orbitals) {
    auto const d = mesh.derivative_at_quadrature(P);
    for (std::size_t i = 0; i < sum.size(); ++i) sum[i] += d[i] * d[i];
  }
  auto const w = mesh.quad_weights();
  int const nq = mesh.quad_per_element();
  for (int e = 0; e < mesh.num_elements(); ++e) {
    double integral = 0.0;
    double h = 0.0;
    for (int q = e * nq; q < (e + 1) * nq; ++q) {
      integral += w[q] * std::sqrt(sum[q]);
      h += w[q];
    }
    m.values[e] = integral / h;
  }
  return m;
}

/// Tridiagonal solve by forward elimination / back substitution.
/// sub[i] couples row i+1 to column i; sup[i] couples row i to column i+1.
inline std::vector<double> thomas_solve(std::span<double const> sub, std::span<double const> diag,
                                        std::span<double const> sup, std::span<double const> rhs) {
  std::size_t const n = diag.size();
  if (n == 0 || rhs.size() != n || sub.size() + 1 != n || sup.size() + 1 != n)
    throw std::invalid_argument("thomas_solve: inconsistent tridiagonal dimensions");
  std::vector<double> c(n, 0.0);
  std::vector<double> x(n, 0.0);
  double scale = 0.0;
  for (double d : diag) scale = std::max(scale, std::abs(d));
  auto check = [&](double pivot, std::size_t i) {
    if (std::abs(pivot) <= 1e-300 || std::abs(pivot) < 1e-15 * scale)
      throw SingularMatrixError("thomas_solve: zero pivot at row " + std::to_string(i));
  };
  check(diag[0], 0);
  double pivot = diag[0];
  if (n > 1) c[0] = sup[0] / pivot;
  x[0] = rhs[0] / pivot;
  for (std::size_t i = 1; i < n; ++i) {
    pivot = diag[i] - sub[i - 1] * c[i - 1];
    check(pivot, i);
    if (i + 1 < n) c[i] = sup[i] / pivot;
    x[i] = (rhs[i] - sub[i - 1] * x[i - 1]) / pivot;
  }
  for (std::size_t i = n - 1; i-- > 0;) x[i] -= c[i] * x[i + 1];
  return x;
}

/// One semi-implicit equidistribution solve:
/// M_{i+1/2}(x_{i+1} - x_i) - M_{i-1/2}(x_i - x_{i-1}) = 0, x_0 = 0, x_N = R.
inline RadialMesh equidistribute_step(RadialMesh const& mesh, MonitorSamples const& monitor) {
  int const n = mesh.num_elements();
  if (static_cast<int>(monitor.values.size()) != n)
    throw std::invalid_argument("equidistribute_step: monitor must have one sample per element");
  for (double m : monitor.values)
    if (!(m > 0.0)) throw std::invalid_argument("equidistribute_step: monitor values must be positive");
  std::vector<double> b(n + 1);
  b.front() = 0.0;
  b.back() = mesh.radius();
  if (n > 1) {
    auto const& m = monitor.values;
    int const k = n - 1;  // interior boundaries 1..n-1
    std::vector<double> sub(k - 1), diag(k), sup(k - 1), rhs(k, 0.0);
    for (int i = 1; i <= k; ++i) {
      diag[i - 1] = m[i - 1] + m[i];
      if (i > 1) sub[i - 2] = -m[i - 1];
      if (i < k) sup[i - 1] = -m[i];
    }
    rhs[k - 1] = m[n - 1] * mesh.radius();
    auto const x = thomas_solve(sub, diag, sup, rhs);
    std::copy(x.begin(), x.end(), b.begin() + 1);
  }
  for (int i = 1; i <= n; ++i)
    if (!(b[i] > b[i - 1])) throw InternalError("equidistribute_step: non-monotone mesh produced");
  return RadialMesh(std::move(b), mesh.order(), mesh.quad_per_element());
}

/// Equidistribute M = sqrt(alpha + sum (dP/dx)^2) of the frozen orbitals
/// exactly: the cumulative integral of M on the current mesh (midpoint rule
/// on `sub` cells per element) is inverted at equally spaced levels. This is
/// the limit of repeated semi-implicit solves with the orbitals held fixed.
inline RadialMesh equidistribute_frozen(RadialMesh const& mesh, std::span<std::vector<double> const> orbitals,
                                        double alpha, int sub = 256) {
  if (orbitals.empty()) throw std::invalid_argument("equidistribute_frozen: empty orbital list");
  if (!(alpha > 0.0)) throw std::invalid_argument("equidistribute_frozen: alpha must be positive");
  if (sub < 1) throw std::invalid_argument("equidistribute_frozen: sub must be positive");
  for (auto const& P : orbitals) mesh.check_length(P);
  int const n = mesh.num_elements();
  std::vector<double> xs{0.0};
  std::vector<double> cum{0.0};
  xs.reserve(static_cast<std::size_t>(n) * sub + 1);
  cum.reserve(xs.capacity());
  std::vector<std::span<double const>> local(orbitals.size());
  for (int e = 0; e < n; ++e) {
    for (std::size_t k = 0; k < orbitals.size(); ++k) local[k] = mesh.element_coeffs(orbitals[k], e);
    double const a = mesh.boundaries()[e];
    double const h = mesh.boundaries()[e + 1] - a;
    for (int c = 0; c < sub; ++c) {
      double const t = -1.0 + (2.0 * c + 1.0) / sub;
      double s = alpha;
      for (auto const& lc : local) {
        double const d = eval_fe_derivative(mesh.basis(), lc, t) / mesh.jacobian(e);
        s += d * d;
      }
      xs.push_back(a + h * (c + 1.0) / sub);
      cum.push_back(cum.back() + std::sqrt(s) * h / sub);
    }
  }
  xs.back() = mesh.radius();
  std::vector<double> b(n + 1);
  b.front() = 0.0;
  b.back() = mesh.radius();
  double const total = cum.back();
  for (int i = 1; i < n; ++i) {
    double const level = total * i / n;
    auto const it = std::lower_bound(cum.begin(), cum.end(), level);
    auto const j = static_cast<std::size_t>(it - cum.begin());
    double const f = (level - cum[j - 1]) / (cum[j] - cum[j - 1]);
    b[i] = xs[j - 1] + f * (xs[j] - xs[j - 1]);
  }
  for (int i = 1; i <= n; ++i)
    if (!(b[i] > b[i - 1])) throw InternalError("equidistribute_frozen: non-monotone mesh produced");
  return RadialMesh(std::move(b), mesh.order(), mesh.quad_per_element());
}

/// Nodal transfer of an FE function from one mesh to another.
inline std::vector<double> interpolate_solution(RadialMesh const& from, std::span<double const> coeffs,
                                                RadialMesh const& to) {
  if (std::abs(from.radius() - to.radius()) > 1e-12 * from.radius())
    throw std::invalid_argument("interpolate_solution: meshes have different radii");
  if (from.order() != to.order()) throw std::invalid_argument("interpolate_solution: meshes have different orders");
  from.check_length(coeffs);
  std::vector<double> out(to.num_dofs());
  for (int g = 0; g < to.num_dofs(); ++g) out[g] = from.evaluate(coeffs, std::min(to.node(g), from.radius()));
  out.front() = coeffs.front();
  out.back() = coeffs.back();
  return out;
}

/// `step,boundary_index,x` lines for a sequence of meshes.
inline void write_mesh_history(std::ostream& os, std::span<RadialMesh const> history) {
  auto const old = os.precision(17);
  os << "step,boundary_index,x\n";
  for (std::size_t s = 0; s < history.size(); ++s) {
    auto const b = history[s].boundaries();
    for (std::size_t i = 0; i < b.size(); ++i) os << s << ',' << i << ',' << b[i] << '\n';
  }
  os.precision(old);
}

}  // namespace radks
