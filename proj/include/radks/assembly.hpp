#pragma once
// Discrete operators on a RadialMesh: the generalized eigenproblem (H, M)
// per angular momentum and the Hartree system A V = b.

#include <Eigen/Dense>

#include <cmath>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "radks/banded.hpp"
#include "radks/mesh.hpp"

namespace radks {

enum class RadialWeight { one, r, r2 };

/// sum_e sum_q w_q f(r_q) weight(r_q) |J_e|, with f given at every quadrature point.
inline double quadrature_integral(RadialMesh const& mesh, std::span<double const> f,
                                  RadialWeight weight = RadialWeight::one) {
  if (static_cast<int>(f.size()) != mesh.num_quad_points())
    throw std::invalid_argument("quadrature_integral: expected " + std::to_string(mesh.num_quad_points()) +
                                " samples, got " + std::to_string(f.size()));
  auto const r = mesh.quad_points();
  auto const w = mesh.quad_weights();
  double s = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) {
    double const g = weight == RadialWeight::one ? 1.0 : weight == RadialWeight::r ? r[i] : r[i] * r[i];
    s += w[i] * f[i] * g;
  }
  return s;
}

namespace detail {

template <class Integrand>
BandedMatrix assemble_full(RadialMesh const& mesh, bool symmetric, Integrand&& integrand) {
  int const p = mesh.order();
  int const nq = mesh.quad_per_element();
  auto const& basis = mesh.basis();
  BandedMatrix a(mesh.num_dofs(), p, p, symmetric);
  for (int e = 0; e < mesh.num_elements(); ++e) {
    double const jac = mesh.jacobian(e);
    for (int q = 0; q < nq; ++q) {
      double const r = mesh.quad_point(e, q);
      double const w = mesh.quad_weight(e, q);
      int const iq = e * nq + q;
      for (int i = 0; i <= p; ++i) {
        double const vi = basis.shape_value(q, i);
        double const di = basis.shape_deriv(q, i) / jac;
        for (int j = 0; j <= p; ++j) {
          double const vj = basis.shape_value(q, j);
          double const dj = basis.shape_deriv(q, j) / jac;
          a.add(mesh.dof(e, i), mesh.dof(e, j), w * integrand(iq, r, vi, di, vj, dj));
        }
      }
    }
  }
  return a;
}

inline void check_quad_field(RadialMesh const& mesh, std::span<double const> v, char const* what) {
  if (static_cast<int>(v.size()) != mesh.num_quad_points())
    throw std::invalid_argument(std::string(what) + ": expected " + std::to_string(mesh.num_quad_points()) +
                                " quadrature values, got " + std::to_string(v.size()));
}

/// Exact symmetrization (removes last-bit rounding asymmetry).
inline void symmetrize(BandedMatrix& a) {
  for (int i = 0; i < a.size(); ++i)
    for (int j = i + 1; j <= std::min(a.size() - 1, i + a.upper()); ++j) {
      double const m = 0.5 * (a(i, j) + a(j, i));
      a.at(i, j) = m;
      a.at(j, i) = m;
    }
}

}  // namespace detail

/// Stiffness  L_ij = int phi_i' phi_j' dr over all DOFs.
inline BandedMatrix assemble_stiffness(RadialMesh const& mesh) {
  auto a = detail::assemble_full(mesh, true, [](int, double, double, double di, double, double dj) { return di * dj; });
  detail::symmetrize(a);
  return a;
}

/// Mass  M_ij = int phi_i phi_j dr over all DOFs.
inline BandedMatrix assemble_mass(RadialMesh const& mesh) {
  auto a = detail::assemble_full(mesh, true, [](int, double, double vi, double, double vj, double) { return vi * vj; });
  detail::symmetrize(a);
  return a;
}

/// int w(r) phi_i phi_j dr with w given at quadrature points.
inline BandedMatrix assemble_weighted_mass(RadialMesh const& mesh, std::span<double const> w_quad) {
  detail::check_quad_field(mesh, w_quad, "assemble_weighted_mass");
  auto a = detail::assemble_full(mesh, true, [&](int iq, double, double vi, double, double vj, double) {
    return w_quad[iq] * vi * vj;
  });
  detail::symmetrize(a);
  return a;
}

/// Interior DOF range for P(0) = P(R) = 0.
inline int interior_size(RadialMesh const& mesh) { return mesh.num_dofs() - 2; }

/// Embed an interior vector into a full FE vector with zero end values.
inline std::vector<double> embed_interior(RadialMesh const& mesh, Eigen::Ref<Eigen::VectorXd const> x) {
  std::vector<double> full(mesh.num_dofs(), 0.0);
  for (int i = 0; i < interior_size(mesh); ++i) full[i + 1] = x[i];
  return full;
}

inline Eigen::VectorXd restrict_interior(RadialMesh const& mesh, std::span<double const> full) {
  mesh.check_length(full);
  Eigen::VectorXd x(interior_size(mesh));
  for (int i = 0; i < x.size(); ++i) x[i] = full[i + 1];
  return x;
}

/// Pieces of the radial Hamiltonian that are shared by every l channel,
/// restricted to interior DOFs:
///   H_l = 1/2 L + l(l+1)/2 C + V,   C_ij = int phi_i phi_j / r^2.
class RadialOperators {
 public:
  RadialOperators(RadialMesh const& mesh, std::span<double const> veff_quad) {
    if (interior_size(mesh) < 1) throw std::invalid_argument("RadialOperators: mesh has no interior DOFs");
    detail::check_quad_field(mesh, veff_quad, "RadialOperators");
    std::vector<double> inv_r2(mesh.num_quad_points());
    auto const r = mesh.quad_points();
    for (std::size_t i = 0; i < inv_r2.size(); ++i) inv_r2[i] = 1.0 / (r[i] * r[i]);
    int const n = interior_size(mesh);
    stiffness_ = assemble_stiffness(mesh).block(1, n);
    mass_ = assemble_mass(mesh).block(1, n);
    centrifugal_ = assemble_weighted_mass(mesh, inv_r2).block(1, n);
    potential_ = assemble_weighted_mass(mesh, veff_quad).block(1, n);
  }

  [[nodiscard]] BandedMatrix hamiltonian(int l) const {
    if (l < 0) throw std::invalid_argument("RadialOperators::hamiltonian: l must be >= 0");
    auto h = stiffness_.combine(0.5, potential_, 1.0);
    if (l > 0) h = h.combine(1.0, centrifugal_, 0.5 * l * (l + 1));
    h.set_symmetric(true);
    return h;
  }
  [[nodiscard]] BandedMatrix const& mass() const { return mass_; }
  [[nodiscard]] BandedMatrix const& stiffness() const { return stiffness_; }
  [[nodiscard]] BandedMatrix const& centrifugal() const { return centrifugal_; }
  [[nodiscard]] BandedMatrix const& potential() const { return potential_; }

 private:
  BandedMatrix stiffness_;
  BandedMatrix mass_;
  BandedMatrix centrifugal_;
  BandedMatrix potential_;
};

struct EigenSystem {
  BandedMatrix hamiltonian;
  BandedMatrix mass;
};

/// (H, M) for angular momentum l over interior DOFs, V_eff at quadrature points.
inline EigenSystem assemble_eigensystem(RadialMesh const& mesh, std::span<double const> veff_quad, int l) {
  if (l < 0) throw std::invalid_argument("assemble_eigensystem: l must be >= 0");
  RadialOperators ops(mesh, veff_quad);
  return {ops.hamiltonian(l), ops.mass()};
}

/// Hartree system after Dirichlet elimination of the r = R node.
/// Unknowns are nodal V_Har at DOFs 0 .. n-2; the r = 0 row is the natural
/// (Neumann) condition V'(0) = 0.
struct HartreeSystem {
  BandedMatrix matrix;
  Eigen::VectorXd rhs;
  double boundary_value = 0.0;  // V_Har(R)
  double charge = 0.0;          // 4 pi int rho r^2 dr
};

/// A_ij = int phi_j' phi_i' - (2/r) phi_i phi_j' dr,  b_i = int 4 pi rho phi_i dr,
/// V_Har(R) = Q/R with Q the electron count carried by rho.
inline HartreeSystem assemble_hartree(RadialMesh const& mesh, std::span<double const> rho_quad) {
  detail::check_quad_field(mesh, rho_quad, "assemble_hartree");
  for (double v : rho_quad)
    if (v < -1e-12) throw std::invalid_argument("assemble_hartree: negative density");
  auto full = detail::assemble_full(mesh, false, [](int, double r, double vi, double di, double, double dj) {
    return dj * di - 2.0 / r * vi * dj;
  });
  int const n = mesh.num_dofs();
  Eigen::VectorXd b = Eigen::VectorXd::Zero(n);
  int const nq = mesh.quad_per_element();
  auto const& basis = mesh.basis();
  for (int e = 0; e < mesh.num_elements(); ++e)
    for (int q = 0; q < nq; ++q) {
      double const f = 4.0 * std::numbers::pi * rho_quad[e * nq + q] * mesh.quad_weight(e, q);
      for (int i = 0; i <= mesh.order(); ++i) b[mesh.dof(e, i)] += f * basis.shape_value(q, i);
    }
  HartreeSystem sys;
  sys.charge = 4.0 * std::numbers::pi * quadrature_integral(mesh, rho_quad, RadialWeight::r2);
  sys.boundary_value = sys.charge / mesh.radius();
  sys.matrix = full.block(0, n - 1);
  sys.rhs = b.head(n - 1);
  for (int i = std::max(0, n - 1 - mesh.order()); i < n - 1; ++i) sys.rhs[i] -= full(i, n - 1) * sys.boundary_value;
  return sys;
}

/// Full nodal vector from the reduced Hartree solution.
inline std::vector<double> expand_hartree(HartreeSystem const& sys, Eigen::VectorXd const& reduced) {
  std::vector<double> v(reduced.data(), reduced.data() + reduced.size());
  v.push_back(sys.boundary_value);
  return v;
}

}  // namespace radks
