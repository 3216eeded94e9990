#pragma once
// Self-consistent field iteration for the radial Kohn-Sham problem and the
// outer moving-mesh loop.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <memory>
#include <numbers>
#include <optional>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "radks/assembly.hpp"
#include "radks/atom_data.hpp"
#include "radks/eigensolve.hpp"
#include "radks/errors.hpp"
#include "radks/mesh.hpp"
#include "radks/xc.hpp"

namespace radks {

inline constexpr double kFourPi = 4.0 * std::numbers::pi;

struct Orbital {
  int n = 1;
  int l = 0;
  double occupation = 0.0;
  double eigenvalue = 0.0;
  std::vector<double> coeffs;  // full FE vector, zero at r = 0 and r = R

  [[nodiscard]] std::string label() const { return shell_label(n, l); }
};

/// Electron density sampled at the quadrature points of `mesh`.
struct DensityField {
  RadialMesh mesh;
  std::vector<double> values;

  [[nodiscard]] double electron_count() const {
    return kFourPi * quadrature_integral(mesh, values, RadialWeight::r2);
  }
};

/// Potentials at the quadrature points; hartree_nodal is the FE solution.
struct EffectivePotential {
  std::vector<double> v_ext;
  std::vector<double> v_har;
  std::vector<double> v_xc;
  std::vector<double> v_eff;
  std::vector<double> hartree_nodal;
};

struct EnergyBreakdown {
  double kinetic = 0.0;
  double hartree = 0.0;
  double xc = 0.0;
  double external = 0.0;
  double total = 0.0;
  double band = 0.0;  // sum f eps
};

enum class HartreeSolver {
  bicg_jacobi,  // BiCG with diagonal scaling
  bicg_lu       // BiCG preconditioned by the banded LU factors
};

struct ScfOptions {
  double tol = 1e-8;              // |E_new - E_old| (Hartree)
  double eigenvalue_tol = 1e-8;   // max |eps_new - eps_old|; <= 0 disables
  int maxit = 300;
  double mixing = 0.618;          // rho_new = mixing rho_out + (1 - mixing) rho_in
  int safeguard_window = 5;       // halve mixing after this many growing |dE|
  bool include_hartree = true;
  bool include_xc = true;
  VwnParameters vwn{};
  bool precondition = true;
  int inner_maxit = 30;
  double inner_tol = 1e-2;
  double nonnegative_shift = 1.0;  // preconditioner shift for Ritz values >= 0
  bool exact_preconditioner = true;  // false: inner BiCG with inner_maxit, inner_tol
  double eig_tol = 1e-10;         // relative LOBPCG residual
  int eig_maxit = 300;
  int guards = 0;
  HartreeSolver hartree_solver = HartreeSolver::bicg_lu;
  double hartree_tol = 1e-14;
  unsigned seed = 20240521u;
};

struct ScfIteration {
  int iteration = 0;
  double energy = 0.0;
  double delta = 0.0;
  double max_eigenvalue_change = 0.0;
  int eigensolver_iterations = 0;
  double mixing = 0.0;
};

struct ScfState {
  RadialMesh mesh;
  std::vector<Orbital> orbitals;
  DensityField density;       // output density of the last iteration
  EffectivePotential potential;  // input potential of the last iteration
  EnergyBreakdown energy;
  std::vector<ScfIteration> trace;
  bool converged = false;
  double mixing = 0.0;
};

class ScfConvergenceError : public ConvergenceError {
 public:
  ScfConvergenceError(std::string const& what, ScfState partial)
      : ConvergenceError(what), partial_(std::move(partial)) {}
  [[nodiscard]] ScfState const& partial() const { return partial_; }

 private:
  ScfState partial_;
};

// ---------------------------------------------------------------------------
// Thomas-Fermi start

/// Screened nuclear potential V = -Z_eff(r)/r of the Thomas-Fermi fit.
inline double thomas_fermi_potential(int Z, double r) {
  constexpr double alpha = 0.7280642371;
  constexpr double beta = -0.5430794693;
  constexpr double gamma = 0.3612163121;
  double const x = r * std::cbrt(128.0 * Z / (9.0 * std::numbers::pi * std::numbers::pi));
  double const sx = std::sqrt(x);
  double const base = 1.0 + alpha * sx + beta * x * std::exp(-gamma * sx);
  double const zeff = Z * base * base * std::exp(-2.0 * alpha * sx);
  return -zeff / r;
}

/// Unnormalized Thomas-Fermi density (2|V|)^{3/2} / (3 pi^2); 0 where V >= 0.
inline double thomas_fermi_raw_density(int Z, double r) {
  double const v = thomas_fermi_potential(Z, r);
  if (!(v < 0.0)) return 0.0;
  return std::pow(-2.0 * v, 1.5) / (3.0 * std::numbers::pi * std::numbers::pi);
}

inline DensityField thomas_fermi_density(int Z, RadialMesh const& mesh) {
  if (Z < 1) throw std::invalid_argument("thomas_fermi_density: Z must be >= 1");
  DensityField rho{mesh, std::vector<double>(mesh.num_quad_points())};
  auto const r = mesh.quad_points();
  for (std::size_t i = 0; i < rho.values.size(); ++i) rho.values[i] = thomas_fermi_raw_density(Z, r[i]);
  double const q = rho.electron_count();
  if (q > 0.0)
    for (double& v : rho.values) v *= Z / q;
  return rho;
}

// ---------------------------------------------------------------------------
// Density

inline double orbital_norm2(RadialMesh const& mesh, std::span<double const> coeffs) {
  auto p = mesh.at_quadrature(coeffs);
  for (double& v : p) v *= v;
  return quadrature_integral(mesh, p);
}

/// rho(r) = sum f P^2 / (4 pi r^2) at the quadrature points.
inline DensityField density_update(std::span<Orbital const> orbitals, RadialMesh const& mesh) {
  DensityField rho{mesh, std::vector<double>(mesh.num_quad_points(), 0.0)};
  auto const r = mesh.quad_points();
  for (auto const& orb : orbitals) {
    double const nrm = orbital_norm2(mesh, orb.coeffs);
    if (std::abs(nrm - 1.0) > 1e-6)
      throw InvalidStateError("density_update: orbital " + orb.label() + " has norm^2 " + std::to_string(nrm));
    auto const p = mesh.at_quadrature(orb.coeffs);
    for (std::size_t i = 0; i < p.size(); ++i) rho.values[i] += orb.occupation * p[i] * p[i] / (kFourPi * r[i] * r[i]);
  }
  return rho;
}

/// Nodal density for output; r = 0 uses the limit P'(0)^2 of the s channel.
inline std::vector<double> density_at_nodes(std::span<Orbital const> orbitals, RadialMesh const& mesh) {
  std::vector<double> out(mesh.num_dofs(), 0.0);
  for (auto const& orb : orbitals) {
    for (int g = 1; g < mesh.num_dofs(); ++g) {
      double const r = mesh.node(g);
      out[g] += orb.occupation * orb.coeffs[g] * orb.coeffs[g] / (kFourPi * r * r);
    }
    if (orb.l == 0) {
      double const d = mesh.evaluate_derivative(orb.coeffs, 0.0);
      out[0] += orb.occupation * d * d / kFourPi;
    }
  }
  return out;
}

inline DensityField mix_density(DensityField const& rho_in, DensityField const& rho_out, double alpha) {
  if (!rho_in.mesh.same_as(rho_out.mesh) || rho_in.values.size() != rho_out.values.size())
    throw std::invalid_argument("mix_density: densities live on different meshes");
  if (!(alpha > 0.0 && alpha <= 1.0)) throw std::invalid_argument("mix_density: alpha must be in (0, 1]");
  DensityField out{rho_in.mesh, std::vector<double>(rho_in.values.size())};
  for (std::size_t i = 0; i < out.values.size(); ++i)
    out.values[i] = alpha * rho_out.values[i] + (1.0 - alpha) * rho_in.values[i];
  return out;
}

// ---------------------------------------------------------------------------
// Potentials and energies

/// Nodal Hartree potential of rho.
inline std::vector<double> solve_hartree(DensityField const& rho, HartreeSolver solver = HartreeSolver::bicg_lu,
                                         double tol = 1e-14) {
  auto const sys = assemble_hartree(rho.mesh, rho.values);
  int const n = sys.matrix.size();
  BicgResult res;
  if (solver == HartreeSolver::bicg_lu) {
    auto const lu = std::make_shared<BandedLU>(sys.matrix);
    LinearPreconditioner pre{[lu](VectorXd const& v) { return lu->solve(v); },
                             [lu](VectorXd const& v) { return lu->solve_transpose(v); }};
    res = bicg(sys.matrix, sys.rhs, VectorXd::Zero(n), tol, 50, &pre);
  } else {
    auto const pre = LinearPreconditioner::jacobi(sys.matrix);
    res = bicg(sys.matrix, sys.rhs, VectorXd::Zero(n), tol, 20 * n, &pre);
  }
  // on strongly graded meshes ||b|| is small next to ||A|| ||x||; judge the
  // result by its backward error there
  double backward = 0.0;
  if (!(res.relative_residual < tol)) {
    VectorXd const r = sys.rhs - sys.matrix * res.x;
    double anorm = 0.0;
    for (int i = 0; i < n; ++i) {
      double row = 0.0;
      for (int j = std::max(0, i - sys.matrix.lower()); j <= std::min(n - 1, i + sys.matrix.upper()); ++j)
        row += std::abs(sys.matrix(i, j));
      anorm = std::max(anorm, row);
    }
    backward = r.lpNorm<Eigen::Infinity>() / (anorm * res.x.lpNorm<Eigen::Infinity>() + sys.rhs.lpNorm<Eigen::Infinity>());
    if (!(backward < 1e-13))
      throw ConvergenceError("Hartree solve: relative residual " + std::to_string(res.relative_residual) +
                             ", backward error " + std::to_string(backward));
  }
  return expand_hartree(sys, res.x);
}

inline EffectivePotential build_effective_potential(DensityField const& rho, int Z, ScfOptions const& opt = {}) {
  auto const& mesh = rho.mesh;
  std::size_t const nq = mesh.num_quad_points();
  EffectivePotential pot;
  pot.v_ext.resize(nq);
  pot.v_har.assign(nq, 0.0);
  pot.v_xc.assign(nq, 0.0);
  pot.v_eff.resize(nq);
  auto const r = mesh.quad_points();
  for (std::size_t i = 0; i < nq; ++i) pot.v_ext[i] = -Z / r[i];
  if (opt.include_hartree) {
    pot.hartree_nodal = solve_hartree(rho, opt.hartree_solver, opt.hartree_tol);
    pot.v_har = mesh.at_quadrature(pot.hartree_nodal);
  } else {
    pot.hartree_nodal.assign(mesh.num_dofs(), 0.0);
  }
  if (opt.include_xc)
    for (std::size_t i = 0; i < nq; ++i) pot.v_xc[i] = xc_combine(std::max(rho.values[i], 0.0), opt.vwn).v_xc();
  for (std::size_t i = 0; i < nq; ++i) pot.v_eff[i] = pot.v_ext[i] + pot.v_har[i] + pot.v_xc[i];
  return pot;
}

/// E_k = sum f eps - 4 pi int V_eff rho r^2, E_Har = 2 pi int V_Har rho r^2,
/// E_xc = 4 pi int eps_xc rho r^2, E_ext = -4 pi Z int rho r.
/// veff is the potential the orbitals were computed in; vhar belongs to rho.
inline EnergyBreakdown total_energy(std::span<Orbital const> orbitals, DensityField const& rho,
                                    std::span<double const> veff, std::span<double const> vhar, int Z,
                                    bool include_xc = true, VwnParameters const& vwn = {}) {
  auto const& mesh = rho.mesh;
  std::size_t const nq = rho.values.size();
  if (veff.size() != nq || vhar.size() != nq) throw std::invalid_argument("total_energy: field size mismatch");
  EnergyBreakdown e;
  for (auto const& o : orbitals) e.band += o.occupation * o.eigenvalue;
  std::vector<double> f(nq);
  for (std::size_t i = 0; i < nq; ++i) f[i] = veff[i] * rho.values[i];
  e.kinetic = e.band - kFourPi * quadrature_integral(mesh, f, RadialWeight::r2);
  for (std::size_t i = 0; i < nq; ++i) f[i] = vhar[i] * rho.values[i];
  e.hartree = 0.5 * kFourPi * quadrature_integral(mesh, f, RadialWeight::r2);
  if (include_xc) {
    for (std::size_t i = 0; i < nq; ++i) {
      double const d = std::max(rho.values[i], 0.0);
      f[i] = xc_combine(d, vwn).eps_xc() * d;
    }
    e.xc = kFourPi * quadrature_integral(mesh, f, RadialWeight::r2);
  }
  e.external = -kFourPi * Z * quadrature_integral(mesh, rho.values, RadialWeight::r);
  e.total = e.kinetic + e.hartree + e.xc + e.external;
  return e;
}

/// Kinetic energy straight from the orbitals: sum f <P| -1/2 d^2 + l(l+1)/2r^2 |P>.
inline double kinetic_energy_direct(std::span<Orbital const> orbitals, RadialMesh const& mesh) {
  double s = 0.0;
  for (auto const& o : orbitals) {
    auto const d = mesh.derivative_at_quadrature(o.coeffs);
    auto const p = mesh.at_quadrature(o.coeffs);
    auto const r = mesh.quad_points();
    std::vector<double> f(d.size());
    for (std::size_t i = 0; i < f.size(); ++i) f[i] = 0.5 * d[i] * d[i] + 0.5 * o.l * (o.l + 1) * p[i] * p[i] / (r[i] * r[i]);
    s += o.occupation * quadrature_integral(mesh, f);
  }
  return s;
}

// ---------------------------------------------------------------------------
// SCF driver

namespace detail {

inline void fix_sign(Eigen::Ref<Eigen::VectorXd> v) {
  double const big = v.cwiseAbs().maxCoeff();
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (std::abs(v[i]) > 1e-8 * big) {
      if (v[i] < 0.0) v = -v;
      return;
    }
  }
}

/// Modified Gram-Schmidt in the M inner product, columns in order.
inline MatrixXd m_gram_schmidt(MatrixXd x, BandedMatrix const& m) {
  for (Eigen::Index c = 0; c < x.cols(); ++c) {
    for (int pass = 0; pass < 2; ++pass)
      for (Eigen::Index j = 0; j < c; ++j) {
        VectorXd const mj = m * VectorXd(x.col(j));
        x.col(c) -= mj.dot(x.col(c)) * x.col(j);
      }
    VectorXd const mc = m * VectorXd(x.col(c));
    double const nrm = std::sqrt(x.col(c).dot(mc));
    if (!(nrm > 0.0)) throw InvalidStateError("m_gram_schmidt: linearly dependent initial orbitals");
    x.col(c) /= nrm;
  }
  return x;
}

struct Channel {
  int l = 0;
  int count = 0;
  MatrixXd vectors;  // interior coefficients, M-orthonormal
  VectorXd eigenvalues;
};

}  // namespace detail

/// Algorithm: build V_eff from rho_in, solve every l channel by LOBPCG,
/// rho_out from the occupied orbitals, mix, evaluate the energy; stop when
/// |dE| < tol and all eigenvalues moved less than eigenvalue_tol.
/// `initial_orbitals` (same mesh) replace the Thomas-Fermi start.
inline ScfState scf_solve(AtomConfig const& config, RadialMesh const& mesh, ScfOptions const& opt = {},
                          std::span<Orbital const> initial_orbitals = {}) {
  if (!(opt.tol > 0.0)) throw std::invalid_argument("scf_solve: tol must be positive");
  auto const counts = orbitals_per_l(config);
  int const n_int = interior_size(mesh);
  for (auto const& [l, k] : counts)
    if (k + opt.guards > n_int) throw std::invalid_argument("scf_solve: mesh too small for the requested orbitals");

  BandedMatrix const mass = assemble_mass(mesh).block(1, n_int);
  BandedMatrix const stiffness = assemble_stiffness(mesh).block(1, n_int);

  std::map<int, detail::Channel> channels;
  for (auto const& [l, k] : counts) channels[l] = {l, k, MatrixXd(), VectorXd()};

  ScfState state{mesh, {}, {mesh, {}}, {}, {}, {}, false, opt.mixing};
  for (auto const& sh : config.shells) state.orbitals.push_back({sh.n, sh.l, sh.occupation, 0.0, {}});

  auto store_orbitals = [&] {
    for (auto& o : state.orbitals) {
      auto const& ch = channels.at(o.l);
      int const idx = o.n - o.l - 1;
      o.eigenvalue = ch.eigenvalues[idx];
      o.coeffs = embed_interior(mesh, ch.vectors.col(idx));
    }
  };

  DensityField rho_in{mesh, {}};
  if (!initial_orbitals.empty()) {
    for (auto& [l, ch] : channels) {
      MatrixXd x(n_int, ch.count);
      int found = 0;
      for (auto const& o : initial_orbitals) {
        if (o.l != l || o.n - l - 1 >= ch.count) continue;
        x.col(o.n - l - 1) = restrict_interior(mesh, o.coeffs);
        ++found;
      }
      if (found != ch.count) throw std::invalid_argument("scf_solve: initial orbitals do not match configuration");
      ch.vectors = detail::m_gram_schmidt(x, mass);
      ch.eigenvalues = VectorXd::Zero(ch.count);
    }
    store_orbitals();
    rho_in = density_update(state.orbitals, mesh);
  } else {
    rho_in = thomas_fermi_density(config.Z, mesh);
  }

  ShiftedKineticPreconditioner precond;
  precond.stiffness = &stiffness;
  precond.mass = &mass;
  precond.enabled = opt.precondition;
  precond.inner_maxit = opt.inner_maxit;
  precond.inner_tol = opt.inner_tol;
  precond.nonnegative_shift = opt.nonnegative_shift;
  precond.exact = opt.exact_preconditioner;

  LobpcgOptions lopt;
  lopt.tol = opt.eig_tol;
  lopt.maxit = opt.eig_maxit;
  lopt.scale = ResidualScale::relative;
  lopt.throw_on_failure = false;
  lopt.guards = opt.guards;
  lopt.seed = opt.seed;

  double mixing = opt.mixing;
  double e_old = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> eig_old;
  int growing = 0;
  double last_delta = std::numeric_limits<double>::infinity();

  for (int it = 1; it <= opt.maxit; ++it) {
    auto pot = build_effective_potential(rho_in, config.Z, opt);
    RadialOperators const ops(mesh, pot.v_eff);
    int eig_its = 0;
    for (auto& [l, ch] : channels) {
      auto const h = ops.hamiltonian(l);
      auto sol = lobpcg(h, mass, ch.count, ch.vectors, precond, lopt);
      eig_its = std::max(eig_its, sol.iterations);
      for (int c = 0; c < ch.count; ++c) detail::fix_sign(sol.vectors.col(c));
      ch.vectors = sol.vectors;
      ch.eigenvalues = sol.eigenvalues;
    }
    store_orbitals();
    auto rho_out = density_update(state.orbitals, mesh);
    std::vector<double> vhar_out(mesh.num_quad_points(), 0.0);
    if (opt.include_hartree) vhar_out = mesh.at_quadrature(solve_hartree(rho_out, opt.hartree_solver, opt.hartree_tol));
    auto const energy = total_energy(state.orbitals, rho_out, pot.v_eff, vhar_out, config.Z, opt.include_xc, opt.vwn);

    std::vector<double> eig_now;
    for (auto const& o : state.orbitals) eig_now.push_back(o.eigenvalue);
    double max_change = std::numeric_limits<double>::infinity();
    if (!eig_old.empty()) {
      max_change = 0.0;
      for (std::size_t i = 0; i < eig_now.size(); ++i) max_change = std::max(max_change, std::abs(eig_now[i] - eig_old[i]));
    }
    double const delta = std::isnan(e_old) ? std::numeric_limits<double>::infinity() : std::abs(energy.total - e_old);
    state.trace.push_back({it, energy.total, delta, max_change, eig_its, mixing});
    state.energy = energy;
    state.potential = std::move(pot);
    state.density = rho_out;

    bool const done = delta < opt.tol && (opt.eigenvalue_tol <= 0.0 || max_change < opt.eigenvalue_tol);
    if (done) {
      state.converged = true;
      break;
    }
    if (std::isfinite(delta) && delta > last_delta) {
      if (++growing >= opt.safeguard_window) {
        mixing *= 0.5;
        growing = 0;
      }
    } else {
      growing = 0;
    }
    last_delta = delta;
    e_old = energy.total;
    eig_old = std::move(eig_now);
    rho_in = mix_density(rho_in, rho_out, mixing);
  }
  state.mixing = mixing;
  if (!state.converged)
    throw ScfConvergenceError("scf_solve: no convergence in " + std::to_string(opt.maxit) + " iterations", state);
  return state;
}

// ---------------------------------------------------------------------------
// Moving mesh

enum class MeshUpdate {
  frozen_monitor,  // exact equidistribution of the current orbitals' monitor
  single_step      // one semi-implicit tridiagonal solve
};

struct MovingMeshOptions {
  double monitor_alpha = 0.01;
  MeshUpdate update = MeshUpdate::frozen_monitor;
  double tol = 1e-8;  // |E_new - E_old| between meshes
  int max_steps = 10;
};

struct MovingMeshResult {
  ScfState state;
  std::vector<RadialMesh> meshes;   // meshes[0] uniform, meshes[k] after k redistributions
  std::vector<double> energies;     // converged energy on each mesh
  std::vector<int> scf_iterations;  // per mesh
  int steps = 0;                    // redistributions performed
  bool converged = false;
};

inline std::vector<std::vector<double>> occupied_coefficients(std::span<Orbital const> orbitals) {
  std::vector<std::vector<double>> out;
  for (auto const& o : orbitals) out.push_back(o.coeffs);
  return out;
}

/// Uniform mesh -> SCF, then {monitor -> equidistribute -> transfer orbitals ->
/// SCF} until the energy changes by less than mopt.tol between meshes.
inline MovingMeshResult moving_mesh_solve(AtomConfig const& config, double radius, int n_ele, int p,
                                          ScfOptions const& opt = {}, MovingMeshOptions const& mopt = {},
                                          int quad_points = 0) {
  MovingMeshResult out{scf_solve(config, uniform_mesh(radius, n_ele, p, quad_points), opt), {}, {}, {}, 0, false};
  out.meshes.push_back(out.state.mesh);
  out.energies.push_back(out.state.energy.total);
  out.scf_iterations.push_back(static_cast<int>(out.state.trace.size()));
  double e_old = 0.0;
  double e_new = out.state.energy.total;
  while (std::abs(e_new - e_old) > mopt.tol) {
    if (out.steps >= mopt.max_steps) return out;
    e_old = e_new;
    auto const coeffs = occupied_coefficients(out.state.orbitals);
    auto const next = mopt.update == MeshUpdate::frozen_monitor
                          ? equidistribute_frozen(out.state.mesh, coeffs, mopt.monitor_alpha)
                          : equidistribute_step(out.state.mesh, monitor_from_orbitals(coeffs, out.state.mesh,
                                                                                      mopt.monitor_alpha));
    std::vector<Orbital> guess = out.state.orbitals;
    for (auto& o : guess) o.coeffs = interpolate_solution(out.state.mesh, o.coeffs, next);
    out.state = scf_solve(config, next, opt, guess);
    ++out.steps;
    out.meshes.push_back(next);
    e_new = out.state.energy.total;
    out.energies.push_back(e_new);
    out.scf_iterations.push_back(static_cast<int>(out.state.trace.size()));
  }
  out.converged = true;
  return out;
}

// ---------------------------------------------------------------------------
// CSV output

inline void write_energy_trace(std::ostream& os, std::span<ScfIteration const> trace) {
  auto const old = os.precision(15);
  os << "iter,E_tot,dE\n";
  for (auto const& t : trace) os << t.iteration << ',' << t.energy << ',' << (std::isfinite(t.delta) ? t.delta : 0.0) << '\n';
  os.precision(old);
}

inline void write_orbital_table(std::ostream& os, std::span<Orbital const> orbitals) {
  auto const old = os.precision(15);
  os << "n,l,f,eps\n";
  for (auto const& o : orbitals) os << o.n << ',' << o.l << ',' << o.occupation << ',' << o.eigenvalue << '\n';
  os.precision(old);
}

}  // namespace radks
