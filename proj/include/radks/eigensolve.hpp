#pragma once
// Iterative solvers for the banded systems: BiCG for general square systems,
// LOBPCG for the lowest eigenpairs of H x = lambda M x, and a dense oracle.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <ostream>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "radks/banded.hpp"
#include "radks/errors.hpp"

namespace radks {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// ---------------------------------------------------------------------------
// BiCG

/// Optional preconditioner K ~ A^{-1}; BiCG needs both K and K^T.
struct LinearPreconditioner {
  std::function<VectorXd(VectorXd const&)> apply;
  std::function<VectorXd(VectorXd const&)> apply_transpose;

  static LinearPreconditioner jacobi(BandedMatrix const& a) {
    VectorXd inv = a.diagonal();
    for (Eigen::Index i = 0; i < inv.size(); ++i) inv[i] = inv[i] != 0.0 ? 1.0 / inv[i] : 1.0;
    auto f = [inv](VectorXd const& x) -> VectorXd { return inv.cwiseProduct(x); };
    return {f, f};
  }
};

struct BicgResult {
  VectorXd x;
  double relative_residual = 0.0;
  int iterations = 0;
  bool converged = false;
};

namespace detail {

inline double true_relative_residual(BandedMatrix const& a, VectorXd const& b, VectorXd const& x, double bnorm) {
  return (b - a * x).norm() / bnorm;
}

}  // namespace detail

/// Biconjugate gradients. Stops at relative residual ||b - Ax|| / ||b|| < tol
/// or after maxit iterations, returning the best iterate seen. A breakdown
/// restarts once from the current iterate; a second one throws.
inline BicgResult bicg(BandedMatrix const& a, VectorXd const& b, VectorXd const& x0, double tol, int maxit,
                       LinearPreconditioner const* precond = nullptr) {
  int const n = a.size();
  if (b.size() != n || x0.size() != n) throw std::invalid_argument("bicg: dimension mismatch");
  BicgResult out;
  double const bnorm = b.norm();
  if (bnorm == 0.0) {
    out.x = VectorXd::Zero(n);
    out.converged = true;
    return out;
  }
  auto K = [&](VectorXd const& v) { return precond ? precond->apply(v) : v; };
  auto Kt = [&](VectorXd const& v) { return precond ? precond->apply_transpose(v) : v; };

  VectorXd x = x0;
  VectorXd best = x;
  double best_res = detail::true_relative_residual(a, b, x, bnorm);
  int restarts = 0;
  int it = 0;
  while (it < maxit && best_res >= tol) {
    VectorXd r = b - a * x;
    VectorXd rt = r;
    VectorXd p, pt;
    double rho_prev = 1.0;
    bool breakdown = false;
    for (bool first = true; it < maxit; first = false) {
      VectorXd const z = K(r);
      VectorXd const zt = Kt(rt);
      double const rho = z.dot(rt);
      if (std::abs(rho) <= 1e-30 * z.norm() * rt.norm() || !std::isfinite(rho)) {
        breakdown = true;
        break;
      }
      if (first) {
        p = z;
        pt = zt;
      } else {
        double const beta = rho / rho_prev;
        p = z + beta * p;
        pt = zt + beta * pt;
      }
      VectorXd const q = a * p;
      VectorXd qt(n);
      a.multiply_transpose({pt.data(), static_cast<std::size_t>(n)}, {qt.data(), static_cast<std::size_t>(n)});
      double const sigma = pt.dot(q);
      if (std::abs(sigma) <= 1e-30 * pt.norm() * q.norm() || !std::isfinite(sigma)) {
        breakdown = true;
        break;
      }
      double const alpha = rho / sigma;
      x += alpha * p;
      r -= alpha * q;
      rt -= alpha * qt;
      rho_prev = rho;
      ++it;
      double const res = r.norm() / bnorm;
      if (res < best_res) {
        double const true_res = detail::true_relative_residual(a, b, x, bnorm);
        if (true_res < best_res) {
          best_res = true_res;
          best = x;
        }
      }
      if (res < tol) break;
    }
    if (best_res < tol) break;
    if (breakdown) {
      if (restarts++ >= 1) throw ConvergenceError("bicg: repeated breakdown");
      x = best;
      continue;
    }
    if (it >= maxit) break;
    // recurrence residual met tol but true residual did not: restart from best
    x = best;
    if (restarts++ >= 3) break;
  }
  out.x = best;
  out.relative_residual = best_res;
  out.iterations = it;
  out.converged = best_res < tol;
  return out;
}

// ---------------------------------------------------------------------------
// Preconditioner  T = L/2 - lambda M  (lambda < 0). For lambda >= 0 the
// shift nonnegative_shift > 0 is used instead, or identity if it is <= 0.

struct ShiftedKineticPreconditioner {
  BandedMatrix const* stiffness = nullptr;  // L
  BandedMatrix const* mass = nullptr;       // M
  bool enabled = true;
  int inner_maxit = 30;
  double inner_tol = 1e-2;
  bool jacobi_scaling = true;
  double nonnegative_shift = 1.0;
  bool exact = true;  // banded LU of T; false: inner BiCG

  /// Approximate T(lambda)^{-1} r.
  [[nodiscard]] VectorXd apply(VectorXd const& r, double lambda) const {
    if (!enabled || stiffness == nullptr || mass == nullptr) return r;
    double shift = -lambda;
    if (lambda >= 0.0) {
      if (nonnegative_shift <= 0.0) return r;
      shift = nonnegative_shift;
    }
    auto const t = stiffness->combine(0.5, *mass, shift);
    if (exact) return BandedLU(t).solve(r);
    auto const jac = LinearPreconditioner::jacobi(t);
    auto const res = bicg(t, r, VectorXd::Zero(r.size()), inner_tol, inner_maxit, jacobi_scaling ? &jac : nullptr);
    return res.x;
  }

  [[nodiscard]] MatrixXd apply(MatrixXd const& r, std::span<double const> lambdas) const {
    MatrixXd w(r.rows(), r.cols());
    for (Eigen::Index c = 0; c < r.cols(); ++c) w.col(c) = apply(VectorXd(r.col(c)), lambdas[c]);
    return w;
  }
};

// ---------------------------------------------------------------------------
// LOBPCG

struct EigenSolution {
  VectorXd eigenvalues;
  MatrixXd vectors;                  // M-orthonormal columns
  std::vector<double> residual_norms;
  int iterations = 0;
  bool converged = false;
  std::vector<int> converged_at;     // first iteration each wanted column met tol (-1: never)
  std::vector<std::vector<double>> residual_history;  // [iteration][column]
  std::vector<VectorXd> eigenvalue_history;           // Ritz values per iteration
};

/// Carries the partial result of a LOBPCG run that hit maxit.
class EigenConvergenceError : public ConvergenceError {
 public:
  EigenConvergenceError(std::string const& what, EigenSolution partial)
      : ConvergenceError(what), partial_(std::move(partial)) {}
  [[nodiscard]] EigenSolution const& partial() const { return partial_; }

 private:
  EigenSolution partial_;
};

enum class ResidualScale {
  absolute,  // ||H x - lambda M x||_2 < tol
  relative   // ||H x - lambda M x||_2 < tol (||H x|| + |lambda| ||M x||)
};

struct LobpcgOptions {
  double tol = 1e-9;
  int maxit = 500;
  int guards = 0;
  ResidualScale scale = ResidualScale::absolute;
  bool throw_on_failure = true;
  bool record_history = false;
  unsigned seed = 20240521u;
};

namespace detail {

/// Remove components along the M-orthonormal columns of `basis` (two passes).
inline void m_project_out(MatrixXd& v, MatrixXd const& basis, MatrixXd const& m_basis) {
  if (basis.cols() == 0 || v.cols() == 0) return;
  for (int pass = 0; pass < 2; ++pass) v -= basis * (m_basis.transpose() * v);
}

/// M-orthonormalize the columns of v by eigen-decomposition of the Gram
/// matrix, dropping directions with relative weight below drop_tol.
inline MatrixXd m_orthonormalize(MatrixXd const& v, BandedMatrix const& m, double drop_tol = 1e-12) {
  if (v.cols() == 0) return v;
  MatrixXd cur = v;
  for (int pass = 0; pass < 2; ++pass) {
    // column scaling first so that tiny columns are judged relative to themselves
    MatrixXd const mv = m * cur;
    MatrixXd g = cur.transpose() * mv;
    g = 0.5 * (g + g.transpose());
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(g);
    VectorXd const ev = es.eigenvalues();
    double const top = ev.maxCoeff();
    if (!(top > 0.0)) return MatrixXd(v.rows(), 0);
    std::vector<int> keep;
    for (Eigen::Index i = 0; i < ev.size(); ++i)
      if (ev[i] > drop_tol * top) keep.push_back(static_cast<int>(i));
    MatrixXd t(cur.cols(), keep.size());
    for (std::size_t c = 0; c < keep.size(); ++c) t.col(c) = es.eigenvectors().col(keep[c]) / std::sqrt(ev[keep[c]]);
    cur = cur * t;
  }
  return cur;
}

inline MatrixXd random_block(int n, int k, std::mt19937_64& gen) {
  std::normal_distribution<double> dist;
  MatrixXd x(n, k);
  for (int c = 0; c < k; ++c)
    for (int i = 0; i < n; ++i) x(i, c) = dist(gen);
  return x;
}

}  // namespace detail

/// k lowest eigenpairs of H x = lambda M x.
inline EigenSolution lobpcg(BandedMatrix const& h, BandedMatrix const& m, int k, MatrixXd const& x0,
                            ShiftedKineticPreconditioner const& precond, LobpcgOptions const& opt = {}) {
  int const n = h.size();
  if (m.size() != n) throw std::invalid_argument("lobpcg: H and M dimensions differ");
  if (k < 1 || k > n) throw std::invalid_argument("lobpcg: need 1 <= k <= dim");
  int const bs = std::min(n, k + std::max(0, opt.guards));
  std::mt19937_64 gen(opt.seed);

  // initial block: caller's columns, topped up with seeded random ones
  MatrixXd start(n, bs);
  int given = 0;
  if (x0.rows() == n) {
    given = static_cast<int>(std::min<Eigen::Index>(x0.cols(), bs));
    start.leftCols(given) = x0.leftCols(given);
  }
  if (given < bs) start.rightCols(bs - given) = detail::random_block(n, bs - given, gen);
  MatrixXd x = detail::m_orthonormalize(start, m);
  for (int attempt = 0; x.cols() < bs && attempt < 5; ++attempt) {
    MatrixXd extra = detail::random_block(n, bs - static_cast<int>(x.cols()), gen);
    MatrixXd mx = m * x;
    detail::m_project_out(extra, x, mx);
    MatrixXd merged(n, x.cols() + extra.cols());
    merged << x, detail::m_orthonormalize(extra, m);
    x = merged;
  }
  if (x.cols() < bs) throw InternalError("lobpcg: could not build an M-independent initial block");

  auto rayleigh_ritz = [&](MatrixXd const& s, int want, MatrixXd& coeffs, VectorXd& values) -> bool {
    MatrixXd hs = s.transpose() * (h * s);
    MatrixXd ms = s.transpose() * (m * s);
    hs = 0.5 * (hs + hs.transpose());
    ms = 0.5 * (ms + ms.transpose());
    Eigen::LLT<MatrixXd> llt(ms);
    if (llt.info() != Eigen::Success) return false;
    Eigen::GeneralizedSelfAdjointEigenSolver<MatrixXd> es(hs, ms);
    if (es.info() != Eigen::Success) return false;
    coeffs = es.eigenvectors().leftCols(want);
    values = es.eigenvalues().head(want);
    return true;
  };

  EigenSolution sol;
  sol.converged_at.assign(k, -1);
  MatrixXd coeffs;
  VectorXd lambda;
  if (!rayleigh_ritz(x, bs, coeffs, lambda)) throw InternalError("lobpcg: initial Rayleigh-Ritz failed");
  x = x * coeffs;
  MatrixXd p(n, 0);
  int breakdowns = 0;

  for (int it = 0;; ++it) {
    MatrixXd const hx = h * x;
    MatrixXd const mx = m * x;
    MatrixXd const r = hx - mx * lambda.asDiagonal();
    std::vector<double> res(bs);
    std::vector<bool> active(bs);
    bool all_done = true;
    for (int c = 0; c < bs; ++c) {
      res[c] = r.col(c).norm();
      double const ref =
          opt.scale == ResidualScale::absolute ? 1.0 : hx.col(c).norm() + std::abs(lambda[c]) * mx.col(c).norm();
      bool const ok = res[c] < opt.tol * ref;
      active[c] = !ok;
      if (c < k) {
        if (ok && sol.converged_at[c] < 0) sol.converged_at[c] = it;
        if (!ok) all_done = false;
      }
    }
    if (opt.record_history) {
      sol.residual_history.emplace_back(res.begin(), res.begin() + k);
      sol.eigenvalue_history.push_back(lambda.head(k));
    }
    sol.iterations = it;
    if (all_done || it >= opt.maxit) {
      sol.converged = all_done;
      sol.eigenvalues = lambda.head(k);
      sol.vectors = x.leftCols(k);
      sol.residual_norms.assign(res.begin(), res.begin() + k);
      break;
    }

    std::vector<int> idx;
    for (int c = 0; c < bs; ++c)
      if (active[c]) idx.push_back(c);
    MatrixXd ra(n, idx.size());
    std::vector<double> shifts(idx.size());
    for (std::size_t c = 0; c < idx.size(); ++c) {
      ra.col(c) = r.col(idx[c]);
      shifts[c] = lambda[idx[c]];
    }
    MatrixXd w = precond.apply(ra, shifts);
    detail::m_project_out(w, x, mx);
    w = detail::m_orthonormalize(w, m);
    if (p.cols() > 0) {
      detail::m_project_out(p, x, mx);
      MatrixXd const mw = m * w;
      detail::m_project_out(p, w, mw);
      p = detail::m_orthonormalize(p, m);
    }
    MatrixXd s(n, x.cols() + w.cols() + p.cols());
    s << x, w, p;
    if (!rayleigh_ritz(s, bs, coeffs, lambda)) {
      // breakdown: restart from a re-orthonormalized X without history
      if (++breakdowns > 1) throw ConvergenceError("lobpcg: repeated Rayleigh-Ritz breakdown");
      x = detail::m_orthonormalize(x, m);
      p.resize(n, 0);
      if (!rayleigh_ritz(x, bs, coeffs, lambda)) throw ConvergenceError("lobpcg: Rayleigh-Ritz breakdown");
      x = x * coeffs;
      continue;
    }
    MatrixXd const x_new = s * coeffs;
    MatrixXd const dir = s.rightCols(s.cols() - x.cols()) * coeffs.bottomRows(s.cols() - x.cols());
    // keep search directions only for columns that are still active
    p.resize(n, static_cast<Eigen::Index>(idx.size()));
    for (std::size_t c = 0; c < idx.size(); ++c) p.col(c) = dir.col(idx[c]);
    x = x_new;
  }

  if (!sol.converged && opt.throw_on_failure)
    throw EigenConvergenceError("lobpcg: not converged after " + std::to_string(opt.maxit) + " iterations",
                                sol);
  return sol;
}

/// `orbital,iteration,residual` lines from a recorded run.
inline void write_residual_trace(std::ostream& os, EigenSolution const& sol, std::span<std::string const> labels) {
  auto const old = os.precision(10);
  os << "orbital,iteration,residual\n";
  for (std::size_t it = 0; it < sol.residual_history.size(); ++it)
    for (std::size_t c = 0; c < sol.residual_history[it].size(); ++c)
      os << (c < labels.size() ? labels[c] : std::to_string(c)) << ',' << it << ',' << sol.residual_history[it][c]
         << '\n';
  os.precision(old);
}

// ---------------------------------------------------------------------------
// Dense oracle

struct DenseEigen {
  VectorXd eigenvalues;  // ascending
  MatrixXd vectors;      // M-orthonormal
};

inline DenseEigen dense_eig_oracle(BandedMatrix const& h, BandedMatrix const& m) {
  if (h.size() != m.size()) throw std::invalid_argument("dense_eig_oracle: dimension mismatch");
  if (h.size() > 2000) throw std::invalid_argument("dense_eig_oracle: dimension above 2000");
  MatrixXd const hd = h.to_dense();
  MatrixXd const md = m.to_dense();
  Eigen::LLT<MatrixXd> llt(md);
  if (llt.info() != Eigen::Success) throw std::invalid_argument("dense_eig_oracle: M is not positive definite");
  Eigen::GeneralizedSelfAdjointEigenSolver<MatrixXd> es(0.5 * (hd + hd.transpose()), md);
  return {es.eigenvalues(), es.eigenvectors()};
}

}  // namespace radks
