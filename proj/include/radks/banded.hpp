#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "radks/errors.hpp"

namespace radks {

/// Square matrix with kl sub- and ku super-diagonals, row-major band storage.
class BandedMatrix {
 public:
  BandedMatrix() = default;
  BandedMatrix(int n, int kl, int ku, bool symmetric = false)
      : n_(checked(n, kl, ku)), kl_(kl), ku_(ku), symmetric_(symmetric),
        data_(static_cast<std::size_t>(n) * (kl + ku + 1), 0.0) {}

  [[nodiscard]] int size() const { return n_; }
  [[nodiscard]] int lower() const { return kl_; }
  [[nodiscard]] int upper() const { return ku_; }
  [[nodiscard]] bool symmetric() const { return symmetric_; }
  void set_symmetric(bool s) { symmetric_ = s; }

  [[nodiscard]] bool in_band(int i, int j) const { return j - i <= ku_ && i - j <= kl_; }

  [[nodiscard]] double operator()(int i, int j) const {
    return in_band(i, j) ? data_[index(i, j)] : 0.0;
  }
  double& at(int i, int j) {
    if (!in_band(i, j))
      throw std::out_of_range("BandedMatrix: (" + std::to_string(i) + "," + std::to_string(j) + ") outside band");
    return data_[index(i, j)];
  }
  void add(int i, int j, double v) { at(i, j) += v; }

  /// y = A x
  void multiply(std::span<double const> x, std::span<double> y) const {
    for (int i = 0; i < n_; ++i) {
      double s = 0.0;
      int const j0 = std::max(0, i - kl_);
      int const j1 = std::min(n_ - 1, i + ku_);
      double const* row = &data_[index(i, i)];
      for (int j = j0; j <= j1; ++j) s += row[j - i] * x[j];
      y[i] = s;
    }
  }

  /// y = A^T x
  void multiply_transpose(std::span<double const> x, std::span<double> y) const {
    std::fill(y.begin(), y.end(), 0.0);
    for (int i = 0; i < n_; ++i) {
      int const j0 = std::max(0, i - kl_);
      int const j1 = std::min(n_ - 1, i + ku_);
      double const* row = &data_[index(i, i)];
      for (int j = j0; j <= j1; ++j) y[j] += row[j - i] * x[i];
    }
  }

  [[nodiscard]] Eigen::VectorXd operator*(Eigen::VectorXd const& x) const {
    Eigen::VectorXd y(n_);
    multiply({x.data(), static_cast<std::size_t>(x.size())}, {y.data(), static_cast<std::size_t>(y.size())});
    return y;
  }

  [[nodiscard]] Eigen::MatrixXd operator*(Eigen::MatrixXd const& x) const {
    Eigen::MatrixXd y(n_, x.cols());
    for (Eigen::Index c = 0; c < x.cols(); ++c) {
      multiply({x.col(c).data(), static_cast<std::size_t>(n_)}, {y.col(c).data(), static_cast<std::size_t>(n_)});
    }
    return y;
  }

  [[nodiscard]] Eigen::VectorXd diagonal() const {
    Eigen::VectorXd d(n_);
    for (int i = 0; i < n_; ++i) d[i] = data_[index(i, i)];
    return d;
  }

  [[nodiscard]] Eigen::MatrixXd to_dense() const {
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n_, n_);
    for (int i = 0; i < n_; ++i)
      for (int j = std::max(0, i - kl_); j <= std::min(n_ - 1, i + ku_); ++j) a(i, j) = (*this)(i, j);
    return a;
  }

  /// Principal submatrix on rows/cols [first, first + count).
  [[nodiscard]] BandedMatrix block(int first, int count) const {
    BandedMatrix b(count, kl_, ku_, symmetric_);
    for (int i = 0; i < count; ++i)
      for (int j = std::max(0, i - kl_); j <= std::min(count - 1, i + ku_); ++j)
        b.at(i, j) = (*this)(first + i, first + j);
    return b;
  }

  /// alpha * this + beta * other (same dimension).
  [[nodiscard]] BandedMatrix combine(double alpha, BandedMatrix const& other, double beta) const {
    if (other.n_ != n_) throw std::invalid_argument("BandedMatrix::combine: dimension mismatch");
    BandedMatrix out(n_, std::max(kl_, other.kl_), std::max(ku_, other.ku_), symmetric_ && other.symmetric_);
    for (int i = 0; i < n_; ++i)
      for (int j = std::max(0, i - out.kl_); j <= std::min(n_ - 1, i + out.ku_); ++j)
        out.at(i, j) = alpha * (*this)(i, j) + beta * other(i, j);
    return out;
  }

  [[nodiscard]] double max_asymmetry() const {
    double m = 0.0;
    for (int i = 0; i < n_; ++i)
      for (int j = std::max(0, i - kl_); j <= std::min(n_ - 1, i + ku_); ++j)
        m = std::max(m, std::abs((*this)(i, j) - (*this)(j, i)));
    return m;
  }

 private:
  static int checked(int n, int kl, int ku) {
    if (n < 0 || kl < 0 || ku < 0) throw std::invalid_argument("BandedMatrix: negative dimension");
    return n;
  }

  [[nodiscard]] std::size_t index(int i, int j) const {
    return static_cast<std::size_t>(i) * (kl_ + ku_ + 1) + (j - i + kl_);
  }

  int n_ = 0;
  int kl_ = 0;
  int ku_ = 0;
  bool symmetric_ = false;
  std::vector<double> data_;
};

/// LU factorization with partial pivoting that preserves the band
/// (upper factor widens to kl + ku).
class BandedLU {
 public:
  explicit BandedLU(BandedMatrix const& a) : n_(a.size()), kl_(a.lower()), ku_(a.lower() + a.upper()) {
    width_ = kl_ + ku_ + 1;
    lu_.assign(static_cast<std::size_t>(n_) * width_, 0.0);
    pivots_.resize(n_);
    for (int i = 0; i < n_; ++i)
      for (int j = std::max(0, i - a.lower()); j <= std::min(n_ - 1, i + a.upper()); ++j) ref(i, j) = a(i, j);
    double scale = 0.0;
    for (double v : lu_) scale = std::max(scale, std::abs(v));
    for (int k = 0; k < n_; ++k) {
      int const last = std::min(n_ - 1, k + kl_);
      int p = k;
      for (int i = k + 1; i <= last; ++i)
        if (std::abs(ref(i, k)) > std::abs(ref(p, k))) p = i;
      pivots_[k] = p;
      if (std::abs(ref(p, k)) <= 1e-300 || std::abs(ref(p, k)) < 1e-16 * scale)
        throw SingularMatrixError("BandedLU: zero pivot in column " + std::to_string(k));
      int const jlast = std::min(n_ - 1, k + ku_);
      if (p != k)
        for (int j = k; j <= jlast; ++j) std::swap(ref(k, j), ref(p, j));
      double const piv = ref(k, k);
      for (int i = k + 1; i <= last; ++i) {
        double const f = ref(i, k) / piv;
        ref(i, k) = f;
        if (f == 0.0) continue;
        for (int j = k + 1; j <= jlast; ++j) ref(i, j) -= f * ref(k, j);
      }
    }
  }

  [[nodiscard]] Eigen::VectorXd solve(Eigen::VectorXd b) const {
    if (b.size() != n_) throw std::invalid_argument("BandedLU::solve: dimension mismatch");
    for (int k = 0; k < n_; ++k) {
      if (pivots_[k] != k) std::swap(b[k], b[pivots_[k]]);
      int const last = std::min(n_ - 1, k + kl_);
      for (int i = k + 1; i <= last; ++i) b[i] -= get(i, k) * b[k];
    }
    for (int k = n_ - 1; k >= 0; --k) {
      int const jlast = std::min(n_ - 1, k + ku_);
      double s = b[k];
      for (int j = k + 1; j <= jlast; ++j) s -= get(k, j) * b[j];
      b[k] = s / get(k, k);
    }
    return b;
  }

  /// Solve A^T x = b.
  [[nodiscard]] Eigen::VectorXd solve_transpose(Eigen::VectorXd b) const {
    if (b.size() != n_) throw std::invalid_argument("BandedLU::solve_transpose: dimension mismatch");
    for (int k = 0; k < n_; ++k) {
      double s = b[k];
      for (int j = std::max(0, k - ku_); j < k; ++j) s -= get(j, k) * b[j];
      b[k] = s / get(k, k);
    }
    for (int k = n_ - 1; k >= 0; --k) {
      int const last = std::min(n_ - 1, k + kl_);
      double s = b[k];
      for (int i = k + 1; i <= last; ++i) s -= get(i, k) * b[i];
      b[k] = s;
      if (pivots_[k] != k) std::swap(b[k], b[pivots_[k]]);
    }
    return b;
  }

 private:
  // row i, column j in [i - kl, i + ku]
  double& ref(int i, int j) { return lu_[static_cast<std::size_t>(i) * width_ + (j - i + kl_)]; }
  [[nodiscard]] double get(int i, int j) const { return lu_[static_cast<std::size_t>(i) * width_ + (j - i + kl_)]; }

  int n_;
  int kl_;
  int ku_;
  int width_;
  std::vector<double> lu_;
  std::vector<int> pivots_;
};

}  // namespace radks
