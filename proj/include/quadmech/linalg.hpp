// Copyright 2026 The QuadMech Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Dense linear-algebra kernels sized for the mechanism: Cholesky for SPD
// precision matrices, cyclic Jacobi for symmetric spectra, power iteration for
// operator norms of implicit (matrix-free) linear maps, and Gram-Schmidt QR for
// Stiefel sampling. Storage is row-major throughout.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "quadmech/error.hpp"

namespace quadmech {

using Vector = std::vector<double>;

inline double dot(std::span<const double> a, std::span<const double> b) {
  require(a.size() == b.size(), ErrorCode::DimensionMismatch, "dot");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double norm(std::span<const double> a) { return std::sqrt(dot(a, a)); }

// y += alpha * x
inline void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  require(x.size() == y.size(), ErrorCode::DimensionMismatch, "axpy");
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

inline Vector scaled(std::span<const double> x, double alpha) {
  Vector out(x.begin(), x.end());
  for (double& v : out) v *= alpha;
  return out;
}

inline Vector subtract(std::span<const double> a, std::span<const double> b) {
  require(a.size() == b.size(), ErrorCode::DimensionMismatch, "subtract");
  Vector out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] - b[i];
  return out;
}

class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
      : rows_(rows), cols_(cols), data_(std::move(data)) {
    require(data_.size() == rows_ * cols_, ErrorCode::DimensionMismatch,
            "Matrix data size");
  }

  static Matrix identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }

  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  std::span<double> row(std::size_t i) { return {data_.data() + i * cols_, cols_}; }
  std::span<const double> row(std::size_t i) const {
    return {data_.data() + i * cols_, cols_};
  }

  Vector column(std::size_t j) const {
    Vector c(rows_);
    for (std::size_t i = 0; i < rows_; ++i) c[i] = (*this)(i, j);
    return c;
  }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }

  Matrix transpose() const {
    Matrix t(cols_, rows_);
    for (std::size_t i = 0; i < rows_; ++i)
      for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
    return t;
  }

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

inline Vector matvec(const Matrix& m, std::span<const double> x) {
  require(x.size() == m.cols(), ErrorCode::DimensionMismatch, "matvec");
  Vector y(m.rows(), 0.0);
  for (std::size_t i = 0; i < m.rows(); ++i) y[i] = dot(m.row(i), x);
  return y;
}

// mᵀ x
inline Vector matvec_transpose(const Matrix& m, std::span<const double> x) {
  require(x.size() == m.rows(), ErrorCode::DimensionMismatch, "matvec_transpose");
  Vector y(m.cols(), 0.0);
  for (std::size_t i = 0; i < m.rows(); ++i) axpy(x[i], m.row(i), y);
  return y;
}

inline Matrix matmul(const Matrix& a, const Matrix& b) {
  require(a.cols() == b.rows(), ErrorCode::DimensionMismatch, "matmul");
  Matrix c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto out = c.row(i);
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik != 0.0) axpy(aik, b.row(k), out);
    }
  }
  return c;
}

inline double max_abs_diff(const Matrix& a, const Matrix& b) {
  require(a.rows() == b.rows() && a.cols() == b.cols(),
          ErrorCode::DimensionMismatch, "max_abs_diff");
  double m = 0.0;
  for (std::size_t i = 0; i < a.data().size(); ++i)
    m = std::max(m, std::abs(a.data()[i] - b.data()[i]));
  return m;
}

inline double frobenius_norm(const Matrix& a) { return norm(a.data()); }

// Square matrix whose entries are exactly symmetric. Any input is replaced by
// its symmetric part (a + aᵀ)/2 on construction.
class SymMatrix {
 public:
  SymMatrix() = default;
  explicit SymMatrix(std::size_t dim) : m_(dim, dim) {
    require(dim >= 1, ErrorCode::DimensionMismatch, "SymMatrix dim must be >= 1");
  }
  explicit SymMatrix(Matrix m) : m_(std::move(m)) {
    require(m_.rows() == m_.cols() && m_.rows() >= 1, ErrorCode::DimensionMismatch,
            "SymMatrix needs a non-empty square matrix");
    for (std::size_t i = 0; i < m_.rows(); ++i)
      for (std::size_t j = i + 1; j < m_.cols(); ++j) {
        const double s = 0.5 * (m_(i, j) + m_(j, i));
        m_(i, j) = s;
        m_(j, i) = s;
      }
  }

  static SymMatrix identity(std::size_t n) { return SymMatrix(Matrix::identity(n)); }
  static SymMatrix diagonal(std::span<const double> d) {
    Matrix m(d.size(), d.size());
    for (std::size_t i = 0; i < d.size(); ++i) m(i, i) = d[i];
    return SymMatrix(std::move(m));
  }

  std::size_t dim() const noexcept { return m_.rows(); }
  double operator()(std::size_t i, std::size_t j) const { return m_(i, j); }
  const Matrix& matrix() const noexcept { return m_; }

  // Adds alpha to the diagonal.
  SymMatrix shifted(double alpha) const {
    SymMatrix out = *this;
    for (std::size_t i = 0; i < dim(); ++i) out.m_(i, i) += alpha;
    return out;
  }

  SymMatrix scaled(double alpha) const {
    SymMatrix out = *this;
    for (double& v : out.m_.data()) v *= alpha;
    return out;
  }

  double trace() const {
    double t = 0.0;
    for (std::size_t i = 0; i < dim(); ++i) t += m_(i, i);
    return t;
  }

  double quadratic_form(std::span<const double> x) const {
    require(x.size() == dim(), ErrorCode::DimensionMismatch, "quadratic_form");
    double s = 0.0;
    for (std::size_t i = 0; i < dim(); ++i) s += x[i] * dot(m_.row(i), x);
    return s;
  }

  Vector apply(std::span<const double> x) const { return matvec(m_, x); }

 private:
  Matrix m_;
};

struct SpdFactor {
  std::size_t dim = 0;
  Matrix lower;
};

// Cholesky factorization m = L Lᵀ. A pivot at or below
// dim * eps * max|diag| is treated as loss of definiteness.
inline SpdFactor spd_factor(const SymMatrix& m) {
  const std::size_t n = m.dim();
  double max_diag = 0.0;
  for (std::size_t i = 0; i < n; ++i) max_diag = std::max(max_diag, std::abs(m(i, i)));
  const double threshold =
      static_cast<double>(n) * std::numeric_limits<double>::epsilon() * max_diag;

  Matrix l(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    double pivot = m(j, j);
    for (std::size_t k = 0; k < j; ++k) pivot -= l(j, k) * l(j, k);
    if (!(pivot > threshold)) {
      fail(ErrorCode::NotPositiveDefinite,
           "pivot " + std::to_string(j) + " = " + std::to_string(pivot));
    }
    const double d = std::sqrt(pivot);
    l(j, j) = d;
    for (std::size_t i = j + 1; i < n; ++i) {
      double s = m(i, j);
      const auto li = l.row(i);
      const auto lj = l.row(j);
      for (std::size_t k = 0; k < j; ++k) s -= li[k] * lj[k];
      l(i, j) = s / d;
    }
  }
  return SpdFactor{n, std::move(l)};
}

// Solves L y = b.
inline Vector solve_lower(const SpdFactor& f, std::span<const double> b) {
  require(b.size() == f.dim, ErrorCode::DimensionMismatch, "solve_lower");
  Vector y(b.begin(), b.end());
  for (std::size_t i = 0; i < f.dim; ++i) {
    const auto li = f.lower.row(i);
    double s = y[i];
    for (std::size_t k = 0; k < i; ++k) s -= li[k] * y[k];
    y[i] = s / li[i];
  }
  return y;
}

// Solves Lᵀ x = b.
inline Vector solve_lower_transpose(const SpdFactor& f, std::span<const double> b) {
  require(b.size() == f.dim, ErrorCode::DimensionMismatch, "solve_lower_transpose");
  Vector x(b.begin(), b.end());
  for (std::size_t ii = f.dim; ii-- > 0;) {
    x[ii] /= f.lower(ii, ii);
    const double xi = x[ii];
    const auto li = f.lower.row(ii);
    for (std::size_t k = 0; k < ii; ++k) x[k] -= li[k] * xi;
  }
  return x;
}

inline Vector solve_spd(const SpdFactor& f, std::span<const double> b) {
  require(b.size() == f.dim, ErrorCode::DimensionMismatch,
          "solve_spd: rhs length " + std::to_string(b.size()) + " vs dim " +
              std::to_string(f.dim));
  return solve_lower_transpose(f, solve_lower(f, b));
}

inline Matrix reconstruct(const SpdFactor& f) {
  return matmul(f.lower, f.lower.transpose());
}

struct SymEigen {
  Vector values;   // ascending
  Matrix vectors;  // column k pairs with values[k]
};

inline constexpr std::size_t kMaxEigenDim = 2000;

// Cyclic Jacobi rotations until the off-diagonal mass is negligible relative
// to the Frobenius norm.
inline SymEigen sym_eigen(const SymMatrix& sym) {
  const std::size_t n = sym.dim();
  require(n <= kMaxEigenDim, ErrorCode::DimensionCap,
          "sym_eigen supports dim <= " + std::to_string(kMaxEigenDim));
  Matrix a = sym.matrix();
  Matrix v = Matrix::identity(n);
  const double scale = std::max(frobenius_norm(a), std::numeric_limits<double>::min());

  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) off += a(i, j) * a(i, j);
    if (std::sqrt(2.0 * off) <= 1e-15 * scale) break;

    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (std::abs(apq) <= 1e-300) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = (theta >= 0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        // A <- Jᵀ A J applied to rows/cols p, q.
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a(k, p);
          const double akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a(p, k);
          const double aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        a(p, q) = 0.0;
        a(q, p) = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = v(k, p);
          const double vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t x, std::size_t y) { return a(x, x) < a(y, y); });
  SymEigen out{Vector(n), Matrix(n, n)};
  for (std::size_t k = 0; k < n; ++k) {
    out.values[k] = a(order[k], order[k]);
    for (std::size_t i = 0; i < n; ++i) out.vectors(i, k) = v(i, order[k]);
  }
  return out;
}

using LinearMap = std::function<Vector(std::span<const double>)>;

struct SpectralNorm {
  double value = 0.0;
  int iterations = 0;
  bool converged = false;
};

// Largest singular value of an implicit operator (rows x cols) by power
// iteration on AᵀA from a seeded random unit start vector. On hitting max_iter
// the best estimate is returned with converged == false.
inline SpectralNorm operator_spectral_norm(const LinearMap& apply,
                                           const LinearMap& apply_adjoint,
                                           std::size_t rows, std::size_t cols,
                                           double tol, int max_iter,
                                           std::uint64_t seed = 0x5eed) {
  require(rows >= 1 && cols >= 1, ErrorCode::DimensionMismatch,
          "operator_spectral_norm: empty operator");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  Vector v(cols);
  for (double& x : v) x = normal(rng);
  double nv = norm(v);
  for (double& x : v) x /= nv;

  SpectralNorm result;
  double previous = 0.0;
  for (int it = 1; it <= max_iter; ++it) {
    const Vector u = apply(v);
    require(u.size() == rows, ErrorCode::DimensionMismatch, "apply output size");
    const double sigma = norm(u);
    result.value = std::max(result.value, sigma);
    result.iterations = it;
    if (sigma == 0.0) {
      // v landed in the null space (or the operator is zero); nothing to refine.
      result.converged = true;
      return result;
    }
    Vector w = apply_adjoint(u);
    require(w.size() == cols, ErrorCode::DimensionMismatch, "adjoint output size");
    const double nw = norm(w);
    // For unit v, |Aᵀ A v| / |A v| is a second, tighter lower bound on σ_max.
    result.value = std::max(result.value, nw / sigma);
    if (it > 1 && std::abs(result.value - previous) <= tol * result.value) {
      result.converged = true;
      return result;
    }
    previous = result.value;
    for (std::size_t i = 0; i < cols; ++i) v[i] = w[i] / nw;
  }
  return result;
}

// Thin QR via modified Gram-Schmidt with one reorthogonalization pass. The
// implied R has a positive diagonal, which keeps Q Haar-distributed when g is
// Gaussian.
inline Matrix orthonormalize(const Matrix& g) {
  const std::size_t p = g.rows();
  const std::size_t k = g.cols();
  require(p >= k && k >= 1, ErrorCode::DimensionMismatch,
          "orthonormalize needs rows >= cols >= 1");
  Matrix q = g.transpose();  // one basis vector per row
  for (std::size_t j = 0; j < k; ++j) {
    auto qj = q.row(j);
    const double original = norm(qj);
    for (int pass = 0; pass < 2; ++pass) {
      for (std::size_t i = 0; i < j; ++i) {
        const double r = dot(q.row(i), qj);
        axpy(-r, q.row(i), qj);
      }
    }
    const double nj = norm(qj);
    if (!(nj > 1e-12 * std::max(original, 1e-300)) || original == 0.0) {
      fail(ErrorCode::RankDeficient, "column " + std::to_string(j) + " collapsed");
    }
    for (double& x : qj) x /= nj;
  }
  return q.transpose();
}

}  // namespace quadmech
