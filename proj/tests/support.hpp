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

// Oracles shared by the unit tests. Nothing here calls back into the code
// under test except to unpack its types.
#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <vector>

#include "quadmech/linalg.hpp"
#include "quadmech/random.hpp"

namespace qm_test {

using quadmech::Matrix;
using quadmech::Vector;

inline Eigen::MatrixXd to_eigen(const Matrix& m) {
  Eigen::MatrixXd e(m.rows(), m.cols());
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) e(i, j) = m(i, j);
  return e;
}

inline Eigen::VectorXd to_eigen(std::span<const double> v) {
  Eigen::VectorXd e(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) e(i) = v[i];
  return e;
}

inline Matrix from_eigen(const Eigen::MatrixXd& e) {
  Matrix m(e.rows(), e.cols());
  for (Eigen::Index i = 0; i < e.rows(); ++i)
    for (Eigen::Index j = 0; j < e.cols(); ++j) m(i, j) = e(i, j);
  return m;
}

inline Vector random_vector(std::mt19937_64& rng, std::size_t n, double sd = 1.0) {
  std::normal_distribution<double> normal(0.0, sd);
  Vector v(n);
  for (double& x : v) x = normal(rng);
  return v;
}

inline Eigen::MatrixXd random_matrix(std::mt19937_64& rng, std::size_t r, std::size_t c) {
  std::normal_distribution<double> normal;
  Eigen::MatrixXd m(r, c);
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = normal(rng);
  return m;
}

// GᵀG/n + shift·I, comfortably positive definite.
inline Eigen::MatrixXd random_spd(std::mt19937_64& rng, std::size_t n, double shift = 0.5) {
  const Eigen::MatrixXd g = random_matrix(rng, n + 3, n);
  return g.transpose() * g / static_cast<double>(n) +
         shift * Eigen::MatrixXd::Identity(n, n);
}

// Central differences of a vector-valued f; column j is ∂f/∂x_j.
inline Eigen::MatrixXd fd_jacobian(const std::function<Vector(const Vector&)>& f,
                                   const Vector& x, double h = 1e-5) {
  const Vector f0 = f(x);
  Eigen::MatrixXd j(f0.size(), x.size());
  Vector xp = x, xm = x;
  for (std::size_t k = 0; k < x.size(); ++k) {
    xp[k] = x[k] + h;
    xm[k] = x[k] - h;
    const Vector fp = f(xp), fm = f(xm);
    for (std::size_t r = 0; r < f0.size(); ++r) j(r, k) = (fp[r] - fm[r]) / (2 * h);
    xp[k] = xm[k] = x[k];
  }
  return j;
}

inline double fd_derivative(const std::function<double(const Vector&)>& f, const Vector& x,
                            std::size_t k, double h = 1e-5) {
  Vector xp = x, xm = x;
  xp[k] += h;
  xm[k] -= h;
  return (f(xp) - f(xm)) / (2 * h);
}

// Exact Hessian of a scalar function by second-order central differences.
inline Eigen::MatrixXd fd_hessian(const std::function<double(const Vector&)>& f,
                                  const Vector& x, double h = 1e-4) {
  const std::size_t n = x.size();
  Eigen::MatrixXd hess(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      auto at = [&](double si, double sj) {
        Vector y = x;
        y[i] += si * h;
        y[j] += sj * h;
        return f(y);
      };
      hess(i, j) = (at(1, 1) - at(1, -1) - at(-1, 1) + at(-1, -1)) / (4 * h * h);
    }
  return hess;
}

inline double max_abs(const Eigen::MatrixXd& m) { return m.cwiseAbs().maxCoeff(); }

}  // namespace qm_test
