// Copyright 2026 The qsmooth Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef QSMOOTH_LINALG_HPP
#define QSMOOTH_LINALG_HPP

#include <Eigen/Dense>

#include <array>
#include <cmath>

namespace qsmooth {

using Mat2 = Eigen::Matrix2d;
using Vec2 = Eigen::Vector2d;
using Row2 = Eigen::RowVector2d;
using Row10 = Eigen::Matrix<double, 1, 10>;
using Mat2x10 = Eigen::Matrix<double, 2, 10>;

inline Mat2 symmetrized(const Mat2& m) { return 0.5 * (m + m.transpose()); }

inline double max_abs(const Mat2& m) { return m.cwiseAbs().maxCoeff(); }

inline double asymmetry(const Mat2& m) { return std::abs(m(0, 1) - m(1, 0)); }

/// Eigenvalues of a symmetric 2x2 matrix in ascending order (closed form).
inline std::array<double, 2> sym_eigenvalues(const Mat2& m) {
  const double mean = 0.5 * (m(0, 0) + m(1, 1));
  const double half_diff = 0.5 * (m(0, 0) - m(1, 1));
  const double off = 0.5 * (m(0, 1) + m(1, 0));
  const double radius = std::hypot(half_diff, off);
  return {mean - radius, mean + radius};
}

inline bool is_positive_definite(const Mat2& m) {
  const Mat2 s = symmetrized(m);
  return s(0, 0) > 0.0 && s.determinant() > 0.0;
}

/// Solves M X + X M^T + N = 0 for symmetric X, N.
///
/// Unique when no two eigenvalues of M sum to zero (e.g. M Hurwitz). The
/// three independent unknowns (xx, xp, pp) are solved as a dense 3x3 system.
inline Mat2 solve_lyapunov(const Mat2& m, const Mat2& n) {
  const double a = m(0, 0), b = m(0, 1), c = m(1, 0), d = m(1, 1);
  Eigen::Matrix3d lhs;
  // (M X + X M^T)_{00} = 2a x00 + 2b x01
  // (M X + X M^T)_{01} = c x00 + (a + d) x01 + b x11
  // (M X + X M^T)_{11} = 2c x01 + 2d x11
  lhs << 2.0 * a, 2.0 * b, 0.0,  //
      c, a + d, b,               //
      0.0, 2.0 * c, 2.0 * d;
  const Eigen::Vector3d rhs(-n(0, 0), -0.5 * (n(0, 1) + n(1, 0)), -n(1, 1));
  const Eigen::Vector3d x = lhs.fullPivLu().solve(rhs);
  Mat2 out;
  out << x(0), x(1), x(1), x(2);
  return out;
}

/// Rotation by angle phi in phase space.
inline Mat2 rotation(double phi) {
  Mat2 r;
  r << std::cos(phi), -std::sin(phi), std::sin(phi), std::cos(phi);
  return r;
}

}  // namespace qsmooth

#endif  // QSMOOTH_LINALG_HPP
