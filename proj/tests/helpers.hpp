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

#ifndef QSMOOTH_TESTS_HELPERS_HPP
#define QSMOOTH_TESTS_HELPERS_HPP

#include "estimation.hpp"
#include "system_model.hpp"

#include <cmath>
#include <numbers>
#include <random>

namespace qstest {

using namespace qsmooth;

/// Bench defaults in units of the cavity rate (gamma = 1).
inline SystemParams unit_paper(double eta_a = 0.43) {
  SystemParams p = paper_defaults();
  p.gamma = 1.0;
  p.transmittance = transmittance_for_eta_a(p, eta_a);
  return p;
}

inline double max_diff(const Mat2& a, const Mat2& b) { return (a - b).cwiseAbs().maxCoeff(); }

/// Random valid physical parameter set.
inline SystemParams random_params(std::mt19937_64& gen) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  SystemParams p;
  p.gamma = std::pow(10.0, -1.0 + 9.0 * u(gen));
  p.xi = 0.95 * u(gen);
  p.transmittance = u(gen);
  p.loss_a = 0.9 * u(gen);
  p.loss_b = 0.9 * u(gen);
  p.escape_eff = 0.05 + 0.95 * u(gen);
  p.theta_a = std::numbers::pi * u(gen);
  p.theta_b = std::numbers::pi * u(gen);
  p.hbar = std::pow(10.0, -1.0 + 2.0 * u(gen));
  return p;
}

/// A generic classical model (no quantum cross-covariance) with gamma ~ 1.
inline ModelMatrices classical_model(std::mt19937_64& gen) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  ModelMatrices m;
  m.quantum = false;
  m.hbar = 1.0;
  Mat2 a;
  a << -1.0 + 0.3 * u(gen), 0.8 * u(gen), 0.8 * u(gen), -2.0 + 0.3 * u(gen);
  m.a_mat = a;
  Mat2 l;
  l << 1.0 + 0.3 * u(gen), 0.0, 0.5 * u(gen), 0.7 + 0.2 * u(gen);
  m.q_mat = l * l.transpose();
  m.c_a = Row2(1.0 + 0.5 * u(gen), 0.8 * u(gen));
  m.c_b = Row2(0.6 * u(gen), 1.0 + 0.5 * u(gen));
  m.r_a = 1.0 + 0.5 * u(gen);
  m.r_b = 1.0 + 0.5 * u(gen);
  m.s_a.setZero();
  m.s_b.setZero();
  return m;
}

}  // namespace qstest

#endif  // QSMOOTH_TESTS_HELPERS_HPP
