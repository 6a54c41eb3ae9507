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

#include "system_model.hpp"

#include "error.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <string>

namespace qsmooth {
namespace {

bool finite(double v) { return std::isfinite(v); }

void check_common(double gamma, double xi, double hbar, double theta_a,
                  double theta_b) {
  require(finite(gamma) && gamma > 0.0, "gamma must be positive and finite");
  require(finite(xi) && xi >= 0.0 && xi < 1.0,
          "xi must lie in [0, 1) (below threshold)");
  require(finite(hbar) && hbar > 0.0, "hbar must be positive");
  require(finite(theta_a) && finite(theta_b), "angles must be finite");
}

// Beam-splitter geometry shared by both construction paths. The effective
// path may pass losses of exactly 1 (no detection at all), so no range
// checks here.
ModelMatrices assemble(double gamma, double xi, double escape_eff, double t,
                       double loss_a, double loss_b, double theta_a,
                       double theta_b, double hbar) {
  ModelMatrices m;
  m.hbar = hbar;
  m.quantum = true;

  m.a_mat << -gamma * (1.0 - xi), 0.0, 0.0, -gamma * (1.0 + xi);

  const double gamma_tc = 2.0 * gamma * escape_eff;
  const double gamma_lc = 2.0 * gamma * (1.0 - escape_eff);
  const double sh = std::sqrt(hbar / 2.0);
  m.b_mat.setZero();
  m.b_mat(0, 0) = sh * std::sqrt(gamma_lc);
  m.b_mat(1, 1) = sh * std::sqrt(gamma_lc);
  m.b_mat(0, 2) = sh * std::sqrt(gamma_tc);
  m.b_mat(1, 3) = sh * std::sqrt(gamma_tc);

  const double eta_a = escape_eff * (1.0 - loss_a) * t;
  const double eta_b = escape_eff * (1.0 - loss_b) * (1.0 - t);
  const Row2 dir_a(std::cos(theta_a), std::sin(theta_a));
  const Row2 dir_b(std::cos(theta_b), std::sin(theta_b));
  m.c_a = std::sqrt(4.0 * gamma * eta_a / hbar) * dir_a;
  m.c_b = std::sqrt(4.0 * gamma * eta_b / hbar) * dir_b;

  // d_j coefficients for ports j = 2..5; port 1 (intracavity loss) never
  // reaches a detector.
  const double d_a[4] = {-std::sqrt((1.0 - loss_a) * t),
                         -std::sqrt((1.0 - loss_a) * (1.0 - t)),
                         -std::sqrt(loss_a), 0.0};
  const double d_b[4] = {-std::sqrt((1.0 - loss_b) * (1.0 - t)),
                         std::sqrt((1.0 - loss_b) * t), 0.0,
                         -std::sqrt(loss_b)};
  m.d_a.setZero();
  m.d_b.setZero();
  for (int j = 0; j < 4; ++j) {
    m.d_a(2 + 2 * j) = d_a[j] * dir_a(0);
    m.d_a(3 + 2 * j) = d_a[j] * dir_a(1);
    m.d_b(2 + 2 * j) = d_b[j] * dir_b(0);
    m.d_b(3 + 2 * j) = d_b[j] * dir_b(1);
  }

  m.q_mat = hbar * gamma * Mat2::Identity();
  m.r_a = 1.0;
  m.r_b = 1.0;
  m.s_a = -(hbar / 2.0) * m.c_a;
  m.s_b = -(hbar / 2.0) * m.c_b;
  return m;
}

}  // namespace

void validate(const SystemParams& p) {
  check_common(p.gamma, p.xi, p.hbar, p.theta_a, p.theta_b);
  require(finite(p.transmittance) && p.transmittance >= 0.0 &&
              p.transmittance <= 1.0,
          "transmittance must lie in [0, 1]");
  require(finite(p.loss_a) && p.loss_a >= 0.0 && p.loss_a < 1.0,
          "loss_a must lie in [0, 1)");
  require(finite(p.loss_b) && p.loss_b >= 0.0 && p.loss_b < 1.0,
          "loss_b must lie in [0, 1)");
  require(finite(p.escape_eff) && p.escape_eff > 0.0 && p.escape_eff <= 1.0,
          "escape_eff must lie in (0, 1]");
}

void validate(const EffectiveParams& p) {
  check_common(p.gamma, p.xi, p.hbar, p.theta_a, p.theta_b);
  require(finite(p.eta_a) && p.eta_a >= 0.0 && p.eta_a <= 1.0,
          "eta_a must lie in [0, 1]");
  require(finite(p.eta_b) && p.eta_b >= 0.0 && p.eta_b <= 1.0,
          "eta_b must lie in [0, 1]");
  require(p.eta_a + p.eta_b <= 1.0 + 1e-15, "eta_a + eta_b must not exceed 1");
}

Efficiencies efficiencies(const SystemParams& p) {
  validate(p);
  return {p.escape_eff * (1.0 - p.loss_a) * p.transmittance,
          p.escape_eff * (1.0 - p.loss_b) * (1.0 - p.transmittance)};
}

ModelMatrices build_model(const SystemParams& p) {
  validate(p);
  return assemble(p.gamma, p.xi, p.escape_eff, p.transmittance, p.loss_a,
                  p.loss_b, p.theta_a, p.theta_b, p.hbar);
}

ModelMatrices build_model(const EffectiveParams& p) {
  validate(p);
  // Canonical realization: lossless cavity escape, common path loss
  // 1 - eta_tot, beam splitter set to the efficiency ratio.
  const double total = std::min(1.0, p.eta_a + p.eta_b);
  const double t = total > 0.0 ? p.eta_a / total : 0.5;
  const double loss = 1.0 - total;
  return assemble(p.gamma, p.xi, 1.0, t, loss, loss, p.theta_a, p.theta_b,
                  p.hbar);
}

DecayRates decay_rates(const SystemParams& p) {
  validate(p);
  return {2.0 * p.gamma * p.escape_eff, 2.0 * p.gamma * (1.0 - p.escape_eff)};
}

CavityDerived derive_cavity(const CavityParams& c) {
  require(c.round_trip_length > 0.0, "round-trip length must be positive");
  require(c.output_coupler > 0.0 && c.intracavity_loss >= 0.0,
          "cavity transmissions must be nonnegative");
  require(c.parametric_gain >= 1.0, "parametric gain must be >= 1");
  const double gamma_tc = c.speed_of_light / c.round_trip_length * c.output_coupler;
  const double gamma_lc = c.speed_of_light / c.round_trip_length * c.intracavity_loss;
  return {0.5 * (gamma_tc + gamma_lc), gamma_tc / (gamma_tc + gamma_lc),
          1.0 - 1.0 / std::sqrt(c.parametric_gain)};
}

double path_loss(const DetectionBudget& b) {
  const double elec = 1.0 - std::pow(10.0, b.clearance_db / 10.0);
  return 1.0 - b.visibility * b.visibility * (1.0 - b.propagation_loss) *
                   elec * b.photodiode_qe;
}

SystemParams paper_defaults() {
  const CavityDerived cavity = derive_cavity(CavityParams{});
  SystemParams p;
  p.gamma = 2.0 * std::numbers::pi * 5.0e6;
  p.xi = 0.70;
  p.escape_eff = cavity.escape_eff;
  p.loss_a = path_loss({0.992, 0.084, -25.4, 0.99});
  p.loss_b = path_loss({0.993, 0.088, -25.6, 0.99});
  p.transmittance = 0.5;
  p.theta_a = deg_to_rad(65.0);
  p.theta_b = deg_to_rad(135.0);
  p.hbar = 1.0;
  return p;
}

double transmittance_for_eta_a(const SystemParams& p, double eta_a) {
  const double full = p.escape_eff * (1.0 - p.loss_a);
  require(eta_a >= 0.0 && eta_a <= full + 1e-12,
          "eta_a = " + std::to_string(eta_a) +
              " is not reachable (maximum " + std::to_string(full) + ")");
  return std::min(1.0, eta_a / full);
}

double fastest_rate(const ModelMatrices& model) {
  const Eigen::EigenSolver<Mat2> es(model.a_mat, false);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

}  // namespace qsmooth
