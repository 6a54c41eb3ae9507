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

// Linear Langevin model of a degenerate OPO whose output is split between two
// homodyne detectors ("Alice", observed, and "Bob", hidden).
//
//   dx      = A x dt + B dv
//   y_m dt  = C_m x dt + D_m dv,   m in {A, B}
//
// with x = (x, p)^T and dv a vector of ten independent vacuum quadrature
// increments (two per input port).

#ifndef QSMOOTH_SYSTEM_MODEL_HPP
#define QSMOOTH_SYSTEM_MODEL_HPP

#include "linalg.hpp"

#include <numbers>

namespace qsmooth {

/// Physical knobs. Angles in radians, rates in rad/s.
struct SystemParams {
  double gamma = 2.0 * std::numbers::pi * 5.0e6;  // cavity half-width
  double xi = 0.70;                               // normalized pump amplitude
  double transmittance = 0.5;                     // variable beam splitter T
  double loss_a = 0.0;                            // path loss L_A
  double loss_b = 0.0;                            // path loss L_B
  double escape_eff = 1.0;                        // eta_c
  double theta_a = 0.0;
  double theta_b = 0.0;
  double hbar = 1.0;
};

/// Effective parameterization: only the overall detection efficiencies.
struct EffectiveParams {
  double gamma = 2.0 * std::numbers::pi * 5.0e6;
  double xi = 0.70;
  double eta_a = 0.0;
  double eta_b = 0.0;
  double theta_a = 0.0;
  double theta_b = 0.0;
  double hbar = 1.0;
};

/// Raw cavity description, as characterized on the bench.
struct CavityParams {
  double round_trip_length = 0.489;  // m
  double output_coupler = 0.100;     // T_c
  double intracavity_loss = 0.00282; // L_c
  double parametric_gain = 11.4;     // G_+
  double speed_of_light = 3.0e8;     // m/s
};

/// Per-arm efficiency budget; 1 - L_m is the product of these factors.
struct DetectionBudget {
  double visibility = 1.0;
  double propagation_loss = 0.0;
  double clearance_db = -100.0;  // electronic noise / shot noise, in dB
  double photodiode_qe = 1.0;
};

struct ModelMatrices {
  Mat2 a_mat = Mat2::Zero();
  Mat2x10 b_mat = Mat2x10::Zero();
  Row2 c_a = Row2::Zero();
  Row2 c_b = Row2::Zero();
  Row10 d_a = Row10::Zero();
  Row10 d_b = Row10::Zero();
  Mat2 q_mat = Mat2::Zero();
  double r_a = 1.0;
  double r_b = 1.0;
  Row2 s_a = Row2::Zero();
  Row2 s_b = Row2::Zero();
  double hbar = 1.0;
  // True when built from a physical parameter set; Heisenberg-bound checks
  // only make sense for those.
  bool quantum = true;
};

struct Efficiencies {
  double eta_a;
  double eta_b;
};

void validate(const SystemParams& params);
void validate(const EffectiveParams& params);

Efficiencies efficiencies(const SystemParams& params);

ModelMatrices build_model(const SystemParams& params);
ModelMatrices build_model(const EffectiveParams& params);

/// Cavity decay rates (gamma_Tc, gamma_Lc) in rad/s consistent with
/// gamma_Tc + gamma_Lc = 2 gamma and eta_c = gamma_Tc / (gamma_Tc + gamma_Lc).
struct DecayRates {
  double output_coupler;
  double intracavity;
};
DecayRates decay_rates(const SystemParams& params);

/// gamma, eta_c and xi from the cavity description (HWHM = c(T_c+L_c)/(4 pi l)).
struct CavityDerived {
  double gamma;
  double escape_eff;
  double xi;
};
CavityDerived derive_cavity(const CavityParams& cavity);

/// L_m = 1 - zeta^2 * eta_prop * eta_elec * eta_PD.
double path_loss(const DetectionBudget& budget);

/// Bench values of the reference experiment: gamma/2pi = 5.0 MHz, xi = 0.70,
/// escape efficiency and per-arm losses from the component budgets,
/// theta_A = 65 deg, theta_B = 135 deg, T = 0.5.
SystemParams paper_defaults();

/// Transmittance that yields the requested eta_A for the given losses.
double transmittance_for_eta_a(const SystemParams& params, double eta_a);

/// Largest decay rate |lambda(A)|, used for step-size guards.
double fastest_rate(const ModelMatrices& model);

inline constexpr double deg_to_rad(double deg) {
  return deg * std::numbers::pi / 180.0;
}
inline constexpr double rad_to_deg(double rad) {
  return rad * 180.0 / std::numbers::pi;
}

}  // namespace qsmooth

#endif  // QSMOOTH_SYSTEM_MODEL_HPP
