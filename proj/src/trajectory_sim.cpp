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

#include "trajectory_sim.hpp"

#include "error.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace qsmooth {

void validate(const MeasurementRecord& record) {
  require(std::isfinite(record.dt) && record.dt > 0.0, "record dt must be positive");
  require(!record.y_a.empty(), "record must contain at least one sample");
  require(record.y_b.empty() || record.y_b.size() == record.y_a.size(),
          "y_a and y_b must have identical length");
  require(record.burn_in <= record.y_a.size(), "burn_in exceeds record length");
}

std::string_view to_string(Conditioning c) {
  switch (c) {
    case Conditioning::kTrue: return "true";
    case Conditioning::kFiltered: return "filtered";
    case Conditioning::kRetrofiltered: return "retrofiltered";
    case Conditioning::kSmoothed: return "smoothed";
    case Conditioning::kUnconditional: return "unconditional";
  }
  return "unknown";
}

const Mat2& StateTrajectory::cov_at(std::size_t k) const {
  if (k < head_cov.size()) return head_cov[k];
  const std::size_t from_end = means.size() - 1 - k;
  if (from_end < tail_cov.size()) return tail_cov[from_end];
  return cov;
}

bool StateTrajectory::in_boundary(std::size_t k) const {
  return k < head_cov.size() || means.size() - 1 - k < tail_cov.size();
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

Rng::Rng(std::uint64_t seed) : engine_(splitmix64(seed)) {}

std::uint64_t Rng::derive(std::uint64_t base, std::uint64_t a, std::uint64_t b,
                          std::uint64_t c) {
  std::uint64_t h = splitmix64(base);
  h = splitmix64(h ^ a);
  h = splitmix64(h ^ (b + 0x632be59bd9b4e019ULL));
  h = splitmix64(h ^ (c + 0x8cb92ba72f3d8dd7ULL));
  return h;
}

Mat2 unconditional_cov(const ModelMatrices& model) {
  const Mat2& a = model.a_mat;
  // Hurwitz test for 2x2: negative trace and positive determinant.
  if (!(a.trace() < 0.0 && a.determinant() > 0.0))
    fail(ErrorCode::kInvalidArgument,
         "drift matrix is not Hurwitz (at or above threshold)");
  return symmetrized(solve_lyapunov(a, model.q_mat));
}

Vec2 gain_a(const ModelMatrices& model, const Mat2& v) {
  return (v * model.c_a.transpose() + model.s_a.transpose()) / model.r_a;
}

Vec2 gain_b(const ModelMatrices& model, const Mat2& v) {
  return (v * model.c_b.transpose() + model.s_b.transpose()) / model.r_b;
}

TrueStep make_true_step(const ModelMatrices& model, const Mat2& v_true, double dt) {
  return TrueStep{model.a_mat, model.c_a, model.c_b, gain_a(model, v_true),
                  gain_b(model, v_true), dt};
}

double default_dt(const ModelMatrices& model) {
  return 1.0 / (200.0 * fastest_rate(model));
}

std::size_t default_burn_in(const ModelMatrices& model, double dt) {
  const double gamma = -0.5 * model.a_mat.trace();
  return static_cast<std::size_t>(std::ceil(10.0 / gamma / dt));
}

void simulate_into(const TrueStep& step, double r_a, double r_b, std::size_t n,
                   std::uint64_t seed, const Vec2& x0, Vec2* x_out, double* y_a,
                   double* y_b) {
  const double dt = step.dt;
  const double sd_a = std::sqrt(r_a * dt);
  const double sd_b = std::sqrt(r_b * dt);
  Rng rng(seed);
  Vec2 x = x0;
  x_out[0] = x;
  for (std::size_t k = 0; k < n; ++k) {
    const double dw_a = sd_a * rng.normal();
    const double dw_b = sd_b * rng.normal();
    y_a[k] = step.c_a.dot(x) + dw_a / dt;
    y_b[k] = step.c_b.dot(x) + dw_b / dt;
    x = step(x, y_a[k], y_b[k]);
    x_out[k + 1] = x;
  }
}

std::pair<StateTrajectory, MeasurementRecord> simulate_true(
    const ModelMatrices& model, const Mat2& v_true, const SimulationOptions& opt) {
  const double dt = opt.dt > 0.0 ? opt.dt : default_dt(model);
  require(std::isfinite(dt), "dt must be finite");
  const double stiffness = dt * fastest_rate(model);
  require(stiffness <= 0.1, "dt too large for the drift: dt*rate = " +
                                std::to_string(stiffness) + " > 0.1");
  require(is_positive_definite(v_true) && asymmetry(v_true) <= 1e-8 * max_abs(v_true),
          "v_true must be symmetric positive definite");
  require(std::isfinite(opt.duration) && opt.duration > 0.0, "duration must be positive");
  const auto n = static_cast<std::size_t>(std::llround(opt.duration / dt));
  require(n >= 1, "duration shorter than one step");

  const TrueStep step = make_true_step(model, v_true, dt);

  MeasurementRecord record;
  record.dt = dt;
  record.seed = opt.seed;
  record.burn_in = opt.burn_in >= 0 ? static_cast<std::size_t>(opt.burn_in)
                                    : default_burn_in(model, dt);
  record.burn_in = std::min(record.burn_in, n);
  record.y_a.resize(n);
  record.y_b.resize(n);

  StateTrajectory truth;
  truth.label = Conditioning::kTrue;
  truth.dt = dt;
  truth.cov = v_true;
  truth.means.resize(n + 1);

  simulate_into(step, model.r_a, model.r_b, n, opt.seed, opt.initial_mean,
                truth.means.data(), record.y_a.data(), record.y_b.data());
  return {std::move(truth), std::move(record)};
}

}  // namespace qsmooth
