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

#ifndef QSMOOTH_TRAJECTORY_SIM_HPP
#define QSMOOTH_TRAJECTORY_SIM_HPP

#include "linalg.hpp"
#include "system_model.hpp"

#include <cstddef>
#include <cstdint>
#include <random>
#include <string_view>
#include <utility>
#include <vector>

namespace qsmooth {

/// Uniformly sampled homodyne currents. Sample k covers [k dt, (k+1) dt) and
/// obeys y_m[k] dt = C_m x_T(k dt) dt + dw_m[k].
struct MeasurementRecord {
  double dt = 0.0;
  std::vector<double> y_a;
  std::vector<double> y_b;  // empty when only Alice's record is available
  std::uint64_t seed = 0;
  std::size_t burn_in = 0;

  std::size_t size() const { return y_a.size(); }
  double duration() const { return dt * static_cast<double>(y_a.size()); }
  bool has_hidden() const { return !y_b.empty(); }
};

/// Throws on empty records, nonpositive dt or mismatched channel lengths.
void validate(const MeasurementRecord& record);

enum class Conditioning { kTrue, kFiltered, kRetrofiltered, kSmoothed, kUnconditional };

std::string_view to_string(Conditioning c);

/// Means at t_k = k dt, k = 0..N for a record of N samples.
///
/// `cov` is the covariance the generating recursion used for interior
/// samples. Leading samples whose covariance is still relaxing carry their own
/// value in `head_cov` (index k), trailing ones in `tail_cov` (index N - k).
struct StateTrajectory {
  Conditioning label = Conditioning::kUnconditional;
  double dt = 0.0;
  std::vector<Vec2> means;
  Mat2 cov = Mat2::Zero();
  std::vector<Mat2> head_cov;
  std::vector<Mat2> tail_cov;

  std::size_t size() const { return means.size(); }
  double time(std::size_t k) const { return dt * static_cast<double>(k); }
  const Mat2& cov_at(std::size_t k) const;
  bool in_boundary(std::size_t k) const;
};

/// Seedable generator with independent derived streams (SplitMix64-mixed
/// seeds feeding a 64-bit Mersenne twister).
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  double normal() { return normal_(engine_); }
  std::uint64_t next_u64() { return engine_(); }

  /// Stable, order-independent mixing of a base seed with stream coordinates.
  static std::uint64_t derive(std::uint64_t base, std::uint64_t a,
                              std::uint64_t b = 0, std::uint64_t c = 0);

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

std::uint64_t splitmix64(std::uint64_t x);

/// Stationary covariance of the unmonitored system, A V + V A^T + Q = 0.
Mat2 unconditional_cov(const ModelMatrices& model);

/// K_m[V] = (V C_m^T + S_m^T) R_m^{-1}.
Vec2 gain_a(const ModelMatrices& model, const Mat2& v);
Vec2 gain_b(const ModelMatrices& model, const Mat2& v);

/// One step of the two-channel true-state mean recursion,
/// x + [A x + K_A (y_A - C_A x) + K_B (y_B - C_B x)] dt.
/// The simulator and the true-state filter both go through this function.
struct TrueStep {
  Mat2 a_mat;
  Row2 c_a, c_b;
  Vec2 k_a, k_b;
  double dt;

  Vec2 operator()(const Vec2& x, double y_a, double y_b) const {
    const double innov_a = y_a - c_a.dot(x);
    const double innov_b = y_b - c_b.dot(x);
    return x + (a_mat * x + k_a * innov_a + k_b * innov_b) * dt;
  }
};

TrueStep make_true_step(const ModelMatrices& model, const Mat2& v_true, double dt);

/// Default step: resolves the fastest drift eigenvalue with 200 points.
double default_dt(const ModelMatrices& model);

/// Default burn-in: 10 / gamma where gamma = |trace A| / 2.
std::size_t default_burn_in(const ModelMatrices& model, double dt);

struct SimulationOptions {
  double duration = 0.0;
  double dt = 0.0;  // 0 selects default_dt
  std::uint64_t seed = 0;
  long burn_in = -1;  // negative selects default_burn_in
  Vec2 initial_mean = Vec2::Zero();
};

/// Core loop of simulate_true writing into caller-owned buffers: n samples of
/// y_a and y_b, n + 1 states starting from x0. No allocation.
void simulate_into(const TrueStep& step, double r_a, double r_b, std::size_t n,
                   std::uint64_t seed, const Vec2& x0, Vec2* x_out, double* y_a,
                   double* y_b);

/// Euler-Maruyama integration of the true-state mean driven by seeded Wiener
/// increments; emits the matching Alice/Bob records.
std::pair<StateTrajectory, MeasurementRecord> simulate_true(
    const ModelMatrices& model, const Mat2& v_true, const SimulationOptions& options);

}  // namespace qsmooth

#endif  // QSMOOTH_TRAJECTORY_SIM_HPP
