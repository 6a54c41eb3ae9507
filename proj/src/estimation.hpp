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

// Steady-state Riccati solutions and the filter / retrofilter / smoother
// recursions over sampled records.

#ifndef QSMOOTH_ESTIMATION_HPP
#define QSMOOTH_ESTIMATION_HPP

#include "linalg.hpp"
#include "system_model.hpp"
#include "trajectory_sim.hpp"

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

namespace qsmooth {

enum class Channels { kAliceOnly, kAliceAndBob };

/// Algebraic residual norms (Frobenius), divided by ||Q|| for the covariance
/// equations and by ||Q|| / hbar^2 for the retrofilter equation.
struct RiccatiResiduals {
  double v_true = 0.0;
  double v_filt = 0.0;
  double lambda_retro = 0.0;
};

struct RiccatiSolution {
  Mat2 v_true = Mat2::Zero();
  Mat2 v_filt = Mat2::Zero();
  Mat2 lambda_retro = Mat2::Zero();
  Mat2 v_smooth = Mat2::Zero();
  Mat2 v_unc = Mat2::Zero();
  RiccatiResiduals residuals;
  Channels channels = Channels::kAliceAndBob;
  long iterations = 0;  // integration steps plus Newton steps, all equations
  std::vector<std::string> warnings;
};

/// Right-hand sides of the steady-state equations; zero at the solution.
///   covariance:  A V + V A^T + Q - sum_m W_m W_m^T / R_m,  W_m = V C_m^T + S_m^T
///   retrofilter: L Abar + Abar^T L - L Qbar L + C_A^T C_A / R_A
Mat2 covariance_rhs(const ModelMatrices& model, const Mat2& v, bool with_bob);
Mat2 retro_rhs(const ModelMatrices& model, const Mat2& v_true, const Mat2& lambda);

/// V_S = V_T + E (I + Lambda E)^{-1} with E = V_F - V_T.
Mat2 smoothed_cov(const Mat2& v_true, const Mat2& v_filt, const Mat2& lambda);

/// Integrates the three Riccati equations to steady state (RK4 with a
/// Jacobian-bounded step, re-symmetrized every step), then polishes with
/// Newton steps. Throws kNotConverged when the scaled residual of any
/// equation stays above 1e-10.
RiccatiSolution solve_riccati(const ModelMatrices& model,
                              Channels channels = Channels::kAliceAndBob);

/// Scaled residuals of an arbitrary candidate solution.
RiccatiResiduals riccati_residuals(const ModelMatrices& model, const RiccatiSolution& sol);

/// Copy of the model with Bob's detector removed (C_B = 0, S_B = 0, D_B = 0).
ModelMatrices alice_only(const ModelMatrices& model);

/// Backward information pair. z[k] and the information matrix at t_k for
/// k = 0..N; the matrix equals `lambda_steady` except within `window`
/// samples of t_N, where lambda_tail[N - k] holds it.
struct RetroSeries {
  double dt = 0.0;
  std::vector<Vec2> z;
  Mat2 lambda_steady = Mat2::Zero();
  std::vector<Mat2> lambda_tail;
  std::size_t window = 0;

  const Mat2& lambda_at(std::size_t k) const;
};

struct SmootherOutput {
  StateTrajectory filtered;
  RetroSeries retro;
  StateTrajectory smoothed;
  std::optional<StateTrajectory> true_ref;
};

/// Mean recursions on a record sampled at fixed dt.
///
/// The gains are those of the exact discrete-time estimator for the
/// Euler-sampled true-state recursion (the same recursion the simulator
/// integrates), so filter and smoother are optimal for the sampled data
/// rather than carrying an O(dt) gain mismatch. Their steady-state limits
/// converge to the continuous K_A[V_F] and Lambda as dt -> 0. Gain schedules
/// are computed once per instance; the time-varying part relaxes over
/// forward_window() samples from t_0 and backward_window() samples before t_f.
///
/// Not thread-safe: schedules grow lazily when a longer record arrives.
class Estimator {
 public:
  Estimator(const ModelMatrices& model, const RiccatiSolution& sol, double dt);

  double dt() const { return dt_; }
  const RiccatiSolution& solution() const { return sol_; }

  /// All outputs hold n + 1 points for n samples.
  void filter(const double* y_a, std::size_t n, Vec2* out);
  void retrofilter(const double* y_a, std::size_t n, Vec2* z_out);
  void smooth(const Vec2* x_filt, const Vec2* z, std::size_t n, Vec2* out);
  void true_filter(const double* y_a, const double* y_b, std::size_t n, Vec2* out) const;

  /// Error covariance of the filtered mean about the true mean at t_k.
  const Mat2& filter_error_cov(std::size_t k);
  /// Retrofilter information matrix at t_k for a record of n samples.
  const Mat2& retro_information(std::size_t k, std::size_t n);
  /// Sampled counterpart of V_S at t_k for a record of n samples.
  Mat2 smoothed_cov_at(std::size_t k, std::size_t n);

  /// Window lengths in samples; valid after the schedule has been extended to
  /// the record length in use (equal to that length when not yet relaxed).
  std::size_t forward_window() const { return fwd_p_.size() - 1; }
  std::size_t backward_window() const { return bwd_lam_.size() - 1; }
  bool forward_relaxed() const { return fwd_done_; }
  bool backward_relaxed() const { return bwd_done_; }

  void prepare(std::size_t n);

 private:
  void extend_forward(std::size_t n);
  void extend_backward(std::size_t n);

  ModelMatrices model_;
  RiccatiSolution sol_;
  double dt_;
  TrueStep true_step_;

  Mat2 f_tilde_;  // I + (A - K_A C_A) dt
  Mat2 q_bar_dt_;
  Vec2 k_a_;

  // Forward schedule: P_k for k <= size - 1; (gamma_k, l_k) advance x_k.
  std::vector<Mat2> fwd_p_;
  std::vector<Mat2> fwd_gamma_;
  std::vector<Vec2> fwd_l_;
  bool fwd_done_ = false;

  // Backward schedule: Lambda at t_{N-j} for j <= size - 1; (phi_j, beta_j)
  // produce z at t_{N-1-j} from z at t_{N-j}.
  std::vector<Mat2> bwd_lam_;
  std::vector<Mat2> bwd_phi_;
  std::vector<Vec2> bwd_beta_;
  bool bwd_done_ = false;
};

StateTrajectory run_filter(const ModelMatrices& model, const MeasurementRecord& record,
                           const RiccatiSolution& sol);
StateTrajectory run_true_filter(const ModelMatrices& model, const MeasurementRecord& record,
                                const RiccatiSolution& sol);
RetroSeries run_retrofilter(const ModelMatrices& model, const MeasurementRecord& record,
                            const RiccatiSolution& sol);
StateTrajectory smooth(const ModelMatrices& model, const StateTrajectory& filtered,
                       const RetroSeries& retro, const RiccatiSolution& sol);

/// Filter, retrofilter and smoother in one pass; adds the true-state
/// reference when the record carries Bob's channel.
SmootherOutput run_smoother(const ModelMatrices& model, const MeasurementRecord& record,
                            const RiccatiSolution& sol);

}  // namespace qsmooth

#endif  // QSMOOTH_ESTIMATION_HPP
