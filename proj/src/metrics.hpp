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

#ifndef QSMOOTH_METRICS_HPP
#define QSMOOTH_METRICS_HPP

#include "estimation.hpp"
#include "linalg.hpp"

#include <cmath>
#include <cstddef>
#include <optional>
#include <vector>

namespace qsmooth {

/// 1 / sqrt(det(2 V / hbar)). Throws on non-PD input.
double purity(const Mat2& v, double hbar = 1.0);

struct Squeezing {
  double squeeze = 0.0;      // smaller eigenvalue of (2/hbar) V
  double antisqueeze = 0.0;  // larger eigenvalue
  double squeeze_db = 0.0;
  double antisqueeze_db = 0.0;
};

Squeezing squeezing(const Mat2& v, double hbar = 1.0);

inline double to_db(double ratio) { return 10.0 * std::log10(ratio); }
inline double from_db(double db) { return std::pow(10.0, db / 10.0); }

/// (hbar/2)(|V_T|^{-1/2} - |V_C|^{-1/2}), i.e. purity(v_t) - purity(v_c).
/// Throws when det v_t exceeds det v_c beyond rounding.
double trsd_theory(const Mat2& v_t, const Mat2& v_c, double hbar = 1.0);

/// Bivariate normal density g(x, V) = exp(-x^T V^{-1} x / 2) / (2 pi sqrt|V|).
double gaussian_overlap(const Vec2& x, const Mat2& v);

struct Estimate {
  double value = 0.0;
  double std_error = 0.0;
};

/// Index range [begin, end) of samples that enter a statistic.
struct SampleWindow {
  std::size_t begin = 0;
  std::size_t end = 0;
  std::size_t size() const { return end > begin ? end - begin : 0; }
};

/// Samples of an (N+1)-point trajectory outside the first max(burn_in, edge)
/// and the last `edge` samples.
SampleWindow stationary_window(std::size_t points, std::size_t burn_in, std::size_t edge);

/// Samples covering `span` seconds, rounded up.
std::size_t samples_for(double span, double dt);

/// Empirical average trace-squared deviation over the window:
///   (hbar/2)(|V_T|^{-1/2} + |V_C|^{-1/2}) - 4 pi hbar E[g(x_T - x_C, V_T + V_C)].
/// The standard error uses batch means over contiguous blocks.
Estimate trsd_empirical(const std::vector<Vec2>& true_means,
                        const std::vector<Vec2>& cond_means, const Mat2& v_t,
                        const Mat2& v_c, SampleWindow window, double hbar = 1.0);

/// E[(x_C - x_T)(x_C - x_T)^T] + V_T over the window.
Mat2 reconstruct_conditional_cov(const std::vector<Vec2>& true_means,
                                 const std::vector<Vec2>& cond_means, const Mat2& v_t,
                                 SampleWindow window);

/// V_unc - Cov(x_T): the true-state estimator (noisier, relies on stationarity).
Mat2 reconstruct_true_cov(const std::vector<Vec2>& true_means, const Mat2& v_unc,
                          SampleWindow window);

/// Sample covariance (mean removed) over the window.
Mat2 sample_cov(const std::vector<Vec2>& means, SampleWindow window);

/// Summary of one conditional state.
struct StateMetrics {
  double purity = 0.0;
  double trsd = 0.0;  // against the true state; 0 for the true state itself
  Squeezing squeezing;
};

StateMetrics state_metrics(const Mat2& v_c, const Mat2& v_t, double hbar = 1.0);

struct Recoveries {
  double purity = 0.0;       // P(S) - P(F)
  double trsd = 0.0;         // D(F) - D(S)
  double squeezing = 0.0;    // S(F) - S(S)
  double antisqueezing = 0.0;  // A(F) - A(S)
};

Recoveries recoveries(const StateMetrics& filtered, const StateMetrics& smoothed);

/// Monte-Carlo entries: means over records, standard errors across records.
struct MonteCarloMetrics {
  std::size_t records = 0;
  std::size_t samples_per_record = 0;
  Mat2 v_filt = Mat2::Zero();  // reconstructed
  Mat2 v_smooth = Mat2::Zero();
  Mat2 v_true = Mat2::Zero();  // V_unc - Cov(x_T)
  Mat2 v_filt_stderr = Mat2::Zero();
  Mat2 v_smooth_stderr = Mat2::Zero();
  Mat2 v_true_stderr = Mat2::Zero();
  Mat2 smoothed_mean_cov = Mat2::Zero();  // Cov(x_S)
  Mat2 smoothed_mean_cov_stderr = Mat2::Zero();
  Estimate mse_filt;
  Estimate mse_smooth;
  Estimate trsd_filt;
  Estimate trsd_smooth;
  StateMetrics filtered;  // from the reconstructed covariances
  StateMetrics smoothed;
  Recoveries recovery;
};

struct MetricsReport {
  double hbar = 1.0;
  StateMetrics true_state;
  StateMetrics filtered;
  StateMetrics smoothed;
  Recoveries recovery;
  std::optional<MonteCarloMetrics> mc;
};

MetricsReport theory_report(const RiccatiSolution& sol, double hbar = 1.0);

/// Per-record accumulator for the Monte-Carlo entries. Each record
/// contributes one value per statistic; results are means over records with
/// standard errors from their spread, so within-record correlations do not
/// bias the error bars.
class MonteCarloAccumulator {
 public:
  MonteCarloAccumulator(const RiccatiSolution& sol, double hbar);

  void add_record(const Vec2* x_true, const Vec2* x_filt, const Vec2* x_smooth,
                  SampleWindow window);

  std::size_t records() const { return records_; }
  MonteCarloMetrics result() const;

 private:
  RiccatiSolution sol_;
  double hbar_;
  Mat2 inv_f_, inv_s_;  // (V_T + V_C)^{-1}
  double norm_f_, norm_s_;  // 1 / (2 pi sqrt|V_T + V_C|)
  std::size_t records_ = 0;
  std::size_t samples_ = 0;
  // Running sums over records of each per-record statistic and its square.
  std::vector<double> sum_;
  std::vector<double> sum_sq_;
};

}  // namespace qsmooth

#endif  // QSMOOTH_METRICS_HPP
