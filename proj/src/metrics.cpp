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

#include "metrics.hpp"

#include "error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

namespace qsmooth {
namespace {

constexpr int kBatches = 32;

void require_pd(const Mat2& v, const char* what) {
  require(v.allFinite() && is_positive_definite(v),
          std::string(what) + ": covariance must be positive definite");
}

double inv_sqrt_det(const Mat2& v) { return 1.0 / std::sqrt(v.determinant()); }

void check_series(const std::vector<Vec2>& a, const std::vector<Vec2>& b,
                  SampleWindow w) {
  require(a.size() == b.size(), "mean series must be aligned");
  require(w.end <= a.size(), "sample window exceeds series length");
  require(w.size() > 0, "empty sample set");
}

double mean_over(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

// Standard error of the mean of `values` from kBatches contiguous blocks.
double batch_stderr(const std::vector<double>& values) {
  const std::size_t n = values.size();
  const std::size_t batches = std::min<std::size_t>(kBatches, n);
  if (batches < 2) return std::numeric_limits<double>::quiet_NaN();
  std::vector<double> means(batches, 0.0);
  for (std::size_t b = 0; b < batches; ++b) {
    const std::size_t lo = b * n / batches, hi = (b + 1) * n / batches;
    double s = 0.0;
    for (std::size_t i = lo; i < hi; ++i) s += values[i];
    means[b] = s / static_cast<double>(hi - lo);
  }
  const double m = mean_over(means);
  double ss = 0.0;
  for (double x : means) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(batches - 1) / static_cast<double>(batches));
}

Mat2 from_upper(double xx, double xp, double pp) {
  Mat2 m;
  m << xx, xp, xp, pp;
  return m;
}

}  // namespace

double purity(const Mat2& v, double hbar) {
  require_pd(v, "purity");
  return 1.0 / std::sqrt((2.0 / hbar * v).determinant());
}

Squeezing squeezing(const Mat2& v, double hbar) {
  require_pd(v, "squeezing");
  const auto eig = sym_eigenvalues(2.0 / hbar * v);
  return {eig[0], eig[1], to_db(eig[0]), to_db(eig[1])};
}

double trsd_theory(const Mat2& v_t, const Mat2& v_c, double hbar) {
  require_pd(v_t, "trsd");
  require_pd(v_c, "trsd");
  const double det_t = v_t.determinant(), det_c = v_c.determinant();
  require(det_t <= det_c * (1.0 + 1e-12),
          "det V_T exceeds det V_C: conditional state purer than the true state");
  return purity(v_t, hbar) - purity(v_c, hbar);
}

double gaussian_overlap(const Vec2& x, const Mat2& v) {
  const double q = x.dot(v.inverse() * x);
  return std::exp(-0.5 * q) / (2.0 * std::numbers::pi * std::sqrt(v.determinant()));
}

SampleWindow stationary_window(std::size_t points, std::size_t burn_in, std::size_t edge) {
  SampleWindow w;
  w.begin = std::max(burn_in, edge);
  w.end = points > edge ? points - edge : 0;
  if (w.end < w.begin) w.end = w.begin;
  return w;
}

std::size_t samples_for(double span, double dt) {
  return static_cast<std::size_t>(std::ceil(span / dt - 1e-9));
}

Estimate trsd_empirical(const std::vector<Vec2>& true_means,
                        const std::vector<Vec2>& cond_means, const Mat2& v_t,
                        const Mat2& v_c, SampleWindow w, double hbar) {
  check_series(true_means, cond_means, w);
  require_pd(v_t, "trsd");
  require_pd(v_c, "trsd");
  const Mat2 sum = v_t + v_c;
  std::vector<double> g;
  g.reserve(w.size());
  for (std::size_t k = w.begin; k < w.end; ++k)
    g.push_back(gaussian_overlap(true_means[k] - cond_means[k], sum));
  const double four_pi_hbar = 4.0 * std::numbers::pi * hbar;
  Estimate e;
  e.value = 0.5 * hbar * (inv_sqrt_det(v_t) + inv_sqrt_det(v_c)) - four_pi_hbar * mean_over(g);
  e.std_error = four_pi_hbar * batch_stderr(g);
  return e;
}

Mat2 reconstruct_conditional_cov(const std::vector<Vec2>& true_means,
                                 const std::vector<Vec2>& cond_means, const Mat2& v_t,
                                 SampleWindow w) {
  check_series(true_means, cond_means, w);
  Mat2 acc = Mat2::Zero();
  for (std::size_t k = w.begin; k < w.end; ++k) {
    const Vec2 e = cond_means[k] - true_means[k];
    acc += e * e.transpose();
  }
  return acc / static_cast<double>(w.size()) + v_t;
}

Mat2 sample_cov(const std::vector<Vec2>& means, SampleWindow w) {
  require(w.end <= means.size() && w.size() >= 2, "sample covariance needs two samples");
  Vec2 mean = Vec2::Zero();
  for (std::size_t k = w.begin; k < w.end; ++k) mean += means[k];
  mean /= static_cast<double>(w.size());
  Mat2 acc = Mat2::Zero();
  for (std::size_t k = w.begin; k < w.end; ++k) {
    const Vec2 d = means[k] - mean;
    acc += d * d.transpose();
  }
  return acc / static_cast<double>(w.size() - 1);
}

Mat2 reconstruct_true_cov(const std::vector<Vec2>& true_means, const Mat2& v_unc,
                          SampleWindow w) {
  return v_unc - sample_cov(true_means, w);
}

StateMetrics state_metrics(const Mat2& v_c, const Mat2& v_t, double hbar) {
  StateMetrics m;
  m.purity = purity(v_c, hbar);
  m.trsd = trsd_theory(v_t, v_c, hbar);
  m.squeezing = squeezing(v_c, hbar);
  return m;
}

Recoveries recoveries(const StateMetrics& f, const StateMetrics& s) {
  return {s.purity - f.purity, f.trsd - s.trsd, f.squeezing.squeeze - s.squeezing.squeeze,
          f.squeezing.antisqueeze - s.squeezing.antisqueeze};
}

MetricsReport theory_report(const RiccatiSolution& sol, double hbar) {
  MetricsReport r;
  r.hbar = hbar;
  r.true_state = state_metrics(sol.v_true, sol.v_true, hbar);
  r.filtered = state_metrics(sol.v_filt, sol.v_true, hbar);
  r.smoothed = state_metrics(sol.v_smooth, sol.v_true, hbar);
  r.recovery = recoveries(r.filtered, r.smoothed);
  return r;
}

namespace {

// Layout of the per-record statistics.
enum Stat {
  kErrF = 0,     // xx, xp, pp of x_F - x_T
  kErrS = 3,     // same for x_S - x_T
  kTrueSq = 6,   // second moments of x_T
  kSmoothSq = 9, // second moments of x_S
  kTrueMean = 12,
  kSmoothMean = 14,
  kMseF = 16,
  kMseS = 17,
  kOverlapF = 18,
  kOverlapS = 19,
  kStatCount = 20,
};

void add_outer(double* acc, const Vec2& v) {
  acc[0] += v(0) * v(0);
  acc[1] += v(0) * v(1);
  acc[2] += v(1) * v(1);
}

}  // namespace

MonteCarloAccumulator::MonteCarloAccumulator(const RiccatiSolution& sol, double hbar)
    : sol_(sol), hbar_(hbar), sum_(kStatCount, 0.0), sum_sq_(kStatCount, 0.0) {
  const Mat2 tf = sol.v_true + sol.v_filt;
  const Mat2 ts = sol.v_true + sol.v_smooth;
  require_pd(tf, "Monte-Carlo");
  require_pd(ts, "Monte-Carlo");
  inv_f_ = tf.inverse();
  inv_s_ = ts.inverse();
  norm_f_ = 1.0 / (2.0 * std::numbers::pi * std::sqrt(tf.determinant()));
  norm_s_ = 1.0 / (2.0 * std::numbers::pi * std::sqrt(ts.determinant()));
}

void MonteCarloAccumulator::add_record(const Vec2* x_true, const Vec2* x_filt,
                                       const Vec2* x_smooth, SampleWindow w) {
  require(w.size() > 0, "empty sample set");
  double acc[kStatCount] = {};
  for (std::size_t k = w.begin; k < w.end; ++k) {
    const Vec2& xt = x_true[k];
    const Vec2 ef = x_filt[k] - xt;
    const Vec2 es = x_smooth[k] - xt;
    add_outer(acc + kErrF, ef);
    add_outer(acc + kErrS, es);
    add_outer(acc + kTrueSq, xt);
    add_outer(acc + kSmoothSq, x_smooth[k]);
    acc[kTrueMean] += xt(0);
    acc[kTrueMean + 1] += xt(1);
    acc[kSmoothMean] += x_smooth[k](0);
    acc[kSmoothMean + 1] += x_smooth[k](1);
    acc[kOverlapF] += norm_f_ * std::exp(-0.5 * ef.dot(inv_f_ * ef));
    acc[kOverlapS] += norm_s_ * std::exp(-0.5 * es.dot(inv_s_ * es));
  }
  acc[kMseF] = acc[kErrF] + acc[kErrF + 2];
  acc[kMseS] = acc[kErrS] + acc[kErrS + 2];
  const double inv_n = 1.0 / static_cast<double>(w.size());
  for (int i = 0; i < kStatCount; ++i) {
    const double v = acc[i] * inv_n;
    sum_[i] += v;
    sum_sq_[i] += v * v;
  }
  ++records_;
  samples_ = w.size();
}

MonteCarloMetrics MonteCarloAccumulator::result() const {
  require(records_ > 0, "no Monte-Carlo records accumulated");
  const double r = static_cast<double>(records_);
  std::vector<double> mean(kStatCount), se(kStatCount);
  for (int i = 0; i < kStatCount; ++i) {
    mean[i] = sum_[i] / r;
    const double var = records_ > 1
                           ? std::max(0.0, (sum_sq_[i] - r * mean[i] * mean[i]) / (r - 1.0))
                           : std::numeric_limits<double>::quiet_NaN();
    se[i] = std::sqrt(var / r);
  }
  auto mat = [](const std::vector<double>& v, int at) {
    return from_upper(v[at], v[at + 1], v[at + 2]);
  };

  MonteCarloMetrics m;
  m.records = records_;
  m.samples_per_record = samples_;
  m.v_filt = mat(mean, kErrF) + sol_.v_true;
  m.v_smooth = mat(mean, kErrS) + sol_.v_true;
  m.v_filt_stderr = mat(se, kErrF);
  m.v_smooth_stderr = mat(se, kErrS);

  const Vec2 mu_t(mean[kTrueMean], mean[kTrueMean + 1]);
  const Vec2 mu_s(mean[kSmoothMean], mean[kSmoothMean + 1]);
  m.v_true = sol_.v_unc - (mat(mean, kTrueSq) - mu_t * mu_t.transpose());
  m.v_true_stderr = mat(se, kTrueSq);
  m.smoothed_mean_cov = mat(mean, kSmoothSq) - mu_s * mu_s.transpose();
  m.smoothed_mean_cov_stderr = mat(se, kSmoothSq);

  m.mse_filt = {mean[kMseF], se[kMseF]};
  m.mse_smooth = {mean[kMseS], se[kMseS]};
  const double four_pi_hbar = 4.0 * std::numbers::pi * hbar_;
  const double base_t = 0.5 * hbar_ * inv_sqrt_det(sol_.v_true);
  m.trsd_filt = {base_t + 0.5 * hbar_ * inv_sqrt_det(sol_.v_filt) -
                     four_pi_hbar * mean[kOverlapF],
                 four_pi_hbar * se[kOverlapF]};
  m.trsd_smooth = {base_t + 0.5 * hbar_ * inv_sqrt_det(sol_.v_smooth) -
                       four_pi_hbar * mean[kOverlapS],
                   four_pi_hbar * se[kOverlapS]};

  // Reconstructed-state summaries; the TrSD entries carry the empirical values.
  auto summary = [&](const Mat2& v, double trsd) {
    StateMetrics s;
    s.purity = is_positive_definite(v) ? purity(v, hbar_)
                                       : std::numeric_limits<double>::quiet_NaN();
    s.trsd = trsd;
    if (is_positive_definite(v)) s.squeezing = squeezing(v, hbar_);
    return s;
  };
  m.filtered = summary(m.v_filt, m.trsd_filt.value);
  m.smoothed = summary(m.v_smooth, m.trsd_smooth.value);
  m.recovery = recoveries(m.filtered, m.smoothed);
  return m;
}

}  // namespace qsmooth
