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

#include "estimation.hpp"

#include "error.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <string>

namespace qsmooth {
namespace {

constexpr double kResidualTol = 1e-10;
constexpr double kSwitchTol = 1e-8;    // hand over from integration to Newton
constexpr double kPolishTol = 1e-14;
constexpr long kMaxSteps = 20'000'000;
constexpr int kMaxNewton = 30;
constexpr double kSymmetryWarn = 1e-8;
constexpr double kScheduleTol = 1e-14;  // relative step change that freezes a gain schedule
constexpr double kSingularCond = 1e12;

double fro(const Mat2& m) { return m.norm(); }

// Generic steady-state search for dX/dtau = rhs(X).
//
// `lin` returns the matrix N of the linearization N d + d N^T at X; it bounds
// the RK4 step and drives the Newton correction.
struct SteadyState {
  Mat2 value;
  double residual;  // scaled
  long steps;
};

SteadyState find_steady_state(const Mat2& start, double scale,
                              const std::function<Mat2(const Mat2&)>& rhs,
                              const std::function<Mat2(const Mat2&)>& lin,
                              const char* name, std::vector<std::string>& warnings) {
  Mat2 x = start;
  long steps = 0;
  double res = fro(rhs(x)) / scale;
  bool warned = false;
  auto tidy = [&](Mat2& m) {
    if (!warned && asymmetry(m) > kSymmetryWarn * std::max(max_abs(m), 1e-300)) {
      warnings.push_back(std::string(name) + ": symmetry loss re-symmetrized");
      warned = true;
    }
    m = symmetrized(m);
  };

  while (res > kSwitchTol) {
    if (++steps > kMaxSteps)
      fail(ErrorCode::kNotConverged,
           std::string(name) + " integration did not converge after " +
               std::to_string(steps - 1) + " steps, residual " + std::to_string(res));
    const double rate = 2.0 * fro(lin(x));
    const double h = rate > 0.0 ? 0.5 / rate : 1.0;
    const Mat2 k1 = rhs(x);
    const Mat2 k2 = rhs(x + 0.5 * h * k1);
    const Mat2 k3 = rhs(x + 0.5 * h * k2);
    const Mat2 k4 = rhs(x + h * k3);
    x += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    tidy(x);
    res = fro(rhs(x)) / scale;
    if (!std::isfinite(res))
      fail(ErrorCode::kNotConverged, std::string(name) + " integration diverged");
  }

  Mat2 best = x;
  double best_res = res;
  for (int it = 0; it < kMaxNewton && best_res > kPolishTol; ++it) {
    ++steps;
    const Mat2 delta = solve_lyapunov(lin(x), rhs(x));
    if (!delta.allFinite()) break;
    x += delta;
    tidy(x);
    res = fro(rhs(x)) / scale;
    if (res < best_res) {
      best = x;
      best_res = res;
    } else if (res >= best_res && it > 2) {
      break;
    }
  }
  if (!(best_res <= kResidualTol))
    fail(ErrorCode::kNotConverged,
         std::string(name) + " residual " + std::to_string(best_res) + " after " +
             std::to_string(steps) + " steps");
  return {best, best_res, steps};
}

double cov_scale(const ModelMatrices& model) {
  const double q = fro(model.q_mat);
  return q > 0.0 ? q : 1.0;
}

double retro_scale(const ModelMatrices& model) {
  return cov_scale(model) / (model.hbar * model.hbar);
}

Mat2 closed_loop(const ModelMatrices& model, const Mat2& v, bool with_bob) {
  Mat2 m = model.a_mat - gain_a(model, v) * model.c_a;
  if (with_bob) m -= gain_b(model, v) * model.c_b;
  return m;
}

Mat2 q_bar(const ModelMatrices& model, const Mat2& v_true) {
  const Vec2 k_b = gain_b(model, v_true);
  return model.r_b * k_b * k_b.transpose();
}

Mat2 a_bar(const ModelMatrices& model, const Mat2& v_true) {
  return model.a_mat - gain_a(model, v_true) * model.c_a;
}

double condition_number(const Mat2& m) {
  const Eigen::JacobiSVD<Mat2> svd(m);
  const auto s = svd.singularValues();
  return s(1) > 0.0 ? s(0) / s(1) : std::numeric_limits<double>::infinity();
}

Mat2 inverse_checked(const Mat2& m) {
  const double cond = condition_number(m);
  if (!(cond < kSingularCond))
    fail(ErrorCode::kSingular,
         "smoothing matrix I + E Lambda is numerically singular (condition number " +
             std::to_string(cond) + ")");
  return m.inverse();
}

}  // namespace

Mat2 covariance_rhs(const ModelMatrices& model, const Mat2& v, bool with_bob) {
  const Vec2 w_a = v * model.c_a.transpose() + model.s_a.transpose();
  Mat2 out = model.a_mat * v + v * model.a_mat.transpose() + model.q_mat -
             w_a * w_a.transpose() / model.r_a;
  if (with_bob) {
    const Vec2 w_b = v * model.c_b.transpose() + model.s_b.transpose();
    out -= w_b * w_b.transpose() / model.r_b;
  }
  return out;
}

Mat2 retro_rhs(const ModelMatrices& model, const Mat2& v_true, const Mat2& lambda) {
  const Mat2 ab = a_bar(model, v_true);
  return lambda * ab + ab.transpose() * lambda - lambda * q_bar(model, v_true) * lambda +
         model.c_a.transpose() * model.c_a / model.r_a;
}

Mat2 smoothed_cov(const Mat2& v_true, const Mat2& v_filt, const Mat2& lambda) {
  const Mat2 e = v_filt - v_true;
  return symmetrized(v_true + e * inverse_checked(Mat2::Identity() + lambda * e));
}

ModelMatrices alice_only(const ModelMatrices& model) {
  ModelMatrices m = model;
  m.c_b.setZero();
  m.s_b.setZero();
  m.d_b.setZero();
  return m;
}

RiccatiResiduals riccati_residuals(const ModelMatrices& full, const RiccatiSolution& sol) {
  const bool bob = sol.channels == Channels::kAliceAndBob;
  const ModelMatrices model = bob ? full : alice_only(full);
  RiccatiResiduals r;
  r.v_true = fro(covariance_rhs(model, sol.v_true, bob)) / cov_scale(model);
  r.v_filt = fro(covariance_rhs(model, sol.v_filt, false)) / cov_scale(model);
  r.lambda_retro = fro(retro_rhs(model, sol.v_true, sol.lambda_retro)) / retro_scale(model);
  return r;
}

RiccatiSolution solve_riccati(const ModelMatrices& full, Channels channels) {
  const bool bob = channels == Channels::kAliceAndBob;
  const ModelMatrices model = bob ? full : alice_only(full);
  RiccatiSolution sol;
  sol.channels = channels;
  sol.v_unc = unconditional_cov(model);

  const auto cov_eq = [&](bool with_bob, const char* name) {
    return find_steady_state(
        sol.v_unc, cov_scale(model),
        [&](const Mat2& v) { return covariance_rhs(model, v, with_bob); },
        [&](const Mat2& v) { return closed_loop(model, v, with_bob); }, name,
        sol.warnings);
  };

  const SteadyState vt = cov_eq(bob, "true-state covariance");
  sol.v_true = vt.value;
  sol.residuals.v_true = vt.residual;
  sol.iterations += vt.steps;

  if (bob) {
    const SteadyState vf = cov_eq(false, "filtered covariance");
    sol.v_filt = vf.value;
    sol.residuals.v_filt = vf.residual;
    sol.iterations += vf.steps;
  } else {
    sol.v_filt = sol.v_true;
    sol.residuals.v_filt = sol.residuals.v_true;
  }

  const Mat2 ab = a_bar(model, sol.v_true);
  const Mat2 qb = q_bar(model, sol.v_true);
  const Mat2 cc = model.c_a.transpose() * model.c_a / model.r_a;
  const SteadyState lr = find_steady_state(
      Mat2::Zero(), retro_scale(model),
      [&](const Mat2& l) { return l * ab + ab.transpose() * l - l * qb * l + cc; },
      [&](const Mat2& l) { return Mat2(ab.transpose() - l * qb); }, "retrofilter",
      sol.warnings);
  sol.lambda_retro = lr.value;
  sol.residuals.lambda_retro = lr.residual;
  sol.iterations += lr.steps;

  sol.v_smooth = smoothed_cov(sol.v_true, sol.v_filt, sol.lambda_retro);

  if (model.quantum) {
    const double floor = model.hbar * model.hbar / 4.0 * (1.0 - 1e-9);
    for (const Mat2* v : {&sol.v_true, &sol.v_filt, &sol.v_smooth})
      if (v->determinant() < floor)
        sol.warnings.push_back("covariance below the Heisenberg bound");
  }
  return sol;
}

const Mat2& RetroSeries::lambda_at(std::size_t k) const {
  const std::size_t from_end = z.size() - 1 - k;
  return from_end < lambda_tail.size() ? lambda_tail[from_end] : lambda_steady;
}

Estimator::Estimator(const ModelMatrices& model, const RiccatiSolution& sol, double dt)
    : model_(sol.channels == Channels::kAliceAndBob ? model : alice_only(model)),
      sol_(sol),
      dt_(dt) {
  require(std::isfinite(dt) && dt > 0.0, "dt must be positive");
  true_step_ = make_true_step(model_, sol.v_true, dt);
  k_a_ = gain_a(model_, sol.v_true);
  f_tilde_ = Mat2::Identity() + a_bar(model_, sol.v_true) * dt;
  q_bar_dt_ = q_bar(model_, sol.v_true) * dt;

  // Error covariance of a zero filtered mean about the true mean at t_0.
  fwd_p_.push_back(symmetrized(sol.v_unc - sol.v_true));
  bwd_lam_.push_back(Mat2::Zero());
}

void Estimator::extend_forward(std::size_t n) {
  const Row2& c = model_.c_a;
  const double r = model_.r_a;
  // P decays to zero when Alice alone pins the true state; measure its
  // change against the unconditional scale so the schedule still freezes.
  const double p_floor = std::max(max_abs(sol_.v_unc), 1e-300);
  while (!fwd_done_ && fwd_p_.size() <= n) {
    const Mat2 p = fwd_p_.back();
    const Vec2 fpc = f_tilde_ * p * c.transpose();
    const double cpc = c * p * c.transpose();
    const Vec2 gain = k_a_ + fpc / (r + dt_ * cpc);
    fwd_gamma_.push_back(Mat2::Identity() + (model_.a_mat - gain * c) * dt_);
    fwd_l_.push_back(gain * dt_);
    const double s = r * dt_ + dt_ * dt_ * cpc;
    Mat2 next = f_tilde_ * p * f_tilde_.transpose() + q_bar_dt_ -
                (fpc * dt_) * (fpc * dt_).transpose() / s;
    next = symmetrized(next);
    const double change = max_abs(next - p);
    fwd_p_.push_back(next);
    // Once frozen, the last gain pair applies for all later samples.
    if (change <= kScheduleTol * std::max(max_abs(p), p_floor) || change == 0.0)
      fwd_done_ = true;
  }
}

void Estimator::extend_backward(std::size_t n) {
  const Row2& c = model_.c_a;
  const double r = model_.r_a;
  const Mat2 cc_dt = c.transpose() * c * (dt_ / r);
  const Vec2 c_dt = c.transpose() * (dt_ / r);
  const double lam_floor = std::max(max_abs(sol_.lambda_retro), 1e-300);
  while (!bwd_done_ && bwd_lam_.size() <= n) {
    const Mat2 lam = bwd_lam_.back();
    const Mat2 psi = (Mat2::Identity() + lam * q_bar_dt_).inverse();
    const Mat2 lam_p = psi * lam;
    bwd_phi_.push_back(f_tilde_.transpose() * psi);
    bwd_beta_.push_back(c_dt - f_tilde_.transpose() * lam_p * k_a_ * dt_);
    const Mat2 next = symmetrized(f_tilde_.transpose() * lam_p * f_tilde_ + cc_dt);
    const double change = max_abs(next - lam);
    bwd_lam_.push_back(next);
    if (change <= kScheduleTol * std::max(max_abs(lam), lam_floor) || change == 0.0)
      bwd_done_ = true;
  }
}

void Estimator::prepare(std::size_t n) {
  extend_forward(n);
  extend_backward(n);
}

const Mat2& Estimator::filter_error_cov(std::size_t k) {
  extend_forward(k);
  return k < fwd_p_.size() ? fwd_p_[k] : fwd_p_.back();
}

const Mat2& Estimator::retro_information(std::size_t k, std::size_t n) {
  require(k <= n, "sample index beyond record end");
  const std::size_t j = n - k;
  extend_backward(j);
  return j < bwd_lam_.size() ? bwd_lam_[j] : bwd_lam_.back();
}

Mat2 Estimator::smoothed_cov_at(std::size_t k, std::size_t n) {
  const Mat2 p = filter_error_cov(k);
  const Mat2 lam = retro_information(k, n);
  return symmetrized(sol_.v_true + inverse_checked(Mat2::Identity() + p * lam) * p);
}

void Estimator::filter(const double* y_a, std::size_t n, Vec2* out) {
  extend_forward(n);
  const std::size_t head = std::min(n, fwd_gamma_.size() - (fwd_done_ ? 1 : 0));
  Vec2 x = Vec2::Zero();
  out[0] = x;
  std::size_t k = 0;
  for (; k < head; ++k) {
    x = fwd_gamma_[k] * x + fwd_l_[k] * y_a[k];
    out[k + 1] = x;
  }
  if (k < n) {
    const Mat2 g = fwd_gamma_.back();
    const Vec2 l = fwd_l_.back();
    for (; k < n; ++k) {
      x = g * x + l * y_a[k];
      out[k + 1] = x;
    }
  }
}

void Estimator::retrofilter(const double* y_a, std::size_t n, Vec2* z_out) {
  extend_backward(n);
  const std::size_t head = std::min(n, bwd_phi_.size() - (bwd_done_ ? 1 : 0));
  Vec2 z = Vec2::Zero();
  z_out[n] = z;
  std::size_t j = 0;
  for (; j < head; ++j) {
    const std::size_t k = n - 1 - j;
    z = bwd_phi_[j] * z + bwd_beta_[j] * y_a[k];
    z_out[k] = z;
  }
  if (j < n) {
    const Mat2 phi = bwd_phi_.back();
    const Vec2 beta = bwd_beta_.back();
    for (; j < n; ++j) {
      const std::size_t k = n - 1 - j;
      z = phi * z + beta * y_a[k];
      z_out[k] = z;
    }
  }
}

void Estimator::smooth(const Vec2* x_filt, const Vec2* z, std::size_t n, Vec2* out) {
  prepare(n);
  const Mat2 ident = Mat2::Identity();
  auto blend = [&](std::size_t k, const Mat2& p, const Mat2& lam) {
    const Mat2 m = inverse_checked(ident + p * lam);
    out[k] = m * (x_filt[k] + p * z[k]);
  };
  // Interior samples see both schedules frozen.
  const std::size_t lo = fwd_done_ ? fwd_p_.size() - 1 : n + 1;
  const std::size_t mb = bwd_lam_.size() - 1;
  const std::size_t hi = bwd_done_ && mb <= n ? n - mb + 1 : 0;
  const std::size_t a = std::min(lo, n + 1);
  const std::size_t b = std::max(a, std::min(hi, n + 1));
  std::size_t k = 0;
  for (; k < a; ++k) blend(k, filter_error_cov(k), retro_information(k, n));
  if (b > a) {
    const Mat2& p = fwd_p_.back();
    const Mat2 m = inverse_checked(ident + p * bwd_lam_.back());
    const Mat2 mp = m * p;
    for (; k < b; ++k) out[k] = m * x_filt[k] + mp * z[k];
  }
  for (; k <= n; ++k) blend(k, filter_error_cov(k), retro_information(k, n));
}

void Estimator::true_filter(const double* y_a, const double* y_b, std::size_t n,
                            Vec2* out) const {
  Vec2 x = Vec2::Zero();
  out[0] = x;
  for (std::size_t k = 0; k < n; ++k) {
    x = true_step_(x, y_a[k], y_b[k]);
    out[k + 1] = x;
  }
}

namespace {

void check_record(const MeasurementRecord& record, const Estimator& est) {
  validate(record);
  require(std::abs(record.dt - est.dt()) <= 1e-12 * est.dt(),
          "record dt does not match the estimator step");
}

StateTrajectory make_trajectory(Conditioning label, double dt, std::size_t n,
                                const Mat2& cov) {
  StateTrajectory t;
  t.label = label;
  t.dt = dt;
  t.cov = cov;
  t.means.resize(n + 1);
  return t;
}

void attach_filter_boundary(Estimator& est, StateTrajectory& t, std::size_t n) {
  const std::size_t w = std::min(est.forward_window(), n + 1);
  t.head_cov.reserve(w);
  for (std::size_t k = 0; k < w; ++k)
    t.head_cov.push_back(est.solution().v_true + est.filter_error_cov(k));
}

}  // namespace

StateTrajectory run_filter(const ModelMatrices& model, const MeasurementRecord& record,
                           const RiccatiSolution& sol) {
  Estimator est(model, sol, record.dt);
  check_record(record, est);
  const std::size_t n = record.size();
  StateTrajectory t = make_trajectory(Conditioning::kFiltered, record.dt, n, sol.v_filt);
  est.filter(record.y_a.data(), n, t.means.data());
  attach_filter_boundary(est, t, n);
  // Interior samples use the relaxed sampled-data covariance.
  t.cov = symmetrized(sol.v_true + est.filter_error_cov(n));
  return t;
}

StateTrajectory run_true_filter(const ModelMatrices& model, const MeasurementRecord& record,
                                const RiccatiSolution& sol) {
  Estimator est(model, sol, record.dt);
  check_record(record, est);
  require(record.has_hidden(), "true-state filter needs Bob's record");
  const std::size_t n = record.size();
  StateTrajectory t = make_trajectory(Conditioning::kTrue, record.dt, n, sol.v_true);
  est.true_filter(record.y_a.data(), record.y_b.data(), n, t.means.data());
  return t;
}

RetroSeries run_retrofilter(const ModelMatrices& model, const MeasurementRecord& record,
                            const RiccatiSolution& sol) {
  Estimator est(model, sol, record.dt);
  check_record(record, est);
  const std::size_t n = record.size();
  RetroSeries r;
  r.dt = record.dt;
  r.z.resize(n + 1);
  est.retrofilter(record.y_a.data(), n, r.z.data());
  r.window = std::min(est.backward_window(), n + 1);
  for (std::size_t j = 0; j < r.window; ++j)
    r.lambda_tail.push_back(est.retro_information(n - j, n));
  r.lambda_steady = est.backward_relaxed()
                        ? est.retro_information(0, est.backward_window())
                        : sol.lambda_retro;
  return r;
}

StateTrajectory smooth(const ModelMatrices& model, const StateTrajectory& filtered,
                       const RetroSeries& retro, const RiccatiSolution& sol) {
  require(filtered.label == Conditioning::kFiltered, "first argument must be filtered");
  require(filtered.size() == retro.z.size() && filtered.size() >= 2,
          "filtered and retrofiltered series must share timestamps");
  require(std::abs(filtered.dt - retro.dt) <= 1e-12 * filtered.dt,
          "filtered and retrofiltered series use different steps");
  Estimator est(model, sol, filtered.dt);
  const std::size_t n = filtered.size() - 1;
  StateTrajectory t = make_trajectory(Conditioning::kSmoothed, filtered.dt, n, sol.v_smooth);
  est.smooth(filtered.means.data(), retro.z.data(), n, t.means.data());
  {
    const Mat2 p = est.filter_error_cov(n);
    const Mat2 lam = est.retro_information(0, n);
    t.cov = symmetrized(sol.v_true + inverse_checked(Mat2::Identity() + p * lam) * p);
  }
  const std::size_t head = std::min(est.forward_window(), n + 1);
  for (std::size_t k = 0; k < head; ++k) t.head_cov.push_back(est.smoothed_cov_at(k, n));
  const std::size_t tail = std::min(est.backward_window(), n + 1);
  for (std::size_t j = 0; j < tail; ++j) t.tail_cov.push_back(est.smoothed_cov_at(n - j, n));
  return t;
}

SmootherOutput run_smoother(const ModelMatrices& model, const MeasurementRecord& record,
                            const RiccatiSolution& sol) {
  SmootherOutput out;
  out.filtered = run_filter(model, record, sol);
  out.retro = run_retrofilter(model, record, sol);
  out.smoothed = smooth(model, out.filtered, out.retro, sol);
  if (record.has_hidden()) out.true_ref = run_true_filter(model, record, sol);
  return out;
}

}  // namespace qsmooth
