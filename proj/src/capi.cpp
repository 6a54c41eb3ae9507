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

#include "qsmooth/qsmooth.h"

#include "error.hpp"
#include "estimation.hpp"
#include "io.hpp"
#include "metrics.hpp"
#include "sweep.hpp"
#include "system_model.hpp"
#include "trajectory_sim.hpp"

#include <algorithm>
#include <cstring>
#include <exception>
#include <fstream>
#include <memory>
#include <new>
#include <optional>
#include <string>

using namespace qsmooth;

struct qs_model {
  ModelMatrices matrices;
};

struct qs_record {
  MeasurementRecord record;
  std::optional<StateTrajectory> truth;
};

struct qs_estimate {
  SmootherOutput out;
  std::size_t head = 0;
  std::size_t tail = 0;
};

struct qs_sweep {
  SweepConfig config;
  SweepResult result;
};

namespace {

thread_local std::string last_error;

qs_status to_status(ErrorCode c) { return static_cast<qs_status>(static_cast<int>(c)); }

template <class F>
qs_status guarded(F&& body) {
  try {
    body();
    last_error.clear();
    return QS_OK;
  } catch (const Error& e) {
    last_error = e.what();
    return to_status(e.code());
  } catch (const std::bad_alloc&) {
    last_error = "out of memory";
    return QS_ERR_INTERNAL;
  } catch (const std::exception& e) {
    last_error = e.what();
    return QS_ERR_INTERNAL;
  }
}

void need(const void* p, const char* name) {
  if (!p) fail(ErrorCode::kInvalidArgument, std::string(name) + " must not be NULL");
}

SystemParams from_c(const qs_params& p) {
  SystemParams s;
  s.gamma = p.gamma;
  s.xi = p.xi;
  s.transmittance = p.transmittance;
  s.loss_a = p.loss_a;
  s.loss_b = p.loss_b;
  s.escape_eff = p.escape_eff;
  s.theta_a = deg_to_rad(p.theta_a_deg);
  s.theta_b = deg_to_rad(p.theta_b_deg);
  s.hbar = p.hbar;
  return s;
}

qs_params to_c(const SystemParams& s) {
  return {s.gamma,      s.xi,   s.transmittance, s.loss_a, s.loss_b, s.escape_eff,
          rad_to_deg(s.theta_a), rad_to_deg(s.theta_b), s.hbar};
}

void put(double* dst, const Mat2& m) {
  dst[0] = m(0, 0);
  dst[1] = m(0, 1);
  dst[2] = m(1, 0);
  dst[3] = m(1, 1);
}

Mat2 get(const double* src) {
  Mat2 m;
  m << src[0], src[1], src[2], src[3];
  return m;
}

template <class M>
void put_all(double* dst, const M& m) {
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) *dst++ = m(r, c);
}

qs_state_metrics to_c(const StateMetrics& s) {
  return {s.purity, s.trsd, s.squeezing.squeeze, s.squeezing.antisqueeze,
          s.squeezing.squeeze_db, s.squeezing.antisqueeze_db};
}

qs_metrics to_c(const MetricsReport& r) {
  return {to_c(r.true_state), to_c(r.filtered), to_c(r.smoothed), r.recovery.purity,
          r.recovery.trsd,    r.recovery.squeezing, r.recovery.antisqueezing};
}

qs_riccati to_c(const RiccatiSolution& s) {
  qs_riccati o{};
  put(o.v_true, s.v_true);
  put(o.v_filt, s.v_filt);
  put(o.lambda_retro, s.lambda_retro);
  put(o.v_smooth, s.v_smooth);
  put(o.v_unc, s.v_unc);
  o.residual_true = s.residuals.v_true;
  o.residual_filt = s.residuals.v_filt;
  o.residual_retro = s.residuals.lambda_retro;
  o.iterations = s.iterations;
  o.warnings = static_cast<int>(s.warnings.size());
  return o;
}

qs_mc_metrics to_c(const MonteCarloMetrics& m) {
  qs_mc_metrics o{};
  o.records = m.records;
  put(o.v_filt, m.v_filt);
  put(o.v_filt_stderr, m.v_filt_stderr);
  put(o.v_smooth, m.v_smooth);
  put(o.v_smooth_stderr, m.v_smooth_stderr);
  put(o.v_true, m.v_true);
  put(o.v_true_stderr, m.v_true_stderr);
  put(o.smoothed_mean_cov, m.smoothed_mean_cov);
  put(o.smoothed_mean_cov_stderr, m.smoothed_mean_cov_stderr);
  o.mse_filt = m.mse_filt.value;
  o.mse_filt_stderr = m.mse_filt.std_error;
  o.mse_smooth = m.mse_smooth.value;
  o.mse_smooth_stderr = m.mse_smooth.std_error;
  o.trsd_filt = m.trsd_filt.value;
  o.trsd_filt_stderr = m.trsd_filt.std_error;
  o.trsd_smooth = m.trsd_smooth.value;
  o.trsd_smooth_stderr = m.trsd_smooth.std_error;
  o.purity_filt = m.filtered.purity;
  o.purity_smooth = m.smoothed.purity;
  o.recovery_p = m.recovery.purity;
  o.recovery_d = m.recovery.trsd;
  o.recovery_s = m.recovery.squeezing;
  o.recovery_a = m.recovery.antisqueezing;
  return o;
}

MonteCarloConfig from_c(const qs_mc_config& c) {
  MonteCarloConfig m;
  m.records = c.records;
  m.duration = c.duration;
  m.dt = c.dt > 0.0 ? c.dt : 0.0;
  m.seed = c.seed;
  m.burn_in = c.burn_in;
  return m;
}

char* dup_string(const std::string& s) {
  char* out = new char[s.size() + 1];
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

void write_file(const std::string& path, const std::string& body) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::kIo, "cannot open '" + path + "' for writing");
  out << body;
  if (!out) fail(ErrorCode::kIo, "write to '" + path + "' failed");
}

}  // namespace

extern "C" {

const char* qs_version(void) { return kVersion; }

const char* qs_last_error(void) { return last_error.c_str(); }

const char* qs_status_string(qs_status s) {
  switch (s) {
    case QS_OK: return "ok";
    case QS_ERR_INVALID_ARGUMENT: return "invalid argument";
    case QS_ERR_NOT_CONVERGED: return "not converged";
    case QS_ERR_SINGULAR: return "singular matrix";
    case QS_ERR_IO: return "i/o error";
    case QS_ERR_FORMAT: return "format error";
    case QS_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

void qs_string_free(char* s) { delete[] s; }

void qs_params_default(qs_params* out) {
  if (out) *out = to_c(SystemParams{});
}

qs_status qs_params_paper(qs_params* out) {
  return guarded([&] {
    need(out, "out");
    *out = to_c(paper_defaults());
  });
}

qs_status qs_params_load(const char* path, qs_params* inout) {
  return guarded([&] {
    need(path, "path");
    need(inout, "params");
    *inout = to_c(load_params(path, from_c(*inout)));
  });
}

qs_status qs_params_set(qs_params* inout, const char* key, const char* value) {
  return guarded([&] {
    need(inout, "params");
    need(key, "key");
    need(value, "value");
    SystemParams p = from_c(*inout);
    apply_param(p, key, value);
    *inout = to_c(p);
  });
}

qs_status qs_params_validate(const qs_params* params) {
  return guarded([&] {
    need(params, "params");
    validate(from_c(*params));
  });
}

qs_status qs_efficiencies(const qs_params* params, double* eta_a, double* eta_b) {
  return guarded([&] {
    need(params, "params");
    const Efficiencies e = efficiencies(from_c(*params));
    if (eta_a) *eta_a = e.eta_a;
    if (eta_b) *eta_b = e.eta_b;
  });
}

qs_status qs_model_create(const qs_params* params, qs_model** out) {
  return guarded([&] {
    need(params, "params");
    need(out, "out");
    *out = nullptr;
    *out = new qs_model{build_model(from_c(*params))};
  });
}

qs_status qs_model_create_effective(double gamma, double xi, double eta_a, double eta_b,
                                    double theta_a_deg, double theta_b_deg, double hbar,
                                    qs_model** out) {
  return guarded([&] {
    need(out, "out");
    *out = nullptr;
    EffectiveParams p;
    p.gamma = gamma;
    p.xi = xi;
    p.eta_a = eta_a;
    p.eta_b = eta_b;
    p.theta_a = deg_to_rad(theta_a_deg);
    p.theta_b = deg_to_rad(theta_b_deg);
    p.hbar = hbar;
    *out = new qs_model{build_model(p)};
  });
}

void qs_model_destroy(qs_model* model) { delete model; }

qs_status qs_model_matrices(const qs_model* model, qs_matrices* out) {
  return guarded([&] {
    need(model, "model");
    need(out, "out");
    const ModelMatrices& m = model->matrices;
    put(out->a, m.a_mat);
    put_all(out->b, m.b_mat);
    put_all(out->c_a, m.c_a);
    put_all(out->c_b, m.c_b);
    put_all(out->d_a, m.d_a);
    put_all(out->d_b, m.d_b);
    put(out->q, m.q_mat);
    out->r_a = m.r_a;
    out->r_b = m.r_b;
    put_all(out->s_a, m.s_a);
    put_all(out->s_b, m.s_b);
    out->hbar = m.hbar;
  });
}

qs_status qs_model_default_dt(const qs_model* model, double* dt) {
  return guarded([&] {
    need(model, "model");
    need(dt, "dt");
    *dt = default_dt(model->matrices);
  });
}

qs_status qs_unconditional_cov(const qs_model* model, double v[4]) {
  return guarded([&] {
    need(model, "model");
    need(v, "v");
    put(v, unconditional_cov(model->matrices));
  });
}

qs_status qs_solve_riccati(const qs_model* model, int alice_only, qs_riccati* out) {
  return guarded([&] {
    need(model, "model");
    need(out, "out");
    *out = to_c(solve_riccati(model->matrices,
                              alice_only ? Channels::kAliceOnly : Channels::kAliceAndBob));
  });
}

qs_status qs_purity(const double v[4], double hbar, double* out) {
  return guarded([&] {
    need(v, "v");
    need(out, "out");
    *out = purity(get(v), hbar);
  });
}

qs_status qs_squeezing(const double v[4], double hbar, double* squeeze, double* antisqueeze) {
  return guarded([&] {
    need(v, "v");
    const Squeezing s = squeezing(get(v), hbar);
    if (squeeze) *squeeze = s.squeeze;
    if (antisqueeze) *antisqueeze = s.antisqueeze;
  });
}

qs_status qs_theory_metrics(const qs_model* model, qs_metrics* out) {
  return guarded([&] {
    need(model, "model");
    need(out, "out");
    *out = to_c(theory_report(solve_riccati(model->matrices), model->matrices.hbar));
  });
}

qs_status qs_simulate(const qs_model* model, double duration, double dt, uint64_t seed,
                      long burn_in, qs_record** out) {
  return guarded([&] {
    need(model, "model");
    need(out, "out");
    *out = nullptr;
    const RiccatiSolution sol = solve_riccati(model->matrices);
    SimulationOptions opt;
    opt.duration = duration;
    opt.dt = dt > 0.0 ? dt : 0.0;
    opt.seed = seed;
    opt.burn_in = burn_in;
    auto [truth, record] = simulate_true(model->matrices, sol.v_true, opt);
    *out = new qs_record{std::move(record), std::move(truth)};
  });
}

qs_status qs_record_create(double dt, const double* y_a, const double* y_b, size_t n,
                           uint64_t seed, size_t burn_in, qs_record** out) {
  return guarded([&] {
    need(y_a, "y_a");
    need(out, "out");
    *out = nullptr;
    MeasurementRecord r;
    r.dt = dt;
    r.y_a.assign(y_a, y_a + n);
    if (y_b) r.y_b.assign(y_b, y_b + n);
    r.seed = seed;
    r.burn_in = burn_in;
    validate(r);
    *out = new qs_record{std::move(r), std::nullopt};
  });
}

qs_status qs_record_load(const char* path, qs_record** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    *out = nullptr;
    *out = new qs_record{load_record(path), std::nullopt};
  });
}

qs_status qs_record_save(const qs_record* record, const char* path) {
  return guarded([&] {
    need(record, "record");
    need(path, "path");
    save_record(path, record->record);
  });
}

void qs_record_destroy(qs_record* record) { delete record; }

size_t qs_record_length(const qs_record* record) { return record ? record->record.size() : 0; }

double qs_record_dt(const qs_record* record) { return record ? record->record.dt : 0.0; }

int qs_record_has_hidden(const qs_record* record) {
  return record && record->record.has_hidden() ? 1 : 0;
}

qs_status qs_record_samples(const qs_record* record, double* y_a, double* y_b) {
  return guarded([&] {
    need(record, "record");
    const MeasurementRecord& r = record->record;
    if (y_a) std::copy(r.y_a.begin(), r.y_a.end(), y_a);
    if (y_b && r.has_hidden()) std::copy(r.y_b.begin(), r.y_b.end(), y_b);
  });
}

qs_status qs_record_true_means(const qs_record* record, double* xp) {
  return guarded([&] {
    need(record, "record");
    need(xp, "xp");
    if (!record->truth) fail(ErrorCode::kInvalidArgument, "record carries no simulated truth");
    for (const Vec2& v : record->truth->means) {
      *xp++ = v(0);
      *xp++ = v(1);
    }
  });
}

qs_status qs_estimate_run(const qs_model* model, const qs_record* record, qs_estimate** out) {
  return guarded([&] {
    need(model, "model");
    need(record, "record");
    need(out, "out");
    *out = nullptr;
    const RiccatiSolution sol = solve_riccati(model->matrices);
    auto est = std::make_unique<qs_estimate>();
    est->out = run_smoother(model->matrices, record->record, sol);
    est->head = est->out.smoothed.head_cov.size();
    est->tail = est->out.smoothed.tail_cov.size();
    *out = est.release();
  });
}

void qs_estimate_destroy(qs_estimate* est) { delete est; }

size_t qs_estimate_points(const qs_estimate* est) {
  return est ? est->out.filtered.size() : 0;
}

qs_status qs_estimate_series(const qs_estimate* est, qs_series which, double* xp) {
  return guarded([&] {
    need(est, "estimate");
    need(xp, "xp");
    const std::vector<Vec2>* src = nullptr;
    switch (which) {
      case QS_SERIES_TRUE:
        if (!est->out.true_ref)
          fail(ErrorCode::kInvalidArgument, "record has no hidden channel");
        src = &est->out.true_ref->means;
        break;
      case QS_SERIES_FILTERED: src = &est->out.filtered.means; break;
      case QS_SERIES_SMOOTHED: src = &est->out.smoothed.means; break;
      case QS_SERIES_RETRO_Z: src = &est->out.retro.z; break;
      default: fail(ErrorCode::kInvalidArgument, "unknown series");
    }
    for (const Vec2& v : *src) {
      *xp++ = v(0);
      *xp++ = v(1);
    }
  });
}

qs_status qs_estimate_windows(const qs_estimate* est, size_t* head, size_t* tail) {
  return guarded([&] {
    need(est, "estimate");
    if (head) *head = est->head;
    if (tail) *tail = est->tail;
  });
}

qs_status qs_estimate_save_csv(const qs_estimate* est, const char* path) {
  return guarded([&] {
    need(est, "estimate");
    need(path, "path");
    std::ofstream out(path);
    if (!out) fail(ErrorCode::kIo, std::string("cannot open '") + path + "' for writing");
    write_trajectories(out, est->out.true_ref ? &*est->out.true_ref : nullptr,
                       est->out.filtered, est->out.smoothed);
    if (!out) fail(ErrorCode::kIo, std::string("write to '") + path + "' failed");
  });
}

void qs_mc_config_default(qs_mc_config* out) {
  if (!out) return;
  const MonteCarloConfig m;
  *out = {m.records, m.duration, m.dt, m.seed, m.burn_in};
}

qs_status qs_run_point(const qs_params* params, const qs_mc_config* mc, qs_riccati* sol,
                       qs_metrics* theory, qs_mc_metrics* mc_out) {
  return guarded([&] {
    need(params, "params");
    RiccatiSolution s;
    const MetricsReport r =
        run_point(from_c(*params), mc ? Mode::kMonteCarlo : Mode::kTheory,
                  mc ? from_c(*mc) : MonteCarloConfig{}, &s);
    if (sol) *sol = to_c(s);
    if (theory) *theory = to_c(r);
    if (mc_out && r.mc) *mc_out = to_c(*r.mc);
  });
}

qs_status qs_point_json(const qs_params* params, const qs_mc_config* mc, char** json) {
  return guarded([&] {
    need(params, "params");
    need(json, "json");
    *json = nullptr;
    const SystemParams p = from_c(*params);
    const Mode mode = mc ? Mode::kMonteCarlo : Mode::kTheory;
    const MonteCarloConfig cfg = mc ? from_c(*mc) : MonteCarloConfig{};
    RiccatiSolution s;
    const MetricsReport r = run_point(p, mode, cfg, &s);
    *json = dup_string(point_json(p, s, r, mode, cfg));
  });
}

void qs_sweep_config_default(qs_sweep_config* out) {
  if (!out) return;
  *out = qs_sweep_config{};
  out->base = to_c(paper_defaults());
  out->kind = QS_SWEEP_ANGLES;
  out->theta_a_lo_deg = out->theta_b_lo_deg = 0.0;
  out->theta_a_hi_deg = out->theta_b_hi_deg = 180.0;
  out->theta_a_step_deg = out->theta_b_step_deg = 1.0;
  qs_mc_config_default(&out->mc);
  out->threads = 1;
}

qs_status qs_sweep_run(const qs_sweep_config* config, qs_sweep** out) {
  return guarded([&] {
    need(config, "config");
    need(out, "out");
    *out = nullptr;
    auto sweep = std::make_unique<qs_sweep>();
    SweepConfig& c = sweep->config;
    c.base = from_c(config->base);
    switch (config->kind) {
      case QS_SWEEP_ETA: c.kind = SweepKind::kEta; break;
      case QS_SWEEP_ANGLES: c.kind = SweepKind::kAngles; break;
      case QS_SWEEP_TRUE_SQUEEZE: c.kind = SweepKind::kTrueSqueeze; break;
      default: fail(ErrorCode::kInvalidArgument, "unknown sweep kind");
    }
    if (config->n_transmittances) {
      need(config->transmittances, "transmittances");
      c.transmittances.assign(config->transmittances,
                              config->transmittances + config->n_transmittances);
    }
    c.theta_a = {config->theta_a_lo_deg, config->theta_a_hi_deg, config->theta_a_step_deg};
    c.theta_b = {config->theta_b_lo_deg, config->theta_b_hi_deg, config->theta_b_step_deg};
    c.mode = config->monte_carlo ? Mode::kMonteCarlo : Mode::kTheory;
    c.mc = from_c(config->mc);
    c.threads = config->threads;
    sweep->result =
        c.kind == SweepKind::kTrueSqueeze ? true_state_squeezing_sweep(c) : run_sweep(c);
    *out = sweep.release();
  });
}

void qs_sweep_destroy(qs_sweep* sweep) { delete sweep; }

size_t qs_sweep_cells(const qs_sweep* sweep) { return sweep ? sweep->result.cells.size() : 0; }

size_t qs_sweep_failed(const qs_sweep* sweep) { return sweep ? sweep->result.failed : 0; }

qs_status qs_sweep_cell_get(const qs_sweep* sweep, size_t index, qs_sweep_cell* out) {
  return guarded([&] {
    need(sweep, "sweep");
    need(out, "out");
    if (index >= sweep->result.cells.size())
      fail(ErrorCode::kInvalidArgument, "cell index out of range");
    const CellResult& c = sweep->result.cells[index];
    *out = qs_sweep_cell{};
    out->theta_a_deg = c.theta_a_deg;
    out->theta_b_deg = c.theta_b_deg;
    out->transmittance = c.params.transmittance;
    out->eta_a = c.eta_a;
    out->eta_b = c.eta_b;
    out->ok = c.ok ? 1 : 0;
    if (c.ok) out->metrics = to_c(c.report);
  });
}

qs_status qs_sweep_optimal(const qs_sweep* sweep, const char* metric, double* theta_a_deg,
                           double* theta_b_deg, double* value, size_t cap, size_t* count) {
  return guarded([&] {
    need(sweep, "sweep");
    need(metric, "metric");
    for (const OptimalCurve& c : sweep->result.curves) {
      if (c.metric != metric) continue;
      const std::size_t n = c.theta_a_deg.size();
      if (count) *count = n;
      for (std::size_t i = 0; i < n && i < cap; ++i) {
        if (theta_a_deg) theta_a_deg[i] = c.theta_a_deg[i];
        if (theta_b_deg) theta_b_deg[i] = c.theta_b_deg[i];
        if (value) value[i] = c.value[i];
      }
      return;
    }
    fail(ErrorCode::kInvalidArgument, std::string("no optimal curve named '") + metric + "'");
  });
}

qs_status qs_sweep_write(const qs_sweep* sweep, const char* csv_path, const char* optimal_path,
                         const char* json_path, const char* command) {
  return guarded([&] {
    need(sweep, "sweep");
    std::vector<std::string> outputs;
    if (csv_path) {
      std::ofstream out(csv_path);
      if (!out) fail(ErrorCode::kIo, std::string("cannot open '") + csv_path + "' for writing");
      write_sweep_csv(out, sweep->result);
      outputs.emplace_back(csv_path);
    }
    if (optimal_path && !sweep->result.curves.empty()) {
      std::ofstream out(optimal_path);
      if (!out)
        fail(ErrorCode::kIo, std::string("cannot open '") + optimal_path + "' for writing");
      write_optimal_csv(out, sweep->result);
      outputs.emplace_back(optimal_path);
    }
    if (json_path)
      write_file(json_path,
                 sweep_json(sweep->result, sweep->config, command ? command : "", outputs));
  });
}

}  // extern "C"
