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

#include "sweep.hpp"

#include "error.hpp"
#include "trajectory_sim.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <map>
#include <mutex>
#include <numeric>
#include <thread>

namespace qsmooth {
namespace {

std::string describe(const SystemParams& p) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "cell (theta_a=%.6g deg, theta_b=%.6g deg, T=%.6g)",
                rad_to_deg(p.theta_a), rad_to_deg(p.theta_b), p.transmittance);
  return buf;
}

std::size_t resolve_threads(unsigned requested) {
  if (requested != 0) return requested;
  return std::max(1u, std::thread::hardware_concurrency());
}

double gamma_of(const ModelMatrices& model) { return -0.5 * model.a_mat.trace(); }

void check_axis(const AngleAxis& a, const char* name) {
  const std::string n(name);
  require(std::isfinite(a.step_deg) && a.step_deg > 0.0, n + " step must be positive");
  require(a.lo_deg >= 0.0 && a.hi_deg <= 180.0 && a.lo_deg <= a.hi_deg,
          n + " range must lie within [0, 180] degrees");
}

}  // namespace

std::vector<double> AngleAxis::values() const {
  std::vector<double> out;
  const auto count = static_cast<long>(std::floor((hi_deg - lo_deg) / step_deg + 1e-9));
  for (long i = 0; i <= count; ++i) out.push_back(lo_deg + static_cast<double>(i) * step_deg);
  return out;
}

void validate(const SweepConfig& c) {
  validate(c.base);
  if (c.kind == SweepKind::kEta) {
    require(!c.transmittances.empty(), "efficiency sweep needs at least one transmittance");
    for (double t : c.transmittances)
      require(std::isfinite(t) && t >= 0.0 && t <= 1.0, "transmittance must lie in [0, 1]");
  } else {
    check_axis(c.theta_a, "theta_a");
    check_axis(c.theta_b, "theta_b");
  }
  if (c.mode == Mode::kMonteCarlo) {
    require(c.mc.records >= 1, "Monte-Carlo needs at least one record");
    require(std::isfinite(c.mc.duration) && c.mc.duration > 0.0,
            "record duration must be positive");
    require(std::isfinite(c.mc.dt) && c.mc.dt >= 0.0, "dt must be nonnegative");
  }
  if (!c.evaluation_order.empty()) {
    std::vector<std::size_t> sorted = c.evaluation_order;
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t i = 0; i < sorted.size(); ++i)
      require(sorted[i] == i, "evaluation_order must be a permutation of cell indices");
  }
}

std::uint64_t cell_record_seed(std::uint64_t base, const SystemParams& p,
                               std::size_t record) {
  const std::uint64_t cell =
      Rng::derive(std::bit_cast<std::uint64_t>(p.theta_a),
                  std::bit_cast<std::uint64_t>(p.theta_b),
                  std::bit_cast<std::uint64_t>(p.transmittance),
                  std::bit_cast<std::uint64_t>(p.xi));
  return Rng::derive(base, cell, record);
}

MonteCarloMetrics run_monte_carlo(const ModelMatrices& model, const RiccatiSolution& sol,
                                  const SystemParams& params, const MonteCarloConfig& mc) {
  const double dt = mc.dt > 0.0 ? mc.dt : default_dt(model);
  require(dt * fastest_rate(model) <= 0.1, "dt too large for the drift");
  const auto n = static_cast<std::size_t>(std::llround(mc.duration / dt));
  require(n >= 2, "record shorter than two samples");
  const std::size_t burn_in =
      mc.burn_in >= 0 ? static_cast<std::size_t>(mc.burn_in) : default_burn_in(model, dt);
  const std::size_t edge = samples_for(20.0 / gamma_of(model), dt);
  const SampleWindow window = stationary_window(n + 1, burn_in, edge);
  require(window.size() > 0, "record too short for the burn-in and boundary exclusions");

  Estimator est(model, sol, dt);
  est.prepare(n);
  const TrueStep step = make_true_step(model, sol.v_true, dt);
  std::vector<double> y_a(n), y_b(n);
  std::vector<Vec2> x_t(n + 1), x_f(n + 1), z(n + 1), x_s(n + 1);
  MonteCarloAccumulator acc(sol, model.hbar);
  for (std::size_t r = 0; r < mc.records; ++r) {
    simulate_into(step, model.r_a, model.r_b, n, cell_record_seed(mc.seed, params, r),
                  Vec2::Zero(), x_t.data(), y_a.data(), y_b.data());
    est.filter(y_a.data(), n, x_f.data());
    est.retrofilter(y_a.data(), n, z.data());
    est.smooth(x_f.data(), z.data(), n, x_s.data());
    acc.add_record(x_t.data(), x_f.data(), x_s.data(), window);
  }
  return acc.result();
}

MetricsReport run_point(const SystemParams& params, Mode mode, const MonteCarloConfig& mc,
                        RiccatiSolution* sol_out) {
  try {
    const ModelMatrices model = build_model(params);
    RiccatiSolution sol = solve_riccati(model);
    MetricsReport report = theory_report(sol, params.hbar);
    if (mode == Mode::kMonteCarlo) report.mc = run_monte_carlo(model, sol, params, mc);
    if (sol_out) *sol_out = std::move(sol);
    return report;
  } catch (const Error& e) {
    throw Error(e.code(), describe(params) + ": " + e.what());
  }
}

std::vector<CellSpec> expand_cells(const SweepConfig& c) {
  std::vector<CellSpec> cells;
  if (c.kind == SweepKind::kEta) {
    for (double t : c.transmittances) {
      SystemParams p = c.base;
      p.transmittance = t;
      cells.push_back({p, rad_to_deg(p.theta_a), rad_to_deg(p.theta_b)});
    }
    return cells;
  }
  const std::vector<double> as = c.theta_a.values(), bs = c.theta_b.values();
  cells.reserve(as.size() * bs.size());
  for (double a : as)
    for (double b : bs) {
      SystemParams p = c.base;
      p.theta_a = deg_to_rad(a);
      p.theta_b = deg_to_rad(b);
      cells.push_back({p, a, b});
    }
  return cells;
}

namespace {

std::vector<std::size_t> order_for(const SweepConfig& c, std::size_t n) {
  if (!c.evaluation_order.empty()) {
    require(c.evaluation_order.size() == n, "evaluation_order length must match the cell count");
    return c.evaluation_order;
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  return order;
}

SweepResult evaluate(const SweepConfig& config, bool true_only) {
  validate(config);
  const auto start = std::chrono::steady_clock::now();
  const std::vector<CellSpec> params = expand_cells(config);
  SweepResult result;
  result.kind = config.kind;
  result.mode = true_only ? Mode::kTheory : config.mode;
  result.cells.resize(params.size());
  result.provenance.seed = config.mc.seed;

  auto run_cell = [&](std::size_t idx) {
    CellResult& cell = result.cells[idx];
    cell.index = idx;
    cell.params = params[idx].params;
    cell.theta_a_deg = params[idx].theta_a_deg;
    cell.theta_b_deg = params[idx].theta_b_deg;
    try {
      const Efficiencies eff = efficiencies(cell.params);
      cell.eta_a = eff.eta_a;
      cell.eta_b = eff.eta_b;
      if (true_only) {
        const ModelMatrices model = build_model(cell.params);
        cell.sol = solve_riccati(model);
        cell.report.hbar = cell.params.hbar;
        cell.report.true_state = state_metrics(cell.sol.v_true, cell.sol.v_true, cell.params.hbar);
      } else {
        cell.report = run_point(cell.params, config.mode, config.mc, &cell.sol);
      }
      cell.ok = true;
    } catch (const Error& e) {
      cell.ok = false;
      cell.error = e.what();
      if (cell.error.rfind("cell (", 0) != 0) cell.error = describe(cell.params) + ": " + cell.error;
    }
  };

  const std::vector<std::size_t> order = order_for(config, params.size());
  const std::size_t workers =
      std::min<std::size_t>(resolve_threads(config.threads), std::max<std::size_t>(order.size(), 1));
  if (workers <= 1) {
    for (std::size_t idx : order) run_cell(idx);
  } else {
    // Each worker claims the next position in the evaluation order and writes
    // only its own cell, so the result does not depend on scheduling.
    std::atomic<std::size_t> next{0};
    std::mutex fault_mutex;
    std::exception_ptr fault;
    auto work = [&] {
      for (std::size_t i = next++; i < order.size(); i = next++) {
        try {
          run_cell(order[i]);
        } catch (...) {
          std::lock_guard<std::mutex> lock(fault_mutex);
          if (!fault) fault = std::current_exception();
          next = order.size();
        }
      }
    };
    std::vector<std::thread> pool;
    pool.reserve(workers - 1);
    for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(work);
    work();
    for (std::thread& t : pool) t.join();
    if (fault) std::rethrow_exception(fault);
  }
  for (const CellResult& c : result.cells)
    if (!c.ok) ++result.failed;

  if (config.mode == Mode::kMonteCarlo && !true_only && !params.empty()) {
    const ModelMatrices model = build_model(config.base);
    result.provenance.dt = config.mc.dt > 0.0 ? config.mc.dt : default_dt(model);
  }

  if (config.kind != SweepKind::kEta) {
    auto* log = &result.tie_log;
    if (true_only) {
      result.curves.push_back(optimal_curve(
          result, "squeeze_t", false,
          [](const CellResult& c) { return c.report.true_state.squeezing.squeeze; }, log));
    } else {
      result.curves.push_back(optimal_curve(
          result, "recovery_p", true, [](const CellResult& c) { return c.report.recovery.purity; },
          log));
      result.curves.push_back(optimal_curve(
          result, "recovery_d", true, [](const CellResult& c) { return c.report.recovery.trsd; },
          log));
      result.curves.push_back(optimal_curve(
          result, "recovery_s", true,
          [](const CellResult& c) { return c.report.recovery.squeezing; }, log));
      result.curves.push_back(optimal_curve(
          result, "recovery_a", true,
          [](const CellResult& c) { return c.report.recovery.antisqueezing; }, log));
    }
  }
  result.provenance.wall_time_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

}  // namespace

SweepResult run_sweep(const SweepConfig& config) { return evaluate(config, false); }

SweepResult true_state_squeezing_sweep(const SweepConfig& config) {
  SweepConfig c = config;
  c.kind = SweepKind::kTrueSqueeze;
  c.mode = Mode::kTheory;
  return evaluate(c, true);
}

OptimalCurve optimal_curve(const SweepResult& result, const std::string& metric,
                           bool maximize, const std::function<double(const CellResult&)>& value,
                           std::vector<std::string>* log) {
  OptimalCurve curve;
  curve.metric = metric;
  curve.maximize = maximize;
  // Group by theta_A in ascending order; cells are scanned in theta_B order.
  std::map<double, std::vector<const CellResult*>> rows;
  for (const CellResult& c : result.cells)
    if (c.ok) rows[c.theta_a_deg].push_back(&c);
  for (auto& [theta_a, row] : rows) {
    std::sort(row.begin(), row.end(), [](const CellResult* x, const CellResult* y) {
      return x->theta_b_deg < y->theta_b_deg;
    });
    const CellResult* best = nullptr;
    double best_v = 0.0;
    for (const CellResult* c : row) {
      const double v = value(*c);
      if (!std::isfinite(v)) continue;
      if (!best || (maximize ? v > best_v : v < best_v)) {
        best = c;
        best_v = v;
      }
    }
    if (!best) continue;
    const double tol = 1e-12 * std::max(1.0, std::abs(best_v));
    std::vector<double> tied;
    for (const CellResult* c : row)
      if (std::abs(value(*c) - best_v) <= tol) tied.push_back(c->theta_b_deg);
    const bool tie = tied.size() > 1;
    if (tie && log) {
      char buf[64];
      std::snprintf(buf, sizeof buf, "%.10g", theta_a);
      std::string msg = metric + " at theta_a=" + buf + " deg: tie between theta_b =";
      for (double t : tied) {
        std::snprintf(buf, sizeof buf, " %.10g", t);
        msg += buf;
      }
      msg += "; kept the smallest";
      log->push_back(msg);
    }
    curve.theta_a_deg.push_back(theta_a);
    curve.theta_b_deg.push_back(tied.empty() ? best->theta_b_deg : tied.front());
    curve.value.push_back(best_v);
    curve.tie.push_back(tie);
  }
  return curve;
}

}  // namespace qsmooth
