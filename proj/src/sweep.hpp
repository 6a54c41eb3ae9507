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

// Single points, efficiency sweeps and angle grids, with optional
// Monte-Carlo estimates per cell.

#ifndef QSMOOTH_SWEEP_HPP
#define QSMOOTH_SWEEP_HPP

#include "estimation.hpp"
#include "metrics.hpp"
#include "system_model.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace qsmooth {

inline constexpr const char* kVersion = "0.1.0";

enum class Mode { kTheory, kMonteCarlo };

struct MonteCarloConfig {
  std::size_t records = 200;
  double duration = 50e-6;  // seconds per record
  double dt = 0.0;          // 0 selects default_dt
  std::uint64_t seed = 1;
  long burn_in = -1;        // samples; negative selects 10 / gamma
};

/// Degrees on [lo, hi] in steps of `step`; hi is included when it lies on the
/// lattice.
struct AngleAxis {
  double lo_deg = 0.0;
  double hi_deg = 180.0;
  double step_deg = 1.0;
  std::vector<double> values() const;
};

enum class SweepKind { kEta, kAngles, kTrueSqueeze };

struct SweepConfig {
  SystemParams base;
  SweepKind kind = SweepKind::kAngles;
  std::vector<double> transmittances;  // kEta axis
  AngleAxis theta_a;                   // kAngles / kTrueSqueeze axes
  AngleAxis theta_b;
  Mode mode = Mode::kTheory;
  MonteCarloConfig mc;
  // Optional permutation of cell indices; results are stored by cell index
  // whatever the evaluation order.
  std::vector<std::size_t> evaluation_order;
  // Worker threads; 0 selects the hardware concurrency.
  unsigned threads = 1;
};

void validate(const SweepConfig& config);

struct CellSpec {
  SystemParams params;
  double theta_a_deg = 0.0;  // exact grid values (params hold radians)
  double theta_b_deg = 0.0;
};

struct CellResult {
  std::size_t index = 0;
  SystemParams params;
  double theta_a_deg = 0.0;
  double theta_b_deg = 0.0;
  double eta_a = 0.0;
  double eta_b = 0.0;
  bool ok = false;
  std::string error;
  RiccatiSolution sol;
  MetricsReport report;
};

/// theta_B maximizing (or minimizing) a metric for each theta_A.
struct OptimalCurve {
  std::string metric;
  bool maximize = true;
  std::vector<double> theta_a_deg;
  std::vector<double> theta_b_deg;
  std::vector<double> value;
  std::vector<bool> tie;  // several theta_B shared the optimum; smallest kept
};

struct Provenance {
  std::string version = kVersion;
  std::uint64_t seed = 0;
  double dt = 0.0;
  double wall_time_s = 0.0;
};

struct SweepResult {
  SweepKind kind = SweepKind::kAngles;
  Mode mode = Mode::kTheory;
  std::vector<CellResult> cells;
  std::vector<OptimalCurve> curves;
  std::vector<std::string> tie_log;
  std::size_t failed = 0;
  Provenance provenance;
};

/// Seed for record `record` of the cell at the given coordinates. Depends on
/// the coordinates only, never on grid layout or evaluation order.
std::uint64_t cell_record_seed(std::uint64_t base, const SystemParams& params,
                               std::size_t record);

/// Theory metrics always; Monte-Carlo metrics in kMonteCarlo mode. Errors are
/// rethrown with the cell coordinates in the message.
MetricsReport run_point(const SystemParams& params, Mode mode, const MonteCarloConfig& mc,
                        RiccatiSolution* sol_out = nullptr);

/// Monte-Carlo block for one cell given its Riccati solution.
MonteCarloMetrics run_monte_carlo(const ModelMatrices& model, const RiccatiSolution& sol,
                                  const SystemParams& params, const MonteCarloConfig& mc);

/// Cells in evaluation-independent order (row-major theta_A, then theta_B).
std::vector<CellSpec> expand_cells(const SweepConfig& config);

SweepResult run_sweep(const SweepConfig& config);

/// True-state squeezing over the angle grid; cells carry only true-state
/// metrics and the curve is the most-squeezed theta_B per theta_A.
SweepResult true_state_squeezing_sweep(const SweepConfig& config);

/// Argmax/argmin over theta_B per theta_A of `value(cell)` on an angle grid;
/// values within 1e-12 of the optimum (relative when it exceeds 1) count as
/// ties; the smallest theta_B is kept and the tie logged.
OptimalCurve optimal_curve(const SweepResult& result, const std::string& metric,
                           bool maximize, const std::function<double(const CellResult&)>& value,
                           std::vector<std::string>* log);

}  // namespace qsmooth

#endif  // QSMOOTH_SWEEP_HPP
