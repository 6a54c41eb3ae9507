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

// File formats.
//
// Record CSV:
//   # qsmooth-record v1
//   # dt=<seconds>
//   # seed=<uint64>
//   # burn_in=<samples>        (optional, default 0)
//   t,y_a,y_b                   (y_b column optional)
//   <t_k>,<y_a[k]>,<y_b[k]>
//
// Trajectory CSV: header t,x_T,p_T,x_F,p_F,x_S,p_S; x_T/p_T are nan when the
// record has no hidden channel.
//
// Parameter file: key=value per line, '#' starts a comment. Keys:
//   preset (paper), gamma, xi, transmittance, loss_a, loss_b, escape_eff,
//   theta_a_deg, theta_b_deg, hbar, eta_a
// `preset` is applied first whatever its position; `eta_a` last (it sets the
// transmittance for the configured losses).
//
// Sweep CSV: '# schema=qsmooth-sweep/1' then one row per cell, see
// sweep_columns(). True-state sweeps use '# schema=qsmooth-true-squeeze/1'.
// Optimal curves: '# schema=qsmooth-optimal/1', metric,theta_a_deg,
// theta_b_deg,value,tie. JSON sidecar: provenance and configuration.

#ifndef QSMOOTH_IO_HPP
#define QSMOOTH_IO_HPP

#include "estimation.hpp"
#include "sweep.hpp"
#include "system_model.hpp"
#include "trajectory_sim.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace qsmooth {

inline constexpr const char* kSweepSchema = "qsmooth-sweep/1";
inline constexpr const char* kTrueSqueezeSchema = "qsmooth-true-squeeze/1";
inline constexpr const char* kOptimalSchema = "qsmooth-optimal/1";
inline constexpr const char* kRecordMagic = "qsmooth-record v1";

void write_record(std::ostream& out, const MeasurementRecord& record);
MeasurementRecord read_record(std::istream& in);
void save_record(const std::string& path, const MeasurementRecord& record);
MeasurementRecord load_record(const std::string& path);

/// Rows at t_k for k = 0..N. `true_ref` may be null.
void write_trajectories(std::ostream& out, const StateTrajectory* true_ref,
                        const StateTrajectory& filtered, const StateTrajectory& smoothed);

/// Applies key=value lines on top of `params`.
SystemParams parse_params(std::istream& in, SystemParams params = {});
SystemParams load_params(const std::string& path, SystemParams params = {});
void write_params(std::ostream& out, const SystemParams& params);

/// Applies one key; throws kFormat on unknown keys or malformed values.
void apply_param(SystemParams& params, const std::string& key, const std::string& value);

std::vector<std::string> sweep_columns(SweepKind kind);
void write_sweep_csv(std::ostream& out, const SweepResult& result);
void write_optimal_csv(std::ostream& out, const SweepResult& result);

/// Provenance sidecar. `outputs` lists the files written next to it.
std::string sweep_json(const SweepResult& result, const SweepConfig& config,
                       const std::string& command, const std::vector<std::string>& outputs);

/// Single-point report as JSON.
std::string point_json(const SystemParams& params, const RiccatiSolution& sol,
                       const MetricsReport& report, Mode mode, const MonteCarloConfig& mc);

/// Parse a CSV header line of the sweep schemas (for round-trip checks).
std::vector<std::string> split_csv_line(const std::string& line);

}  // namespace qsmooth

#endif  // QSMOOTH_IO_HPP
