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

#include "io.hpp"

#include "error.hpp"

#include <json.hpp>

#include <cerrno>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>

namespace qsmooth {
namespace {

using Json = nlohmann::ordered_json;

std::string num(double v) {
  if (std::isnan(v)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

double parse_double(const std::string& text, const std::string& what) {
  const std::string t = trim(text);
  if (t == "nan" || t == "NaN") return std::numeric_limits<double>::quiet_NaN();
  char* end = nullptr;
  errno = 0;
  const double v = std::strtod(t.c_str(), &end);
  if (t.empty() || end != t.c_str() + t.size() || errno == ERANGE)
    fail(ErrorCode::kFormat, what + ": not a number: '" + t + "'");
  return v;
}

std::uint64_t parse_u64(const std::string& text, const std::string& what) {
  const std::string t = trim(text);
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (t.empty() || ec != std::errc() || ptr != t.data() + t.size())
    fail(ErrorCode::kFormat, what + ": not an unsigned integer: '" + t + "'");
  return v;
}

std::string csv_quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += (c == '\n' || c == '\r') ? ' ' : c;
  }
  return out + "\"";
}

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::kIo, "cannot open '" + path + "' for reading");
  return in;
}

void cov_cells(std::vector<std::string>& row, const Mat2& v) {
  row.push_back(num(v(0, 0)));
  row.push_back(num(v(0, 1)));
  row.push_back(num(v(1, 1)));
}

void emit(std::ostream& out, const std::vector<std::string>& row) {
  for (std::size_t i = 0; i < row.size(); ++i) {
    if (i) out << ',';
    out << row[i];
  }
  out << '\n';
}

Json mat_json(const Mat2& m) {
  return Json::array({Json::array({m(0, 0), m(0, 1)}), Json::array({m(1, 0), m(1, 1)})});
}

Json params_json(const SystemParams& p) {
  Json j;
  j["gamma"] = p.gamma;
  j["xi"] = p.xi;
  j["transmittance"] = p.transmittance;
  j["loss_a"] = p.loss_a;
  j["loss_b"] = p.loss_b;
  j["escape_eff"] = p.escape_eff;
  j["theta_a_deg"] = rad_to_deg(p.theta_a);
  j["theta_b_deg"] = rad_to_deg(p.theta_b);
  j["hbar"] = p.hbar;
  return j;
}

Json state_json(const StateMetrics& s) {
  Json j;
  j["purity"] = s.purity;
  j["trsd"] = s.trsd;
  j["squeeze"] = s.squeezing.squeeze;
  j["antisqueeze"] = s.squeezing.antisqueeze;
  j["squeeze_db"] = s.squeezing.squeeze_db;
  j["antisqueeze_db"] = s.squeezing.antisqueeze_db;
  return j;
}

Json recovery_json(const Recoveries& r) {
  return Json{{"purity", r.purity},
              {"trsd", r.trsd},
              {"squeezing", r.squeezing},
              {"antisqueezing", r.antisqueezing}};
}

Json estimate_json(const Estimate& e) {
  return Json{{"value", e.value}, {"stderr", e.std_error}};
}

const char* kind_name(SweepKind k) {
  switch (k) {
    case SweepKind::kEta: return "sweep-eta";
    case SweepKind::kAngles: return "sweep-angles";
    case SweepKind::kTrueSqueeze: return "true-squeeze";
  }
  return "unknown";
}

}  // namespace

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(trim(cur));
  return out;
}

void write_record(std::ostream& out, const MeasurementRecord& r) {
  validate(r);
  out << "# " << kRecordMagic << '\n';
  out << "# dt=" << num(r.dt) << '\n';
  out << "# seed=" << r.seed << '\n';
  out << "# burn_in=" << r.burn_in << '\n';
  out << (r.has_hidden() ? "t,y_a,y_b\n" : "t,y_a\n");
  for (std::size_t k = 0; k < r.size(); ++k) {
    out << num(r.dt * static_cast<double>(k)) << ',' << num(r.y_a[k]);
    if (r.has_hidden()) out << ',' << num(r.y_b[k]);
    out << '\n';
  }
}

MeasurementRecord read_record(std::istream& in) {
  MeasurementRecord r;
  std::optional<double> dt;
  bool header = false, hidden = false;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    const std::string where = "record line " + std::to_string(lineno);
    if (t.empty()) continue;
    if (t[0] == '#') {
      const std::string body = trim(t.substr(1));
      const auto eq = body.find('=');
      if (eq == std::string::npos) continue;
      const std::string key = trim(body.substr(0, eq)), value = body.substr(eq + 1);
      if (key == "dt") dt = parse_double(value, where);
      else if (key == "seed") r.seed = parse_u64(value, where);
      else if (key == "burn_in") r.burn_in = parse_u64(value, where);
      continue;
    }
    const std::vector<std::string> cells = split_csv_line(t);
    if (!header) {
      if (cells.size() == 3 && cells[0] == "t" && cells[1] == "y_a" && cells[2] == "y_b")
        hidden = true;
      else if (!(cells.size() == 2 && cells[0] == "t" && cells[1] == "y_a"))
        fail(ErrorCode::kFormat, where + ": expected header 't,y_a,y_b' or 't,y_a'");
      header = true;
      continue;
    }
    if (cells.size() != (hidden ? 3u : 2u))
      fail(ErrorCode::kFormat, where + ": wrong number of columns");
    r.y_a.push_back(parse_double(cells[1], where));
    if (hidden) r.y_b.push_back(parse_double(cells[2], where));
  }
  if (!dt) fail(ErrorCode::kFormat, "record is missing the '# dt=' line");
  if (!header) fail(ErrorCode::kFormat, "record is missing the column header");
  r.dt = *dt;
  for (double v : r.y_a)
    if (!std::isfinite(v)) fail(ErrorCode::kFormat, "record contains non-finite samples");
  for (double v : r.y_b)
    if (!std::isfinite(v)) fail(ErrorCode::kFormat, "record contains non-finite samples");
  validate(r);
  return r;
}

void save_record(const std::string& path, const MeasurementRecord& record) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::kIo, "cannot open '" + path + "' for writing");
  write_record(out, record);
  if (!out) fail(ErrorCode::kIo, "write to '" + path + "' failed");
}

MeasurementRecord load_record(const std::string& path) {
  std::ifstream in = open_in(path);
  return read_record(in);
}

void write_trajectories(std::ostream& out, const StateTrajectory* true_ref,
                        const StateTrajectory& f, const StateTrajectory& s) {
  require(f.size() == s.size() && (!true_ref || true_ref->size() == f.size()),
          "trajectories must share timestamps");
  out << "t,x_T,p_T,x_F,p_F,x_S,p_S\n";
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (std::size_t k = 0; k < f.size(); ++k) {
    const Vec2 xt = true_ref ? true_ref->means[k] : Vec2(nan, nan);
    out << num(f.time(k)) << ',' << num(xt(0)) << ',' << num(xt(1)) << ','
        << num(f.means[k](0)) << ',' << num(f.means[k](1)) << ',' << num(s.means[k](0)) << ','
        << num(s.means[k](1)) << '\n';
  }
}

void apply_param(SystemParams& p, const std::string& key, const std::string& value) {
  const std::string what = "parameter '" + key + "'";
  if (key == "preset") {
    if (trim(value) != "paper")
      fail(ErrorCode::kFormat, "unknown preset '" + trim(value) + "' (known: paper)");
    p = paper_defaults();
  } else if (key == "gamma") {
    p.gamma = parse_double(value, what);
  } else if (key == "xi") {
    p.xi = parse_double(value, what);
  } else if (key == "transmittance") {
    p.transmittance = parse_double(value, what);
  } else if (key == "loss_a") {
    p.loss_a = parse_double(value, what);
  } else if (key == "loss_b") {
    p.loss_b = parse_double(value, what);
  } else if (key == "escape_eff") {
    p.escape_eff = parse_double(value, what);
  } else if (key == "theta_a_deg") {
    p.theta_a = deg_to_rad(parse_double(value, what));
  } else if (key == "theta_b_deg") {
    p.theta_b = deg_to_rad(parse_double(value, what));
  } else if (key == "hbar") {
    p.hbar = parse_double(value, what);
  } else if (key == "eta_a") {
    p.transmittance = transmittance_for_eta_a(p, parse_double(value, what));
  } else {
    fail(ErrorCode::kFormat, "unknown parameter key '" + key + "'");
  }
}

SystemParams parse_params(std::istream& in, SystemParams params) {
  std::vector<std::pair<std::string, std::string>> entries;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    const std::string t = trim(hash == std::string::npos ? line : line.substr(0, hash));
    if (t.empty()) continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos)
      fail(ErrorCode::kFormat, "parameter line " + std::to_string(lineno) + ": expected key=value");
    entries.emplace_back(trim(t.substr(0, eq)), trim(t.substr(eq + 1)));
  }
  auto rank = [](const std::string& k) { return k == "preset" ? 0 : k == "eta_a" ? 2 : 1; };
  std::stable_sort(entries.begin(), entries.end(),
                   [&](const auto& a, const auto& b) { return rank(a.first) < rank(b.first); });
  for (const auto& [k, v] : entries) apply_param(params, k, v);
  validate(params);
  return params;
}

SystemParams load_params(const std::string& path, SystemParams params) {
  std::ifstream in = open_in(path);
  return parse_params(in, params);
}

void write_params(std::ostream& out, const SystemParams& p) {
  out << "gamma=" << num(p.gamma) << '\n'
      << "xi=" << num(p.xi) << '\n'
      << "transmittance=" << num(p.transmittance) << '\n'
      << "loss_a=" << num(p.loss_a) << '\n'
      << "loss_b=" << num(p.loss_b) << '\n'
      << "escape_eff=" << num(p.escape_eff) << '\n'
      << "theta_a_deg=" << num(rad_to_deg(p.theta_a)) << '\n'
      << "theta_b_deg=" << num(rad_to_deg(p.theta_b)) << '\n'
      << "hbar=" << num(p.hbar) << '\n';
}

std::vector<std::string> sweep_columns(SweepKind kind) {
  std::vector<std::string> c = {"cell",  "theta_a_deg", "theta_b_deg", "transmittance",
                                "eta_a", "eta_b",       "status"};
  auto cov = [&](const std::string& p) {
    c.push_back(p + "_xx");
    c.push_back(p + "_xp");
    c.push_back(p + "_pp");
  };
  if (kind == SweepKind::kTrueSqueeze) {
    for (const char* n : {"squeeze_t", "antisqueeze_t", "squeeze_t_db", "antisqueeze_t_db",
                          "purity_t"})
      c.push_back(n);
    cov("vt");
    cov("vunc");
  } else {
    for (const char* n :
         {"purity_t", "purity_f", "purity_s", "trsd_f", "trsd_s", "squeeze_t", "squeeze_f",
          "squeeze_s", "antisqueeze_t", "antisqueeze_f", "antisqueeze_s", "squeeze_t_db",
          "squeeze_f_db", "squeeze_s_db", "antisqueeze_t_db", "antisqueeze_f_db",
          "antisqueeze_s_db", "recovery_p", "recovery_d", "recovery_s", "recovery_a"})
      c.push_back(n);
    cov("vt");
    cov("vf");
    cov("vs");
    cov("vunc");
    for (const char* n : {"mc_records", "mc_purity_f", "mc_purity_s", "mc_trsd_f",
                          "mc_trsd_f_se", "mc_trsd_s", "mc_trsd_s_se", "mc_mse_f",
                          "mc_mse_f_se", "mc_mse_s", "mc_mse_s_se", "mc_recovery_p",
                          "mc_recovery_d", "mc_recovery_s", "mc_recovery_a"})
      c.push_back(n);
    cov("mc_vf");
    cov("mc_vs");
    cov("mc_vt");
    cov("mc_xs_cov");
  }
  c.push_back("error");
  return c;
}

void write_sweep_csv(std::ostream& out, const SweepResult& result) {
  const bool true_only = result.kind == SweepKind::kTrueSqueeze;
  const std::vector<std::string> cols = sweep_columns(result.kind);
  out << "# schema=" << (true_only ? kTrueSqueezeSchema : kSweepSchema) << '\n';
  out << "# version=" << result.provenance.version << '\n';
  emit(out, cols);
  for (const CellResult& c : result.cells) {
    std::vector<std::string> row = {std::to_string(c.index),
                                    num(c.theta_a_deg),
                                    num(c.theta_b_deg),
                                    num(c.params.transmittance),
                                    num(c.eta_a),
                                    num(c.eta_b),
                                    c.ok ? "ok" : "error"};
    if (c.ok) {
      const MetricsReport& r = c.report;
      const RiccatiSolution& s = c.sol;
      if (true_only) {
        const Squeezing& q = r.true_state.squeezing;
        for (double v : {q.squeeze, q.antisqueeze, q.squeeze_db, q.antisqueeze_db,
                         r.true_state.purity})
          row.push_back(num(v));
        cov_cells(row, s.v_true);
        cov_cells(row, s.v_unc);
      } else {
        const Squeezing &qt = r.true_state.squeezing, &qf = r.filtered.squeezing,
                        &qs = r.smoothed.squeezing;
        for (double v : {r.true_state.purity, r.filtered.purity, r.smoothed.purity,
                         r.filtered.trsd, r.smoothed.trsd, qt.squeeze, qf.squeeze, qs.squeeze,
                         qt.antisqueeze, qf.antisqueeze, qs.antisqueeze, qt.squeeze_db,
                         qf.squeeze_db, qs.squeeze_db, qt.antisqueeze_db, qf.antisqueeze_db,
                         qs.antisqueeze_db, r.recovery.purity, r.recovery.trsd,
                         r.recovery.squeezing, r.recovery.antisqueezing})
          row.push_back(num(v));
        cov_cells(row, s.v_true);
        cov_cells(row, s.v_filt);
        cov_cells(row, s.v_smooth);
        cov_cells(row, s.v_unc);
        if (r.mc) {
          const MonteCarloMetrics& m = *r.mc;
          row.push_back(std::to_string(m.records));
          for (double v : {m.filtered.purity, m.smoothed.purity, m.trsd_filt.value,
                           m.trsd_filt.std_error, m.trsd_smooth.value, m.trsd_smooth.std_error,
                           m.mse_filt.value, m.mse_filt.std_error, m.mse_smooth.value,
                           m.mse_smooth.std_error, m.recovery.purity, m.recovery.trsd,
                           m.recovery.squeezing, m.recovery.antisqueezing})
            row.push_back(num(v));
          cov_cells(row, m.v_filt);
          cov_cells(row, m.v_smooth);
          cov_cells(row, m.v_true);
          cov_cells(row, m.smoothed_mean_cov);
        }
      }
    }
    row.resize(cols.size() - 1);  // empty cells for absent entries
    row.push_back(c.ok ? "" : csv_quote(c.error));
    emit(out, row);
  }
}

void write_optimal_csv(std::ostream& out, const SweepResult& result) {
  out << "# schema=" << kOptimalSchema << '\n';
  out << "metric,theta_a_deg,theta_b_deg,value,tie\n";
  for (const OptimalCurve& c : result.curves)
    for (std::size_t i = 0; i < c.theta_a_deg.size(); ++i)
      out << c.metric << ',' << num(c.theta_a_deg[i]) << ',' << num(c.theta_b_deg[i]) << ','
          << num(c.value[i]) << ',' << (c.tie[i] ? 1 : 0) << '\n';
}

std::string sweep_json(const SweepResult& result, const SweepConfig& config,
                       const std::string& command, const std::vector<std::string>& outputs) {
  Json j;
  j["schema"] = result.kind == SweepKind::kTrueSqueeze ? kTrueSqueezeSchema : kSweepSchema;
  j["version"] = result.provenance.version;
  j["command"] = command;
  j["kind"] = kind_name(result.kind);
  j["mode"] = result.mode == Mode::kMonteCarlo ? "monte-carlo" : "theory";
  j["seed"] = result.provenance.seed;
  j["dt"] = result.provenance.dt;
  j["wall_time_s"] = result.provenance.wall_time_s;
  j["base_params"] = params_json(config.base);
  if (config.kind == SweepKind::kEta) {
    j["transmittances"] = config.transmittances;
  } else {
    j["theta_a_deg"] = Json{{"lo", config.theta_a.lo_deg},
                            {"hi", config.theta_a.hi_deg},
                            {"step", config.theta_a.step_deg}};
    j["theta_b_deg"] = Json{{"lo", config.theta_b.lo_deg},
                            {"hi", config.theta_b.hi_deg},
                            {"step", config.theta_b.step_deg}};
  }
  if (result.mode == Mode::kMonteCarlo)
    j["monte_carlo"] = Json{{"records", config.mc.records},
                            {"duration_s", config.mc.duration},
                            {"burn_in", config.mc.burn_in}};
  j["cells"] = result.cells.size();
  j["failed_cells"] = result.failed;
  j["tie_log"] = result.tie_log;
  j["outputs"] = outputs;
  return j.dump(2) + "\n";
}

std::string point_json(const SystemParams& params, const RiccatiSolution& sol,
                       const MetricsReport& report, Mode mode, const MonteCarloConfig& mc) {
  Json j;
  j["version"] = kVersion;
  j["params"] = params_json(params);
  const Efficiencies eff = efficiencies(params);
  j["eta_a"] = eff.eta_a;
  j["eta_b"] = eff.eta_b;
  j["v_true"] = mat_json(sol.v_true);
  j["v_filt"] = mat_json(sol.v_filt);
  j["v_smooth"] = mat_json(sol.v_smooth);
  j["v_unc"] = mat_json(sol.v_unc);
  j["lambda_retro"] = mat_json(sol.lambda_retro);
  j["residuals"] = Json{{"v_true", sol.residuals.v_true},
                        {"v_filt", sol.residuals.v_filt},
                        {"lambda_retro", sol.residuals.lambda_retro}};
  j["warnings"] = sol.warnings;
  j["true"] = state_json(report.true_state);
  j["filtered"] = state_json(report.filtered);
  j["smoothed"] = state_json(report.smoothed);
  j["recovery"] = recovery_json(report.recovery);
  if (mode == Mode::kMonteCarlo && report.mc) {
    const MonteCarloMetrics& m = *report.mc;
    Json c;
    c["records"] = m.records;
    c["duration_s"] = mc.duration;
    c["seed"] = mc.seed;
    c["samples_per_record"] = m.samples_per_record;
    c["v_filt"] = mat_json(m.v_filt);
    c["v_filt_stderr"] = mat_json(m.v_filt_stderr);
    c["v_smooth"] = mat_json(m.v_smooth);
    c["v_smooth_stderr"] = mat_json(m.v_smooth_stderr);
    c["v_true"] = mat_json(m.v_true);
    c["v_true_stderr"] = mat_json(m.v_true_stderr);
    c["smoothed_mean_cov"] = mat_json(m.smoothed_mean_cov);
    c["mse_filt"] = estimate_json(m.mse_filt);
    c["mse_smooth"] = estimate_json(m.mse_smooth);
    c["trsd_filt"] = estimate_json(m.trsd_filt);
    c["trsd_smooth"] = estimate_json(m.trsd_smooth);
    c["filtered"] = state_json(m.filtered);
    c["smoothed"] = state_json(m.smoothed);
    c["recovery"] = recovery_json(m.recovery);
    j["monte_carlo"] = c;
  }
  return j.dump(2) + "\n";
}

}  // namespace qsmooth
