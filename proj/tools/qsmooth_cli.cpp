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

// qsmooth command-line front end. Talks to the library only through the C API.

#include "qsmooth/qsmooth.h"

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace {

struct Failure : std::runtime_error {
  Failure(qs_status s, const std::string& what) : std::runtime_error(what), status(s) {}
  qs_status status;
};

void check(qs_status s, const char* what) {
  if (s != QS_OK)
    throw Failure(s, std::string(what) + ": " + qs_status_string(s) + ": " + qs_last_error());
}

struct ParamOptions {
  std::string preset = "paper";
  std::string params_file;
  std::vector<std::string> sets;
  std::optional<double> theta_a, theta_b, eta_a, transmittance, xi, hbar;

  void attach(CLI::App* app) {
    app->add_option("--preset", preset, "Parameter preset: paper or none")
        ->check(CLI::IsMember({"paper", "none"}))
        ->capture_default_str();
    app->add_option("--params", params_file, "key=value parameter file applied on the preset");
    app->add_option("--set", sets, "Override one parameter, key=value (repeatable)");
    app->add_option("--theta-a", theta_a, "Alice's homodyne angle, degrees");
    app->add_option("--theta-b", theta_b, "Bob's homodyne angle, degrees");
    app->add_option("--eta-a", eta_a, "Alice's efficiency (sets the transmittance)");
    app->add_option("--transmittance", transmittance, "Beam-splitter transmittance T");
    app->add_option("--xi", xi, "Normalized pump amplitude");
    app->add_option("--hbar", hbar, "Value of hbar");
  }

  qs_params build() const {
    qs_params p;
    if (preset == "paper") check(qs_params_paper(&p), "preset");
    else qs_params_default(&p);
    if (!params_file.empty()) check(qs_params_load(params_file.c_str(), &p), "parameter file");
    for (const std::string& kv : sets) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) throw Failure(QS_ERR_INVALID_ARGUMENT, "--set expects key=value");
      check(qs_params_set(&p, kv.substr(0, eq).c_str(), kv.substr(eq + 1).c_str()), "--set");
    }
    auto set = [&](const char* key, const std::optional<double>& v) {
      if (!v) return;
      char buf[64];
      std::snprintf(buf, sizeof buf, "%.17g", *v);
      check(qs_params_set(&p, key, buf), key);
    };
    set("xi", xi);
    set("hbar", hbar);
    set("theta_a_deg", theta_a);
    set("theta_b_deg", theta_b);
    set("transmittance", transmittance);
    set("eta_a", eta_a);
    check(qs_params_validate(&p), "parameters");
    return p;
  }
};

struct McOptions {
  bool enabled = false;
  qs_mc_config cfg{};

  McOptions() { qs_mc_config_default(&cfg); }

  void attach(CLI::App* app) {
    app->add_flag("--monte-carlo", enabled, "Add Monte-Carlo estimates");
    app->add_option("--records", cfg.records, "Records per cell")->capture_default_str();
    app->add_option("--duration", cfg.duration, "Seconds per record")->capture_default_str();
    app->add_option("--dt", cfg.dt, "Time step in seconds (default 1/(200 gamma (1+xi)))");
    app->add_option("--seed", cfg.seed, "Base seed")->capture_default_str();
    app->add_option("--burn-in", cfg.burn_in, "Burn-in samples (default 10/gamma)");
  }
};

// lo:hi:step in degrees.
void parse_range(const std::string& text, double& lo, double& hi, double& step) {
  std::istringstream in(text);
  char c1 = 0, c2 = 0;
  if (!(in >> lo >> c1 >> hi >> c2 >> step) || c1 != ':' || c2 != ':' || !in.eof())
    throw Failure(QS_ERR_INVALID_ARGUMENT, "range must look like lo:hi:step, got '" + text + "'");
}

void write_text(const std::string& path, const std::string& body) {
  if (path.empty() || path == "-") {
    std::cout << body;
    return;
  }
  std::ofstream out(path);
  if (!out) throw Failure(QS_ERR_IO, "cannot open '" + path + "' for writing");
  out << body;
}

std::string command_line(int argc, char** argv) {
  std::string s;
  for (int i = 0; i < argc; ++i) {
    if (i) s += ' ';
    s += argv[i];
  }
  return s;
}

struct Sweep {
  qs_sweep* handle = nullptr;
  ~Sweep() { qs_sweep_destroy(handle); }
};

void run_sweep(qs_sweep_config& cfg, const std::string& prefix, const std::string& command) {
  Sweep s;
  check(qs_sweep_run(&cfg, &s.handle), "sweep");
  const std::string csv = prefix + ".csv";
  const std::string json = prefix + ".json";
  const std::string optimal = prefix + "_optimal.csv";
  check(qs_sweep_write(s.handle, csv.c_str(),
                       cfg.kind == QS_SWEEP_ETA ? nullptr : optimal.c_str(), json.c_str(),
                       command.c_str()),
        "write");
  std::cerr << qs_sweep_cells(s.handle) << " cells, " << qs_sweep_failed(s.handle)
            << " failed; wrote " << csv << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"qsmooth: filtering, retrofiltering and smoothing of a monitored OPO"};
  app.set_version_flag("--version", qs_version());
  app.require_subcommand(1);
  const std::string command = command_line(argc, argv);

  // point
  ParamOptions point_p;
  McOptions point_mc;
  std::string point_out;
  CLI::App* point = app.add_subcommand("point", "Metrics for one parameter point (JSON)");
  point_p.attach(point);
  point_mc.attach(point);
  point->add_option("-o,--out", point_out, "Output file (default stdout)");

  // sweep-eta
  ParamOptions eta_p;
  McOptions eta_mc;
  std::vector<double> eta_values, eta_ts;
  std::string eta_out = "sweep_eta";
  CLI::App* sweep_eta = app.add_subcommand("sweep-eta", "Sweep Alice's efficiency");
  eta_p.attach(sweep_eta);
  eta_mc.attach(sweep_eta);
  auto* eta_opt = sweep_eta->add_option("--etas", eta_values, "Alice efficiencies")->delimiter(',');
  auto* t_opt =
      sweep_eta->add_option("--transmittances", eta_ts, "Transmittances")->delimiter(',');
  eta_opt->excludes(t_opt);
  unsigned threads = 0;
  const char* threads_help = "Worker threads (0 = all cores)";
  sweep_eta->add_option("--threads", threads, threads_help)->capture_default_str();
  sweep_eta->add_option("-o,--out", eta_out, "Output prefix (.csv, .json)")->capture_default_str();

  // sweep-angles and true-squeeze
  ParamOptions ang_p, sq_p;
  McOptions ang_mc;
  std::string ang_a = "0:180:1", ang_b = "0:180:1", ang_out = "sweep_angles";
  std::string sq_a = "0:180:1", sq_b = "0:180:1", sq_out = "true_squeeze";
  CLI::App* sweep_angles = app.add_subcommand("sweep-angles", "Grid over both homodyne angles");
  ang_p.attach(sweep_angles);
  ang_mc.attach(sweep_angles);
  sweep_angles->add_option("--threads", threads, threads_help)->capture_default_str();
  sweep_angles->add_option("--theta-a-range", ang_a, "lo:hi:step degrees")->capture_default_str();
  sweep_angles->add_option("--theta-b-range", ang_b, "lo:hi:step degrees")->capture_default_str();
  sweep_angles->add_option("-o,--out", ang_out, "Output prefix (.csv, _optimal.csv, .json)")
      ->capture_default_str();
  CLI::App* true_squeeze = app.add_subcommand("true-squeeze", "True-state squeezing grid");
  sq_p.attach(true_squeeze);
  true_squeeze->add_option("--threads", threads, threads_help)->capture_default_str();
  true_squeeze->add_option("--theta-a-range", sq_a, "lo:hi:step degrees")->capture_default_str();
  true_squeeze->add_option("--theta-b-range", sq_b, "lo:hi:step degrees")->capture_default_str();
  true_squeeze->add_option("-o,--out", sq_out, "Output prefix (.csv, _optimal.csv, .json)")
      ->capture_default_str();

  // simulate
  ParamOptions sim_p;
  double sim_duration = 50e-6, sim_dt = 0.0;
  std::uint64_t sim_seed = 1;
  long sim_burn = -1;
  std::string sim_out, sim_truth;
  CLI::App* simulate = app.add_subcommand("simulate", "Write a synthetic measurement record");
  sim_p.attach(simulate);
  simulate->add_option("--duration", sim_duration, "Seconds")->capture_default_str();
  simulate->add_option("--dt", sim_dt, "Time step in seconds (default 1/(200 gamma (1+xi)))");
  simulate->add_option("--seed", sim_seed, "Seed")->capture_default_str();
  simulate->add_option("--burn-in", sim_burn, "Burn-in samples (default 10/gamma)");
  simulate->add_option("-o,--out", sim_out, "Record CSV")->required();
  simulate->add_option("--truth", sim_truth, "Also write the simulated true means (t,x_T,p_T)");

  // estimate
  ParamOptions est_p;
  std::string est_record, est_out;
  CLI::App* estimate = app.add_subcommand("estimate", "Filter and smooth a record file");
  est_p.attach(estimate);
  estimate->add_option("-r,--record", est_record, "Record CSV")->required();
  estimate->add_option("-o,--out", est_out, "Trajectory CSV")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*point) {
      const qs_params p = point_p.build();
      char* json = nullptr;
      check(qs_point_json(&p, point_mc.enabled ? &point_mc.cfg : nullptr, &json), "point");
      const std::string body(json);
      qs_string_free(json);
      write_text(point_out, body);
    } else if (*sweep_eta) {
      qs_sweep_config cfg;
      qs_sweep_config_default(&cfg);
      cfg.base = eta_p.build();
      cfg.kind = QS_SWEEP_ETA;
      std::vector<double> ts = eta_ts;
      for (double e : eta_values) {
        qs_params q = cfg.base;
        char buf[64];
        std::snprintf(buf, sizeof buf, "%.17g", e);
        check(qs_params_set(&q, "eta_a", buf), "--etas");
        ts.push_back(q.transmittance);
      }
      if (ts.empty()) throw Failure(QS_ERR_INVALID_ARGUMENT, "give --etas or --transmittances");
      cfg.transmittances = ts.data();
      cfg.n_transmittances = ts.size();
      cfg.monte_carlo = eta_mc.enabled;
      cfg.mc = eta_mc.cfg;
      cfg.threads = threads;
      run_sweep(cfg, eta_out, command);
    } else if (*sweep_angles || *true_squeeze) {
      const bool sq = true_squeeze->parsed();
      qs_sweep_config cfg;
      qs_sweep_config_default(&cfg);
      cfg.base = (sq ? sq_p : ang_p).build();
      cfg.kind = sq ? QS_SWEEP_TRUE_SQUEEZE : QS_SWEEP_ANGLES;
      parse_range(sq ? sq_a : ang_a, cfg.theta_a_lo_deg, cfg.theta_a_hi_deg, cfg.theta_a_step_deg);
      parse_range(sq ? sq_b : ang_b, cfg.theta_b_lo_deg, cfg.theta_b_hi_deg, cfg.theta_b_step_deg);
      if (!sq) {
        cfg.monte_carlo = ang_mc.enabled;
        cfg.mc = ang_mc.cfg;
      }
      cfg.threads = threads;
      run_sweep(cfg, sq ? sq_out : ang_out, command);
    } else if (*simulate) {
      const qs_params p = sim_p.build();
      qs_model* model = nullptr;
      check(qs_model_create(&p, &model), "model");
      qs_record* rec = nullptr;
      const qs_status s = qs_simulate(model, sim_duration, sim_dt, sim_seed, sim_burn, &rec);
      qs_model_destroy(model);
      check(s, "simulate");
      const qs_status w = qs_record_save(rec, sim_out.c_str());
      if (w == QS_OK && !sim_truth.empty()) {
        std::vector<double> xp(2 * (qs_record_length(rec) + 1));
        check(qs_record_true_means(rec, xp.data()), "truth");
        std::ostringstream body;
        body.precision(17);
        body << "t,x_T,p_T\n";
        const double dt = qs_record_dt(rec);
        for (std::size_t k = 0; k + 1 < xp.size(); k += 2)
          body << dt * static_cast<double>(k / 2) << ',' << xp[k] << ',' << xp[k + 1] << '\n';
        write_text(sim_truth, body.str());
      }
      std::cerr << "wrote " << qs_record_length(rec) << " samples to " << sim_out << "\n";
      qs_record_destroy(rec);
      check(w, "save");
    } else if (*estimate) {
      const qs_params p = est_p.build();
      qs_model* model = nullptr;
      check(qs_model_create(&p, &model), "model");
      qs_record* rec = nullptr;
      qs_status s = qs_record_load(est_record.c_str(), &rec);
      qs_estimate* est = nullptr;
      if (s == QS_OK) s = qs_estimate_run(model, rec, &est);
      if (s == QS_OK) s = qs_estimate_save_csv(est, est_out.c_str());
      std::size_t head = 0, tail = 0;
      if (s == QS_OK) qs_estimate_windows(est, &head, &tail);
      const std::size_t points = qs_estimate_points(est);
      qs_estimate_destroy(est);
      qs_record_destroy(rec);
      qs_model_destroy(model);
      check(s, "estimate");
      std::cerr << "wrote " << points << " points to " << est_out << " (relaxing gains: first "
                << head << ", last " << tail << " samples)\n";
    }
  } catch (const Failure& f) {
    std::cerr << "error: " << f.what() << "\n";
    return static_cast<int>(f.status) + 1;
  }
  return 0;
}
