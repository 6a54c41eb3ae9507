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

// Exercises the shared library through its C header only.

#include <qsmooth/qsmooth.h>

#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <string>
#include <vector>

namespace {

std::string tmp_path(const char* name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

qs_params unit_params() {
  qs_params p;
  REQUIRE(qs_params_paper(&p) == QS_OK);
  p.gamma = 1.0;
  return p;
}

}  // namespace

TEST_CASE("C API: basics") {
  CHECK(std::string(qs_version()) == "0.1.0");
  CHECK(std::string(qs_status_string(QS_ERR_FORMAT)).size() > 0);
  qs_params p;
  qs_params_default(&p);
  CHECK(qs_params_validate(&p) == QS_OK);
  p.xi = 1.2;
  CHECK(qs_params_validate(&p) == QS_ERR_INVALID_ARGUMENT);
  CHECK(std::string(qs_last_error()).find("xi") != std::string::npos);
  CHECK(qs_params_set(&p, "colour", "red") == QS_ERR_FORMAT);
  CHECK(qs_params_set(&p, "xi", "0.5") == QS_OK);
  CHECK(p.xi == 0.5);
  CHECK(qs_params_set(&p, "theta_a_deg", "33") == QS_OK);
  CHECK(p.theta_a_deg == doctest::Approx(33.0).epsilon(1e-15));
  CHECK(qs_params_validate(nullptr) == QS_ERR_INVALID_ARGUMENT);
  qs_model_destroy(nullptr);
  qs_record_destroy(nullptr);
  qs_estimate_destroy(nullptr);
  qs_sweep_destroy(nullptr);
}

TEST_CASE("C API: model and steady state") {
  qs_params p = unit_params();
  double ea = 0, eb = 0;
  REQUIRE(qs_efficiencies(&p, &ea, &eb) == QS_OK);
  CHECK(ea == doctest::Approx(0.4325).epsilon(1e-3));
  REQUIRE(qs_params_set(&p, "eta_a", "0.43") == QS_OK);

  qs_model* m = nullptr;
  REQUIRE(qs_model_create(&p, &m) == QS_OK);
  qs_matrices mat;
  REQUIRE(qs_model_matrices(m, &mat) == QS_OK);
  CHECK(mat.a[0] == doctest::Approx(-0.3));
  CHECK(mat.a[3] == doctest::Approx(-1.7));
  CHECK(mat.s_a[0] == -0.5 * mat.c_a[0]);
  CHECK(mat.q[0] == 1.0);

  qs_riccati sol;
  REQUIRE(qs_solve_riccati(m, 0, &sol) == QS_OK);
  CHECK(sol.v_true[0] == doctest::Approx(1.05557965).epsilon(1e-7));
  CHECK(sol.v_true[1] == sol.v_true[2]);
  CHECK(sol.residual_true <= 1e-10);
  qs_riccati alone;
  REQUIRE(qs_solve_riccati(m, 1, &alone) == QS_OK);
  CHECK(alone.v_true[0] == doctest::Approx(sol.v_filt[0]).epsilon(1e-12));

  qs_metrics met;
  REQUIRE(qs_theory_metrics(m, &met) == QS_OK);
  CHECK(met.recovery_p == doctest::Approx(met.recovery_d).epsilon(1e-12));
  CHECK(met.true_state.purity > met.smoothed.purity);

  double pur = 0, sq = 0, asq = 0;
  const double vac[4] = {0.5, 0.0, 0.0, 0.5};
  REQUIRE(qs_purity(vac, 1.0, &pur) == QS_OK);
  CHECK(pur == doctest::Approx(1.0));
  REQUIRE(qs_squeezing(sol.v_unc, 1.0, &sq, &asq) == QS_OK);
  CHECK(sq == doctest::Approx(1.0 / 1.7));
  const double bad[4] = {-1.0, 0.0, 0.0, 1.0};
  CHECK(qs_purity(bad, 1.0, &pur) == QS_ERR_INVALID_ARGUMENT);

  qs_model* e = nullptr;
  REQUIRE(qs_model_create_effective(1.0, 0.7, 0.0, 0.0, 0.0, 0.0, 1.0, &e) == QS_OK);
  double vu[4];
  REQUIRE(qs_unconditional_cov(e, vu) == QS_OK);
  CHECK(vu[0] == doctest::Approx(0.5 / 0.3));
  CHECK(qs_model_create_effective(1.0, 0.7, 0.8, 0.8, 0.0, 0.0, 1.0, &e) != QS_OK);
  qs_model_destroy(e);
  qs_model_destroy(m);
}

TEST_CASE("C API: simulate, store and estimate") {
  qs_params p = unit_params();
  qs_model* m = nullptr;
  REQUIRE(qs_model_create(&p, &m) == QS_OK);
  double dt = 0;
  REQUIRE(qs_model_default_dt(m, &dt) == QS_OK);
  qs_record* rec = nullptr;
  REQUIRE(qs_simulate(m, 60.0, 0.0, 7, -1, &rec) == QS_OK);
  const size_t n = qs_record_length(rec);
  CHECK(n == static_cast<size_t>(std::llround(60.0 / dt)));
  CHECK(qs_record_has_hidden(rec));
  std::vector<double> truth(2 * (n + 1));
  REQUIRE(qs_record_true_means(rec, truth.data()) == QS_OK);

  const std::string path = tmp_path("qsmooth_capi_rec.csv");
  REQUIRE(qs_record_save(rec, path.c_str()) == QS_OK);
  qs_record* loaded = nullptr;
  REQUIRE(qs_record_load(path.c_str(), &loaded) == QS_OK);
  CHECK(qs_record_length(loaded) == n);
  CHECK(qs_record_dt(loaded) == qs_record_dt(rec));
  std::vector<double> ya(n), yb(n), ya2(n), yb2(n);
  REQUIRE(qs_record_samples(rec, ya.data(), yb.data()) == QS_OK);
  REQUIRE(qs_record_samples(loaded, ya2.data(), yb2.data()) == QS_OK);
  CHECK(ya == ya2);
  CHECK(yb == yb2);
  CHECK(qs_record_true_means(loaded, truth.data()) != QS_OK);

  qs_estimate* est = nullptr;
  REQUIRE(qs_estimate_run(m, loaded, &est) == QS_OK);
  CHECK(qs_estimate_points(est) == n + 1);
  std::vector<double> xt(2 * (n + 1)), xf(2 * (n + 1)), xs(2 * (n + 1)), z(2 * (n + 1));
  REQUIRE(qs_estimate_series(est, QS_SERIES_TRUE, xt.data()) == QS_OK);
  REQUIRE(qs_estimate_series(est, QS_SERIES_FILTERED, xf.data()) == QS_OK);
  REQUIRE(qs_estimate_series(est, QS_SERIES_SMOOTHED, xs.data()) == QS_OK);
  REQUIRE(qs_estimate_series(est, QS_SERIES_RETRO_Z, z.data()) == QS_OK);
  // The replayed true mean equals the simulated one (the file keeps 17 digits).
  double worst = 0;
  for (size_t i = 0; i < xt.size(); ++i) worst = std::max(worst, std::abs(xt[i] - truth[i]));
  CHECK(worst < 1e-9);
  CHECK(z[2 * n] == 0.0);
  CHECK(xs[2 * n] == xf[2 * n]);
  size_t head = 0, tail = 0;
  REQUIRE(qs_estimate_windows(est, &head, &tail) == QS_OK);
  CHECK(head > 0);
  CHECK(tail > 0);
  const std::string traj = tmp_path("qsmooth_capi_traj.csv");
  REQUIRE(qs_estimate_save_csv(est, traj.c_str()) == QS_OK);
  FILE* f = std::fopen(traj.c_str(), "r");
  REQUIRE(f != nullptr);
  char line[128] = {};
  REQUIRE(std::fgets(line, sizeof line, f) != nullptr);
  std::fclose(f);
  CHECK(std::string(line) == "t,x_T,p_T,x_F,p_F,x_S,p_S\n");

  // Alice-only record built in memory.
  qs_record* own = nullptr;
  REQUIRE(qs_record_create(dt, ya.data(), nullptr, n, 1, 0, &own) == QS_OK);
  CHECK_FALSE(qs_record_has_hidden(own));
  qs_estimate* est2 = nullptr;
  REQUIRE(qs_estimate_run(m, own, &est2) == QS_OK);
  std::vector<double> xf2(2 * (n + 1));
  REQUIRE(qs_estimate_series(est2, QS_SERIES_FILTERED, xf2.data()) == QS_OK);
  CHECK(xf2 == xf);
  CHECK(qs_estimate_series(est2, QS_SERIES_TRUE, xf2.data()) != QS_OK);

  CHECK(qs_record_load("/nonexistent/r.csv", &own) == QS_ERR_IO);
  CHECK(qs_record_create(0.0, ya.data(), nullptr, n, 1, 0, &own) == QS_ERR_INVALID_ARGUMENT);

  qs_estimate_destroy(est2);
  qs_estimate_destroy(est);
  qs_record_destroy(own);
  qs_record_destroy(loaded);
  qs_record_destroy(rec);
  qs_model_destroy(m);
  std::filesystem::remove(path);
  std::filesystem::remove(traj);
}

TEST_CASE("C API: points and sweeps") {
  qs_params p = unit_params();
  qs_mc_config mc;
  qs_mc_config_default(&mc);
  CHECK(mc.records == 200);
  CHECK(mc.duration == doctest::Approx(50e-6));
  mc.records = 2;
  mc.duration = 200.0;
  qs_riccati sol;
  qs_metrics th;
  qs_mc_metrics mcm;
  REQUIRE(qs_run_point(&p, &mc, &sol, &th, &mcm) == QS_OK);
  CHECK(mcm.records == 2);
  CHECK(mcm.mse_filt > 0.0);
  REQUIRE(qs_run_point(&p, nullptr, nullptr, &th, nullptr) == QS_OK);

  char* json = nullptr;
  REQUIRE(qs_point_json(&p, nullptr, &json) == QS_OK);
  CHECK(std::string(json).find("\"recovery\"") != std::string::npos);
  qs_string_free(json);

  qs_sweep_config cfg;
  qs_sweep_config_default(&cfg);
  cfg.base = p;
  cfg.theta_a_step_deg = 45.0;
  cfg.theta_b_step_deg = 45.0;
  qs_sweep* s = nullptr;
  REQUIRE(qs_sweep_run(&cfg, &s) == QS_OK);
  CHECK(qs_sweep_cells(s) == 25);
  CHECK(qs_sweep_failed(s) == 0);
  qs_sweep_cell cell;
  REQUIRE(qs_sweep_cell_get(s, 6, &cell) == QS_OK);
  CHECK(cell.theta_a_deg == 45.0);
  CHECK(cell.theta_b_deg == 45.0);
  CHECK(cell.ok);
  CHECK(qs_sweep_cell_get(s, 25, &cell) == QS_ERR_INVALID_ARGUMENT);
  double a[5], b[5], v[5];
  size_t count = 0;
  REQUIRE(qs_sweep_optimal(s, "recovery_p", a, b, v, 5, &count) == QS_OK);
  CHECK(count == 5);
  CHECK(a[2] == 90.0);
  CHECK(b[2] == 90.0);
  CHECK(qs_sweep_optimal(s, "nope", a, b, v, 5, &count) == QS_ERR_INVALID_ARGUMENT);
  const std::string csv = tmp_path("qsmooth_capi_sweep.csv");
  const std::string js = tmp_path("qsmooth_capi_sweep.json");
  REQUIRE(qs_sweep_write(s, csv.c_str(), nullptr, js.c_str(), "test") == QS_OK);
  CHECK(std::filesystem::exists(csv));
  CHECK(std::filesystem::exists(js));
  qs_sweep_destroy(s);

  const double ts[2] = {0.2, 0.8};
  cfg.kind = QS_SWEEP_ETA;
  cfg.transmittances = ts;
  cfg.n_transmittances = 2;
  REQUIRE(qs_sweep_run(&cfg, &s) == QS_OK);
  CHECK(qs_sweep_cells(s) == 2);
  qs_sweep_destroy(s);
  cfg.n_transmittances = 0;
  CHECK(qs_sweep_run(&cfg, &s) == QS_ERR_INVALID_ARGUMENT);
  std::filesystem::remove(csv);
  std::filesystem::remove(js);
}
