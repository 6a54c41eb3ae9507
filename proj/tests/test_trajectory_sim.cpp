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

#include "error.hpp"
#include "estimation.hpp"
#include "helpers.hpp"
#include "metrics.hpp"
#include "trajectory_sim.hpp"

#include <doctest.h>

#include <cstring>

using namespace qsmooth;
using qstest::max_diff;

namespace {

ModelMatrices pumped(double xi, double hbar = 1.0) {
  EffectiveParams p;
  p.gamma = 1.0;
  p.xi = xi;
  p.hbar = hbar;
  return build_model(p);
}

}  // namespace

TEST_CASE("unconditional covariance") {
  SUBCASE("vacuum") {
    CHECK(max_diff(unconditional_cov(pumped(0.0)), 0.5 * Mat2::Identity()) < 1e-15);
  }
  SUBCASE("closed form at xi = 0.70") {
    const ModelMatrices m = pumped(0.70);
    const Mat2 v = unconditional_cov(m);
    CHECK(v(0, 0) == doctest::Approx(0.5 / 0.3).epsilon(1e-14));
    CHECK(v(1, 1) == doctest::Approx(0.5 / 1.7).epsilon(1e-14));
    CHECK(std::abs(v(0, 1)) < 1e-15);
    CHECK((m.a_mat * v + v * m.a_mat.transpose() + m.q_mat).norm() < 1e-12);
    CHECK(to_db(v(1, 1) / 0.5) == doctest::Approx(-2.30).epsilon(2e-3));
  }
  SUBCASE("hbar scaling") {
    CHECK(max_diff(unconditional_cov(pumped(0.4, 3.0)), 3.0 * unconditional_cov(pumped(0.4))) <
          1e-14);
  }
  SUBCASE("half the vacuum noise near threshold") {
    CHECK(unconditional_cov(pumped(1.0 - 1e-9))(1, 1) == doctest::Approx(0.25).epsilon(1e-8));
  }
  SUBCASE("unstable drift rejected") {
    ModelMatrices m = pumped(0.5);
    m.a_mat(0, 0) = 0.1;
    CHECK_THROWS_AS(unconditional_cov(m), Error);
  }
}

TEST_CASE("unmonitored mean decays deterministically") {
  const ModelMatrices m = pumped(0.7);
  const Mat2 v = unconditional_cov(m);
  SimulationOptions o;
  o.duration = 5.0;
  o.seed = 3;
  o.initial_mean = Vec2(2.0, -1.0);
  const auto [traj, rec] = simulate_true(m, v, o);
  const Mat2 step = Mat2::Identity() + m.a_mat * rec.dt;
  Vec2 x = o.initial_mean;
  double worst = 0.0, sq = 0.0;
  for (std::size_t k = 0; k < rec.size(); ++k) {
    worst = std::max(worst, (traj.means[k] - x).cwiseAbs().maxCoeff());
    x = step * x;
    sq += rec.y_a[k] * rec.y_a[k] * rec.dt;
  }
  CHECK(worst < 1e-13);
  // y dt is pure noise of variance dt.
  CHECK(sq / static_cast<double>(rec.size()) == doctest::Approx(1.0).epsilon(0.05));
}

TEST_CASE("innovation increments") {
  const SystemParams p = qstest::unit_paper();
  const ModelMatrices m = build_model(p);
  const RiccatiSolution sol = solve_riccati(m);
  SimulationOptions o;
  o.duration = 2000.0;
  o.seed = 77;
  const auto [traj, rec] = simulate_true(m, sol.v_true, o);
  const double n = static_cast<double>(rec.size());
  for (int ch = 0; ch < 2; ++ch) {
    const Row2& c = ch == 0 ? m.c_a : m.c_b;
    const std::vector<double>& y = ch == 0 ? rec.y_a : rec.y_b;
    double s = 0.0, s2 = 0.0;
    for (std::size_t k = 0; k < rec.size(); ++k) {
      const double dw = y[k] * rec.dt - c.dot(traj.means[k]) * rec.dt;
      s += dw;
      s2 += dw * dw;
    }
    const double mean = s / n;
    const double var = s2 / n - mean * mean;
    CAPTURE(ch);
    CHECK(std::abs(mean) < 4.0 * std::sqrt(rec.dt / n));
    CHECK(var / rec.dt == doctest::Approx(1.0).epsilon(0.01));
  }
}

TEST_CASE("stationary mean decomposition") {
  const SystemParams p = qstest::unit_paper();
  const ModelMatrices m = build_model(p);
  const RiccatiSolution sol = solve_riccati(m);
  SimulationOptions o;
  o.duration = 4.0e4;
  o.dt = 0.01;
  o.seed = 2024;
  const auto [traj, rec] = simulate_true(m, sol.v_true, o);
  const std::size_t n = traj.size();
  const SampleWindow all{rec.burn_in, n};
  const Mat2 cov = sample_cov(traj.means, all);
  const Mat2 target = sol.v_unc - sol.v_true;
  // Mean decomposition, element-wise against the V_unc scale.
  const Mat2 recon = cov + sol.v_true;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      CHECK(std::abs(recon(i, j) - sol.v_unc(i, j)) <=
            0.05 * std::sqrt(sol.v_unc(i, i) * sol.v_unc(j, j)));
  // Stationarity: disjoint halves agree.
  const std::size_t mid = (rec.burn_in + n) / 2;
  const Mat2 c1 = sample_cov(traj.means, {rec.burn_in, mid});
  const Mat2 c2 = sample_cov(traj.means, {mid, n});
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      CHECK(std::abs(c1(i, j) - c2(i, j)) <= 0.15 * std::sqrt(target(i, i) * target(j, j)));
  Vec2 m1 = Vec2::Zero(), m2 = Vec2::Zero();
  for (std::size_t k = rec.burn_in; k < mid; ++k) m1 += traj.means[k];
  for (std::size_t k = mid; k < n; ++k) m2 += traj.means[k];
  m1 /= static_cast<double>(mid - rec.burn_in);
  m2 /= static_cast<double>(n - mid);
  CHECK(std::abs(m1(0) - m2(0)) < 0.1 * std::sqrt(target(0, 0)));
  CHECK(std::abs(m1(1) - m2(1)) < 0.1 * std::sqrt(target(1, 1)));
}

TEST_CASE("simulation is deterministic in its seed") {
  const ModelMatrices m = build_model(qstest::unit_paper());
  const RiccatiSolution sol = solve_riccati(m);
  SimulationOptions o;
  o.duration = 20.0;
  o.seed = 9;
  const auto a = simulate_true(m, sol.v_true, o);
  const auto b = simulate_true(m, sol.v_true, o);
  REQUIRE(a.second.size() == b.second.size());
  CHECK(std::memcmp(a.second.y_a.data(), b.second.y_a.data(), a.second.size() * 8) == 0);
  CHECK(std::memcmp(a.second.y_b.data(), b.second.y_b.data(), a.second.size() * 8) == 0);
  CHECK(std::memcmp(a.first.means.data(), b.first.means.data(), a.first.size() * 16) == 0);
  o.seed = 10;
  const auto c = simulate_true(m, sol.v_true, o);
  CHECK(c.second.y_a != a.second.y_a);
}

TEST_CASE("record bookkeeping") {
  const ModelMatrices m = build_model(qstest::unit_paper());
  const RiccatiSolution sol = solve_riccati(m);
  SimulationOptions o;
  o.duration = 30.0;
  o.seed = 1;
  const auto [traj, rec] = simulate_true(m, sol.v_true, o);
  CHECK(rec.dt == default_dt(m));
  CHECK(rec.dt == doctest::Approx(1.0 / (200.0 * 1.7)));
  CHECK(rec.duration() == doctest::Approx(o.duration).epsilon(rec.dt / o.duration));
  CHECK(traj.size() == rec.size() + 1);
  CHECK(rec.y_a.size() == rec.y_b.size());
  CHECK(rec.burn_in == static_cast<std::size_t>(std::ceil(10.0 / rec.dt)));
  CHECK(rec.seed == 1);
  CHECK(traj.label == Conditioning::kTrue);
  CHECK(traj.means[0].isZero(0.0));
}

TEST_CASE("simulation guards") {
  const ModelMatrices m = build_model(qstest::unit_paper());
  const RiccatiSolution sol = solve_riccati(m);
  SimulationOptions o;
  o.duration = 1.0;
  o.dt = 0.1 / 1.7 * 1.01;
  CHECK_THROWS_AS(simulate_true(m, sol.v_true, o), Error);
  o.dt = 0.0;
  Mat2 bad = sol.v_true;
  bad(0, 0) = -1.0;
  CHECK_THROWS_AS(simulate_true(m, bad, o), Error);
  o.duration = 0.0;
  CHECK_THROWS_AS(simulate_true(m, sol.v_true, o), Error);
}

TEST_CASE("record validation") {
  MeasurementRecord r;
  CHECK_THROWS_AS(validate(r), Error);
  r.dt = 0.1;
  r.y_a = {1.0, 2.0};
  CHECK_NOTHROW(validate(r));
  r.y_b = {1.0};
  CHECK_THROWS_AS(validate(r), Error);
  r.y_b.clear();
  r.dt = 0.0;
  CHECK_THROWS_AS(validate(r), Error);
}

TEST_CASE("derived seeds") {
  const auto s = Rng::derive(1, 2, 3, 4);
  CHECK(s == Rng::derive(1, 2, 3, 4));
  CHECK(s != Rng::derive(1, 2, 4, 3));
  CHECK(s != Rng::derive(2, 2, 3, 4));
  Rng a(s), b(s);
  for (int i = 0; i < 10; ++i) CHECK(a.next_u64() == b.next_u64());
}

TEST_CASE("trajectory covariance lookup") {
  StateTrajectory t;
  t.means.resize(11);
  t.cov = Mat2::Identity();
  t.head_cov = {2.0 * Mat2::Identity(), 3.0 * Mat2::Identity()};
  t.tail_cov = {4.0 * Mat2::Identity()};
  CHECK(t.cov_at(0)(0, 0) == 2.0);
  CHECK(t.cov_at(1)(0, 0) == 3.0);
  CHECK(t.cov_at(5)(0, 0) == 1.0);
  CHECK(t.cov_at(10)(0, 0) == 4.0);
  CHECK(t.in_boundary(1));
  CHECK_FALSE(t.in_boundary(2));
  CHECK(t.in_boundary(10));
  CHECK(to_string(Conditioning::kSmoothed) == "smoothed");
}
