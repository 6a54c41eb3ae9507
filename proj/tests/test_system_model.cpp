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
#include "helpers.hpp"
#include "system_model.hpp"

#include <doctest.h>

#include <cstring>
#include <limits>
#include <random>

using namespace qsmooth;
using qstest::max_diff;

TEST_CASE("no pump and no monitoring") {
  EffectiveParams p;
  p.gamma = 1.0;
  p.xi = 0.0;
  p.eta_a = 0.0;
  p.eta_b = 0.0;
  const ModelMatrices m = build_model(p);
  CHECK(max_diff(m.a_mat, -Mat2::Identity()) == 0.0);
  CHECK(max_diff(m.q_mat, Mat2::Identity()) == 0.0);
  CHECK(m.c_a.isZero(0.0));
  CHECK(m.c_b.isZero(0.0));
}

TEST_CASE("drift at the bench operating point") {
  SystemParams p = paper_defaults();
  const ModelMatrices m = build_model(p);
  const double two_pi = 2.0 * std::numbers::pi;
  CHECK(m.a_mat(0, 0) == doctest::Approx(-two_pi * 1.5e6).epsilon(1e-14));
  CHECK(m.a_mat(1, 1) == doctest::Approx(-two_pi * 8.5e6).epsilon(1e-14));
  CHECK(m.a_mat(0, 1) == 0.0);
  CHECK(m.a_mat(1, 0) == 0.0);
}

TEST_CASE("noise coefficient sum rule at L_A = 0.135") {
  SystemParams p;
  p.gamma = 1.0;
  p.loss_a = 0.135;
  p.transmittance = 0.5;
  p.theta_a = 0.0;
  const ModelMatrices m = build_model(p);
  CHECK(std::abs(m.d_a.squaredNorm() - 1.0) <= 4 * std::numeric_limits<double>::epsilon());
}

TEST_CASE("structural invariants on a random grid") {
  std::mt19937_64 gen(11);
  for (int i = 0; i < 500; ++i) {
    const SystemParams p = qstest::random_params(gen);
    const ModelMatrices m = build_model(p);
    CAPTURE(i);
    // Exact equalities.
    CHECK((m.s_a.array() == (-(p.hbar / 2.0) * m.c_a).array()).all());
    CHECK((m.s_b.array() == (-(p.hbar / 2.0) * m.c_b).array()).all());
    CHECK(m.q_mat == p.hbar * p.gamma * Mat2::Identity());
    CHECK(m.r_a == 1.0);
    CHECK(m.r_b == 1.0);
    CHECK(m.a_mat(0, 0) == -p.gamma * (1.0 - p.xi));
    CHECK(m.a_mat(1, 1) == -p.gamma * (1.0 + p.xi));
    CHECK(m.a_mat(0, 1) == 0.0);
    // Sum rule and orthogonality.
    CHECK(std::abs(m.d_a.squaredNorm() - 1.0) < 1e-14);
    CHECK(std::abs(m.d_b.squaredNorm() - 1.0) < 1e-14);
    CHECK(std::abs(m.d_a.dot(m.d_b)) < 1e-14);
    // C_m = sqrt(4 gamma eta_m / hbar) (cos, sin).
    const Efficiencies eff = efficiencies(p);
    const double ka = std::sqrt(4.0 * p.gamma * eff.eta_a / p.hbar);
    CHECK(m.c_a(0) == doctest::Approx(ka * std::cos(p.theta_a)).epsilon(1e-13));
    CHECK(m.c_a(1) == doctest::Approx(ka * std::sin(p.theta_a)).epsilon(1e-13));
    // Q = B B^T and S_m = B D_m^T by construction of the input ports.
    CHECK(max_diff(m.b_mat * m.b_mat.transpose(), m.q_mat) <= 1e-13 * m.q_mat(0, 0));
    CHECK((m.b_mat * m.d_a.transpose()).transpose().isApprox(m.s_a, 1e-12));
  }
}

TEST_CASE("noise coefficient table signs") {
  SystemParams p;
  p.gamma = 1.0;
  p.loss_a = 0.2;
  p.loss_b = 0.3;
  p.transmittance = 0.6;
  p.theta_a = 0.0;
  p.theta_b = 0.0;
  const ModelMatrices m = build_model(p);
  // x components of ports 2..5 (even indices from 2).
  CHECK(m.d_a(2) == doctest::Approx(-std::sqrt(0.8 * 0.6)));
  CHECK(m.d_a(4) == doctest::Approx(-std::sqrt(0.8 * 0.4)));
  CHECK(m.d_a(6) == doctest::Approx(-std::sqrt(0.2)));
  CHECK(m.d_a(8) == 0.0);
  CHECK(m.d_b(2) == doctest::Approx(-std::sqrt(0.7 * 0.4)));
  CHECK(m.d_b(4) == doctest::Approx(std::sqrt(0.7 * 0.6)));
  CHECK(m.d_b(6) == 0.0);
  CHECK(m.d_b(8) == doctest::Approx(-std::sqrt(0.3)));
  CHECK(m.d_a(0) == 0.0);
  CHECK(m.d_b(1) == 0.0);
}

TEST_CASE("build_model is pure") {
  std::mt19937_64 gen(5);
  const SystemParams p = qstest::random_params(gen);
  const ModelMatrices a = build_model(p), b = build_model(p);
  CHECK(std::memcmp(a.a_mat.data(), b.a_mat.data(), sizeof(double) * 4) == 0);
  CHECK(std::memcmp(a.b_mat.data(), b.b_mat.data(), sizeof(double) * 20) == 0);
  CHECK(std::memcmp(a.d_a.data(), b.d_a.data(), sizeof(double) * 10) == 0);
  CHECK(std::memcmp(a.d_b.data(), b.d_b.data(), sizeof(double) * 10) == 0);
  CHECK(std::memcmp(a.c_a.data(), b.c_a.data(), sizeof(double) * 2) == 0);
  CHECK(std::memcmp(a.c_b.data(), b.c_b.data(), sizeof(double) * 2) == 0);
}

TEST_CASE("efficiencies") {
  SystemParams p = paper_defaults();
  SUBCASE("all light to Alice") {
    p.transmittance = 1.0;
    const Efficiencies e = efficiencies(p);
    CHECK(e.eta_a == doctest::Approx(0.865).epsilon(1e-3));
    CHECK(e.eta_b == 0.0);
  }
  SUBCASE("no light to Alice") {
    p.transmittance = 0.0;
    const Efficiencies e = efficiencies(p);
    CHECK(e.eta_a == 0.0);
    CHECK(e.eta_b == doctest::Approx(0.863).epsilon(1e-3));
  }
  SUBCASE("balanced") {
    p.transmittance = 0.5;
    CHECK(efficiencies(p).eta_a == doctest::Approx(0.4325).epsilon(1e-3));
  }
  SUBCASE("transmittance for a target efficiency") {
    for (double eta : {0.0, 0.09, 0.43, 0.78}) {
      p.transmittance = transmittance_for_eta_a(p, eta);
      CHECK(efficiencies(p).eta_a == doctest::Approx(eta).epsilon(1e-14));
    }
    CHECK_THROWS_AS(transmittance_for_eta_a(p, 0.9), Error);
  }
}

TEST_CASE("cavity characterization") {
  const CavityDerived c = derive_cavity(CavityParams{});
  CHECK(c.gamma / (2.0 * std::numbers::pi) == doctest::Approx(5.0e6).epsilon(0.01));
  CHECK(c.escape_eff == doctest::Approx(0.973).epsilon(1e-3));
  CHECK(c.xi == doctest::Approx(0.70).epsilon(0.01));
  const DecayRates r = decay_rates(paper_defaults());
  CHECK(r.output_coupler + r.intracavity == doctest::Approx(2.0 * paper_defaults().gamma));
}

TEST_CASE("parameter validation") {
  const auto rejects = [](auto mutate) {
    SystemParams p;
    mutate(p);
    try {
      build_model(p);
    } catch (const Error& e) {
      return e.code() == ErrorCode::kInvalidArgument;
    }
    return false;
  };
  const double nan = std::numeric_limits<double>::quiet_NaN();
  CHECK(rejects([](SystemParams& p) { p.xi = 1.0; }));
  CHECK(rejects([](SystemParams& p) { p.xi = -0.1; }));
  CHECK(rejects([&](SystemParams& p) { p.xi = nan; }));
  CHECK(rejects([](SystemParams& p) { p.transmittance = 1.01; }));
  CHECK(rejects([](SystemParams& p) { p.transmittance = -0.01; }));
  CHECK(rejects([](SystemParams& p) { p.loss_a = 1.0; }));
  CHECK(rejects([](SystemParams& p) { p.loss_b = -0.1; }));
  CHECK(rejects([](SystemParams& p) { p.gamma = 0.0; }));
  CHECK(rejects([](SystemParams& p) { p.escape_eff = 0.0; }));
  CHECK(rejects([](SystemParams& p) { p.hbar = 0.0; }));
  CHECK(rejects([&](SystemParams& p) { p.theta_a = nan; }));

  EffectiveParams e;
  e.eta_a = 0.7;
  e.eta_b = 0.4;
  CHECK_THROWS_AS(build_model(e), Error);
}

TEST_CASE("effective and physical paths agree") {
  SystemParams p = paper_defaults();
  p.gamma = 1.0;
  const Efficiencies eff = efficiencies(p);
  EffectiveParams e;
  e.gamma = p.gamma;
  e.xi = p.xi;
  e.eta_a = eff.eta_a;
  e.eta_b = eff.eta_b;
  e.theta_a = p.theta_a;
  e.theta_b = p.theta_b;
  const ModelMatrices a = build_model(p), b = build_model(e);
  CHECK(max_diff(a.a_mat, b.a_mat) == 0.0);
  CHECK(max_diff(a.q_mat, b.q_mat) == 0.0);
  CHECK((a.c_a - b.c_a).norm() < 1e-14);
  CHECK((a.c_b - b.c_b).norm() < 1e-14);
  CHECK(std::abs(b.d_a.squaredNorm() - 1.0) < 1e-14);
  CHECK(std::abs(b.d_a.dot(b.d_b)) < 1e-14);
}

TEST_CASE("step-size reference rate") {
  SystemParams p;
  p.gamma = 2.0;
  p.xi = 0.5;
  CHECK(fastest_rate(build_model(p)) == doctest::Approx(3.0));
}
