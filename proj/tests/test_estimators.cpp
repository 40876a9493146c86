#include <cmath>
#include <vector>

#include "doctest.h"
#include "trapcal/angles.hpp"
#include "trapcal/errors.hpp"
#include "trapcal/estimators.hpp"
#include "trapcal/pulse.hpp"
#include "trapcal/rng.hpp"

using namespace trapcal;

namespace {

// Forward model: excitation probability at a given total control phase.
double forward_p(double phi_t, double theta_t, double contrast = 1.0) {
  return 0.5 * (1.0 + contrast * std::cos(phi_t + theta_t));
}

// Noiseless per-pass RPE estimate: phi_T = wrap(M_j phi), scaled back to phi.
PhaseEstimate noiseless_pass(double phi, int pass_j) {
  const int m = 1 << (pass_j - 1);
  PhaseEstimate est;
  est.value = wrap_pi_atan(m * phi) / m;
  est.range_halfwidth = pi / m;
  est.samples_used = 1;
  est.tag = EstimatorTag::rpe;
  return est;
}

}  // namespace

TEST_CASE("arcsin estimator") {
  SUBCASE("symmetric inputs give zero") {
    CHECK(estimate_arcsin(0.37, 0.37, 0.8).value == doctest::Approx(0.0));
  }

  SUBCASE("forward/inverse oracle at C = 0.5, phi = 0.2") {
    const double p_minus = forward_p(0.2, -pi / 2.0, 0.5);
    const double p_plus = forward_p(0.2, pi / 2.0, 0.5);
    CHECK(p_minus == doctest::Approx(0.5497).epsilon(1e-3));
    CHECK(p_plus == doctest::Approx(0.4503).epsilon(1e-3));
    CHECK(estimate_arcsin(p_minus, p_plus, 0.5).value == doctest::Approx(0.2).epsilon(1e-3));
  }

  SUBCASE("extremum") {
    const PhaseEstimate est = estimate_arcsin(1.0, 0.0, 1.0);
    CHECK(est.value == doctest::Approx(pi / 2.0));
    CHECK(est.range_halfwidth == doctest::Approx(pi / 2.0));
    CHECK_FALSE(est.clamped);
  }

  SUBCASE("clamping is flagged, not fatal") {
    const PhaseEstimate est = estimate_arcsin(0.9, 0.05, 0.5);
    CHECK(est.clamped);
    CHECK(est.value == doctest::Approx(pi / 2.0));
  }

  SUBCASE("zero denominator") {
    CHECK_THROWS_AS(estimate_arcsin(0.0, 0.0, 1.0), ZeroDenominator);
    CHECK_THROWS_AS(estimate_arcsin(0.5, 0.5, 0.0), InvalidParameter);
  }
}

TEST_CASE("arctan2 estimator") {
  SUBCASE("phi = 0") {
    CHECK(estimate_arctan2(0.5, 1.0).value == doctest::Approx(0.0));
  }

  SUBCASE("forward/inverse oracle at phi = pi/3") {
    const double p_mhalf = forward_p(pi / 3.0, -pi / 2.0);
    const double p_zero = forward_p(pi / 3.0, 0.0);
    CHECK(p_mhalf == doctest::Approx(0.9330).epsilon(1e-3));
    CHECK(p_zero == doctest::Approx(0.75).epsilon(1e-6));
    CHECK(estimate_arctan2(p_mhalf, p_zero).value == doctest::Approx(1.0472).epsilon(1e-3));
  }

  SUBCASE("contrast immunity is exact") {
    RngStream rng(2, "est", 0);
    for (int i = 0; i < 100; ++i) {
      const double phi = (rng.uniform() * 2.0 - 1.0) * pi * 0.999;
      const double c = 0.05 + 0.95 * rng.uniform();
      const double full = estimate_arctan2(forward_p(phi, -pi / 2.0), forward_p(phi, 0.0)).value;
      const double scaled =
          estimate_arctan2(forward_p(phi, -pi / 2.0, c), forward_p(phi, 0.0, c)).value;
      CHECK(full == doctest::Approx(scaled).epsilon(1e-12));
    }
  }

  SUBCASE("no information") {
    CHECK_THROWS_AS(estimate_arctan2(0.5, 0.5), UndefinedEstimate);
  }
}

TEST_CASE("offset arctan2 estimator") {
  for (double phi : {0.0, 0.1, pi / 2.0}) {
    const double p_q = forward_p(phi, pi / 4.0);
    const double p_3q = forward_p(phi, 3.0 * pi / 4.0);
    CHECK(estimate_arctan2_offset(p_q, p_3q).value == doctest::Approx(phi).epsilon(1e-9));
  }
  CHECK_THROWS_AS(estimate_arctan2_offset(0.5, 0.5), UndefinedEstimate);
}

TEST_CASE("control phase settings") {
  SUBCASE("settings I, M = 2") {
    const std::vector<double> t = control_phases(SettingsTag::I, 2, pi);
    REQUIRE(t.size() == 3);
    CHECK(t[0] == doctest::Approx(pi));
    CHECK(t[1] == doctest::Approx(0.0));
    CHECK(t[2] == doctest::Approx(pi));
  }

  SUBCASE("settings II, M = 4") {
    const std::vector<double> t = control_phases(SettingsTag::II, 4, pi / 2.0);
    REQUIRE(t.size() == 5);
    CHECK(t[0] == doctest::Approx(pi / 2.0));
    CHECK(t[1] == doctest::Approx(0.0));
    CHECK(t[2] == doctest::Approx(pi / 2.0));
    CHECK(t[3] == doctest::Approx(0.0));
    CHECK(t[4] == doctest::Approx(pi));
  }

  SUBCASE("settings III, M = 4") {
    const std::vector<double> t = control_phases(SettingsTag::III, 4, pi);
    REQUIRE(t.size() == 5);
    CHECK(t[0] == doctest::Approx(pi));
    CHECK(t[1] == doctest::Approx(pi / 2.0));
    CHECK(t[2] == doctest::Approx(-pi / 2.0));
    CHECK(t[3] == doctest::Approx(pi / 2.0));
    CHECK(t[4] == doctest::Approx(pi));
  }

  SUBCASE("odd M rejected") {
    CHECK_THROWS_AS(control_phases(SettingsTag::I, 3, pi), OddM);
  }
}

TEST_CASE("settings estimators recover phi_T exactly in the noiseless model") {
  RngStream rng(4, "est", 1);
  for (int big_m : {2, 4, 6, 16}) {
    for (const SettingsTag tag : {SettingsTag::I, SettingsTag::II, SettingsTag::III}) {
      for (int trial = 0; trial < 20; ++trial) {
        const double phi_t = (rng.uniform() * 2.0 - 1.0) * pi * 0.99;
        // Forward model through the sequence-level theta_T of each theta_1.
        std::vector<double> phi(static_cast<std::size_t>(big_m) + 1, 0.0);
        phi[0] = phi_t;  // any list with this combination works; use pulse 1
        const TotalPhase t_half =
            total_phase(phi, control_phases(tag, big_m, pi / 2.0), big_m);
        const TotalPhase t_pi = total_phase(phi, control_phases(tag, big_m, pi), big_m);
        const double p_half = forward_p(t_half.phi_t, t_half.theta_t);
        const double p_pi = forward_p(t_pi.phi_t, t_pi.theta_t);
        const PhaseEstimate est = estimate_settings(p_half, p_pi, big_m, tag);
        CHECK(wrap_pi_atan(est.value - phi_t) == doctest::Approx(0.0).epsilon(1e-9));
      }
    }
  }
  CHECK_THROWS_AS(estimate_settings(0.4, 0.6, 3, SettingsTag::I), OddM);
}

TEST_CASE("I/II averaging is circular") {
  PhaseEstimate a, b;
  a.value = pi - 0.1;
  b.value = -pi + 0.1;
  a.samples_used = b.samples_used = 10;
  const PhaseEstimate mean = average_i_ii(a, b);
  CHECK(std::abs(std::abs(mean.value) - pi) < 1e-12);
  CHECK(mean.samples_used == 20);
}

TEST_CASE("sequence scaling of estimates") {
  PhaseEstimate est;
  est.value = 0.8;
  est.range_halfwidth = pi;
  const PhaseEstimate scaled = scale_to_sequence(est, 8);
  CHECK(scaled.value == doctest::Approx(0.1));
  CHECK(scaled.range_halfwidth == doctest::Approx(pi / 8.0));
}

TEST_CASE("RPE combination") {
  SUBCASE("single pass returns itself") {
    PhaseEstimate only;
    only.value = 1.3;
    only.range_halfwidth = pi;
    CHECK(rpe_combine(std::vector<PhaseEstimate>{only}) == doctest::Approx(1.3));
  }

  SUBCASE("worked two-pass example") {
    PhaseEstimate p1, p2;
    p1.value = 2.0;
    p1.range_halfwidth = pi;
    p2.value = -1.1415926535897931;  // 2.0 - pi
    p2.range_halfwidth = pi / 2.0;
    const std::vector<PhaseEstimate> passes{p1, p2};
    CHECK(rpe_combine(passes) == doctest::Approx(2.0).epsilon(1e-12));
  }

  SUBCASE("noiseless recovery over random phases") {
    RngStream rng(6, "est", 2);
    for (int trial = 0; trial < 10000; ++trial) {
      const double phi = (rng.uniform() * 2.0 - 1.0) * pi * 0.9999;
      std::vector<PhaseEstimate> passes;
      for (int j = 1; j <= 5; ++j) {
        passes.push_back(noiseless_pass(phi, j));
      }
      const double combined = rpe_combine(passes);
      CHECK(std::abs(combined - phi) < 1e-9);
    }
  }

  SUBCASE("a bounded single-pass error cannot corrupt the branch") {
    RngStream rng(6, "est", 3);
    for (int trial = 0; trial < 2000; ++trial) {
      const double phi = (rng.uniform() * 2.0 - 1.0) * pi * 0.999;
      const int bad_pass = 1 + static_cast<int>(rng.uniform() * 4.0);  // 1..4 of 5
      const double eps =
          (rng.uniform() * 2.0 - 1.0) * 0.999 * pi / (1 << bad_pass);  // < pi/2^j
      std::vector<PhaseEstimate> passes;
      for (int j = 1; j <= 5; ++j) {
        PhaseEstimate pass = noiseless_pass(phi, j);
        if (j == bad_pass) pass.value += eps;
        passes.push_back(pass);
      }
      // Compared on the circle: a perturbed first pass may park the running
      // estimate on the 2 pi image of the same phase.
      CHECK(std::abs(wrap_pi_atan(rpe_combine(passes) - phi)) < 1e-9);
    }
  }

  SUBCASE("last-pass error propagates directly") {
    const double phi = 0.7;
    std::vector<PhaseEstimate> passes;
    for (int j = 1; j <= 4; ++j) passes.push_back(noiseless_pass(phi, j));
    passes.back().value += 0.01;
    CHECK(rpe_combine(passes) == doctest::Approx(phi + 0.01).epsilon(1e-9));
  }

  SUBCASE("bad halfwidth ladder") {
    PhaseEstimate p1, p2;
    p1.value = 0.2;
    p1.range_halfwidth = pi;
    p2.value = 0.1;
    p2.range_halfwidth = pi / 3.0;
    const std::vector<PhaseEstimate> passes{p1, p2};
    CHECK_THROWS_AS(rpe_combine(passes), BadSchedule);
  }
}

TEST_CASE("RPE schedule bookkeeping") {
  const RpeSchedule schedule = RpeSchedule::equal(5, 40);
  CHECK(schedule.sequence_length(1) == 1);
  CHECK(schedule.sequence_length(5) == 16);
  CHECK(schedule.total_pulse_area() == doctest::Approx(40.0 * 31.0 * pi));
  CHECK_THROWS_AS(RpeSchedule::equal(3, 41), InvalidParameter);
}

TEST_CASE("SQL bound") {
  CHECK(sql_bound(pi) == doctest::Approx(1.0));
  CHECK(sql_bound(4.0 * pi) == doctest::Approx(0.5));
  CHECK(sql_bound(100.0 * pi) == doctest::Approx(0.1));
  CHECK_THROWS_AS(sql_bound(0.0), InvalidParameter);
}

TEST_CASE("estimators stay inside their declared ranges") {
  RngStream rng(9, "est", 5);
  for (int trial = 0; trial < 2000; ++trial) {
    const double p1 = rng.uniform();
    const double p2 = rng.uniform();
    const double c = 0.05 + 0.95 * rng.uniform();
    try {
      const PhaseEstimate a = estimate_arcsin(p1, p2, c);
      CHECK(std::abs(a.value) <= a.range_halfwidth + 1e-12);
    } catch (const ZeroDenominator&) {
    }
    try {
      const PhaseEstimate b = estimate_arctan2(p1, p2);
      CHECK(std::abs(b.value) <= b.range_halfwidth + 1e-12);
    } catch (const UndefinedEstimate&) {
    }
    try {
      const PhaseEstimate d = estimate_arctan2_offset(p1, p2);
      CHECK(std::abs(d.value) <= d.range_halfwidth + 1e-12);
    } catch (const UndefinedEstimate&) {
    }
    try {
      const PhaseEstimate s = estimate_settings(p1, p2, 4, SettingsTag::I);
      CHECK(std::abs(s.value) <= s.range_halfwidth + 1e-12);
    } catch (const UndefinedEstimate&) {
    }
  }
}

TEST_CASE("arctan2 Monte Carlo error approaches 1.24/sqrt(N)") {
  // Reduced-size version of the acceptance criterion.
  const long n = 40;
  const int trials = 4000;
  RngStream rng(8, "est", 4);
  double sum_sq = 0.0;
  int used = 0;
  for (int t = 0; t < trials; ++t) {
    const double phi = (rng.uniform() * 2.0 - 1.0) * pi;
    const double p1 =
        static_cast<double>(rng.binomial(n / 2, forward_p(phi, -pi / 2.0))) / (n / 2);
    const double p2 = static_cast<double>(rng.binomial(n / 2, forward_p(phi, 0.0))) / (n / 2);
    if (p1 == 0.5 && p2 == 0.5) continue;  // no-information draw
    const double err = wrap_pi_atan(estimate_arctan2(p1, p2).value - phi);
    sum_sq += err * err;
    ++used;
  }
  const double rms = std::sqrt(sum_sq / used);
  CHECK(rms == doctest::Approx(1.24 / std::sqrt(static_cast<double>(n))).epsilon(0.10));
}
