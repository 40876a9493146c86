#include <cmath>
#include <complex>

#include "doctest.h"
#include "trapcal/angles.hpp"
#include "trapcal/errors.hpp"
#include "trapcal/pulse.hpp"
#include "trapcal/rng.hpp"

using namespace trapcal;
using Eigen::Vector3d;

namespace {

// Independent oracle: RK4 integration of the two-level Schrodinger equation
// i dpsi/dt = H psi with H = [[d, W e^(-i phi)], [W e^(i phi), -d]]/2 in the
// (|e>, |g>) basis, starting from |g>.
double schrodinger_excitation(double rabi, double detuning, double phase, double duration) {
  using cd = std::complex<double>;
  const cd half_rabi_m(0.5 * rabi * std::cos(phase), -0.5 * rabi * std::sin(phase));
  const cd half_rabi_p = std::conj(half_rabi_m);
  const auto deriv = [&](const std::array<cd, 2>& psi) {
    const cd i(0.0, 1.0);
    return std::array<cd, 2>{-i * (0.5 * detuning * psi[0] + half_rabi_m * psi[1]),
                             -i * (half_rabi_p * psi[0] - 0.5 * detuning * psi[1])};
  };
  std::array<cd, 2> psi{cd(0.0, 0.0), cd(1.0, 0.0)};
  const int steps = 4000;
  const double h = duration / steps;
  for (int s = 0; s < steps; ++s) {
    const auto k1 = deriv(psi);
    const auto mid1 = std::array<cd, 2>{psi[0] + 0.5 * h * k1[0], psi[1] + 0.5 * h * k1[1]};
    const auto k2 = deriv(mid1);
    const auto mid2 = std::array<cd, 2>{psi[0] + 0.5 * h * k2[0], psi[1] + 0.5 * h * k2[1]};
    const auto k3 = deriv(mid2);
    const auto end = std::array<cd, 2>{psi[0] + h * k3[0], psi[1] + h * k3[1]};
    const auto k4 = deriv(end);
    for (int c = 0; c < 2; ++c) {
      psi[c] += h / 6.0 * (k1[c] + 2.0 * k2[c] + 2.0 * k3[c] + k4[c]);
    }
  }
  return std::norm(psi[0]);
}

struct MethodAWorld {
  TrapContext ctx;
  BeamSet beams;
  StrayField field;

  MethodAWorld() {
    ctx.settings.emplace("A", TrapSetting("A", two_pi * Vector3d(1.5e6, 1.5e6, 0.35e6)));
    ctx.settings.emplace("B", TrapSetting("B", two_pi * Vector3d(0.84e6, 0.84e6, 0.35e6)));
    beams.emplace("x", LaserBeam(Vector3d(two_pi / 674e-9, 0.0, 0.0), 0.0, 0.0));
    field = StrayField(Vector3d(-1.0, 0.0, 0.0));
  }

  // phi_PD = Phi_A - Phi_B via the displacement formulas.
  double phi_pd() const {
    const auto& a = ctx.settings.at("A");
    const auto& b = ctx.settings.at("B");
    const Vector3d ra = equilibrium_displacement(ctx.ion, a, field);
    const Vector3d rb = equilibrium_displacement(ctx.ion, b, field);
    return beams.at("x").k.dot(ra - rb);
  }
};

}  // namespace

TEST_CASE("total phase combination") {
  SUBCASE("M = 1 is a plain difference with xi = 0") {
    const double phi[] = {0.7, -0.2};
    const double theta[] = {0.1, 0.4};
    const TotalPhase t = total_phase(phi, theta, 1);
    CHECK(t.phi_t == doctest::Approx(0.9).epsilon(1e-15));
    CHECK(t.theta_t == doctest::Approx(-0.3).epsilon(1e-15));
  }

  SUBCASE("M = 2 with equal phases cancels and gains xi = pi") {
    const double phi[] = {0.3, 0.3, 0.3};
    const double theta[] = {0.0, 0.0, 0.0};
    const TotalPhase t = total_phase(phi, theta, 2);
    CHECK(t.phi_t == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(t.theta_t == doctest::Approx(pi).epsilon(1e-15));
  }

  SUBCASE("alternating Method A phases telescope to M (Phi_A - Phi_B)") {
    RngStream rng(3, "pulse", 0);
    for (int big_m = 1; big_m <= 12; ++big_m) {
      const double phi_a = rng.normal();
      const double phi_b = rng.normal();
      std::vector<double> phi, theta(static_cast<std::size_t>(big_m) + 1, 0.0);
      for (int j = 1; j <= big_m + 1; ++j) {
        phi.push_back(j % 2 == 1 ? phi_a : phi_b);
      }
      const TotalPhase t = total_phase(phi, theta, big_m);
      CHECK(t.phi_t == doctest::Approx(big_m * (phi_a - phi_b)).epsilon(1e-12));
    }
  }

  SUBCASE("length mismatch") {
    const double phi[] = {0.1, 0.2, 0.3};
    const double theta[] = {0.1, 0.2};
    CHECK_THROWS_AS(total_phase(phi, theta, 2), LengthMismatch);
  }
}

TEST_CASE("ideal probability") {
  CHECK(ideal_probability(0.0, 0.0) == doctest::Approx(1.0));
  CHECK(ideal_probability(pi / 2.0, 0.0, 0.3) == doctest::Approx(0.5));
  CHECK(ideal_probability(pi, 0.0, 0.5) == doctest::Approx(0.25));
  CHECK_THROWS_AS(ideal_probability(0.0, 0.0, 1.5), InvalidParameter);
}

TEST_CASE("single pulse propagation") {
  PulseSpec pulse;
  pulse.area = pi;
  pulse.duration = 10e-6;

  SUBCASE("resonant pi pulse inverts the population") {
    const QubitState out = propagate_pulse(ground_state(), pulse, 0.0);
    CHECK(out.bloch[2] == doctest::Approx(1.0).epsilon(1e-12));
  }

  SUBCASE("resonant pi/2 pulse reaches the equator") {
    pulse.area = pi / 2.0;
    const QubitState out = propagate_pulse(ground_state(), pulse, 0.3);
    CHECK(std::abs(out.bloch[2]) < 1e-12);
    CHECK(out.bloch.norm() == doctest::Approx(1.0).epsilon(1e-12));
  }

  SUBCASE("detuned pulse matches the Schrodinger oracle") {
    const double rabi = pi / pulse.duration;
    pulse.detuning = rabi;  // delta = W
    const QubitState out = propagate_pulse(ground_state(), pulse, 0.4);
    const double oracle = schrodinger_excitation(rabi, rabi, 0.4, pulse.duration);
    CHECK(excitation_probability(out) == doctest::Approx(oracle).epsilon(1e-9));
    CHECK(excitation_probability(out) ==
          doctest::Approx(0.5 * std::pow(std::sin(pi / std::sqrt(2.0)), 2)).epsilon(1e-9));
  }

  SUBCASE("random pulse chains stay on the sphere") {
    RngStream rng(5, "pulse", 1);
    QubitState state = ground_state();
    for (int i = 0; i < 200; ++i) {
      PulseSpec p;
      p.area = std::abs(rng.normal()) * pi;
      p.duration = 5e-6;
      p.detuning = rng.normal() * 1e5;
      p.area_error = 1.0 + 0.1 * rng.normal();
      state = propagate_pulse(state, p, rng.normal());
      CHECK(std::abs(state.bloch.norm() - 1.0) < 1e-12);
    }
  }

  SUBCASE("oracle cross-check at random working points") {
    RngStream rng(5, "pulse", 2);
    for (int i = 0; i < 10; ++i) {
      PulseSpec p;
      p.area = std::abs(rng.normal()) * pi;
      p.duration = 8e-6;
      p.detuning = rng.normal() * 2e5;
      const double phase = rng.normal();
      const double rabi = p.area / p.duration;
      const QubitState out = propagate_pulse(ground_state(), p, phase);
      const double oracle = schrodinger_excitation(rabi, p.detuning, phase, p.duration);
      CHECK(excitation_probability(out) == doctest::Approx(oracle).epsilon(1e-9));
    }
  }
}

TEST_CASE("dephasing") {
  QubitState state{Vector3d(0.6, -0.3, 0.74)};

  SUBCASE("infinite T2 is the identity") {
    const QubitState out = apply_dephasing(state, 1.0, std::numeric_limits<double>::infinity());
    CHECK((out.bloch - state.bloch).norm() == 0.0);
  }

  SUBCASE("one T2 shrinks the transverse part by 1/e") {
    const QubitState out = apply_dephasing(state, 2e-4, 2e-4);
    CHECK(out.bloch[0] == doctest::Approx(0.6 / std::exp(1.0)).epsilon(1e-12));
    CHECK(out.bloch[1] == doctest::Approx(-0.3 / std::exp(1.0)).epsilon(1e-12));
    CHECK(out.bloch[2] == doctest::Approx(0.74).epsilon(1e-15));
  }
}

TEST_CASE("run_sequence basics") {
  MethodAWorld world;
  const SequenceTiming timing;

  SUBCASE("zero field, all-zero control phases: xi_M extremum") {
    for (int big_m : {1, 2, 3, 4, 7, 8}) {
      const SequenceSpec seq = make_method_a(big_m, "x", "A", "B", timing);
      const double p = run_sequence(seq, world.ctx, StrayField(), world.beams, NoiseModel{});
      if (big_m % 2 == 1) {
        CHECK(p == doctest::Approx(1.0).epsilon(1e-12));
      } else {
        CHECK(p == doctest::Approx(0.0).epsilon(1e-12));
      }
    }
  }

  SUBCASE("Ramsey fringe at the worked phi_PD") {
    // E_x = -1 V/m over the 1.5 MHz -> 840 kHz stiffness drop gives
    // phi_PD = +0.2518 rad for the 674 nm beam along x.
    const double phi_pd = world.phi_pd();
    CHECK(phi_pd == doctest::Approx(0.2518).epsilon(1e-3));
    const std::vector<double> theta = plain_control_phases(1, -pi / 2.0);
    const SequenceSpec seq = make_method_a(1, "x", "A", "B", timing, theta);
    const double p = run_sequence(seq, world.ctx, world.field, world.beams, NoiseModel{});
    CHECK(p == doctest::Approx(0.5 * (1.0 + std::sin(phi_pd))).epsilon(1e-9));
    CHECK(p == doctest::Approx(0.6246).epsilon(1e-3));
  }

  SUBCASE("unknown ids") {
    const SequenceSpec seq = make_method_a(1, "nope", "A", "B", timing);
    CHECK_THROWS_AS(run_sequence(seq, world.ctx, world.field, world.beams, NoiseModel{}),
                    UnknownId);
    const SequenceSpec seq2 = make_method_a(1, "x", "A", "missing", timing);
    CHECK_THROWS_AS(run_sequence(seq2, world.ctx, world.field, world.beams, NoiseModel{}),
                    UnknownId);
  }
}

TEST_CASE("closed-form equivalence for randomized sequences") {
  MethodAWorld world;
  RngStream rng(9, "pulse", 3);
  const SequenceTiming timing;

  for (int trial = 0; trial < 60; ++trial) {
    const int big_m = 1 + static_cast<int>(rng.uniform() * 32.0);
    std::vector<double> theta;
    for (int j = 0; j <= big_m; ++j) {
      theta.push_back(rng.normal());
    }
    const StrayField field(Vector3d(2.0 * rng.normal(), 2.0 * rng.normal(), rng.normal()));
    const SequenceSpec seq = make_method_a(big_m, "x", "A", "B", timing, theta);
    const double p_full = run_sequence(seq, world.ctx, field, world.beams, NoiseModel{});

    // Independent route: spatial phases fed through the alternating-sign
    // combination and the cosine response.
    const Vector3d ra = equilibrium_displacement(world.ctx.ion, world.ctx.settings.at("A"), field);
    const Vector3d rb = equilibrium_displacement(world.ctx.ion, world.ctx.settings.at("B"), field);
    std::vector<double> phi;
    for (int j = 1; j <= big_m + 1; ++j) {
      phi.push_back(field_phase_at(world.beams.at("x"), j % 2 == 1 ? ra : rb));
    }
    const TotalPhase t = total_phase(phi, theta, big_m);
    CHECK(p_full == doctest::Approx(ideal_probability(t.phi_t, t.theta_t)).epsilon(1e-9));
  }
}

TEST_CASE("fringe frequency is exactly M") {
  MethodAWorld world;
  const SequenceTiming timing;
  // Calibration: phi_PD per unit E_x.
  const double phi_per_field = world.phi_pd() / world.field.field[0];

  const int grid = 512;
  auto crossings = [&](int big_m) {
    const std::vector<double> theta = plain_control_phases(big_m, -pi / 2.0);
    const SequenceSpec seq = make_method_a(big_m, "x", "A", "B", timing, theta);
    int count = 0;
    double prev = 0.0;
    for (int i = 0; i < grid; ++i) {
      const double phi = -pi + (i + 0.5) * two_pi / grid;
      const StrayField field(Vector3d(phi / phi_per_field, 0.0, 0.0));
      const double p = run_sequence(seq, world.ctx, field, world.beams, NoiseModel{});
      const double s = p - 0.5;
      if (i > 0 && ((s > 0.0 && prev < 0.0) || (s < 0.0 && prev > 0.0))) ++count;
      prev = s;
    }
    return count;
  };

  const int base = crossings(1);
  CHECK(base == 1);  // sin(phi) changes sign once inside (-pi, pi)
  for (int big_m : {2, 4, 8}) {
    CHECK(crossings(big_m) == 2 * big_m - 1);
  }
}

TEST_CASE("dephasing reduces contrast by exp(-exposure/T2)") {
  MethodAWorld world;
  SequenceTiming timing;
  timing.pi_time = 10e-6;
  timing.inter_pulse_wait = 50e-6;
  NoiseModel noise;
  noise.t2 = 300e-6;

  for (int big_m : {1, 2, 4}) {
    const SequenceSpec seq0 = make_method_a(big_m, "x", "A", "B", timing,
                                            plain_control_phases(big_m, 0.0));
    const SequenceSpec seq_pi = make_method_a(big_m, "x", "A", "B", timing,
                                              plain_control_phases(big_m, pi));
    const double p0 = run_sequence(seq0, world.ctx, StrayField(), world.beams, noise);
    const double p_pi = run_sequence(seq_pi, world.ctx, StrayField(), world.beams, noise);
    const double contrast = p0 - p_pi;
    CHECK(contrast ==
          doctest::Approx(std::exp(-transverse_exposure(seq0) / noise.t2)).epsilon(1e-12));
  }
}

TEST_CASE("detuning precesses during waits (Ramsey fringe shift)") {
  MethodAWorld world;
  SequenceTiming timing;
  timing.pi_time = 1e-6;  // short pulses so the wait dominates
  timing.inter_pulse_wait = 100e-6;
  NoiseModel noise;
  noise.detuning = 2.0 * 1e3 * two_pi * 0.01;  // small

  const SequenceSpec seq =
      make_method_a(1, "x", "A", "B", timing, plain_control_phases(1, -pi / 2.0));
  const double p = run_sequence(seq, world.ctx, StrayField(), world.beams, noise);
  // Expected fringe shift ~ detuning * wait.
  const double expected = 0.5 * (1.0 + std::sin(noise.detuning * timing.inter_pulse_wait));
  CHECK(p == doctest::Approx(expected).epsilon(5e-3));
}

TEST_CASE("Method B ignores common beam phase offsets") {
  TrapContext ctx;
  ctx.settings.emplace("A", TrapSetting("A", two_pi * Vector3d(1.5e6, 1.6e6, 1.0e6)));
  ctx.settings.emplace("B", TrapSetting("B", two_pi * Vector3d(0.8e6, 0.95e6, 1.0e6)));
  const StrayField field(Vector3d(0.8, -1.1, 0.4));
  NoiseModel noise;
  noise.detuning = 3e3;
  noise.area_error_even = 1.07;

  const SequenceTiming timing;
  const SequenceSpec seq = make_method_b(4, "alpha", "beta", "A", timing,
                                         plain_control_phases(4, -pi / 2.0));
  auto probability = [&](double common_offset) {
    BeamSet beams;
    beams.emplace("alpha", beam_at_angle(pi / 4.0, 674e-9, 0.31 + common_offset));
    beams.emplace("beta", beam_at_angle(-pi / 4.0, 674e-9, -1.27 + common_offset));
    return run_sequence(seq, ctx, field, beams, noise);
  };

  const double base = probability(0.0);
  for (double offset : {0.5, 2.9, -14.0}) {
    CHECK(probability(offset) == doctest::Approx(base).epsilon(1e-10));
  }
}

TEST_CASE("Method C subset structure realizes the tunable phase") {
  TrapContext ctx;
  ctx.settings.emplace("A", TrapSetting("A", two_pi * Vector3d(1.5e6, 1.6e6, 1.0e6)));
  ctx.settings.emplace("B", TrapSetting("B", two_pi * Vector3d(0.7e6, 0.9e6, 1.0e6)));
  BeamSet beams;
  beams.emplace("alpha", beam_at_angle(pi / 4.0, 674e-9, 0.2));
  beams.emplace("beta", beam_at_angle(-pi / 4.0, 674e-9, -0.5));
  const StrayField field(Vector3d(0.15, -0.1, 0.0));
  const SequenceTiming timing;

  const Vector3d ra = equilibrium_displacement(ctx.ion, ctx.settings.at("A"), field);
  const Vector3d rb = equilibrium_displacement(ctx.ion, ctx.settings.at("B"), field);
  const double alpha_diff =
      field_phase_at(beams.at("alpha"), ra) - field_phase_at(beams.at("alpha"), rb);
  const double beta_diff =
      field_phase_at(beams.at("beta"), ra) - field_phase_at(beams.at("beta"), rb);

  struct Case {
    int m_alpha, m_beta;
    bool minus;
  };
  // Even M needs even subset counts (interior pulses carry weight 2).
  for (const Case c : {Case{2, 2, false}, Case{3, 2, false}, Case{2, 3, false}, Case{4, 0, false},
                       Case{1, 2, false}, Case{2, 2, true}, Case{3, 2, true}}) {
    const SequenceSpec seq = make_method_c(c.m_alpha, c.m_beta, c.minus, "alpha", "beta", "A",
                                           "B", timing);
    const double p = run_sequence(seq, ctx, field, beams, NoiseModel{});
    const double sign = c.minus ? -1.0 : 1.0;
    const double phi_t = c.m_alpha * alpha_diff + sign * c.m_beta * beta_diff;
    const int big_m = c.m_alpha + c.m_beta;
    CHECK(p == doctest::Approx(ideal_probability(phi_t, xi_m(big_m))).epsilon(1e-9));
  }

  // Even M with odd subset counts cannot satisfy the even-slot parity.
  CHECK_THROWS_AS(make_method_c(1, 1, false, "alpha", "beta", "A", "B", timing),
                  InvalidParameter);
  CHECK_THROWS_AS(make_method_c(3, 1, false, "alpha", "beta", "A", "B", timing),
                  InvalidParameter);
}

TEST_CASE("projection sampling endpoints") {
  RngStream rng(1, "pulse", 4);
  CHECK(sample_measurements(0.0, 500, rng) == 0);
  CHECK(sample_measurements(1.0, 100, rng) == 100);
  CHECK_THROWS_AS(sample_measurements(1.2, 10, rng), InvalidParameter);
}
