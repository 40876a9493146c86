#pragma once

#include <Eigen/Dense>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "trapcal/rng.hpp"
#include "trapcal/trap.hpp"

namespace trapcal {

struct QubitState {
  Eigen::Vector3d bloch;  // (u, v, w); w = +1 is |e>, w = -1 is |g>
};

inline QubitState ground_state() { return {Eigen::Vector3d(0.0, 0.0, -1.0)}; }

inline double excitation_probability(const QubitState& state) {
  return std::clamp(0.5 * (state.bloch[2] + 1.0), 0.0, 1.0);
}

struct PulseSpec {
  std::string beam_id;
  std::string trap_setting_id;
  double area = 0.0;           // rad
  double control_phase = 0.0;  // theta_j, rad
  double detuning = 0.0;       // rad/s, per-pulse source offset
  double duration = 0.0;       // s
  double area_error = 1.0;     // multiplicative, 1 = ideal
};

struct SequenceSpec {
  Method method = Method::A;
  int big_m = 1;                  // M; the sequence has M+1 pulses, total area M pi
  std::vector<PulseSpec> pulses;  // ordered, 1-based indexing in the maths
  double inter_pulse_wait = 0.0;  // s, settling time between pulses
};

struct NoiseModel {
  double t2 = std::numeric_limits<double>::infinity();  // s
  double area_error_even = 1.0;  // extra factor on even-indexed pulses (1-based)
  double area_error_odd = 1.0;
  double detuning = 0.0;  // rad/s, laser-atom offset; also precesses during waits
  bool projection_sampling = false;
};

struct TrapContext {
  IonSpecies ion = make_sr88();
  std::map<std::string, TrapSetting> settings;
};

using BeamSet = std::map<std::string, LaserBeam>;

struct TotalPhase {
  double phi_t = 0.0;
  double theta_t = 0.0;
};

// Sequence-level phases
//   phi_T   = phi_1 + 2 sum_{j=2..M} (-1)^(j-1) phi_j + (-1)^M phi_{M+1}
//   theta_T = same combination of theta_j, plus xi_M (pi for even M, else 0).
TotalPhase total_phase(std::span<const double> phi, std::span<const double> theta, int big_m);

inline double xi_m(int big_m) { return big_m % 2 == 0 ? pi : 0.0; }

// p = (1 + C cos(phi_T + theta_T)) / 2
double ideal_probability(double phi_t, double theta_t, double contrast = 1.0);

// Rotate the Bloch vector about ((cos phi) W', (sin phi) W', delta)/W_gen by
// angle W_gen * duration, where W' = area_error * area / duration and
// W_gen = sqrt(W'^2 + delta^2). A zero-duration pulse rotates by
// area_error * area about the equatorial axis at azimuth phi.
QubitState propagate_pulse(const QubitState& state, const PulseSpec& pulse,
                           double laser_phase_total);

// Transverse decay: (u, v) scaled by exp(-wait / t2), w unchanged.
QubitState apply_dephasing(const QubitState& state, double wait, double t2);

// Execute the sequence from |g>: each pulse rotates about the axis set by the
// spatial laser phase at the equilibrium position of its trap setting plus its
// control phase; dephasing acts over pulse durations and waits; the global
// noise detuning precesses the state during waits. Returns the final
// excitation probability.
double run_sequence(const SequenceSpec& seq, const TrapContext& ctx, const StrayField& field,
                    const BeamSet& beams, const NoiseModel& noise);

// Binomial projection-noise draw.
long sample_measurements(double p, long n, RngStream& rng);

// Total time the model exposes transverse coherence to dephasing for a
// sequence of equal-Rabi pulses: pulses 1..M plus all M waits. The resulting
// fringe contrast is exp(-exposure / t2).
double transverse_exposure(const SequenceSpec& seq);

struct SequenceTiming {
  double pi_time = 10e-6;          // s, duration of a pi pulse
  double inter_pulse_wait = 50e-6;  // s
};

// Sequence builders. Control phases must have length M+1 (empty = all zero).
// Method A: one beam, trap setting alternating A, B, A, ... per pulse.
SequenceSpec make_method_a(int big_m, const std::string& beam, const std::string& setting_a,
                           const std::string& setting_b, const SequenceTiming& timing = {},
                           std::span<const double> control_phases = {});

// Method B: fixed trap setting, beams alternating alpha, beta, alpha, ...
SequenceSpec make_method_b(int big_m, const std::string& beam_alpha, const std::string& beam_beta,
                           const std::string& setting, const SequenceTiming& timing = {},
                           std::span<const double> control_phases = {});

// Method C: four pulse subsets (alpha/beta beams at settings A/B) with subset
// areas M_alpha pi/2 and M_beta pi/2; `minus` swaps the beta subsets' parity.
// Throws InvalidParameter when no pulse assignment realizes the subset areas.
SequenceSpec make_method_c(int m_alpha, int m_beta, bool minus, const std::string& beam_alpha,
                           const std::string& beam_beta, const std::string& setting_a,
                           const std::string& setting_b, const SequenceTiming& timing = {},
                           std::span<const double> control_phases = {});

// All-zero control phases except theta_1, chosen so that theta_T equals the
// requested value.
std::vector<double> plain_control_phases(int big_m, double theta_t_target);

}  // namespace trapcal
