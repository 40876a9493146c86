#pragma once

#include <complex>
#include <span>
#include <vector>

namespace trapcal {

// Single-pole complex envelope of the trap's resonant drive circuit near
// resonance. tau is the amplitude time constant; when both resonance and
// quality factor are given they must be consistent with tau = 2Q/w0 to
// within 20%.
struct ResonatorParams {
  explicit ResonatorParams(double tau_s, double resonance_rad_s = 0.0, double q_factor = 0.0);

  double tau;        // s
  double resonance;  // rad/s, 0 = unspecified
  double q_factor;   // 0 = unspecified
};

// Switch from source 1 (relative amplitude a1, phase 0) to source 2
// (amplitude a2, phase delta_phi) at t_switch, and back at t_revert.
struct SourceSwitch {
  SourceSwitch(double a1_, double a2_, double delta_phi_, double t_switch_, double t_revert_);

  double a1;
  double a2;
  double delta_phi;  // rad
  double t_switch;   // s
  double t_revert;   // s
};

// Envelope b(t): a1 before the switch, then an exponential approach to
// a2 e^(i delta_phi), then back toward a1 after the revert, continuous at both
// instants.
std::complex<double> envelope(const ResonatorParams& params, const SourceSwitch& sw, double t);

double envelope_magnitude(const ResonatorParams& params, const SourceSwitch& sw, double t);

// Smallest time after t_switch from which ||b(t)| - a2| stays within
// tolerance * a2 (the revert transient is not part of the settling question).
// Solved in closed form from the envelope quadratic; returns infinity when the
// threshold is unreachable.
double settle_time(const ResonatorParams& params, const SourceSwitch& sw, double tolerance);

// Global minimum of |b(t)| over t >= t_switch.
double dropout_depth(const ResonatorParams& params, const SourceSwitch& sw);

// True when the transient dips below the given trap-stability floor.
bool ion_loss_risk(const ResonatorParams& params, const SourceSwitch& sw, double floor);

enum class ServoMode { two_source, stabilized, ramped };

// Envelope sampled on an increasing time grid. two_source and stabilized use
// the closed form; ramped integrates db/dt = (s(t) - b)/tau with the setpoint
// ramping linearly over ramp_time at each switch instant.
std::vector<std::complex<double>> envelope_series(const ResonatorParams& params,
                                                  const SourceSwitch& sw, ServoMode mode,
                                                  double ramp_time, std::span<const double> times);

}  // namespace trapcal
