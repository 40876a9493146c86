#pragma once

#include <span>
#include <vector>

#include "trapcal/constants.hpp"

namespace trapcal {

enum class EstimatorTag {
  arcsin,
  arctan2,
  arctan2_offset,
  settingsI,
  settingsII,
  settingsIII,
  averagedI_II,
  rpe,
};

struct PhaseEstimate {
  double value = 0.0;            // rad, within [-range_halfwidth, range_halfwidth]
  double range_halfwidth = pi;   // rad; pi/M for a length-M sequence
  long samples_used = 0;
  EstimatorTag tag = EstimatorTag::arctan2;
  bool clamped = false;  // arcsin argument was clipped to [-1, 1]
};

// phi_T = arcsin[(p(-pi/2) - p(+pi/2)) / (C (p(-pi/2) + p(+pi/2)))], range pi/2.
// Finite-N sampling can push the argument slightly outside [-1, 1]; it is
// clamped and flagged rather than rejected.
PhaseEstimate estimate_arcsin(double p_minus, double p_plus, double contrast, long samples = 1);

// phi_T = arctan2[p(-pi/2) - 1/2, p(0) - 1/2], range pi. Throws
// UndefinedEstimate when both probabilities are exactly 1/2.
PhaseEstimate estimate_arctan2(double p_mhalf, double p_zero, long samples = 1);

// phi_T = arctan2[p(pi/4) - 1/2, p(3pi/4) - 1/2] - 3pi/4, wrapped to [-pi, pi).
// Minimum statistical uncertainty sits at phi_T = 0.
PhaseEstimate estimate_arctan2_offset(double p_quarter, double p_three_quarter, long samples = 1);

enum class SettingsTag { plain, I, II, III };

// Control phase lists {theta_j}, length M+1. Settings I/II/III require even M:
//   I:   0 on even j, -pi/2 on interior odd j, pi on the last pulse
//   II:  0 on even j, +pi/2 on interior odd j, pi on the last pulse
//   III: pi/2 on even j, -pi/2 on interior odd j, pi on the last pulse
// `plain` is theta_1 on the first pulse and zero elsewhere.
std::vector<double> control_phases(SettingsTag tag, int big_m, double theta_1);

// Reconstruction from runs at theta_1 = pi/2 and theta_1 = pi. Settings I and
// II share the sign-corrected form
//   phi_T = arctan2[(-1)^(M/2) (p(pi/2) - 1/2), (-1)^(M/2) (p(pi) - 1/2)]
// while settings III drops the sign factors.
PhaseEstimate estimate_settings(double p_half, double p_pi, int big_m, SettingsTag tag,
                                long samples = 1);

// Circular mean of the settings I and II estimates.
PhaseEstimate average_i_ii(const PhaseEstimate& est_i, const PhaseEstimate& est_ii);

// Restate a phi_T estimate as a phi_PD estimate for a length-M sequence:
// value and halfwidth divided by M.
PhaseEstimate scale_to_sequence(const PhaseEstimate& phi_t_estimate, int big_m);

struct RpeSchedule {
  RpeSchedule(int j_max_, std::vector<long> samples_per_pass_);

  // Equal pass counts, the simplest schedule.
  static RpeSchedule equal(int j_max, long samples_per_pass);

  int j_max;
  std::vector<long> samples_per_pass;  // N_j, positive and even

  int sequence_length(int pass) const { return 1 << (pass - 1); }  // M_j = 2^(j-1)
  double total_pulse_area() const;                                 // rad
};

// Combine per-pass estimates (pass j has halfwidth pi/2^(j-1)): each pass's
// value is shifted by multiples of twice its halfwidth until it falls within
// one halfwidth of the running estimate. Throws BadSchedule when the
// halfwidths do not form the pi/2^(j-1) ladder.
double rpe_combine(std::span<const PhaseEstimate> per_pass_estimates);

// Standard quantum limit sqrt(pi / A) for total pulse area A.
double sql_bound(double total_pulse_area);

}  // namespace trapcal
