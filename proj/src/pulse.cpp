#include "trapcal/pulse.hpp"

#include <cmath>

#include "trapcal/angles.hpp"
#include "trapcal/errors.hpp"

namespace trapcal {

TotalPhase total_phase(std::span<const double> phi, std::span<const double> theta, int big_m) {
  if (big_m < 1) {
    throw InvalidParameter("sequence length M must be >= 1");
  }
  const std::size_t n = static_cast<std::size_t>(big_m) + 1;
  if (phi.size() != n || theta.size() != n) {
    throw LengthMismatch("phase lists must have length M+1");
  }
  TotalPhase out;
  out.phi_t = phi[0];
  out.theta_t = theta[0];
  for (int j = 2; j <= big_m; ++j) {
    const double c = (j % 2 == 0) ? -2.0 : 2.0;  // 2 (-1)^(j-1)
    out.phi_t += c * phi[j - 1];
    out.theta_t += c * theta[j - 1];
  }
  const double c_last = (big_m % 2 == 0) ? 1.0 : -1.0;
  out.phi_t += c_last * phi[big_m];
  out.theta_t += c_last * theta[big_m] + xi_m(big_m);
  return out;
}

double ideal_probability(double phi_t, double theta_t, double contrast) {
  if (contrast < 0.0 || contrast > 1.0) {
    throw InvalidParameter("contrast must be in [0, 1]");
  }
  return 0.5 * (1.0 + contrast * std::cos(phi_t + theta_t));
}

namespace {

QubitState rotate(const QubitState& state, const Eigen::Vector3d& axis, double angle) {
  const Eigen::Vector3d& r = state.bloch;
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  return {r * c + axis.cross(r) * s + axis * (axis.dot(r) * (1.0 - c))};
}

}  // namespace

QubitState propagate_pulse(const QubitState& state, const PulseSpec& pulse,
                           double laser_phase_total) {
  if (pulse.duration < 0.0 || pulse.area < 0.0) {
    throw InvalidParameter("pulse area and duration must be non-negative");
  }
  const double cp = std::cos(laser_phase_total);
  const double sp = std::sin(laser_phase_total);
  if (pulse.duration == 0.0) {
    const double angle = pulse.area_error * pulse.area;
    if (angle == 0.0) return state;
    return rotate(state, Eigen::Vector3d(cp, sp, 0.0), angle);
  }
  const double rabi = pulse.area_error * pulse.area / pulse.duration;
  const double generalized = std::hypot(rabi, pulse.detuning);
  if (generalized == 0.0) return state;
  const Eigen::Vector3d axis(rabi * cp / generalized, rabi * sp / generalized,
                             pulse.detuning / generalized);
  return rotate(state, axis, generalized * pulse.duration);
}

QubitState apply_dephasing(const QubitState& state, double wait, double t2) {
  if (wait < 0.0) {
    throw InvalidParameter("wait must be non-negative");
  }
  if (!(t2 > 0.0)) {
    throw InvalidParameter("T2 must be positive");
  }
  const double decay = std::exp(-wait / t2);
  return {Eigen::Vector3d(state.bloch[0] * decay, state.bloch[1] * decay, state.bloch[2])};
}

double run_sequence(const SequenceSpec& seq, const TrapContext& ctx, const StrayField& field,
                    const BeamSet& beams, const NoiseModel& noise) {
  if (seq.big_m < 1) {
    throw InvalidParameter("sequence length M must be >= 1");
  }
  if (seq.pulses.size() != static_cast<std::size_t>(seq.big_m) + 1) {
    throw InvalidParameter("sequence must contain M+1 pulses");
  }
  if (!(noise.t2 > 0.0)) {
    throw InvalidParameter("T2 must be positive");
  }
  QubitState state = ground_state();
  for (int j = 1; j <= seq.big_m + 1; ++j) {
    const PulseSpec& nominal = seq.pulses[static_cast<std::size_t>(j) - 1];
    const auto beam_it = beams.find(nominal.beam_id);
    if (beam_it == beams.end()) {
      throw UnknownId("unknown beam id '" + nominal.beam_id + "'");
    }
    const auto setting_it = ctx.settings.find(nominal.trap_setting_id);
    if (setting_it == ctx.settings.end()) {
      throw UnknownId("unknown trap setting id '" + nominal.trap_setting_id + "'");
    }
    const Eigen::Vector3d position =
        equilibrium_displacement(ctx.ion, setting_it->second, field);
    const double laser_phase =
        field_phase_at(beam_it->second, position) + nominal.control_phase;

    PulseSpec effective = nominal;
    effective.area_error *= (j % 2 == 0) ? noise.area_error_even : noise.area_error_odd;
    effective.detuning += noise.detuning;
    state = propagate_pulse(state, effective, laser_phase);
    state = apply_dephasing(state, nominal.duration, noise.t2);

    if (j <= seq.big_m && seq.inter_pulse_wait > 0.0) {
      PulseSpec free_precession;
      free_precession.duration = seq.inter_pulse_wait;
      free_precession.detuning = noise.detuning;
      state = propagate_pulse(state, free_precession, 0.0);
      state = apply_dephasing(state, seq.inter_pulse_wait, noise.t2);
    }
  }
  return excitation_probability(state);
}

long sample_measurements(double p, long n, RngStream& rng) {
  if (p < 0.0 || p > 1.0 || n < 0) {
    throw InvalidParameter("sample_measurements requires p in [0, 1] and n >= 0");
  }
  return rng.binomial(n, p);
}

double transverse_exposure(const SequenceSpec& seq) {
  double exposure = 0.0;
  for (int j = 1; j <= seq.big_m; ++j) {
    exposure += seq.pulses[static_cast<std::size_t>(j) - 1].duration;
  }
  exposure += seq.big_m * seq.inter_pulse_wait;
  return exposure;
}

namespace {

std::vector<double> resolve_control_phases(int big_m, std::span<const double> control_phases) {
  if (control_phases.empty()) {
    return std::vector<double>(static_cast<std::size_t>(big_m) + 1, 0.0);
  }
  if (control_phases.size() != static_cast<std::size_t>(big_m) + 1) {
    throw LengthMismatch("control phases must have length M+1");
  }
  return {control_phases.begin(), control_phases.end()};
}

PulseSpec basic_pulse(const std::string& beam, const std::string& setting, double area,
                      double theta, const SequenceTiming& timing) {
  PulseSpec p;
  p.beam_id = beam;
  p.trap_setting_id = setting;
  p.area = area;
  p.control_phase = theta;
  p.duration = timing.pi_time * area / pi;
  return p;
}

}  // namespace

SequenceSpec make_method_a(int big_m, const std::string& beam, const std::string& setting_a,
                           const std::string& setting_b, const SequenceTiming& timing,
                           std::span<const double> control_phases) {
  if (big_m < 1) {
    throw InvalidParameter("sequence length M must be >= 1");
  }
  const std::vector<double> theta = resolve_control_phases(big_m, control_phases);
  SequenceSpec seq;
  seq.method = Method::A;
  seq.big_m = big_m;
  seq.inter_pulse_wait = timing.inter_pulse_wait;
  for (int j = 1; j <= big_m + 1; ++j) {
    const double area = (j == 1 || j == big_m + 1) ? pi / 2.0 : pi;
    const std::string& setting = (j % 2 == 1) ? setting_a : setting_b;
    seq.pulses.push_back(
        basic_pulse(beam, setting, area, theta[static_cast<std::size_t>(j) - 1], timing));
  }
  return seq;
}

SequenceSpec make_method_b(int big_m, const std::string& beam_alpha, const std::string& beam_beta,
                           const std::string& setting, const SequenceTiming& timing,
                           std::span<const double> control_phases) {
  if (big_m < 1) {
    throw InvalidParameter("sequence length M must be >= 1");
  }
  const std::vector<double> theta = resolve_control_phases(big_m, control_phases);
  SequenceSpec seq;
  seq.method = Method::B;
  seq.big_m = big_m;
  seq.inter_pulse_wait = timing.inter_pulse_wait;
  for (int j = 1; j <= big_m + 1; ++j) {
    const double area = (j == 1 || j == big_m + 1) ? pi / 2.0 : pi;
    const std::string& beam = (j % 2 == 1) ? beam_alpha : beam_beta;
    seq.pulses.push_back(
        basic_pulse(beam, setting, area, theta[static_cast<std::size_t>(j) - 1], timing));
  }
  return seq;
}

namespace {

// Slots of one parity class, in index order: coefficient magnitude 1 for the
// end pulses (area pi/2) and 2 for interior pulses (area pi). Picks how many
// unit and double slots go to the alpha beam so their magnitudes sum to
// m_alpha; the rest go to beta.
struct ParityAssignment {
  int alpha_units = 0;
  int alpha_doubles = 0;
};

ParityAssignment split_slots(int units, int doubles, int m_alpha, int m_beta) {
  for (int u = m_alpha % 2; u <= units; u += 2) {
    const int d = (m_alpha - u) / 2;
    if (d < 0 || d > doubles) continue;
    // Remaining slots must realize m_beta; totals guarantee it when d fits.
    if ((units - u) + 2 * (doubles - d) == m_beta) {
      return {u, d};
    }
  }
  throw InvalidParameter("no Method C pulse assignment realizes the subset areas");
}

}  // namespace

SequenceSpec make_method_c(int m_alpha, int m_beta, bool minus, const std::string& beam_alpha,
                           const std::string& beam_beta, const std::string& setting_a,
                           const std::string& setting_b, const SequenceTiming& timing,
                           std::span<const double> control_phases) {
  if (m_alpha < 0 || m_beta < 0 || m_alpha + m_beta < 1) {
    throw InvalidParameter("Method C subset counts must be non-negative with M >= 1");
  }
  const int big_m = m_alpha + m_beta;
  const std::vector<double> theta = resolve_control_phases(big_m, control_phases);

  // Collect pulse indices per parity class.
  std::vector<int> odd_units, odd_doubles, even_units, even_doubles;
  for (int j = 1; j <= big_m + 1; ++j) {
    const bool unit = (j == 1 || j == big_m + 1);
    if (j % 2 == 1) {
      (unit ? odd_units : odd_doubles).push_back(j);
    } else {
      (unit ? even_units : even_doubles).push_back(j);
    }
  }
  const ParityAssignment odd = split_slots(static_cast<int>(odd_units.size()),
                                           static_cast<int>(odd_doubles.size()), m_alpha, m_beta);
  const ParityAssignment even = split_slots(static_cast<int>(even_units.size()),
                                            static_cast<int>(even_doubles.size()), m_alpha, m_beta);

  std::vector<bool> is_alpha(static_cast<std::size_t>(big_m) + 2, false);
  auto mark = [&is_alpha](const std::vector<int>& slots, int count) {
    for (int i = 0; i < count; ++i) is_alpha[static_cast<std::size_t>(slots[i])] = true;
  };
  mark(odd_units, odd.alpha_units);
  mark(odd_doubles, odd.alpha_doubles);
  mark(even_units, even.alpha_units);
  mark(even_doubles, even.alpha_doubles);

  SequenceSpec seq;
  seq.method = Method::C;
  seq.big_m = big_m;
  seq.inter_pulse_wait = timing.inter_pulse_wait;
  for (int j = 1; j <= big_m + 1; ++j) {
    const double area = (j == 1 || j == big_m + 1) ? pi / 2.0 : pi;
    const bool alpha = is_alpha[static_cast<std::size_t>(j)];
    const bool odd_index = (j % 2 == 1);
    // Plus form: stiffness A on odd indices for both beams. Minus form swaps
    // the beta subsets' stiffness parity, flipping the sign of its phase term.
    bool at_a = odd_index;
    if (minus && !alpha) at_a = !odd_index;
    seq.pulses.push_back(basic_pulse(alpha ? beam_alpha : beam_beta, at_a ? setting_a : setting_b,
                                     area, theta[static_cast<std::size_t>(j) - 1], timing));
  }
  return seq;
}

std::vector<double> plain_control_phases(int big_m, double theta_t_target) {
  if (big_m < 1) {
    throw InvalidParameter("sequence length M must be >= 1");
  }
  std::vector<double> theta(static_cast<std::size_t>(big_m) + 1, 0.0);
  theta[0] = theta_t_target - xi_m(big_m);
  return theta;
}

}  // namespace trapcal
