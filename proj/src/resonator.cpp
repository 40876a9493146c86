#include "trapcal/resonator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "trapcal/errors.hpp"

namespace trapcal {

ResonatorParams::ResonatorParams(double tau_s, double resonance_rad_s, double q_factor_)
    : tau(tau_s), resonance(resonance_rad_s), q_factor(q_factor_) {
  if (!(tau > 0.0)) {
    throw InvalidParameter("resonator time constant must be positive");
  }
  if (resonance < 0.0 || q_factor < 0.0) {
    throw InvalidParameter("resonance and Q must be non-negative");
  }
  if (resonance > 0.0 && q_factor > 0.0) {
    const double tau_from_q = 2.0 * q_factor / resonance;
    if (std::abs(tau - tau_from_q) > 0.2 * tau_from_q) {
      throw InvalidParameter("tau inconsistent with 2Q/w0 beyond 20%");
    }
  }
}

SourceSwitch::SourceSwitch(double a1_, double a2_, double delta_phi_, double t_switch_,
                           double t_revert_)
    : a1(a1_), a2(a2_), delta_phi(delta_phi_), t_switch(t_switch_), t_revert(t_revert_) {
  if (a1 < 0.0 || a2 < 0.0) {
    throw InvalidParameter("source amplitudes must be non-negative");
  }
  if (!(t_revert > t_switch)) {
    throw InvalidParameter("t_revert must be after t_switch");
  }
}

namespace {

std::complex<double> source2_target(const SourceSwitch& sw) {
  return std::polar(sw.a2, sw.delta_phi);
}

std::complex<double> envelope_at_revert(const ResonatorParams& params, const SourceSwitch& sw) {
  const std::complex<double> target = source2_target(sw);
  const double g = std::exp(-(sw.t_revert - sw.t_switch) / params.tau);
  return target + (std::complex<double>(sw.a1, 0.0) - target) * g;
}

// |start + (end - start) g|^2 as a quadratic alpha g^2 + beta g + gamma,
// written for the decay b(g) = limit + offset g with g = exp(-dt/tau).
struct EnvelopeQuadratic {
  double alpha;
  double beta;
  double gamma;

  double eval(double g) const { return (alpha * g + beta) * g + gamma; }
};

EnvelopeQuadratic segment_quadratic(const std::complex<double>& limit,
                                    const std::complex<double>& offset) {
  return {std::norm(offset), 2.0 * (std::conj(limit) * offset).real(), std::norm(limit)};
}

// Minimum of sqrt(quadratic) over g in [g_lo, g_hi].
double segment_min_abs(const EnvelopeQuadratic& q, double g_lo, double g_hi) {
  double best = std::min(q.eval(g_lo), q.eval(g_hi));
  if (q.alpha > 0.0) {
    const double g_vertex = -q.beta / (2.0 * q.alpha);
    if (g_vertex > g_lo && g_vertex < g_hi) {
      best = std::min(best, q.eval(g_vertex));
    }
  }
  return std::sqrt(std::max(best, 0.0));
}

}  // namespace

std::complex<double> envelope(const ResonatorParams& params, const SourceSwitch& sw, double t) {
  if (t < sw.t_switch) {
    return {sw.a1, 0.0};
  }
  const std::complex<double> target = source2_target(sw);
  if (t < sw.t_revert) {
    const double g = std::exp(-(t - sw.t_switch) / params.tau);
    return target + (std::complex<double>(sw.a1, 0.0) - target) * g;
  }
  const std::complex<double> at_revert = envelope_at_revert(params, sw);
  const double g = std::exp(-(t - sw.t_revert) / params.tau);
  return std::complex<double>(sw.a1, 0.0) + (at_revert - std::complex<double>(sw.a1, 0.0)) * g;
}

double envelope_magnitude(const ResonatorParams& params, const SourceSwitch& sw, double t) {
  return std::abs(envelope(params, sw, t));
}

double settle_time(const ResonatorParams& params, const SourceSwitch& sw, double tolerance) {
  if (!(tolerance > 0.0) || !(tolerance < 1.0)) {
    throw InvalidParameter("settle tolerance must be in (0, 1)");
  }
  const double threshold = tolerance * sw.a2;
  const std::complex<double> target = source2_target(sw);
  const std::complex<double> offset = std::complex<double>(sw.a1, 0.0) - target;
  if (std::abs(offset) == 0.0) {
    return 0.0;  // no step at all
  }
  if (threshold == 0.0) {
    return std::numeric_limits<double>::infinity();
  }
  const EnvelopeQuadratic q = segment_quadratic(target, offset);

  // | |b| - a2 | = threshold  <=>  |b|^2 = (a2 +/- threshold)^2. The latest
  // crossing in g in (0, 1] bounds the settling; afterwards the deviation
  // decays to zero.
  double smallest_g = std::numeric_limits<double>::infinity();
  for (const double boundary : {sw.a2 + threshold, sw.a2 - threshold}) {
    if (boundary < 0.0) continue;
    const double a = q.alpha;
    const double b = q.beta;
    const double c = q.gamma - boundary * boundary;
    if (a == 0.0) continue;
    const double disc = b * b - 4.0 * a * c;
    if (disc < 0.0) continue;
    const double sq = std::sqrt(disc);
    for (const double g : {(-b - sq) / (2.0 * a), (-b + sq) / (2.0 * a)}) {
      if (g > 0.0 && g <= 1.0) {
        smallest_g = std::min(smallest_g, g);
      }
    }
  }
  if (!std::isfinite(smallest_g)) {
    // Never outside the band after the switch.
    return 0.0;
  }
  return -params.tau * std::log(smallest_g);
}

double dropout_depth(const ResonatorParams& params, const SourceSwitch& sw) {
  const std::complex<double> target = source2_target(sw);
  const std::complex<double> a1c(sw.a1, 0.0);
  const double g_revert = std::exp(-(sw.t_revert - sw.t_switch) / params.tau);

  const EnvelopeQuadratic seg2 = segment_quadratic(target, a1c - target);
  double depth = segment_min_abs(seg2, g_revert, 1.0);

  const std::complex<double> at_revert = envelope_at_revert(params, sw);
  const EnvelopeQuadratic seg3 = segment_quadratic(a1c, at_revert - a1c);
  depth = std::min(depth, segment_min_abs(seg3, 0.0, 1.0));
  return depth;
}

bool ion_loss_risk(const ResonatorParams& params, const SourceSwitch& sw, double floor) {
  if (floor < 0.0) {
    throw InvalidParameter("stability floor must be non-negative");
  }
  return dropout_depth(params, sw) < floor;
}

std::vector<std::complex<double>> envelope_series(const ResonatorParams& params,
                                                  const SourceSwitch& sw, ServoMode mode,
                                                  double ramp_time, std::span<const double> times) {
  std::vector<std::complex<double>> out;
  out.reserve(times.size());
  if (mode != ServoMode::ramped) {
    for (const double t : times) {
      out.push_back(envelope(params, sw, t));
    }
    return out;
  }
  if (!(ramp_time > 0.0)) {
    throw InvalidParameter("ramped mode needs a positive ramp time");
  }
  // Setpoint ramps linearly between the sources at each switch instant.
  const std::complex<double> a1c(sw.a1, 0.0);
  const std::complex<double> target = source2_target(sw);
  const auto setpoint = [&](double t) -> std::complex<double> {
    if (t < sw.t_switch) return a1c;
    if (t < sw.t_revert) {
      const double u = std::min((t - sw.t_switch) / ramp_time, 1.0);
      return a1c + (target - a1c) * u;
    }
    const double u = std::min((t - sw.t_revert) / ramp_time, 1.0);
    return target + (a1c - target) * u;
  };
  std::complex<double> b = a1c;
  double t_now = times.empty() ? 0.0 : std::min(times.front(), sw.t_switch);
  t_now = std::min(t_now, sw.t_switch);
  const double dt = params.tau / 200.0;
  for (const double t : times) {
    if (t < t_now) {
      throw InvalidParameter("envelope_series needs an increasing time grid");
    }
    while (t_now < t) {
      const double h = std::min(dt, t - t_now);
      // RK4 on db/dt = (s(t) - b)/tau
      const auto f = [&](double tt, const std::complex<double>& bb) {
        return (setpoint(tt) - bb) / params.tau;
      };
      const std::complex<double> k1 = f(t_now, b);
      const std::complex<double> k2 = f(t_now + h / 2.0, b + k1 * (h / 2.0));
      const std::complex<double> k3 = f(t_now + h / 2.0, b + k2 * (h / 2.0));
      const std::complex<double> k4 = f(t_now + h, b + k3 * h);
      b += (k1 + 2.0 * k2 + 2.0 * k3 + k4) * (h / 6.0);
      t_now += h;
    }
    out.push_back(b);
  }
  return out;
}

}  // namespace trapcal
