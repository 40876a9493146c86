#include "trapcal/estimators.hpp"

#include <algorithm>
#include <cmath>

#include "trapcal/angles.hpp"
#include "trapcal/errors.hpp"

namespace trapcal {

PhaseEstimate estimate_arcsin(double p_minus, double p_plus, double contrast, long samples) {
  if (!(contrast > 0.0) || contrast > 1.0) {
    throw InvalidParameter("contrast must be in (0, 1]");
  }
  const double denom = contrast * (p_minus + p_plus);
  if (denom == 0.0) {
    throw ZeroDenominator("arcsin estimator: p(-pi/2) + p(+pi/2) is zero");
  }
  const double raw = (p_minus - p_plus) / denom;
  const double arg = std::clamp(raw, -1.0, 1.0);
  PhaseEstimate est;
  est.value = std::asin(arg);
  est.range_halfwidth = pi / 2.0;
  est.samples_used = samples;
  est.tag = EstimatorTag::arcsin;
  est.clamped = (arg != raw);
  return est;
}

PhaseEstimate estimate_arctan2(double p_mhalf, double p_zero, long samples) {
  const double y = p_mhalf - 0.5;
  const double x = p_zero - 0.5;
  if (y == 0.0 && x == 0.0) {
    throw UndefinedEstimate("arctan2 estimator: both probabilities are exactly 1/2");
  }
  PhaseEstimate est;
  est.value = std::atan2(y, x);
  est.range_halfwidth = pi;
  est.samples_used = samples;
  est.tag = EstimatorTag::arctan2;
  return est;
}

PhaseEstimate estimate_arctan2_offset(double p_quarter, double p_three_quarter, long samples) {
  const double y = p_quarter - 0.5;
  const double x = p_three_quarter - 0.5;
  if (y == 0.0 && x == 0.0) {
    throw UndefinedEstimate("offset arctan2 estimator: both probabilities are exactly 1/2");
  }
  PhaseEstimate est;
  est.value = wrap_pi(std::atan2(y, x) - 3.0 * pi / 4.0);
  est.range_halfwidth = pi;
  est.samples_used = samples;
  est.tag = EstimatorTag::arctan2_offset;
  return est;
}

std::vector<double> control_phases(SettingsTag tag, int big_m, double theta_1) {
  if (big_m < 1) {
    throw InvalidParameter("sequence length M must be >= 1");
  }
  std::vector<double> theta(static_cast<std::size_t>(big_m) + 1, 0.0);
  theta[0] = theta_1;
  if (tag == SettingsTag::plain) {
    return theta;
  }
  if (big_m % 2 != 0) {
    throw OddM("settings I/II/III require even M");
  }
  for (int j = 2; j <= big_m + 1; ++j) {
    double value = 0.0;
    if (j == big_m + 1) {
      value = pi;
    } else if (j % 2 == 0) {
      value = (tag == SettingsTag::III) ? pi / 2.0 : 0.0;
    } else {
      value = (tag == SettingsTag::II) ? pi / 2.0 : -pi / 2.0;
    }
    theta[static_cast<std::size_t>(j) - 1] = value;
  }
  return theta;
}

PhaseEstimate estimate_settings(double p_half, double p_pi, int big_m, SettingsTag tag,
                                long samples) {
  if (tag != SettingsTag::I && tag != SettingsTag::II && tag != SettingsTag::III) {
    throw InvalidParameter("estimate_settings expects settings I, II or III");
  }
  if (big_m < 2 || big_m % 2 != 0) {
    throw OddM("settings estimates require even M");
  }
  const double sign = (tag == SettingsTag::III) ? 1.0 : ((big_m / 2) % 2 == 0 ? 1.0 : -1.0);
  const double y = sign * (p_half - 0.5);
  const double x = sign * (p_pi - 0.5);
  if (y == 0.0 && x == 0.0) {
    throw UndefinedEstimate("settings estimator: both probabilities are exactly 1/2");
  }
  PhaseEstimate est;
  est.value = std::atan2(y, x);
  est.range_halfwidth = pi;
  est.samples_used = samples;
  est.tag = tag == SettingsTag::I   ? EstimatorTag::settingsI
            : tag == SettingsTag::II ? EstimatorTag::settingsII
                                     : EstimatorTag::settingsIII;
  return est;
}

PhaseEstimate average_i_ii(const PhaseEstimate& est_i, const PhaseEstimate& est_ii) {
  const double sy = std::sin(est_i.value) + std::sin(est_ii.value);
  const double sx = std::cos(est_i.value) + std::cos(est_ii.value);
  if (sy == 0.0 && sx == 0.0) {
    throw UndefinedEstimate("I/II average: estimates are antipodal");
  }
  PhaseEstimate est;
  est.value = std::atan2(sy, sx);
  est.range_halfwidth = pi;
  est.samples_used = est_i.samples_used + est_ii.samples_used;
  est.tag = EstimatorTag::averagedI_II;
  return est;
}

PhaseEstimate scale_to_sequence(const PhaseEstimate& phi_t_estimate, int big_m) {
  if (big_m < 1) {
    throw InvalidParameter("sequence length M must be >= 1");
  }
  PhaseEstimate est = phi_t_estimate;
  est.value /= big_m;
  est.range_halfwidth /= big_m;
  return est;
}

RpeSchedule::RpeSchedule(int j_max_, std::vector<long> samples_per_pass_)
    : j_max(j_max_), samples_per_pass(std::move(samples_per_pass_)) {
  if (j_max < 1) {
    throw InvalidParameter("RPE schedule needs at least one pass");
  }
  if (samples_per_pass.size() != static_cast<std::size_t>(j_max)) {
    throw LengthMismatch("RPE schedule needs one sample count per pass");
  }
  for (long n : samples_per_pass) {
    if (n <= 0 || n % 2 != 0) {
      throw InvalidParameter("RPE pass counts must be positive and even");
    }
  }
}

RpeSchedule RpeSchedule::equal(int j_max, long samples_per_pass) {
  return RpeSchedule(j_max, std::vector<long>(static_cast<std::size_t>(j_max), samples_per_pass));
}

double RpeSchedule::total_pulse_area() const {
  double area = 0.0;
  for (int j = 1; j <= j_max; ++j) {
    area += static_cast<double>(samples_per_pass[static_cast<std::size_t>(j) - 1]) *
            sequence_length(j) * pi;
  }
  return area;
}

double rpe_combine(std::span<const PhaseEstimate> per_pass_estimates) {
  if (per_pass_estimates.empty()) {
    throw BadSchedule("RPE combine needs at least one pass");
  }
  double estimate = 0.0;
  double halfwidth = pi;
  for (std::size_t idx = 0; idx < per_pass_estimates.size(); ++idx) {
    const PhaseEstimate& pass = per_pass_estimates[idx];
    if (std::abs(pass.range_halfwidth - halfwidth) > 1e-9 * halfwidth) {
      throw BadSchedule("pass halfwidths must follow pi/2^(j-1)");
    }
    double current = pass.value;
    while (current < estimate - halfwidth) current += 2.0 * halfwidth;
    while (current > estimate + halfwidth) current -= 2.0 * halfwidth;
    estimate = current;
    halfwidth /= 2.0;
  }
  return estimate;
}

double sql_bound(double total_pulse_area) {
  if (!(total_pulse_area > 0.0)) {
    throw InvalidParameter("total pulse area must be positive");
  }
  return std::sqrt(pi / total_pulse_area);
}

}  // namespace trapcal
