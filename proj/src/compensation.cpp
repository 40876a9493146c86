#include "trapcal/compensation.hpp"

#include <algorithm>
#include <cmath>

#include "trapcal/angles.hpp"
#include "trapcal/errors.hpp"

namespace trapcal {

ElectrodeGeometry::ElectrodeGeometry(const Eigen::MatrixXd& field_per_volt_)
    : field_per_volt(field_per_volt_) {
  if (field_per_volt.rows() != 3 || field_per_volt.cols() < 1) {
    throw InvalidParameter("electrode geometry must be 3 x n with n >= 1");
  }
}

namespace {

struct EstimatorRun {
  std::vector<double> control_phases;
};

// The per-estimator sequence variants, in the order the reducer consumes them.
std::vector<EstimatorRun> estimator_runs(PhaseEstimatorKind kind, int big_m) {
  switch (kind) {
    case PhaseEstimatorKind::arcsin:
      return {{plain_control_phases(big_m, -pi / 2.0)}, {plain_control_phases(big_m, pi / 2.0)}};
    case PhaseEstimatorKind::arctan2:
      return {{plain_control_phases(big_m, -pi / 2.0)}, {plain_control_phases(big_m, 0.0)}};
    case PhaseEstimatorKind::arctan2_offset:
      return {{plain_control_phases(big_m, pi / 4.0)},
              {plain_control_phases(big_m, 3.0 * pi / 4.0)}};
    case PhaseEstimatorKind::settings_i:
      return {{control_phases(SettingsTag::I, big_m, pi / 2.0)},
              {control_phases(SettingsTag::I, big_m, pi)}};
    case PhaseEstimatorKind::settings_ii:
      return {{control_phases(SettingsTag::II, big_m, pi / 2.0)},
              {control_phases(SettingsTag::II, big_m, pi)}};
    case PhaseEstimatorKind::settings_iii:
      return {{control_phases(SettingsTag::III, big_m, pi / 2.0)},
              {control_phases(SettingsTag::III, big_m, pi)}};
    case PhaseEstimatorKind::averaged_i_ii:
      return {{control_phases(SettingsTag::I, big_m, pi / 2.0)},
              {control_phases(SettingsTag::I, big_m, pi)},
              {control_phases(SettingsTag::II, big_m, pi / 2.0)},
              {control_phases(SettingsTag::II, big_m, pi)}};
  }
  throw InvalidParameter("unknown estimator kind");
}

PhaseEstimate reduce_probabilities(PhaseEstimatorKind kind, int big_m,
                                   std::span<const double> p, double contrast, long samples) {
  switch (kind) {
    case PhaseEstimatorKind::arcsin:
      return estimate_arcsin(p[0], p[1], contrast, samples);
    case PhaseEstimatorKind::arctan2:
      return estimate_arctan2(p[0], p[1], samples);
    case PhaseEstimatorKind::arctan2_offset:
      return estimate_arctan2_offset(p[0], p[1], samples);
    case PhaseEstimatorKind::settings_i:
      return estimate_settings(p[0], p[1], big_m, SettingsTag::I, samples);
    case PhaseEstimatorKind::settings_ii:
      return estimate_settings(p[0], p[1], big_m, SettingsTag::II, samples);
    case PhaseEstimatorKind::settings_iii:
      return estimate_settings(p[0], p[1], big_m, SettingsTag::III, samples);
    case PhaseEstimatorKind::averaged_i_ii: {
      const PhaseEstimate est_i =
          estimate_settings(p[0], p[1], big_m, SettingsTag::I, samples / 2);
      const PhaseEstimate est_ii =
          estimate_settings(p[2], p[3], big_m, SettingsTag::II, samples - samples / 2);
      return average_i_ii(est_i, est_ii);
    }
  }
  throw InvalidParameter("unknown estimator kind");
}

SequenceSpec build_sequence(const PhaseObservable& obs, const std::string& fixed_setting,
                            const SequenceTiming& timing, std::span<const double> theta) {
  switch (obs.method) {
    case Method::A:
      return make_method_a(obs.big_m, obs.beam_alpha, obs.setting_a, obs.setting_b, timing, theta);
    case Method::B:
      return make_method_b(obs.big_m, obs.beam_alpha, obs.beam_beta, fixed_setting, timing, theta);
    case Method::C:
      return make_method_c(obs.subsets.m_alpha, obs.subsets.m_beta, obs.subsets.minus,
                           obs.beam_alpha, obs.beam_beta, obs.setting_a, obs.setting_b, timing,
                           theta);
  }
  throw InvalidParameter("unknown method");
}

// Estimate phi_T for one stiffness variant of the observable.
PhaseEstimate measure_variant(const PhaseObservable& obs, const std::string& fixed_setting,
                              const TrapContext& ctx, const BeamSet& beams,
                              const NoiseModel& noise, const SequenceTiming& timing,
                              const StrayField& field, RngStream& rng, long samples) {
  const std::vector<EstimatorRun> runs = estimator_runs(obs.estimator, obs.big_m);
  const long per_run = std::max<long>(samples / static_cast<long>(runs.size()), 1);
  std::vector<double> probabilities;
  double contrast = 1.0;
  for (const EstimatorRun& run : runs) {
    const SequenceSpec seq = build_sequence(obs, fixed_setting, timing, run.control_phases);
    const double p = run_sequence(seq, ctx, field, beams, noise);
    contrast = std::exp(-transverse_exposure(seq) / noise.t2);
    if (noise.projection_sampling) {
      probabilities.push_back(static_cast<double>(sample_measurements(p, per_run, rng)) /
                              static_cast<double>(per_run));
    } else {
      probabilities.push_back(p);
    }
  }
  return reduce_probabilities(obs.estimator, obs.big_m, probabilities, contrast, samples);
}

}  // namespace

PhaseEstimate measure_phase_at_setting(const PhaseObservable& obs, const std::string& setting_id,
                                       const TrapContext& ctx, const BeamSet& beams,
                                       const NoiseModel& noise, const SequenceTiming& timing,
                                       const StrayField& effective_field, RngStream& rng) {
  return measure_variant(obs, setting_id, ctx, beams, noise, timing, effective_field, rng,
                         obs.samples);
}

PhaseEstimate measure_phase(const PhaseObservable& obs, const TrapContext& ctx,
                            const BeamSet& beams, const NoiseModel& noise,
                            const SequenceTiming& timing, const StrayField& effective_field,
                            RngStream& rng) {
  if (obs.method != Method::B) {
    return measure_variant(obs, obs.setting_a, ctx, beams, noise, timing, effective_field, rng,
                           obs.samples);
  }
  // Method B: phi_T at each stiffness, reported as the difference.
  const PhaseEstimate at_a = measure_variant(obs, obs.setting_a, ctx, beams, noise, timing,
                                             effective_field, rng, obs.samples / 2);
  const PhaseEstimate at_b = measure_variant(obs, obs.setting_b, ctx, beams, noise, timing,
                                             effective_field, rng, obs.samples - obs.samples / 2);
  PhaseEstimate diff = at_a;
  diff.value = wrap_pi_atan(at_a.value - at_b.value);
  diff.samples_used = at_a.samples_used + at_b.samples_used;
  diff.clamped = at_a.clamped || at_b.clamped;
  return diff;
}

Eigen::MatrixXd phase_field_matrix(const std::vector<PhaseObservable>& observables,
                                   const TrapContext& ctx, const BeamSet& beams) {
  Eigen::MatrixXd s(static_cast<Eigen::Index>(observables.size()), 3);
  for (std::size_t i = 0; i < observables.size(); ++i) {
    const PhaseObservable& obs = observables[i];
    const auto setting_a = ctx.settings.find(obs.setting_a);
    const auto setting_b = ctx.settings.find(obs.setting_b);
    if (setting_a == ctx.settings.end() || setting_b == ctx.settings.end()) {
      throw UnknownId("observable references an unknown trap setting");
    }
    std::vector<LaserBeam> obs_beams;
    const auto alpha = beams.find(obs.beam_alpha);
    if (alpha == beams.end()) {
      throw UnknownId("observable references unknown beam '" + obs.beam_alpha + "'");
    }
    obs_beams.push_back(alpha->second);
    if (obs.method != Method::A) {
      const auto beta = beams.find(obs.beam_beta);
      if (beta == beams.end()) {
        throw UnknownId("observable references unknown beam '" + obs.beam_beta + "'");
      }
      obs_beams.push_back(beta->second);
    }
    const SensitivityDirection dir =
        sensitivity_direction(obs.method, obs_beams, setting_a->second, setting_b->second,
                              obs.method == Method::C ? std::optional<SubsetCounts>(obs.subsets)
                                                      : std::nullopt);
    // Method C's subset counts already live in d; A and B carry the M-fold
    // sequence gain explicitly.
    const double gain = (obs.method == Method::C) ? 1.0 : static_cast<double>(obs.big_m);
    s.row(static_cast<Eigen::Index>(i)) =
        gain * (ctx.ion.charge / ctx.ion.mass) * dir.d.transpose();
  }
  return s;
}

GradientMatrix calibrate_gradient_matrix(const LoopConfig& loop, const StrayField& base_field,
                                         const CalibrationScan& scan, RngStream& rng) {
  if (scan.points < 3) {
    throw InvalidParameter("calibration scan needs at least 3 voltage points");
  }
  const int n_obs = static_cast<int>(loop.observables.size());
  const int n_el = loop.geometry.electrodes();
  if (n_obs != n_el || (n_obs != 2 && n_obs != 3)) {
    throw InvalidParameter("gradient matrix must be 2x2 or 3x3");
  }
  GradientMatrix out;
  out.m.resize(n_obs, n_el);
  out.residual_rms.resize(n_obs, n_el);
  for (const PhaseObservable& obs : loop.observables) {
    out.setting_labels.push_back(obs.setting_a + "->" + obs.setting_b);
  }
  for (int j = 0; j < n_el; ++j) {
    std::vector<double> volts(static_cast<std::size_t>(scan.points));
    for (int k = 0; k < scan.points; ++k) {
      volts[static_cast<std::size_t>(k)] =
          -scan.amplitude_v + 2.0 * scan.amplitude_v * k / (scan.points - 1);
    }
    for (int i = 0; i < n_obs; ++i) {
      std::vector<double> phases;
      for (const double v : volts) {
        Eigen::VectorXd voltage = Eigen::VectorXd::Zero(n_el);
        voltage[j] = v;
        const StrayField effective(base_field.field + loop.geometry.field_per_volt * voltage);
        const PhaseEstimate est =
            measure_phase(loop.observables[static_cast<std::size_t>(i)], loop.ctx, loop.beams,
                          loop.noise, loop.timing, effective, rng);
        if (est.clamped || std::abs(est.value) >= 0.95 * est.range_halfwidth) {
          throw RangeOverflow("calibration scan left the estimator range");
        }
        if (!phases.empty() &&
            std::abs(est.value - phases.back()) > est.range_halfwidth) {
          throw RangeOverflow("calibration scan wrapped outside the estimator range");
        }
        phases.push_back(est.value);
      }
      // Least-squares slope.
      double v_mean = 0.0, p_mean = 0.0;
      for (int k = 0; k < scan.points; ++k) {
        v_mean += volts[static_cast<std::size_t>(k)];
        p_mean += phases[static_cast<std::size_t>(k)];
      }
      v_mean /= scan.points;
      p_mean /= scan.points;
      double sxx = 0.0, sxy = 0.0;
      for (int k = 0; k < scan.points; ++k) {
        const double dv = volts[static_cast<std::size_t>(k)] - v_mean;
        sxx += dv * dv;
        sxy += dv * (phases[static_cast<std::size_t>(k)] - p_mean);
      }
      if (sxx == 0.0) {
        throw RankDeficient("degenerate calibration scan (zero voltage spread)");
      }
      const double slope = sxy / sxx;
      double ss_res = 0.0;
      for (int k = 0; k < scan.points; ++k) {
        const double r = phases[static_cast<std::size_t>(k)] - p_mean -
                         slope * (volts[static_cast<std::size_t>(k)] - v_mean);
        ss_res += r * r;
      }
      out.m(i, j) = slope;
      out.residual_rms(i, j) = std::sqrt(ss_res / scan.points);
    }
  }
  const Eigen::FullPivLU<Eigen::MatrixXd> lu(out.m);
  if (!lu.isInvertible()) {
    throw RankDeficient("fitted gradient matrix is singular");
  }
  return out;
}

VoltageSolution solve_voltages(const GradientMatrix& gradient, const Eigen::VectorXd& phases,
                               const Eigen::VectorXd& phase_sigmas) {
  if (gradient.m.rows() != gradient.m.cols()) {
    throw RankDeficient("gradient matrix must be square");
  }
  if (phases.size() != gradient.m.rows()) {
    throw LengthMismatch("phase vector length must match the gradient matrix");
  }
  const Eigen::FullPivLU<Eigen::MatrixXd> lu(gradient.m);
  if (!lu.isInvertible()) {
    throw RankDeficient("gradient matrix is singular");
  }
  VoltageSolution out;
  out.voltages = lu.solve(phases);
  const Eigen::MatrixXd inv = lu.inverse();
  if (phase_sigmas.size() == phases.size()) {
    out.covariance = inv * phase_sigmas.array().square().matrix().asDiagonal() * inv.transpose();
  } else {
    out.covariance = Eigen::MatrixXd::Zero(phases.size(), phases.size());
  }
  return out;
}

std::vector<ClosedLoopSample> closed_loop_run(const ClosedLoopConfig& config,
                                              const GradientMatrix& gradient, RngStream& rng) {
  const LoopConfig& loop = config.loop;
  const int n_el = loop.geometry.electrodes();
  if (gradient.m.rows() != static_cast<Eigen::Index>(loop.observables.size()) ||
      gradient.m.cols() != n_el) {
    throw LengthMismatch("gradient matrix does not match the loop's observables/electrodes");
  }
  if (!(config.update_interval_s > 0.0) || !(config.duration_s > 0.0)) {
    throw InvalidParameter("loop duration and update interval must be positive");
  }
  const Eigen::MatrixXd s = phase_field_matrix(loop.observables, loop.ctx, loop.beams);
  const auto s_solver = s.completeOrthogonalDecomposition();
  const Eigen::FullPivLU<Eigen::MatrixXd> m_lu(gradient.m);
  if (!m_lu.isInvertible()) {
    throw RankDeficient("gradient matrix is singular");
  }

  Eigen::Vector3d stray = config.initial_stray.field;
  Eigen::VectorXd commanded = Eigen::VectorXd::Zero(n_el);
  const int updates = static_cast<int>(config.duration_s / config.update_interval_s);
  const double sqrt_dt = std::sqrt(config.update_interval_s);

  std::vector<ClosedLoopSample> samples;
  samples.reserve(static_cast<std::size_t>(updates));
  for (int k = 0; k < updates; ++k) {
    Eigen::VectorXd applied = commanded;
    for (int j = 0; j < n_el; ++j) {
      applied[j] += config.drift.voltage_noise_rms * rng.normal();
    }
    const Eigen::Vector3d effective = stray + loop.geometry.field_per_volt * applied;

    Eigen::VectorXd phases(static_cast<Eigen::Index>(loop.observables.size()));
    for (std::size_t i = 0; i < loop.observables.size(); ++i) {
      phases[static_cast<Eigen::Index>(i)] =
          measure_phase(loop.observables[i], loop.ctx, loop.beams, loop.noise, loop.timing,
                        StrayField(effective), rng)
              .value;
    }

    ClosedLoopSample sample;
    sample.t = k * config.update_interval_s;
    sample.field_true = effective;
    // Estimate of the underlying stray field: measured residual minus the
    // field commanded from the electrodes.
    sample.field_estimate = Eigen::Vector3d(s_solver.solve(phases)) -
                            loop.geometry.field_per_volt * commanded;
    sample.voltages = commanded;
    sample.rf_field =
        residual_rf_field(StrayField(effective), loop.ctx.ion, config.drive, config.rf_scale)
            .norm();
    samples.push_back(sample);

    commanded -= m_lu.solve(phases);
    for (int axis = 0; axis < 3; ++axis) {
      if (config.drift.field_walk_rate[axis] > 0.0) {
        stray[axis] += config.drift.field_walk_rate[axis] * sqrt_dt * rng.normal();
      }
    }
  }
  return samples;
}

std::vector<AllanPoint> allan_style_deviation(const Eigen::MatrixXd& estimates,
                                              double interval_s) {
  const Eigen::Index rows = estimates.rows();
  if (rows < 4) {
    throw TooShort("allan analysis needs at least 4 intervals");
  }
  if (!(interval_s > 0.0)) {
    throw InvalidParameter("interval must be positive");
  }
  std::vector<AllanPoint> out;
  for (Eigen::Index m = 1; 2 * m <= rows; m *= 2) {
    double avar = 0.0;
    for (Eigen::Index col = 0; col < estimates.cols(); ++col) {
      // Prefix sums for overlapping window means.
      std::vector<double> prefix(static_cast<std::size_t>(rows) + 1, 0.0);
      for (Eigen::Index i = 0; i < rows; ++i) {
        prefix[static_cast<std::size_t>(i) + 1] =
            prefix[static_cast<std::size_t>(i)] + estimates(i, col);
      }
      const Eigen::Index terms = rows - 2 * m + 1;
      double acc = 0.0;
      for (Eigen::Index k = 0; k < terms; ++k) {
        const double first = prefix[static_cast<std::size_t>(k + m)] -
                             prefix[static_cast<std::size_t>(k)];
        const double second = prefix[static_cast<std::size_t>(k + 2 * m)] -
                              prefix[static_cast<std::size_t>(k + m)];
        const double diff = (second - first) / static_cast<double>(m);
        acc += diff * diff;
      }
      avar += acc / (2.0 * static_cast<double>(terms));
    }
    out.push_back({static_cast<double>(m) * interval_s, std::sqrt(avar)});
  }
  return out;
}

double fit_loglog_slope(std::span<const AllanPoint> points) {
  if (points.size() < 2) {
    throw TooShort("log-log fit needs at least 2 points");
  }
  double sx = 0.0, sy = 0.0;
  for (const AllanPoint& p : points) {
    sx += std::log(p.tau);
    sy += std::log(p.deviation);
  }
  const double mx = sx / static_cast<double>(points.size());
  const double my = sy / static_cast<double>(points.size());
  double sxx = 0.0, sxy = 0.0;
  for (const AllanPoint& p : points) {
    const double dx = std::log(p.tau) - mx;
    sxx += dx * dx;
    sxy += dx * (std::log(p.deviation) - my);
  }
  return sxy / sxx;
}

Eigen::Vector3d micromotion_amplitude(const IonSpecies& ion, const RfDriveModel& drive,
                                      double scale, const StrayField& field) {
  const TrapSetting setting = secular_from_scale(drive, scale);
  const Eigen::Vector3d r = equilibrium_displacement(ion, setting, field);
  const double factor = 2.0 * std::sqrt(2.0) * scale / drive.rf_drive_freq;
  const Eigen::Vector3d mathieu_q(factor * drive.pseudo_radial[0],
                                  -factor * drive.pseudo_radial[1], factor * drive.rf_axial);
  return 0.5 * mathieu_q.cwiseProduct(r);
}

double sideband_signal(const LaserBeam& beam, const IonSpecies& ion, const RfDriveModel& drive,
                       double scale, const StrayField& field) {
  return 0.5 * std::abs(beam.k.dot(micromotion_amplitude(ion, drive, scale, field)));
}

Eigen::Vector3d residual_rf_field(const StrayField& field, const IonSpecies& ion,
                                  const RfDriveModel& drive, double scale) {
  const Eigen::Vector3d u = micromotion_amplitude(ion, drive, scale, field);
  return (ion.mass * drive.rf_drive_freq * drive.rf_drive_freq / ion.charge) * u;
}

namespace {

// Golden-section minimization; f is deterministic for the sideband signal.
template <typename F>
double golden_section_min(F f, double lo, double hi, int iterations = 80) {
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo, b = hi;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = f(c), fd = f(d);
  for (int i = 0; i < iterations; ++i) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = f(d);
    }
  }
  return 0.5 * (a + b);
}

}  // namespace

HybridResult hybrid_2d_minimize(const HybridConfig& config, RngStream& rng) {
  const int n_el = config.geometry.electrodes();
  if (config.interferometry_electrode < 0 || config.interferometry_electrode >= n_el ||
      config.sideband_electrode < 0 || config.sideband_electrode >= n_el ||
      config.sideband_electrode == config.interferometry_electrode) {
    throw InvalidParameter("hybrid loop needs two distinct electrodes");
  }
  const std::vector<PhaseObservable> observables{config.interferometric};
  double slope = 0.0;
  try {
    const Eigen::MatrixXd s = phase_field_matrix(observables, config.ctx, config.beams);
    slope = (s * config.geometry.field_per_volt)(0, config.interferometry_electrode);
  } catch (const DegenerateDirection&) {
    throw NoProgress("interferometric observable has a degenerate sensitivity direction");
  }
  if (std::abs(slope) < 1e-12) {
    throw NoProgress("interferometric observable is insensitive to its electrode");
  }

  Eigen::VectorXd voltages = Eigen::VectorXd::Zero(n_el);
  const auto effective = [&](const Eigen::VectorXd& v) {
    return StrayField(config.initial_stray.field + config.geometry.field_per_volt * v);
  };
  const auto sideband_at = [&](double v) {
    Eigen::VectorXd trial = voltages;
    trial[config.sideband_electrode] = v;
    return sideband_signal(config.beams.at(config.interferometric.beam_alpha), config.ctx.ion,
                           config.drive, config.sideband_scale, effective(trial));
  };

  HybridResult result;
  for (int it = 0; it < config.max_iterations; ++it) {
    // Interferometric step along the beam-sensitive component.
    const PhaseEstimate phase =
        measure_phase(config.interferometric, config.ctx, config.beams, config.noise,
                      config.timing, effective(voltages), rng);
    voltages[config.interferometry_electrode] -= phase.value / slope;

    // Sideband line search on the orthogonal electrode.
    const double center = voltages[config.sideband_electrode];
    const double lo = center - config.search_halfwidth_v;
    const double hi = center + config.search_halfwidth_v;
    const double span = std::max(std::abs(sideband_at(lo) - sideband_at(center)),
                                 std::abs(sideband_at(hi) - sideband_at(center)));
    if (sideband_at(center) > config.sideband_threshold && span < 1e-15) {
      throw NoProgress("sideband signal is insensitive to its electrode");
    }
    voltages[config.sideband_electrode] = golden_section_min(sideband_at, lo, hi);

    HybridIteration step;
    step.iteration = it;
    step.field = effective(voltages).field;
    step.phase = measure_phase(config.interferometric, config.ctx, config.beams, config.noise,
                               config.timing, effective(voltages), rng)
                     .value;
    step.sideband = sideband_at(voltages[config.sideband_electrode]);
    step.voltages = voltages;
    result.history.push_back(step);

    if (std::abs(step.phase) < config.phase_threshold &&
        step.sideband < config.sideband_threshold) {
      result.converged = true;
      break;
    }
  }
  result.final_field = effective(voltages).field;
  return result;
}

DutyCycleReport duty_cycle_report(std::span<const RfSegment> schedule, double nominal_power) {
  if (schedule.empty()) {
    throw InvalidParameter("duty-cycle schedule must not be empty");
  }
  double total = 0.0, weighted = 0.0, reduced = 0.0, boost_time = 0.0, fixed_weighted = 0.0;
  for (const RfSegment& seg : schedule) {
    if (!(seg.duration_s > 0.0)) {
      throw InvalidParameter("schedule durations must be positive");
    }
    total += seg.duration_s;
    weighted += seg.duration_s * seg.power;
    if (seg.power < nominal_power) {
      reduced += seg.duration_s;
    }
    if (seg.boostable) {
      boost_time += seg.duration_s;
    } else {
      fixed_weighted += seg.duration_s * seg.power;
    }
  }
  DutyCycleReport report;
  report.reduced_fraction = reduced / total;
  report.mean_power = weighted / total;
  report.balanced_profile.assign(schedule.begin(), schedule.end());
  if (boost_time > 0.0) {
    report.boost_power = (nominal_power * total - fixed_weighted) / boost_time;
    for (RfSegment& seg : report.balanced_profile) {
      if (seg.boostable) {
        seg.power = report.boost_power;
      }
    }
  } else {
    report.boost_power = nominal_power;
  }
  return report;
}

}  // namespace trapcal
