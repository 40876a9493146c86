#include "trapcal/scenario.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <thread>

#include "json.hpp"
#include "trapcal/angles.hpp"
#include "trapcal/csv.hpp"
#include "trapcal/errors.hpp"
#include "trapcal/resonator.hpp"

namespace trapcal {

namespace {

// Deterministic fan-out: each trial owns a stream addressed by its index, and
// results land in a per-trial slot, so thread scheduling cannot change them.
template <typename Fn>
void parallel_trials(long trials, int threads, Fn&& fn) {
  if (threads <= 1 || trials < 64) {
    for (long t = 0; t < trials; ++t) fn(t);
    return;
  }
  std::atomic<long> next{0};
  std::vector<std::thread> pool;
  const int workers = std::min<long>(threads, trials);
  pool.reserve(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&]() {
      for (long t = next.fetch_add(1); t < trials; t = next.fetch_add(1)) {
        fn(t);
      }
    });
  }
  for (auto& th : pool) th.join();
}

PhaseEstimate center_estimate(long samples) {
  PhaseEstimate est;
  est.value = 0.0;
  est.range_halfwidth = pi;
  est.samples_used = samples;
  return est;
}

// A zero-information draw (both quadratures exactly 1/2) is recorded as the
// center of the range rather than aborting the trial.
PhaseEstimate measure_or_center(const PhaseObservable& obs, const TrapContext& ctx,
                                const BeamSet& beams, const NoiseModel& noise,
                                const SequenceTiming& timing, const StrayField& field,
                                RngStream& rng) {
  try {
    return measure_phase(obs, ctx, beams, noise, timing, field, rng);
  } catch (const UndefinedEstimate&) {
    return center_estimate(obs.samples);
  }
}

PhaseEstimatorKind estimator_kind(const std::string& name) {
  if (name == "arcsin") return PhaseEstimatorKind::arcsin;
  if (name == "arctan2") return PhaseEstimatorKind::arctan2;
  throw InvalidParameter("unknown estimator '" + name + "'");
}

double slope_fit(const std::vector<double>& x, const std::vector<double>& y) {
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(x.size());
  my /= static_cast<double>(x.size());
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (sxx == 0.0) throw RankDeficient("degenerate slope fit");
  return sxy / sxx;
}

}  // namespace

double phi_pd_per_field(const TrapContext& ctx, const LaserBeam& beam, const TrapSetting& a,
                        const TrapSetting& b) {
  const Eigen::Vector3d inv_a = a.secular.cwiseProduct(a.secular).cwiseInverse();
  const Eigen::Vector3d inv_b = b.secular.cwiseProduct(b.secular).cwiseInverse();
  const Eigen::Vector3d unit = beam.k.normalized();
  return (ctx.ion.charge / ctx.ion.mass) * beam.k.cwiseProduct(inv_a - inv_b).dot(unit);
}

FringeResult run_fringe(const ScenarioConfig& config) {
  const auto& params = std::get<FringeParams>(config.params);
  const TrapContext ctx = config.make_context();
  const LaserBeam& beam = config.beams.at(params.beam);
  const double response =
      phi_pd_per_field(ctx, beam, ctx.settings.at("A"), ctx.settings.at("B"));
  const Eigen::Vector3d sweep_dir = beam.k.normalized();

  FringeResult result;
  int m_index = 0;
  for (const int big_m : params.m_values) {
    FringeResult::Trace trace;
    trace.big_m = big_m;
    const SequenceSpec seq = make_method_a(big_m, params.beam, "A", "B", config.timing,
                                           plain_control_phases(big_m, params.theta_t));
    double prev = 0.0;
    for (int i = 0; i < params.points; ++i) {
      const double phi = -pi + (i + 0.5) * two_pi / params.points;
      const double field_scale = phi / response;
      const StrayField field(config.stray.field + field_scale * sweep_dir);
      const double p = run_sequence(seq, ctx, field, config.beams, config.noise);
      trace.phi_pd.push_back(phi);
      trace.field.push_back(field_scale);
      trace.p_ideal.push_back(p);
      if (params.samples_per_point > 0) {
        RngStream rng(config.seed, "fringe",
                      static_cast<std::uint64_t>(m_index) * 1000000 + static_cast<std::uint64_t>(i));
        trace.p_measured.push_back(
            static_cast<double>(sample_measurements(p, params.samples_per_point, rng)) /
            static_cast<double>(params.samples_per_point));
      } else {
        trace.p_measured.push_back(p);
      }
      const double s = p - 0.5;
      if (i > 0 && ((s > 0.0 && prev < 0.0) || (s < 0.0 && prev > 0.0))) {
        ++trace.zero_crossings;
      }
      prev = s;
    }
    result.traces.push_back(std::move(trace));
    ++m_index;
  }
  return result;
}

MethodBDriftResult run_method_b_drift(const ScenarioConfig& config) {
  const auto& params = std::get<MethodBDriftParams>(config.params);
  const TrapContext ctx = config.make_context();

  PhaseObservable obs;
  obs.method = Method::B;
  obs.beam_alpha = params.beam_alpha;
  obs.beam_beta = params.beam_beta;
  obs.setting_a = "A";
  obs.setting_b = "B";
  obs.big_m = params.big_m;
  obs.estimator = PhaseEstimatorKind::arctan2;
  obs.samples = params.samples_per_point > 0 ? params.samples_per_point : 2;

  NoiseModel noise = config.noise;
  noise.projection_sampling = params.samples_per_point > 0;

  RngStream walk_rng(config.seed, "method-b-drift/walk", 0);
  MethodBDriftResult result;
  double walk = 0.0;

  for (int step = 0; step < params.steps; ++step) {
    const double t = step * params.interval_s;
    const double drift = params.ramp_rad_per_s * t + walk;

    // The common drift rides on the alpha beam's static offset; both stiffness
    // variants see the same value within one interleaved step.
    BeamSet beams = config.beams;
    const LaserBeam& alpha = config.beams.at(params.beam_alpha);
    beams.erase(params.beam_alpha);
    beams.emplace(params.beam_alpha,
                  LaserBeam(alpha.k, alpha.phase_offset + drift, alpha.nominal_rabi));

    RngStream rng(config.seed, "method-b-drift/measure", static_cast<std::uint64_t>(step));
    const PhaseEstimate at_a = measure_phase_at_setting(obs, "A", ctx, beams, noise,
                                                        config.timing, config.stray, rng);
    const PhaseEstimate at_b = measure_phase_at_setting(obs, "B", ctx, beams, noise,
                                                        config.timing, config.stray, rng);
    MethodBDriftResult::Row row;
    row.t = t;
    row.drift = drift;
    row.phi_a = at_a.value / params.big_m;
    row.phi_b = at_b.value / params.big_m;
    row.diff = wrap_pi_atan(at_a.value - at_b.value) / params.big_m;
    result.rows.push_back(row);

    walk += params.walk_rad_per_sqrt_s * std::sqrt(params.interval_s) * walk_rng.normal();
  }

  auto span_of = [](const std::vector<MethodBDriftResult::Row>& rows, auto field) {
    double lo = 1e300, hi = -1e300;
    for (const auto& r : rows) {
      lo = std::min(lo, field(r));
      hi = std::max(hi, field(r));
    }
    return hi - lo;
  };
  result.phi_a_span =
      span_of(result.rows, [](const MethodBDriftResult::Row& r) { return r.phi_a; });
  result.diff_span =
      span_of(result.rows, [](const MethodBDriftResult::Row& r) { return r.diff; });
  return result;
}

ClosedLoopScenarioResult run_closed_loop(const ScenarioConfig& config) {
  const auto& params = std::get<ClosedLoopParams>(config.params);

  ClosedLoopConfig loop_config;
  loop_config.loop.ctx = config.make_context();
  loop_config.loop.beams = config.beams;
  loop_config.loop.geometry = config.geometry;
  loop_config.loop.noise = config.noise;
  loop_config.loop.timing = config.timing;
  for (const auto& o : params.observables) {
    PhaseObservable obs;
    obs.method = Method::A;
    obs.beam_alpha = o.beam;
    obs.setting_a = "A";
    obs.setting_b = "B";
    obs.big_m = o.big_m;
    obs.estimator = estimator_kind(o.estimator);
    obs.samples = o.samples;
    loop_config.loop.observables.push_back(obs);
  }
  loop_config.drive = config.drive_model();
  loop_config.rf_scale = 1.0;
  loop_config.initial_stray = config.stray;
  loop_config.drift = params.drift_enabled ? config.drift : DriftModel{};
  loop_config.duration_s = params.duration_s;
  loop_config.update_interval_s = params.update_interval_s;

  // Calibration runs at the initial stray field with its own, larger sample
  // budget; a noisy gradient matrix can destabilize the loop.
  LoopConfig calibration_loop = loop_config.loop;
  for (auto& obs : calibration_loop.observables) {
    obs.samples = params.calibration_samples;
  }
  RngStream cal_rng(config.seed, "closed-loop/calibration", 0);
  const GradientMatrix gradient = calibrate_gradient_matrix(
      calibration_loop, config.stray,
      CalibrationScan{params.scan_amplitude_v, params.scan_points}, cal_rng);

  RngStream loop_rng(config.seed, "closed-loop/run", 0);
  ClosedLoopScenarioResult result;
  result.samples = closed_loop_run(loop_config, gradient, loop_rng);

  Eigen::MatrixXd estimates(static_cast<Eigen::Index>(result.samples.size()), 2);
  for (std::size_t k = 0; k < result.samples.size(); ++k) {
    estimates(static_cast<Eigen::Index>(k), 0) = result.samples[k].field_estimate[0];
    estimates(static_cast<Eigen::Index>(k), 1) = result.samples[k].field_estimate[1];
  }
  result.allan = allan_style_deviation(estimates, params.update_interval_s);

  // Fit the noise-dominated early window (first half of the octave points).
  const std::size_t fit_count = std::max<std::size_t>(result.allan.size() / 2, 2);
  result.allan_slope = fit_loglog_slope(std::span(result.allan.data(), fit_count));
  result.allan_min_index = 0;
  for (std::size_t i = 1; i < result.allan.size(); ++i) {
    if (result.allan[i].deviation < result.allan[result.allan_min_index].deviation) {
      result.allan_min_index = i;
    }
  }

  // RF power bookkeeping for one update cycle:
  // every sample spends part of its sequence at the reduced stiffness, whose
  // relative power is scale_b^2. The setting-A share is boostable so the
  // balanced profile restores the nominal time-weighted mean.
  {
    double samples_per_update = 0.0;
    double t_high = 0.0, t_low = 0.0;
    for (const auto& obs : loop_config.loop.observables) {
      const SequenceSpec seq = make_method_a(obs.big_m, obs.beam_alpha, "A", "B",
                                             config.timing);
      double seq_low = 0.0, seq_total = 0.0;
      for (int j = 1; j <= obs.big_m + 1; ++j) {
        const double d = seq.pulses[static_cast<std::size_t>(j) - 1].duration;
        seq_total += d;
        if (j % 2 == 0) seq_low += d;  // even-indexed pulses run at setting B
      }
      seq_total += obs.big_m * config.timing.inter_pulse_wait;
      seq_low += (obs.big_m / 2) * config.timing.inter_pulse_wait;
      const double runs = 2.0;  // two control-phase variants per estimate
      samples_per_update += runs * static_cast<double>(obs.samples);
      t_low += runs * static_cast<double>(obs.samples) * seq_low;
      t_high += runs * static_cast<double>(obs.samples) * (seq_total - seq_low);
    }
    const double t_overhead = samples_per_update * params.sample_overhead_s;
    const double busy = t_overhead + t_high + t_low;
    const double power_low = config.scale_b * config.scale_b;
    std::vector<RfSegment> schedule;
    if (params.update_interval_s > busy) {
      schedule.push_back({"idle", params.update_interval_s - busy, 1.0, false});
    }
    schedule.push_back({"cooling+detection", t_overhead, 1.0, false});
    schedule.push_back({"sequence_high", t_high, 1.0, true});
    schedule.push_back({"sequence_low", t_low, power_low, false});
    result.duty = duty_cycle_report(schedule);
  }
  return result;
}

RobustnessResult run_robustness(const ScenarioConfig& config) {
  const auto& params = std::get<RobustnessParams>(config.params);
  const TrapContext ctx = config.make_context();
  const LaserBeam& beam = config.beams.at(params.beam);
  const double response =
      phi_pd_per_field(ctx, beam, ctx.settings.at("A"), ctx.settings.at("B"));
  const Eigen::Vector3d sweep_dir = beam.k.normalized();
  RngStream rng(config.seed, "robustness", 0);  // unused in noiseless mode

  const auto field_for_phi = [&](double phi_pd) {
    return StrayField(config.stray.field + (phi_pd / response) * sweep_dir);
  };

  const auto estimate_pair = [&](int big_m, SettingsTag tag, const StrayField& field,
                                 const NoiseModel& noise) {
    PhaseObservable obs;
    obs.beam_alpha = params.beam;
    obs.setting_a = "A";
    obs.setting_b = "B";
    obs.big_m = big_m;
    obs.estimator = tag == SettingsTag::I    ? PhaseEstimatorKind::settings_i
                    : tag == SettingsTag::II ? PhaseEstimatorKind::settings_ii
                                             : PhaseEstimatorKind::settings_iii;
    obs.samples = 2;
    return measure_phase(obs, ctx, config.beams, noise, config.timing, field, rng);
  };

  RobustnessResult result;

  // Pulse-area error sweep at a small phi_PD (Method A alternates the
  // stiffness, so the error alternates with the pulse index).
  const StrayField small_field = field_for_phi(params.phi_small);
  const double truth_area = wrap_pi_atan(params.m_area * params.phi_small);
  for (int i = 0; i < params.area_points; ++i) {
    NoiseModel noise = config.noise;
    noise.area_error_even =
        1.0 + (params.area_error_max - 1.0) * i / (params.area_points - 1);
    noise.area_error_odd = params.odd_area_error;
    const PhaseEstimate est_i = estimate_pair(params.m_area, SettingsTag::I, small_field, noise);
    const PhaseEstimate est_ii = estimate_pair(params.m_area, SettingsTag::II, small_field, noise);
    RobustnessResult::AreaPoint point;
    point.area_error = noise.area_error_even;
    point.shift_i = wrap_pi_atan(est_i.value - truth_area);
    point.shift_ii = wrap_pi_atan(est_ii.value - truth_area);
    point.shift_avg = wrap_pi_atan(average_i_ii(est_i, est_ii).value - truth_area);
    result.area_sweep.push_back(point);
  }

  // Detuning sweep; the naive expectation is a shift of delta * T / M.
  const double duration = params.m_detuning * (config.timing.pi_time +
                                               config.timing.inter_pulse_wait);
  const double truth_det = wrap_pi_atan(params.m_detuning * params.phi_small);
  for (int i = 0; i < params.detuning_points; ++i) {
    const double naive = params.detuning_shift_max * i / (params.detuning_points - 1);
    NoiseModel noise = config.noise;
    noise.detuning = naive * params.m_detuning / duration;
    const PhaseEstimate est_i =
        estimate_pair(params.m_detuning, SettingsTag::I, small_field, noise);
    const PhaseEstimate est_ii =
        estimate_pair(params.m_detuning, SettingsTag::II, small_field, noise);
    RobustnessResult::DetuningPoint point;
    point.detuning = noise.detuning;
    point.naive_shift = naive;
    point.shift_i = wrap_pi_atan(est_i.value - truth_det);
    point.shift_ii = wrap_pi_atan(est_ii.value - truth_det);
    point.shift_avg = wrap_pi_atan(average_i_ii(est_i, est_ii).value - truth_det);
    result.detuning_sweep.push_back(point);
  }

  // Bias against the true phi_PD across the full range, settings I vs III.
  NoiseModel bias_noise = config.noise;
  bias_noise.area_error_even = params.bias_area_error;
  for (int i = 0; i < params.bias_points; ++i) {
    const double phi_pd = -pi + (i + 0.5) * two_pi / params.bias_points;
    const StrayField field = field_for_phi(phi_pd);
    const double truth = wrap_pi_atan(params.m_bias * phi_pd);
    RobustnessResult::BiasPoint point;
    point.phi_pd = phi_pd;
    point.bias_i =
        wrap_pi_atan(estimate_pair(params.m_bias, SettingsTag::I, field, bias_noise).value - truth);
    point.bias_iii = wrap_pi_atan(
        estimate_pair(params.m_bias, SettingsTag::III, field, bias_noise).value - truth);
    result.bias_curve.push_back(point);
  }
  return result;
}

RpeScalingResult run_rpe_scaling(const ScenarioConfig& config) {
  const auto& params = std::get<RpeParams>(config.params);
  const TrapContext ctx = config.make_context();
  const LaserBeam& beam = config.beams.at(params.beam);
  const double response =
      phi_pd_per_field(ctx, beam, ctx.settings.at("A"), ctx.settings.at("B"));
  const Eigen::Vector3d sweep_dir = beam.k.normalized();

  const RpeSchedule schedule =
      params.samples_per_pass_list.empty()
          ? RpeSchedule::equal(params.j_max, params.samples_per_pass)
          : RpeSchedule(params.j_max, params.samples_per_pass_list);

  struct Variant {
    const char* tag;
    double t2;
  };
  const Variant variants[] = {
      {"ideal", std::numeric_limits<double>::infinity()},
      {"decohered", params.t2_finite_s},
  };

  RpeScalingResult result;
  for (const Variant& variant : variants) {
    NoiseModel noise = config.noise;
    noise.t2 = variant.t2;
    noise.projection_sampling = true;

    // Per trial: squared combined error for every schedule prefix, plus the
    // fixed-M baseline errors (ideal variant only).
    std::vector<std::vector<double>> prefix_sq(
        static_cast<std::size_t>(params.j_max),
        std::vector<double>(static_cast<std::size_t>(params.trials), 0.0));
    std::vector<std::vector<double>> baseline_sq(
        params.baseline_n.size(),
        std::vector<double>(static_cast<std::size_t>(params.trials), 0.0));
    const bool run_baseline =
        std::string(variant.tag) == "ideal" && !params.baseline_n.empty();

    parallel_trials(params.trials, config.threads, [&](long trial) {
      RngStream rng(config.seed, std::string("rpe/") + variant.tag,
                    static_cast<std::uint64_t>(trial));
      const double phi = (rng.uniform() * 2.0 - 1.0) * pi;
      const StrayField field(config.stray.field + (phi / response) * sweep_dir);

      std::vector<PhaseEstimate> passes;
      for (int j = 1; j <= params.j_max; ++j) {
        const int big_m = schedule.sequence_length(j);
        PhaseObservable obs;
        obs.beam_alpha = params.beam;
        obs.setting_a = "A";
        obs.setting_b = "B";
        obs.big_m = big_m;
        obs.estimator = PhaseEstimatorKind::arctan2;
        obs.samples = schedule.samples_per_pass[static_cast<std::size_t>(j) - 1];
        const PhaseEstimate est =
            measure_or_center(obs, ctx, config.beams, noise, config.timing, field, rng);
        passes.push_back(scale_to_sequence(est, big_m));
        const double combined = rpe_combine(passes);
        const double err = wrap_pi_atan(combined - phi);
        prefix_sq[static_cast<std::size_t>(j) - 1][static_cast<std::size_t>(trial)] = err * err;
      }

      if (run_baseline) {
        for (std::size_t b = 0; b < params.baseline_n.size(); ++b) {
          PhaseObservable obs;
          obs.beam_alpha = params.beam;
          obs.setting_a = "A";
          obs.setting_b = "B";
          obs.big_m = 1;
          obs.estimator = PhaseEstimatorKind::arctan2;
          obs.samples = params.baseline_n[b];
          const PhaseEstimate est =
              measure_or_center(obs, ctx, config.beams, noise, config.timing, field, rng);
          const double err = wrap_pi_atan(est.value - phi);
          baseline_sq[b][static_cast<std::size_t>(trial)] = err * err;
        }
      }
    });

    std::vector<RpeScalingResult::Point>& points =
        std::string(variant.tag) == "ideal" ? result.ideal : result.decohered;
    double n_meas = 0.0, area = 0.0;
    for (int j = 1; j <= params.j_max; ++j) {
      n_meas += static_cast<double>(schedule.samples_per_pass[static_cast<std::size_t>(j) - 1]);
      area += static_cast<double>(schedule.samples_per_pass[static_cast<std::size_t>(j) - 1]) *
              schedule.sequence_length(j) * pi;
      double sum = 0.0;
      for (const double sq : prefix_sq[static_cast<std::size_t>(j) - 1]) sum += sq;
      RpeScalingResult::Point point;
      point.j_max = j;
      point.n_measurements = n_meas;
      point.area = area;
      point.rms = std::sqrt(sum / static_cast<double>(params.trials));
      point.sql = sql_bound(area);
      points.push_back(point);
    }

    if (run_baseline) {
      for (std::size_t b = 0; b < params.baseline_n.size(); ++b) {
        double sum = 0.0;
        for (const double sq : baseline_sq[b]) sum += sq;
        RpeScalingResult::Point point;
        point.j_max = 1;
        point.n_measurements = static_cast<double>(params.baseline_n[b]);
        point.area = static_cast<double>(params.baseline_n[b]) * pi;
        point.rms = std::sqrt(sum / static_cast<double>(params.trials));
        point.sql = sql_bound(point.area);
        result.baseline.push_back(point);
      }
    }
  }
  return result;
}

Geometry2dResult run_geometry_2d(const ScenarioConfig& config) {
  const auto& params = std::get<Geometry2dParams>(config.params);

  const auto make_world = [&](double split_hz) {
    const TrapSetting a("A", two_pi * Eigen::Vector3d(params.radial_hz, params.radial_hz + split_hz,
                                                      params.axial_hz));
    return drive_model_from_setting(a, 0.0, config.rf_drive_freq);
  };
  const RfDriveModel split_drive = make_world(params.split_hz);
  const RfDriveModel degenerate_drive = make_world(0.0);

  const LaserBeam vertical = beam_at_angle(pi / 4.0, 674e-9);
  const LaserBeam horizontal = beam_at_angle(-pi / 4.0, 674e-9);

  const auto beam_angle_deg = [&](const RfDriveModel& drive, double scale) {
    const TrapSetting a = secular_from_scale(drive, 1.0, "A");
    const TrapSetting b = secular_from_scale(drive, scale, "B");
    const auto dv = sensitivity_direction(Method::A, {vertical}, a, b);
    const auto dh = sensitivity_direction(Method::A, {horizontal}, a, b);
    const double cosine = std::abs(dv.unit.dot(dh.unit));
    return rad_to_deg(std::acos(std::clamp(cosine, -1.0, 1.0)));
  };

  Geometry2dResult result;
  for (int i = 0; i < params.scale_points; ++i) {
    const double scale = params.scale_min + (params.scale_max - params.scale_min) * i /
                                                (params.scale_points - 1);
    Geometry2dResult::ScaleRow row;
    row.scale = scale;
    try {
      const TrapSetting b = secular_from_scale(split_drive, scale, "B");
      row.omega_bx_hz = b.secular[0] / two_pi;
      row.omega_by_hz = b.secular[1] / two_pi;
      row.angle_between_deg = beam_angle_deg(split_drive, scale);
    } catch (const IonLost&) {
      continue;  // below the stability edge
    } catch (const DegenerateDirection&) {
      continue;  // scale = 1 leaves the settings identical
    }
    result.sweep.push_back(row);
  }

  result.angle_degenerate_deg = beam_angle_deg(degenerate_drive, params.scale_moderate);
  result.angle_deep_deg = beam_angle_deg(split_drive, params.scale_deep);

  // Hybrid one-beam loop on the degenerate trap.
  HybridConfig hybrid;
  hybrid.ctx.ion = config.ion;
  hybrid.ctx.settings.emplace("A", secular_from_scale(degenerate_drive, 1.0, "A"));
  hybrid.ctx.settings.emplace("B",
                              secular_from_scale(degenerate_drive, params.scale_moderate, "B"));
  hybrid.beams.emplace("h", horizontal);
  Eigen::MatrixXd g(3, 2);
  g.col(0) = Eigen::Vector3d(1.0, -1.0, 0.0).normalized();
  g.col(1) = Eigen::Vector3d(1.0, 1.0, 0.0).normalized();
  hybrid.geometry = ElectrodeGeometry(g);
  hybrid.noise = config.noise;
  hybrid.noise.projection_sampling = params.hybrid_samples > 0;
  hybrid.timing = config.timing;
  hybrid.interferometric.method = Method::A;
  hybrid.interferometric.beam_alpha = "h";
  hybrid.interferometric.setting_a = "A";
  hybrid.interferometric.setting_b = "B";
  hybrid.interferometric.big_m = params.hybrid_m;
  hybrid.interferometric.estimator = PhaseEstimatorKind::arcsin;
  hybrid.interferometric.samples = params.hybrid_samples > 0 ? params.hybrid_samples : 2;
  hybrid.interferometry_electrode = 0;
  hybrid.sideband_electrode = 1;
  hybrid.drive = degenerate_drive;
  hybrid.sideband_scale = 1.0;
  hybrid.initial_stray = StrayField(Eigen::Vector3d(params.stray_x, params.stray_y, 0.0));
  hybrid.phase_threshold = params.phase_threshold;
  hybrid.sideband_threshold = params.sideband_threshold;
  hybrid.search_halfwidth_v = 2.0 * hybrid.initial_stray.field.norm() + 0.1;

  RngStream rng(config.seed, "geometry-2d/hybrid", 0);
  result.hybrid = hybrid_2d_minimize(hybrid, rng);
  result.hybrid_initial_norm = hybrid.initial_stray.field.head<2>().norm();
  result.hybrid_final_norm = result.hybrid.final_field.head<2>().norm();
  return result;
}

AxialResult run_axial(const ScenarioConfig& config) {
  const auto& params = std::get<AxialParams>(config.params);
  const TrapContext ctx = config.make_context();

  // Variant without axial RF confinement: same radial physics, w_z fixed.
  TrapContext ctx_norf;
  ctx_norf.ion = config.ion;
  const RfDriveModel norf =
      drive_model_from_setting(ctx.settings.at("A"), 0.0, config.rf_drive_freq);
  ctx_norf.settings.emplace("A", secular_from_scale(norf, 1.0, "A"));
  ctx_norf.settings.emplace("B", secular_from_scale(norf, config.scale_b, "B"));

  PhaseObservable obs;
  obs.beam_alpha = "z";
  obs.setting_a = "A";
  obs.setting_b = "B";
  obs.big_m = params.big_m;
  obs.estimator = PhaseEstimatorKind::arctan2;
  obs.samples = params.samples > 0 ? params.samples : 2;

  NoiseModel noise = config.noise;
  noise.projection_sampling = params.samples > 0;

  AxialResult result;
  std::vector<double> volts, phis;
  for (int i = 0; i < params.scan_points; ++i) {
    const double v = -params.scan_amplitude_v +
                     2.0 * params.scan_amplitude_v * i / (params.scan_points - 1);
    const Eigen::Vector3d field(config.stray.field[0], config.stray.field[1],
                                params.initial_ez + params.endcap_field_per_volt * v);
    RngStream rng(config.seed, "axial/scan", static_cast<std::uint64_t>(i));
    AxialResult::ScanRow row;
    row.volt = v;
    row.phi_with_rf = measure_or_center(obs, ctx, config.beams, noise, config.timing,
                                        StrayField(field), rng)
                          .value;
    row.phi_without_rf = measure_or_center(obs, ctx_norf, config.beams, noise, config.timing,
                                           StrayField(field), rng)
                             .value;
    result.scan.push_back(row);
    volts.push_back(v);
    phis.push_back(row.phi_with_rf);
  }
  result.slope_with_rf = slope_fit(volts, phis);
  {
    std::vector<double> phis0;
    for (const auto& row : result.scan) phis0.push_back(row.phi_without_rf);
    result.slope_without_rf = slope_fit(volts, phis0);
  }

  // One-electrode axial loop: measure, update the endcap offset, repeat.
  double endcap_v = 0.0;
  for (int k = 0; k < params.loop_updates; ++k) {
    const double ez = params.initial_ez + params.endcap_field_per_volt * endcap_v;
    result.loop_ez.push_back(std::abs(ez));
    RngStream rng(config.seed, "axial/loop", static_cast<std::uint64_t>(k));
    const double phi = measure_or_center(obs, ctx, config.beams, noise, config.timing,
                                         StrayField(Eigen::Vector3d(0.0, 0.0, ez)), rng)
                           .value;
    endcap_v -= phi / result.slope_with_rf;
  }
  return result;
}

StatUncertaintyResult run_stat_uncertainty(const ScenarioConfig& config) {
  const auto& params = std::get<StatUncertaintyParams>(config.params);
  StatUncertaintyResult result;

  // Sampling straight from the sequence response: p(theta_T) with binomial
  // projection noise, then the arctan2 reconstruction.
  const auto arctan2_error = [](double phi, long n, RngStream& rng) {
    const long half = n / 2;
    const double p1 = 0.5 * (1.0 + std::cos(phi - pi / 2.0));
    const double p2 = 0.5 * (1.0 + std::cos(phi));
    const double e1 = static_cast<double>(rng.binomial(half, p1)) / static_cast<double>(half);
    const double e2 = static_cast<double>(rng.binomial(half, p2)) / static_cast<double>(half);
    if (e1 == 0.5 && e2 == 0.5) return -phi;  // zero information: center estimate
    return wrap_pi_atan(std::atan2(e1 - 0.5, e2 - 0.5) - phi);
  };

  for (const long n : params.n_values) {
    // Mean RMS over uniformly distributed phases.
    std::vector<double> sq(static_cast<std::size_t>(params.trials), 0.0);
    parallel_trials(params.trials, config.threads, [&](long trial) {
      RngStream rng(config.seed, "stat/mean" + std::to_string(n),
                    static_cast<std::uint64_t>(trial));
      const double phi = (rng.uniform() * 2.0 - 1.0) * pi;
      const double err = arctan2_error(phi, n, rng);
      sq[static_cast<std::size_t>(trial)] = err * err;
    });
    double sum = 0.0;
    for (const double s : sq) sum += s;
    StatUncertaintyResult::MeanRms mean;
    mean.n = n;
    mean.rms = std::sqrt(sum / static_cast<double>(params.trials));
    mean.reference = 1.24 / std::sqrt(static_cast<double>(n));
    result.mean_rms.push_back(mean);

    // RMS versus the true phase on a fixed grid.
    for (int g = 0; g < params.phi_points; ++g) {
      const double phi = -pi + (g + 0.5) * two_pi / params.phi_points;
      std::vector<double> grid_sq(static_cast<std::size_t>(params.trials), 0.0);
      parallel_trials(params.trials, config.threads, [&](long trial) {
        RngStream rng(config.seed,
                      "stat/grid" + std::to_string(n) + "/" + std::to_string(g),
                      static_cast<std::uint64_t>(trial));
        const double err = arctan2_error(phi, n, rng);
        grid_sq[static_cast<std::size_t>(trial)] = err * err;
      });
      double gsum = 0.0;
      for (const double s : grid_sq) gsum += s;
      StatUncertaintyResult::GridPoint point;
      point.n = n;
      point.phi = phi;
      point.rms = std::sqrt(gsum / static_cast<double>(params.trials));
      result.grid.push_back(point);
    }
  }

  // arcsin vs offset-arctan2 at reduced contrast (both centered on phi = 0).
  for (const double contrast : params.contrast_values) {
    for (int g = 0; g < params.phi_points; ++g) {
      const double phi = -pi / 2.0 + (g + 0.5) * pi / params.phi_points;
      const long half = params.comparison_n / 2;
      std::vector<double> sq_arcsin(static_cast<std::size_t>(params.comparison_trials), 0.0);
      std::vector<double> sq_offset(static_cast<std::size_t>(params.comparison_trials), 0.0);
      parallel_trials(params.comparison_trials, config.threads, [&](long trial) {
        RngStream rng(config.seed,
                      "stat/cmp" + std::to_string(g) + "/" +
                          std::to_string(static_cast<int>(contrast * 1000)),
                      static_cast<std::uint64_t>(trial));
        const auto sample_p = [&](double theta) {
          const double p = 0.5 * (1.0 + contrast * std::cos(phi + theta));
          return static_cast<double>(rng.binomial(half, p)) / static_cast<double>(half);
        };
        {
          const double pm = sample_p(-pi / 2.0);
          const double pp = sample_p(pi / 2.0);
          double err = 0.0;
          try {
            err = wrap_pi_atan(estimate_arcsin(pm, pp, contrast).value - phi);
          } catch (const ZeroDenominator&) {
            err = -phi;
          }
          sq_arcsin[static_cast<std::size_t>(trial)] = err * err;
        }
        {
          const double pq = sample_p(pi / 4.0);
          const double p3q = sample_p(3.0 * pi / 4.0);
          double err = 0.0;
          try {
            err = wrap_pi_atan(estimate_arctan2_offset(pq, p3q).value - phi);
          } catch (const UndefinedEstimate&) {
            err = -phi;
          }
          sq_offset[static_cast<std::size_t>(trial)] = err * err;
        }
      });
      double sa = 0.0, so = 0.0;
      for (long t = 0; t < params.comparison_trials; ++t) {
        sa += sq_arcsin[static_cast<std::size_t>(t)];
        so += sq_offset[static_cast<std::size_t>(t)];
      }
      StatUncertaintyResult::ComparisonPoint point;
      point.contrast = contrast;
      point.phi = phi;
      point.rms_arcsin = std::sqrt(sa / static_cast<double>(params.comparison_trials));
      point.rms_offset = std::sqrt(so / static_cast<double>(params.comparison_trials));
      result.comparison.push_back(point);
    }
  }
  return result;
}

ResonatorResult run_resonator(const ScenarioConfig& config) {
  const auto& params = std::get<ResonatorScenarioParams>(config.params);
  const ResonatorParams res(params.tau_s, two_pi * params.resonance_hz, params.q_factor);

  double a1 = params.a1;
  if (params.mode == "two_source") {
    a1 *= 1.0 + params.source_error;  // stabilized mode corrects this away
  }

  const ServoMode mode = params.mode == "ramped" ? ServoMode::ramped
                         : params.mode == "stabilized" ? ServoMode::stabilized
                                                        : ServoMode::two_source;
  ResonatorResult result;
  for (const double dphi : params.delta_phi) {
    const SourceSwitch sw(a1, params.a2, dphi, 0.0, params.t_revert_over_tau * params.tau_s);
    ResonatorResult::Trace trace;
    trace.delta_phi = dphi;
    for (int i = 0; i <= params.points; ++i) {
      trace.t.push_back(-0.5 * params.tau_s +
                        (params.t_max_over_tau + 0.5) * params.tau_s * i / params.points);
    }
    trace.b = envelope_series(res, sw, mode, params.ramp_over_tau * params.tau_s, trace.t);
    result.traces.push_back(std::move(trace));

    ResonatorResult::Summary summary;
    summary.delta_phi = dphi;
    summary.settle_s = settle_time(res, sw, params.settle_tolerance);
    summary.dropout = dropout_depth(res, sw);
    summary.loss_risk = ion_loss_risk(res, sw, params.stability_floor);
    result.summaries.push_back(summary);
  }
  return result;
}

namespace {

using nlohmann::json;

void add_csv(RunReport& report, const std::filesystem::path& dir, const std::string& name,
             const CsvWriter& csv) {
  report.file_digests[name] = csv.write(dir / name);
}

void write_fringe(const FringeResult& result, RunReport& report,
                  const std::filesystem::path& dir) {
  for (const auto& trace : result.traces) {
    CsvWriter csv({"phi_pd_rad", "e_sweep_v_per_m", "p_ideal", "p_measured"});
    for (std::size_t i = 0; i < trace.phi_pd.size(); ++i) {
      csv.add_row({trace.phi_pd[i], trace.field[i], trace.p_ideal[i], trace.p_measured[i]});
    }
    add_csv(report, dir, "fringe_m" + std::to_string(trace.big_m) + ".csv", csv);
    report.metrics["zero_crossings_m" + std::to_string(trace.big_m)] = trace.zero_crossings;
  }
  if (!result.traces.empty()) {
    const double base = result.traces.front().zero_crossings + 1;
    for (const auto& trace : result.traces) {
      report.metrics["fringe_frequency_ratio_m" + std::to_string(trace.big_m)] =
          (trace.zero_crossings + 1) / base;
    }
  }
}

void write_method_b(const MethodBDriftResult& result, RunReport& report,
                    const std::filesystem::path& dir) {
  CsvWriter csv({"t_s", "common_drift_rad", "phi_pd_a_rad", "phi_pd_b_rad", "diff_rad"});
  for (const auto& row : result.rows) {
    csv.add_row({row.t, row.drift, row.phi_a, row.phi_b, row.diff});
  }
  add_csv(report, dir, "method_b_drift.csv", csv);
  report.metrics["phi_a_span_rad"] = result.phi_a_span;
  report.metrics["diff_span_rad"] = result.diff_span;
}

void write_closed_loop(const ClosedLoopScenarioResult& result, RunReport& report,
                       const std::filesystem::path& dir) {
  const int n_el =
      result.samples.empty() ? 0 : static_cast<int>(result.samples.front().voltages.size());
  std::vector<std::string> columns{"t_s",    "Ex_true", "Ey_true", "Ez_true",
                                   "Ex_est", "Ey_est",  "Ez_est"};
  for (int j = 1; j <= n_el; ++j) columns.push_back("V" + std::to_string(j));
  columns.push_back("Erf_Vm");
  CsvWriter csv(columns);
  for (const auto& s : result.samples) {
    std::vector<double> row{s.t,
                            s.field_true[0],
                            s.field_true[1],
                            s.field_true[2],
                            s.field_estimate[0],
                            s.field_estimate[1],
                            s.field_estimate[2]};
    for (int j = 0; j < n_el; ++j) row.push_back(s.voltages[j]);
    row.push_back(s.rf_field);
    csv.add_row(row);
  }
  add_csv(report, dir, "closed_loop.csv", csv);

  CsvWriter allan({"tau_s", "deviation_v_per_m"});
  for (const auto& point : result.allan) {
    allan.add_row({point.tau, point.deviation});
  }
  add_csv(report, dir, "closed_loop_allan.csv", allan);
  report.metrics["allan_slope"] = result.allan_slope;
  report.metrics["allan_min_tau_s"] = result.allan[result.allan_min_index].tau;
  report.metrics["allan_first_dev"] = result.allan.front().deviation;
  report.metrics["allan_last_dev"] = result.allan.back().deviation;
  report.metrics["duty_reduced_fraction"] = result.duty.reduced_fraction;
  report.metrics["duty_mean_power"] = result.duty.mean_power;
  report.metrics["duty_boost_power"] = result.duty.boost_power;
}

void write_robustness(const RobustnessResult& result, RunReport& report,
                      const std::filesystem::path& dir) {
  CsvWriter area({"area_error_even", "shift_i_rad", "shift_ii_rad", "shift_avg_rad"});
  double max_i = 0.0, max_ii = 0.0, max_avg = 0.0;
  for (const auto& p : result.area_sweep) {
    area.add_row({p.area_error, p.shift_i, p.shift_ii, p.shift_avg});
    max_i = std::max(max_i, std::abs(p.shift_i));
    max_ii = std::max(max_ii, std::abs(p.shift_ii));
    max_avg = std::max(max_avg, std::abs(p.shift_avg));
  }
  add_csv(report, dir, "robustness_area.csv", area);
  report.metrics["area_max_shift_i_rad"] = max_i;
  report.metrics["area_max_shift_ii_rad"] = max_ii;
  report.metrics["area_max_shift_avg_rad"] = max_avg;

  CsvWriter det({"detuning_rad_s", "naive_shift_rad", "shift_i_rad", "shift_ii_rad",
                 "shift_avg_rad"});
  double worst_ratio = 0.0;
  for (const auto& p : result.detuning_sweep) {
    det.add_row({p.detuning, p.naive_shift, p.shift_i, p.shift_ii, p.shift_avg});
    if (p.naive_shift > 0.05) {
      worst_ratio = std::max(
          worst_ratio, std::max(std::abs(p.shift_i), std::abs(p.shift_ii)) / p.naive_shift);
    }
  }
  add_csv(report, dir, "robustness_detuning.csv", det);
  report.metrics["detuning_worst_shift_ratio"] = worst_ratio;

  CsvWriter bias({"phi_pd_rad", "bias_i_rad", "bias_iii_rad"});
  double argmax_i = 0.0, argmax_iii = 0.0, max_bias_i = -1.0, max_bias_iii = -1.0;
  for (const auto& p : result.bias_curve) {
    bias.add_row({p.phi_pd, p.bias_i, p.bias_iii});
    if (std::abs(p.bias_i) > max_bias_i) {
      max_bias_i = std::abs(p.bias_i);
      argmax_i = p.phi_pd;
    }
    if (std::abs(p.bias_iii) > max_bias_iii) {
      max_bias_iii = std::abs(p.bias_iii);
      argmax_iii = p.phi_pd;
    }
  }
  add_csv(report, dir, "robustness_bias.csv", bias);
  report.metrics["bias_argmax_i_rad"] = argmax_i;
  report.metrics["bias_argmax_iii_rad"] = argmax_iii;
}

void write_rpe(const RpeScalingResult& result, RunReport& report,
               const std::filesystem::path& dir) {
  CsvWriter csv({"decohered", "j_max", "n_measurements", "total_area_rad", "rms_error_rad",
                 "sql_rad"});
  for (const auto& p : result.ideal) {
    csv.add_row({0.0, static_cast<double>(p.j_max), p.n_measurements, p.area, p.rms, p.sql});
  }
  for (const auto& p : result.decohered) {
    csv.add_row({1.0, static_cast<double>(p.j_max), p.n_measurements, p.area, p.rms, p.sql});
  }
  add_csv(report, dir, "rpe_scaling.csv", csv);

  CsvWriter base({"n_measurements", "total_area_rad", "rms_error_rad", "sql_rad"});
  for (const auto& p : result.baseline) {
    base.add_row({p.n_measurements, p.area, p.rms, p.sql});
  }
  add_csv(report, dir, "rpe_baseline.csv", base);

  if (result.ideal.size() >= 2) {
    std::vector<AllanPoint> loglog;
    for (const auto& p : result.ideal) loglog.push_back({p.area, p.rms});
    report.metrics["rpe_loglog_exponent"] = fit_loglog_slope(loglog);
    report.metrics["rpe_final_rms_rad"] = result.ideal.back().rms;
    report.metrics["rpe_final_sql_rad"] = result.ideal.back().sql;
  }
}

void write_geometry(const Geometry2dResult& result, RunReport& report,
                    const std::filesystem::path& dir) {
  CsvWriter csv({"scale", "omega_bx_hz", "omega_by_hz", "angle_between_deg"});
  for (const auto& row : result.sweep) {
    csv.add_row({row.scale, row.omega_bx_hz, row.omega_by_hz, row.angle_between_deg});
  }
  add_csv(report, dir, "geometry_sensitivity.csv", csv);

  CsvWriter hybrid({"iteration", "Ex_v_per_m", "Ey_v_per_m", "phase_rad", "sideband_ratio"});
  for (const auto& step : result.hybrid.history) {
    hybrid.add_row({static_cast<double>(step.iteration), step.field[0], step.field[1], step.phase,
                    step.sideband});
  }
  add_csv(report, dir, "geometry_hybrid.csv", hybrid);

  report.metrics["angle_degenerate_deg"] = result.angle_degenerate_deg;
  report.metrics["angle_deep_deg"] = result.angle_deep_deg;
  report.metrics["hybrid_converged"] = result.hybrid.converged ? 1.0 : 0.0;
  report.metrics["hybrid_initial_norm_v_per_m"] = result.hybrid_initial_norm;
  report.metrics["hybrid_final_norm_v_per_m"] = result.hybrid_final_norm;
}

void write_axial(const AxialResult& result, RunReport& report,
                 const std::filesystem::path& dir) {
  CsvWriter scan({"endcap_v", "phi_pd_rad", "phi_pd_no_rf_axial_rad"});
  for (const auto& row : result.scan) {
    scan.add_row({row.volt, row.phi_with_rf, row.phi_without_rf});
  }
  add_csv(report, dir, "axial_scan.csv", scan);

  CsvWriter loop({"update", "abs_ez_v_per_m"});
  for (std::size_t k = 0; k < result.loop_ez.size(); ++k) {
    loop.add_row({static_cast<double>(k), result.loop_ez[k]});
  }
  add_csv(report, dir, "axial_loop.csv", loop);

  report.metrics["slope_with_rf_rad_per_v"] = result.slope_with_rf;
  report.metrics["slope_without_rf_rad_per_v"] = result.slope_without_rf;
  report.metrics["loop_initial_ez"] = result.loop_ez.front();
  report.metrics["loop_final_ez"] = result.loop_ez.back();
}

void write_stat(const StatUncertaintyResult& result, RunReport& report,
                const std::filesystem::path& dir) {
  CsvWriter mean({"n", "mean_rms_rad", "reference_rad"});
  for (const auto& m : result.mean_rms) {
    mean.add_row({static_cast<double>(m.n), m.rms, m.reference});
    report.metrics["mean_rms_ratio_n" + std::to_string(m.n)] = m.rms / m.reference;
  }
  add_csv(report, dir, "stat_mean_rms.csv", mean);

  CsvWriter grid({"n", "phi_rad", "rms_rad"});
  for (const auto& g : result.grid) {
    grid.add_row({static_cast<double>(g.n), g.phi, g.rms});
  }
  add_csv(report, dir, "stat_rms_vs_phi.csv", grid);

  CsvWriter cmp({"contrast", "phi_rad", "rms_arcsin_rad", "rms_arctan2_offset_rad"});
  for (const auto& c : result.comparison) {
    cmp.add_row({c.contrast, c.phi, c.rms_arcsin, c.rms_offset});
  }
  add_csv(report, dir, "stat_arcsin_vs_arctan2.csv", cmp);
}

void write_resonator(const ResonatorResult& result, RunReport& report,
                     const std::filesystem::path& dir) {
  int index = 0;
  for (const auto& trace : result.traces) {
    CsvWriter csv({"t_us", "re_b", "im_b", "abs_b"});
    for (std::size_t i = 0; i < trace.t.size(); ++i) {
      csv.add_row({trace.t[i] * 1e6, trace.b[i].real(), trace.b[i].imag(),
                   std::abs(trace.b[i])});
    }
    add_csv(report, dir, "resonator_dphi_" + std::to_string(index++) + ".csv", csv);
  }
  CsvWriter summary({"delta_phi_rad", "settle_s", "dropout", "ion_loss_risk"});
  for (const auto& s : result.summaries) {
    summary.add_row({s.delta_phi, s.settle_s, s.dropout, s.loss_risk ? 1.0 : 0.0});
  }
  add_csv(report, dir, "resonator_summary.csv", summary);
  for (const auto& s : result.summaries) {
    report.metrics["dropout_dphi_" + format_double(s.delta_phi)] = s.dropout;
  }
}

}  // namespace

RunReport run_scenario(const ScenarioConfig& config) {
  const auto start = std::chrono::steady_clock::now();
  RunReport report;
  report.scenario = config.scenario;
  report.seed = config.seed;
  report.schema_version = config.schema_version;

  const std::filesystem::path dir =
      config.output_dir.empty() ? std::filesystem::path(".")
                                : std::filesystem::path(config.output_dir);
  std::filesystem::create_directories(dir);

  if (config.scenario == "fringe") {
    write_fringe(run_fringe(config), report, dir);
  } else if (config.scenario == "method-b-drift") {
    write_method_b(run_method_b_drift(config), report, dir);
  } else if (config.scenario == "closed-loop") {
    write_closed_loop(run_closed_loop(config), report, dir);
  } else if (config.scenario == "robustness") {
    write_robustness(run_robustness(config), report, dir);
  } else if (config.scenario == "rpe-scaling") {
    write_rpe(run_rpe_scaling(config), report, dir);
  } else if (config.scenario == "geometry-2d") {
    write_geometry(run_geometry_2d(config), report, dir);
  } else if (config.scenario == "axial") {
    write_axial(run_axial(config), report, dir);
  } else if (config.scenario == "stat-uncertainty") {
    write_stat(run_stat_uncertainty(config), report, dir);
  } else if (config.scenario == "resonator") {
    write_resonator(run_resonator(config), report, dir);
  } else {
    throw ScenarioUnknown("unknown scenario '" + config.scenario + "'");
  }

  report.wall_time_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  json j;
  j["scenario"] = report.scenario;
  j["seed"] = report.seed;
  j["schema_version"] = report.schema_version;
  j["wall_time_s"] = report.wall_time_s;
  j["files"] = json::object();
  for (const auto& [name, digest] : report.file_digests) {
    j["files"][name] = digest;
  }
  j["metrics"] = json::object();
  for (const auto& [name, value] : report.metrics) {
    j["metrics"][name] = value;
  }
  std::ofstream out(dir / "run_report.json", std::ios::binary);
  if (!out) {
    throw Error("cannot write " + (dir / "run_report.json").string());
  }
  out << j.dump(2) << "\n";
  return report;
}

}  // namespace trapcal
