#include "trapcal/config.hpp"

#include <fstream>
#include <sstream>

#include "json.hpp"
#include "trapcal/angles.hpp"
#include "trapcal/errors.hpp"

namespace trapcal {

using nlohmann::json;

RfDriveModel ScenarioConfig::drive_model() const {
  return drive_model_from_setting(TrapSetting("A", secular_a), rf_axial, rf_drive_freq);
}

TrapContext ScenarioConfig::make_context() const {
  TrapContext ctx;
  ctx.ion = ion;
  const RfDriveModel drive = drive_model();
  ctx.settings.emplace("A", secular_from_scale(drive, 1.0, "A"));
  ctx.settings.emplace("B", secular_from_scale(drive, scale_b, "B"));
  return ctx;
}

const std::map<std::string, std::string>& scenario_catalog() {
  static const std::map<std::string, std::string> catalog{
      {"fringe", "Method A fringes vs field offset for a list of sequence lengths"},
      {"method-b-drift", "two-beam phase difference under common path-length drift"},
      {"closed-loop", "gradient-matrix calibration plus a closed compensation loop"},
      {"robustness", "settings I/II/III response to pulse-area errors and detuning"},
      {"rpe-scaling", "binary-search phase estimation vs the standard quantum limit"},
      {"geometry-2d", "sensitivity directions vs RF scale and the hybrid one-beam loop"},
      {"axial", "axial micromotion observable and a one-electrode axial loop"},
      {"stat-uncertainty", "statistical error of the phase estimators vs N and phi"},
      {"resonator", "resonant-circuit envelope during RF source switching"},
  };
  return catalog;
}

namespace {

struct Check {
  std::vector<std::string> violations;

  void fail(const std::string& message) { violations.push_back(message); }

  const json* object(const json& parent, const std::string& path, const std::string& key,
                     bool required = false) {
    if (!parent.contains(key)) {
      if (required) fail(path + key + ": missing required object");
      return nullptr;
    }
    if (!parent.at(key).is_object()) {
      fail(path + key + ": must be an object");
      return nullptr;
    }
    return &parent.at(key);
  }

  double number(const json& parent, const std::string& path, const std::string& key,
                double fallback, double min_value, double max_value, bool required = false) {
    if (!parent.contains(key)) {
      if (required) fail(path + key + ": missing required number");
      return fallback;
    }
    const json& v = parent.at(key);
    if (!v.is_number()) {
      fail(path + key + ": must be a number");
      return fallback;
    }
    const double x = v.get<double>();
    if (x < min_value || x > max_value) {
      std::ostringstream msg;
      msg << path << key << ": " << x << " outside [" << min_value << ", " << max_value << "]";
      fail(msg.str());
      return fallback;
    }
    return x;
  }

  long integer(const json& parent, const std::string& path, const std::string& key, long fallback,
               long min_value, long max_value, bool required = false) {
    if (!parent.contains(key)) {
      if (required) fail(path + key + ": missing required integer");
      return fallback;
    }
    const json& v = parent.at(key);
    if (!v.is_number_integer()) {
      fail(path + key + ": must be an integer");
      return fallback;
    }
    const long x = v.get<long>();
    if (x < min_value || x > max_value) {
      std::ostringstream msg;
      msg << path << key << ": " << x << " outside [" << min_value << ", " << max_value << "]";
      fail(msg.str());
      return fallback;
    }
    return x;
  }

  bool boolean(const json& parent, const std::string& path, const std::string& key,
               bool fallback) {
    if (!parent.contains(key)) return fallback;
    if (!parent.at(key).is_boolean()) {
      fail(path + key + ": must be a boolean");
      return fallback;
    }
    return parent.at(key).get<bool>();
  }

  std::string text(const json& parent, const std::string& path, const std::string& key,
                   const std::string& fallback, bool required = false) {
    if (!parent.contains(key)) {
      if (required) fail(path + key + ": missing required string");
      return fallback;
    }
    if (!parent.at(key).is_string()) {
      fail(path + key + ": must be a string");
      return fallback;
    }
    return parent.at(key).get<std::string>();
  }
};

std::vector<std::string> required_top_level_keys() {
  return {"schema_version", "scenario", "seed"};
}

void parse_beams(Check& check, const json& root, ScenarioConfig& config) {
  if (!root.contains("beams")) return;
  if (!root.at("beams").is_array()) {
    check.fail("beams: must be an array");
    return;
  }
  int index = 0;
  for (const json& b : root.at("beams")) {
    const std::string path = "beams[" + std::to_string(index++) + "].";
    if (!b.is_object()) {
      check.fail(path + ": must be an object");
      continue;
    }
    const std::string id = check.text(b, path, "id", "", true);
    const double wavelength =
        check.number(b, path, "wavelength_m", 674e-9, 1e-9, 1e-3, true);
    const double offset = check.number(b, path, "phase_offset_rad", 0.0, -1e6, 1e6);
    if (id.empty()) continue;
    if (config.beams.count(id)) {
      check.fail(path + "id: duplicate beam id '" + id + "'");
      continue;
    }
    if (b.contains("direction")) {
      const json& d = b.at("direction");
      if (!d.is_array() || d.size() != 3 || !d[0].is_number() || !d[1].is_number() ||
          !d[2].is_number()) {
        check.fail(path + "direction: must be a 3-vector of numbers");
        continue;
      }
      Eigen::Vector3d dir(d[0].get<double>(), d[1].get<double>(), d[2].get<double>());
      if (dir.norm() == 0.0) {
        check.fail(path + "direction: must be non-zero");
        continue;
      }
      dir.normalize();
      config.beams.emplace(id, LaserBeam(two_pi / wavelength * dir, offset, 0.0));
    } else {
      const double angle = check.number(b, path, "angle_deg", 0.0, -360.0, 360.0, true);
      config.beams.emplace(id, beam_at_angle(deg_to_rad(angle), wavelength, offset));
    }
  }
}

void parse_trap(Check& check, const json& root, ScenarioConfig& config, bool required) {
  const json* trap = check.object(root, "", "trap", required);
  if (!trap) return;
  config.rf_drive_freq =
      two_pi * check.number(*trap, "trap.", "rf_drive_freq_hz", 18.1e6, 1e3, 1e12);
  if (trap->contains("secular_a_hz")) {
    const json& s = trap->at("secular_a_hz");
    if (!s.is_array() || s.size() != 3 || !s[0].is_number() || !s[1].is_number() ||
        !s[2].is_number()) {
      check.fail("trap.secular_a_hz: must be a 3-vector of numbers");
    } else {
      for (int i = 0; i < 3; ++i) {
        const double f = s[static_cast<std::size_t>(i)].get<double>();
        if (!(f > 0.0)) {
          check.fail("trap.secular_a_hz: frequencies must be > 0");
          return;
        }
        config.secular_a[i] = two_pi * f;
      }
    }
  } else if (required) {
    check.fail("trap.secular_a_hz: missing required key");
  }
  config.rf_axial = two_pi * check.number(*trap, "trap.", "rf_axial_hz", 0.0, 0.0, 1e12);
  if (config.rf_axial >= config.secular_a[2]) {
    check.fail("trap.rf_axial_hz: must be below the axial secular frequency");
    config.rf_axial = 0.0;
  }
  config.scale_b = check.number(*trap, "trap.", "scale_b", 0.56, 1e-6, 100.0);
}

void parse_noise(Check& check, const json& root, ScenarioConfig& config) {
  const json* noise = check.object(root, "", "noise", false);
  if (!noise) return;
  if (noise->contains("t2_s")) {
    const double t2 = check.number(*noise, "noise.", "t2_s", 1.0, -1e30, 1e30);
    if (!(t2 > 0.0)) {
      check.fail("noise.t2_s: must be > 0 (omit the key for an infinite T2)");
    } else {
      config.noise.t2 = t2;
    }
  }
  config.noise.detuning =
      two_pi * check.number(*noise, "noise.", "detuning_hz", 0.0, -1e9, 1e9);
  config.noise.area_error_even =
      check.number(*noise, "noise.", "area_error_even", 1.0, 0.0, 10.0);
  config.noise.area_error_odd =
      check.number(*noise, "noise.", "area_error_odd", 1.0, 0.0, 10.0);
  config.noise.projection_sampling =
      check.boolean(*noise, "noise.", "projection_sampling", false);
}

void parse_common(Check& check, const json& root, ScenarioConfig& config, bool trap_required) {
  if (const json* ion = check.object(root, "", "ion", false)) {
    const double q =
        check.number(*ion, "ion.", "charge_c", elementary_charge, 1e-21, 1e-17);
    const double m =
        check.number(*ion, "ion.", "mass_kg", 88.0 * atomic_mass_unit, 1e-28, 1e-23);
    config.ion = IonSpecies(q, m);
  }
  parse_trap(check, root, config, trap_required);
  parse_beams(check, root, config);
  if (const json* field = check.object(root, "", "field", false)) {
    if (field->contains("stray_v_per_m")) {
      const json& e = field->at("stray_v_per_m");
      if (!e.is_array() || e.size() != 3) {
        check.fail("field.stray_v_per_m: must be a 3-vector");
      } else {
        config.stray = StrayField(Eigen::Vector3d(e[0].get<double>(), e[1].get<double>(),
                                                  e[2].get<double>()));
      }
    }
  }
  parse_noise(check, root, config);
  if (const json* seq = check.object(root, "", "sequence", false)) {
    config.timing.pi_time = check.number(*seq, "sequence.", "pi_time_s", 10e-6, 1e-9, 1.0);
    config.timing.inter_pulse_wait =
        check.number(*seq, "sequence.", "inter_pulse_wait_s", 50e-6, 0.0, 1.0);
  }
  if (const json* el = check.object(root, "", "electrodes", false)) {
    if (!el->contains("field_per_volt")) {
      check.fail("electrodes.field_per_volt: missing required key");
    } else {
      const json& g = el->at("field_per_volt");
      if (!g.is_array() || g.size() != 3) {
        check.fail("electrodes.field_per_volt: must have 3 rows");
      } else {
        const std::size_t cols = g[0].is_array() ? g[0].size() : 0;
        if (cols < 1 || cols > 8) {
          check.fail("electrodes.field_per_volt: needs 1..8 columns");
        } else {
          Eigen::MatrixXd m(3, static_cast<Eigen::Index>(cols));
          bool ok = true;
          for (std::size_t r = 0; r < 3; ++r) {
            if (!g[r].is_array() || g[r].size() != cols) {
              check.fail("electrodes.field_per_volt: ragged rows");
              ok = false;
              break;
            }
            for (std::size_t c = 0; c < cols; ++c) {
              if (!g[r][c].is_number()) {
                check.fail("electrodes.field_per_volt: entries must be numbers");
                ok = false;
                break;
              }
              m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
                  g[r][c].get<double>();
            }
            if (!ok) break;
          }
          if (ok) config.geometry = ElectrodeGeometry(m);
        }
      }
    }
  }
  if (const json* drift = check.object(root, "", "drift", false)) {
    if (drift->contains("field_walk_v_per_m_sqrt_s")) {
      const json& w = drift->at("field_walk_v_per_m_sqrt_s");
      if (!w.is_array() || w.size() != 3) {
        check.fail("drift.field_walk_v_per_m_sqrt_s: must be a 3-vector");
      } else {
        for (int i = 0; i < 3; ++i) {
          const double rate = w[static_cast<std::size_t>(i)].get<double>();
          if (rate < 0.0) {
            check.fail("drift.field_walk_v_per_m_sqrt_s: rates must be >= 0");
          } else {
            config.drift.field_walk_rate[i] = rate;
          }
        }
      }
    }
    config.drift.voltage_noise_rms =
        check.number(*drift, "drift.", "voltage_noise_v", 0.0, 0.0, 1e3);
  }
}

void require_beam(Check& check, const ScenarioConfig& config, const std::string& path,
                  const std::string& id) {
  if (!config.beams.count(id)) {
    check.fail(path + ": beam id '" + id + "' is not defined in beams[]");
  }
}

json params_or_empty(Check& check, const json& root) {
  if (!root.contains("params")) return json::object();
  if (!root.at("params").is_object()) {
    check.fail("params: must be an object");
    return json::object();
  }
  return root.at("params");
}

FringeParams parse_fringe(Check& check, const json& p, const ScenarioConfig& config) {
  FringeParams out;
  if (p.contains("m_values")) {
    if (!p.at("m_values").is_array() || p.at("m_values").empty()) {
      check.fail("params.m_values: must be a non-empty array of integers");
    } else {
      out.m_values.clear();
      for (const json& v : p.at("m_values")) {
        if (!v.is_number_integer() || v.get<int>() < 1 || v.get<int>() > 512) {
          check.fail("params.m_values: entries must be integers in [1, 512]");
          break;
        }
        out.m_values.push_back(v.get<int>());
      }
    }
  }
  out.points = static_cast<int>(check.integer(p, "params.", "points", out.points, 16, 100000));
  out.theta_t = check.number(p, "params.", "theta_t_rad", out.theta_t, -two_pi, two_pi);
  out.beam = check.text(p, "params.", "beam", out.beam);
  out.samples_per_point = check.integer(p, "params.", "samples_per_point", 0, 0, 1000000);
  require_beam(check, config, "params.beam", out.beam);
  return out;
}

MethodBDriftParams parse_method_b(Check& check, const json& p, const ScenarioConfig& config) {
  MethodBDriftParams out;
  out.beam_alpha = check.text(p, "params.", "beam_alpha", out.beam_alpha);
  out.beam_beta = check.text(p, "params.", "beam_beta", out.beam_beta);
  out.big_m = static_cast<int>(check.integer(p, "params.", "m", out.big_m, 1, 64));
  out.steps = static_cast<int>(check.integer(p, "params.", "steps", out.steps, 2, 100000));
  out.interval_s = check.number(p, "params.", "interval_s", out.interval_s, 1e-6, 1e6);
  out.ramp_rad_per_s = check.number(p, "params.", "ramp_rad_per_s", 0.0, -1e6, 1e6);
  out.walk_rad_per_sqrt_s = check.number(p, "params.", "walk_rad_per_sqrt_s", 0.0, 0.0, 1e6);
  out.samples_per_point = check.integer(p, "params.", "samples_per_point", 0, 0, 1000000);
  require_beam(check, config, "params.beam_alpha", out.beam_alpha);
  require_beam(check, config, "params.beam_beta", out.beam_beta);
  if (out.beam_alpha == out.beam_beta) {
    check.fail("params.beam_beta: Method B needs two distinct beams");
  }
  return out;
}

ClosedLoopParams parse_closed_loop(Check& check, const json& p, const ScenarioConfig& config) {
  ClosedLoopParams out;
  if (!p.contains("observables") || !p.at("observables").is_array() ||
      p.at("observables").empty()) {
    check.fail("params.observables: missing required array");
  } else {
    int index = 0;
    for (const json& o : p.at("observables")) {
      const std::string path = "params.observables[" + std::to_string(index++) + "].";
      ClosedLoopParams::Observable obs;
      obs.beam = check.text(o, path, "beam", "", true);
      obs.big_m = static_cast<int>(check.integer(o, path, "m", 8, 1, 64));
      obs.estimator = check.text(o, path, "estimator", "arcsin");
      obs.samples = check.integer(o, path, "samples", 400, 2, 1000000);
      if (obs.estimator != "arcsin" && obs.estimator != "arctan2") {
        check.fail(path + "estimator: must be 'arcsin' or 'arctan2'");
      }
      if (!obs.beam.empty()) require_beam(check, config, path + "beam", obs.beam);
      out.observables.push_back(obs);
    }
  }
  out.scan_amplitude_v =
      check.number(p, "params.", "scan_amplitude_v", out.scan_amplitude_v, 1e-9, 1e3);
  out.scan_points =
      static_cast<int>(check.integer(p, "params.", "scan_points", out.scan_points, 3, 1001));
  out.calibration_samples =
      check.integer(p, "params.", "calibration_samples", out.calibration_samples, 2, 10000000);
  out.duration_s = check.number(p, "params.", "duration_s", out.duration_s, 1e-3, 1e7);
  out.update_interval_s =
      check.number(p, "params.", "update_interval_s", out.update_interval_s, 1e-3, 1e6);
  out.drift_enabled = check.boolean(p, "params.", "drift_enabled", false);
  out.sample_overhead_s =
      check.number(p, "params.", "sample_overhead_s", out.sample_overhead_s, 0.0, 1e3);
  if (static_cast<Eigen::Index>(out.observables.size()) != config.geometry.field_per_volt.cols() ||
      (out.observables.size() != 2 && out.observables.size() != 3)) {
    check.fail("params.observables: need 2 or 3 observables matching the electrode count");
  }
  return out;
}

RobustnessParams parse_robustness(Check& check, const json& p, const ScenarioConfig& config) {
  RobustnessParams out;
  out.beam = check.text(p, "params.", "beam", out.beam);
  out.m_area = static_cast<int>(check.integer(p, "params.", "m_area", out.m_area, 2, 64));
  out.area_error_max =
      check.number(p, "params.", "area_error_max", out.area_error_max, 1.0, 2.0);
  out.area_points =
      static_cast<int>(check.integer(p, "params.", "area_points", out.area_points, 3, 1001));
  out.odd_area_error = check.number(p, "params.", "odd_area_error", 1.0, 0.5, 1.5);
  out.m_detuning =
      static_cast<int>(check.integer(p, "params.", "m_detuning", out.m_detuning, 2, 64));
  out.detuning_shift_max =
      check.number(p, "params.", "detuning_shift_max_rad", out.detuning_shift_max, 0.01, 2.0);
  out.detuning_points =
      static_cast<int>(check.integer(p, "params.", "detuning_points", out.detuning_points, 3, 1001));
  out.phi_small = check.number(p, "params.", "phi_small_rad", out.phi_small, 0.0, 0.5);
  out.m_bias = static_cast<int>(check.integer(p, "params.", "m_bias", out.m_bias, 2, 64));
  out.bias_area_error =
      check.number(p, "params.", "bias_area_error", out.bias_area_error, 1.0, 2.0);
  out.bias_points =
      static_cast<int>(check.integer(p, "params.", "bias_points", out.bias_points, 9, 1001));
  require_beam(check, config, "params.beam", out.beam);
  if (out.m_area % 2 != 0 || out.m_detuning % 2 != 0 || out.m_bias % 2 != 0) {
    check.fail("params.m_*: settings I/II/III require even sequence lengths");
  }
  return out;
}

RpeParams parse_rpe(Check& check, const json& p, const ScenarioConfig& config) {
  RpeParams out;
  out.beam = check.text(p, "params.", "beam", out.beam);
  out.j_max = static_cast<int>(check.integer(p, "params.", "j_max", out.j_max, 1, 10));
  out.samples_per_pass =
      check.integer(p, "params.", "samples_per_pass", out.samples_per_pass, 2, 100000);
  if (p.contains("samples_per_pass_list")) {
    if (!p.at("samples_per_pass_list").is_array()) {
      check.fail("params.samples_per_pass_list: must be an array of even integers");
    } else {
      for (const json& v : p.at("samples_per_pass_list")) {
        const long n = v.is_number_integer() ? v.get<long>() : -1;
        if (n < 2 || n % 2 != 0) {
          check.fail("params.samples_per_pass_list: entries must be even and >= 2");
          out.samples_per_pass_list.clear();
          break;
        }
        out.samples_per_pass_list.push_back(n);
      }
      if (!out.samples_per_pass_list.empty() &&
          out.samples_per_pass_list.size() != static_cast<std::size_t>(out.j_max)) {
        check.fail("params.samples_per_pass_list: needs one entry per pass (j_max)");
      }
    }
  }
  out.trials = check.integer(p, "params.", "trials", out.trials, 10, 10000000);
  out.t2_finite_s = check.number(p, "params.", "t2_finite_s", out.t2_finite_s, 1e-9, 1e3);
  if (p.contains("baseline_n")) {
    if (!p.at("baseline_n").is_array()) {
      check.fail("params.baseline_n: must be an array of even integers");
    } else {
      out.baseline_n.clear();
      for (const json& v : p.at("baseline_n")) {
        out.baseline_n.push_back(v.get<long>());
      }
    }
  }
  if (out.samples_per_pass % 2 != 0) {
    check.fail("params.samples_per_pass: must be even (split across two theta_T values)");
  }
  require_beam(check, config, "params.beam", out.beam);
  return out;
}

Geometry2dParams parse_geometry(Check& check, const json& p, const ScenarioConfig&) {
  Geometry2dParams out;
  out.radial_hz = check.number(p, "params.", "radial_hz", out.radial_hz, 1e3, 1e9);
  out.split_hz = check.number(p, "params.", "split_hz", out.split_hz, 0.0, 1e9);
  out.axial_hz = check.number(p, "params.", "axial_hz", out.axial_hz, 1e3, 1e9);
  out.scale_min = check.number(p, "params.", "scale_min", out.scale_min, 1e-3, 10.0);
  out.scale_max = check.number(p, "params.", "scale_max", out.scale_max, 1e-3, 10.0);
  out.scale_points =
      static_cast<int>(check.integer(p, "params.", "scale_points", out.scale_points, 2, 10000));
  out.scale_deep = check.number(p, "params.", "scale_deep", out.scale_deep, 1e-3, 10.0);
  out.scale_moderate =
      check.number(p, "params.", "scale_moderate", out.scale_moderate, 1e-3, 10.0);
  out.stray_x = check.number(p, "params.", "stray_x_v_per_m", out.stray_x, -10.0, 10.0);
  out.stray_y = check.number(p, "params.", "stray_y_v_per_m", out.stray_y, -10.0, 10.0);
  out.phase_threshold =
      check.number(p, "params.", "phase_threshold_rad", out.phase_threshold, 1e-12, 1.0);
  out.sideband_threshold =
      check.number(p, "params.", "sideband_threshold", out.sideband_threshold, 1e-15, 1.0);
  out.hybrid_m = static_cast<int>(check.integer(p, "params.", "hybrid_m", out.hybrid_m, 1, 64));
  out.hybrid_samples = check.integer(p, "params.", "hybrid_samples", 0, 0, 1000000);
  if (out.scale_min >= out.scale_max) {
    check.fail("params.scale_min: must be below scale_max");
  }
  return out;
}

AxialParams parse_axial(Check& check, const json& p, const ScenarioConfig& config) {
  AxialParams out;
  out.big_m = static_cast<int>(check.integer(p, "params.", "m", out.big_m, 1, 64));
  out.scan_amplitude_v =
      check.number(p, "params.", "scan_amplitude_v", out.scan_amplitude_v, 1e-9, 1e3);
  out.scan_points =
      static_cast<int>(check.integer(p, "params.", "scan_points", out.scan_points, 3, 1001));
  out.endcap_field_per_volt =
      check.number(p, "params.", "endcap_field_per_volt", out.endcap_field_per_volt, 1e-9, 1e6);
  out.initial_ez = check.number(p, "params.", "initial_ez_v_per_m", out.initial_ez, -100.0, 100.0);
  out.loop_updates =
      static_cast<int>(check.integer(p, "params.", "loop_updates", out.loop_updates, 1, 10000));
  out.samples = check.integer(p, "params.", "samples", 0, 0, 1000000);
  if (!config.beams.count("z")) {
    check.fail("beams: the axial scenario needs a beam with id 'z'");
  }
  if (!(config.rf_axial > 0.0)) {
    check.fail("trap.rf_axial_hz: the axial scenario needs rf_axial_hz > 0");
  }
  return out;
}

StatUncertaintyParams parse_stat(Check& check, const json& p, const ScenarioConfig&) {
  StatUncertaintyParams out;
  if (p.contains("n_values")) {
    if (!p.at("n_values").is_array() || p.at("n_values").empty()) {
      check.fail("params.n_values: must be a non-empty array");
    } else {
      out.n_values.clear();
      for (const json& v : p.at("n_values")) {
        const long n = v.get<long>();
        if (n < 2 || n % 2 != 0) {
          check.fail("params.n_values: entries must be even and >= 2");
          break;
        }
        out.n_values.push_back(n);
      }
    }
  }
  out.phi_points =
      static_cast<int>(check.integer(p, "params.", "phi_points", out.phi_points, 3, 10001));
  out.trials = check.integer(p, "params.", "trials", out.trials, 100, 100000000);
  if (p.contains("contrast_values")) {
    out.contrast_values.clear();
    for (const json& v : p.at("contrast_values")) {
      const double c = v.get<double>();
      if (!(c > 0.0) || c > 1.0) {
        check.fail("params.contrast_values: entries must be in (0, 1]");
        break;
      }
      out.contrast_values.push_back(c);
    }
  }
  out.comparison_n = check.integer(p, "params.", "comparison_n", out.comparison_n, 2, 1000000);
  out.comparison_trials =
      check.integer(p, "params.", "comparison_trials", out.comparison_trials, 100, 100000000);
  if (out.comparison_n % 2 != 0) {
    check.fail("params.comparison_n: must be even");
  }
  return out;
}

ResonatorScenarioParams parse_resonator(Check& check, const json& p, const ScenarioConfig&) {
  ResonatorScenarioParams out;
  out.tau_s = check.number(p, "params.", "tau_s", out.tau_s, 1e-12, 1.0);
  out.resonance_hz = check.number(p, "params.", "resonance_hz", out.resonance_hz, 0.0, 1e12);
  out.q_factor = check.number(p, "params.", "q_factor", out.q_factor, 0.0, 1e9);
  out.a1 = check.number(p, "params.", "a1", out.a1, 0.0, 100.0);
  out.a2 = check.number(p, "params.", "a2", out.a2, 0.0, 100.0);
  if (p.contains("delta_phi_rad")) {
    if (!p.at("delta_phi_rad").is_array() || p.at("delta_phi_rad").empty()) {
      check.fail("params.delta_phi_rad: must be a non-empty array");
    } else {
      out.delta_phi.clear();
      for (const json& v : p.at("delta_phi_rad")) {
        out.delta_phi.push_back(v.get<double>());
      }
    }
  }
  out.t_revert_over_tau =
      check.number(p, "params.", "t_revert_over_tau", out.t_revert_over_tau, 0.01, 1e6);
  out.t_max_over_tau = check.number(p, "params.", "t_max_over_tau", out.t_max_over_tau, 0.1, 1e6);
  out.points = static_cast<int>(check.integer(p, "params.", "points", out.points, 16, 1000000));
  out.mode = check.text(p, "params.", "mode", out.mode);
  if (out.mode != "two_source" && out.mode != "stabilized" && out.mode != "ramped") {
    check.fail("params.mode: must be one of two_source|stabilized|ramped");
  }
  out.ramp_over_tau = check.number(p, "params.", "ramp_over_tau", out.ramp_over_tau, 1e-3, 1e3);
  out.settle_tolerance =
      check.number(p, "params.", "settle_tolerance", out.settle_tolerance, 1e-6, 0.999);
  out.stability_floor =
      check.number(p, "params.", "stability_floor", out.stability_floor, 0.0, 10.0);
  out.source_error = check.number(p, "params.", "source_error", 0.0, -0.5, 0.5);
  if (out.resonance_hz > 0.0 && out.q_factor > 0.0) {
    const double tau_from_q = 2.0 * out.q_factor / (two_pi * out.resonance_hz);
    if (std::abs(out.tau_s - tau_from_q) > 0.2 * tau_from_q) {
      check.fail("params.tau_s: inconsistent with 2Q/w0 beyond 20%");
    }
  }
  return out;
}

}  // namespace

ScenarioConfig validate_config(const std::string& text) {
  Check check;

  // An empty config reports the full required-key list.
  if (text.find_first_not_of(" \t\r\n") == std::string::npos) {
    for (const std::string& key : required_top_level_keys()) {
      check.fail("missing required key: " + key);
    }
    throw ConfigInvalid(check.violations);
  }

  json root;
  try {
    root = json::parse(text);
  } catch (const json::exception& e) {
    check.fail(std::string("not valid JSON: ") + e.what());
    throw ConfigInvalid(check.violations);
  }
  if (!root.is_object()) {
    check.fail("top level must be a JSON object");
    throw ConfigInvalid(check.violations);
  }

  ScenarioConfig config;
  for (const std::string& key : required_top_level_keys()) {
    if (!root.contains(key)) {
      check.fail("missing required key: " + key);
    }
  }
  if (root.contains("schema_version")) {
    const long version = check.integer(root, "", "schema_version", 1, 1, 1, true);
    config.schema_version = static_cast<int>(version);
  }
  if (root.contains("seed")) {
    if (!root.at("seed").is_number_integer() || root.at("seed").get<long long>() < 0) {
      check.fail("seed: must be a non-negative integer");
    } else {
      config.seed = root.at("seed").get<std::uint64_t>();
    }
  }
  config.scenario = check.text(root, "", "scenario", "");
  const bool known = scenario_catalog().count(config.scenario) > 0;
  if (root.contains("scenario") && !known) {
    check.fail("scenario: unknown scenario '" + config.scenario + "'");
  }
  config.output_dir = check.text(root, "", "output_dir", "");
  config.threads = static_cast<int>(check.integer(root, "", "threads", 1, 1, 256));

  const bool needs_trap = known && config.scenario != "stat-uncertainty" &&
                          config.scenario != "resonator" && config.scenario != "geometry-2d";
  parse_common(check, root, config, needs_trap);

  if (known && check.violations.empty()) {
    const json p = params_or_empty(check, root);
    if (config.scenario == "fringe") {
      config.params = parse_fringe(check, p, config);
    } else if (config.scenario == "method-b-drift") {
      config.params = parse_method_b(check, p, config);
    } else if (config.scenario == "closed-loop") {
      config.params = parse_closed_loop(check, p, config);
    } else if (config.scenario == "robustness") {
      config.params = parse_robustness(check, p, config);
    } else if (config.scenario == "rpe-scaling") {
      config.params = parse_rpe(check, p, config);
    } else if (config.scenario == "geometry-2d") {
      config.params = parse_geometry(check, p, config);
    } else if (config.scenario == "axial") {
      config.params = parse_axial(check, p, config);
    } else if (config.scenario == "stat-uncertainty") {
      config.params = parse_stat(check, p, config);
    } else if (config.scenario == "resonator") {
      config.params = parse_resonator(check, p, config);
    }
  } else if (known) {
    // Still surface scenario-parameter problems where possible.
    const json p = params_or_empty(check, root);
    (void)p;
  }

  if (!check.violations.empty()) {
    throw ConfigInvalid(check.violations);
  }
  return config;
}

ScenarioConfig load_config_file(const std::filesystem::path& path) {
  std::ifstream file(path, std::ios::binary);
  if (!file) {
    throw ConfigInvalid({"cannot read config file: " + path.string()});
  }
  std::ostringstream buffer;
  buffer << file.rdbuf();
  return validate_config(buffer.str());
}

}  // namespace trapcal
