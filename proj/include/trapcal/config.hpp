#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <variant>
#include <vector>

#include "trapcal/compensation.hpp"
#include "trapcal/pulse.hpp"
#include "trapcal/trap.hpp"

namespace trapcal {

// Per-scenario parameter blocks, parsed and range-checked by validate_config.

struct FringeParams {
  std::vector<int> m_values{1, 2, 4, 8, 16};
  int points = 256;
  double theta_t = -pi / 2.0;
  std::string beam = "h";
  long samples_per_point = 0;  // 0 = noiseless probabilities
};

struct MethodBDriftParams {
  std::string beam_alpha = "v";
  std::string beam_beta = "h";
  int big_m = 1;
  int steps = 100;
  double interval_s = 1.0;
  double ramp_rad_per_s = 0.0;
  double walk_rad_per_sqrt_s = 0.0;
  long samples_per_point = 0;
};

struct ClosedLoopParams {
  struct Observable {
    std::string beam;
    int big_m = 8;
    std::string estimator = "arcsin";
    long samples = 400;
  };
  std::vector<Observable> observables;
  double scan_amplitude_v = 0.2;
  int scan_points = 5;
  long calibration_samples = 2000;  // per scan point, independent of the loop's N
  double duration_s = 1200.0;
  double update_interval_s = 11.0;
  bool drift_enabled = false;
  double sample_overhead_s = 5e-3;  // cooling + detection per experimental cycle
};

struct RobustnessParams {
  std::string beam = "h";
  int m_area = 8;
  double area_error_max = 1.2;
  int area_points = 21;
  double odd_area_error = 1.0;
  int m_detuning = 16;
  double detuning_shift_max = 0.3;  // target max of delta*T/M, rad
  int detuning_points = 13;
  double phi_small = 0.02;  // rad, phi_PD during the error sweeps
  int m_bias = 16;
  double bias_area_error = 1.05;
  int bias_points = 65;
};

struct RpeParams {
  std::string beam = "h";
  int j_max = 5;
  long samples_per_pass = 40;
  std::vector<long> samples_per_pass_list;  // optional unequal schedule, length j_max
  long trials = 1500;
  double t2_finite_s = 500e-6;
  std::vector<long> baseline_n{20, 40, 80, 160, 320};
};

struct Geometry2dParams {
  double radial_hz = 1.5e6;
  double split_hz = 0.1e6;  // w_y - w_x at setting A for the non-degenerate case
  double axial_hz = 1.0e6;
  double scale_min = 0.45;
  double scale_max = 1.0;
  int scale_points = 40;
  double scale_deep = 0.4286;
  double scale_moderate = 0.6;
  double stray_x = 0.05;  // V/m, hybrid-loop initial field
  double stray_y = -0.03;
  double phase_threshold = 1e-4;
  double sideband_threshold = 1e-7;
  int hybrid_m = 4;
  long hybrid_samples = 0;
};

struct AxialParams {
  int big_m = 4;
  double scan_amplitude_v = 0.5;
  int scan_points = 9;
  double endcap_field_per_volt = 1.0;  // (V/m)/V along z
  double initial_ez = 0.4;             // V/m
  int loop_updates = 8;
  long samples = 0;
};

struct StatUncertaintyParams {
  std::vector<long> n_values{6, 20, 40, 80};
  int phi_points = 33;
  long trials = 10000;
  std::vector<double> contrast_values{1.0, 0.5};
  long comparison_n = 100;
  long comparison_trials = 4000;
};

struct ResonatorScenarioParams {
  double tau_s = 17e-6;
  double resonance_hz = 18.1e6;
  double q_factor = 0.0;  // 0 = unspecified
  double a1 = 1.0;
  double a2 = 0.7;
  std::vector<double> delta_phi{0.0, pi / 3.0, 2.0 * pi / 3.0, pi};
  double t_revert_over_tau = 5.0;
  double t_max_over_tau = 10.0;
  int points = 400;
  std::string mode = "two_source";
  double ramp_over_tau = 1.0;
  double settle_tolerance = 0.05;
  double stability_floor = 0.1;
  double source_error = 0.0;  // relative a1 error, two_source mode only
};

using ScenarioParams =
    std::variant<FringeParams, MethodBDriftParams, ClosedLoopParams, RobustnessParams, RpeParams,
                 Geometry2dParams, AxialParams, StatUncertaintyParams, ResonatorScenarioParams>;

struct ScenarioConfig {
  int schema_version = 1;
  std::string scenario;
  std::uint64_t seed = 0;
  std::string output_dir;  // empty = resolve from --out / TRAPCAL_OUT / "."
  int threads = 1;

  IonSpecies ion = make_sr88();
  double rf_drive_freq = two_pi * 18.1e6;             // rad/s
  Eigen::Vector3d secular_a{two_pi * 1.5e6, two_pi * 1.5e6, two_pi * 0.35e6};
  double rf_axial = 0.0;  // rad/s
  double scale_b = 0.56;
  BeamSet beams;
  StrayField stray;
  NoiseModel noise;
  SequenceTiming timing;
  ElectrodeGeometry geometry{Eigen::MatrixXd::Identity(3, 2)};
  DriftModel drift;

  ScenarioParams params = FringeParams{};

  RfDriveModel drive_model() const;
  TrapContext make_context() const;
};

// Names and one-line descriptions for `trapcal list-scenarios`.
const std::map<std::string, std::string>& scenario_catalog();

// All-or-nothing validation: parses the JSON text, checks units, ranges and id
// resolution, and throws ConfigInvalid carrying every violation found.
ScenarioConfig validate_config(const std::string& text);

ScenarioConfig load_config_file(const std::filesystem::path& path);

}  // namespace trapcal
