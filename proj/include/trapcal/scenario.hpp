#pragma once

#include <complex>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "trapcal/compensation.hpp"
#include "trapcal/config.hpp"

namespace trapcal {

struct RunReport {
  std::string scenario;
  std::uint64_t seed = 0;
  int schema_version = 1;
  double wall_time_s = 0.0;
  std::map<std::string, std::string> file_digests;  // artifact -> fnv1a64 hex
  std::map<std::string, double> metrics;
};

// Typed scenario results. run_scenario() reduces these to CSV artifacts and a
// report; the acceptance suite consumes them directly.

struct FringeResult {
  struct Trace {
    int big_m = 1;
    std::vector<double> phi_pd;
    std::vector<double> field;  // V/m along the sweep direction
    std::vector<double> p_ideal;
    std::vector<double> p_measured;
    int zero_crossings = 0;
  };
  std::vector<Trace> traces;
};

struct MethodBDriftResult {
  struct Row {
    double t = 0.0;
    double drift = 0.0;  // injected common offset, rad
    double phi_a = 0.0;  // phi_PD at setting A
    double phi_b = 0.0;
    double diff = 0.0;
  };
  std::vector<Row> rows;
  double phi_a_span = 0.0;
  double diff_span = 0.0;
};

struct ClosedLoopScenarioResult {
  std::vector<ClosedLoopSample> samples;
  std::vector<AllanPoint> allan;  // quadrature of the x/y stray-field estimates
  double allan_slope = 0.0;       // log-log fit over the noise-dominated window
  std::size_t allan_min_index = 0;
  DutyCycleReport duty;  // RF power bookkeeping for one update cycle
};

struct RobustnessResult {
  struct AreaPoint {
    double area_error = 1.0;
    double shift_i = 0.0;
    double shift_ii = 0.0;
    double shift_avg = 0.0;
  };
  std::vector<AreaPoint> area_sweep;

  struct DetuningPoint {
    double detuning = 0.0;     // rad/s
    double naive_shift = 0.0;  // delta * T / M, rad
    double shift_i = 0.0;
    double shift_ii = 0.0;
    double shift_avg = 0.0;
  };
  std::vector<DetuningPoint> detuning_sweep;

  struct BiasPoint {
    double phi_pd = 0.0;
    double bias_i = 0.0;
    double bias_iii = 0.0;
  };
  std::vector<BiasPoint> bias_curve;
};

struct RpeScalingResult {
  struct Point {
    int j_max = 1;
    double n_measurements = 0.0;
    double area = 0.0;  // total pulse area, rad
    double rms = 0.0;
    double sql = 0.0;
  };
  std::vector<Point> ideal;      // T2 = infinity
  std::vector<Point> decohered;  // finite T2
  std::vector<Point> baseline;   // fixed M = 1, error vs N
};

struct Geometry2dResult {
  struct ScaleRow {
    double scale = 0.0;
    double omega_bx_hz = 0.0;
    double omega_by_hz = 0.0;
    double angle_between_deg = 0.0;  // between the two beams' sensitivity directions
  };
  std::vector<ScaleRow> sweep;  // non-degenerate trap
  double angle_degenerate_deg = 0.0;
  double angle_deep_deg = 0.0;
  HybridResult hybrid;
  double hybrid_initial_norm = 0.0;
  double hybrid_final_norm = 0.0;
};

struct AxialResult {
  struct ScanRow {
    double volt = 0.0;
    double phi_with_rf = 0.0;
    double phi_without_rf = 0.0;
  };
  std::vector<ScanRow> scan;
  double slope_with_rf = 0.0;     // rad/V
  double slope_without_rf = 0.0;  // must vanish
  std::vector<double> loop_ez;    // |E_z| per loop update, V/m
};

struct ResonatorResult {
  struct Trace {
    double delta_phi = 0.0;
    std::vector<double> t;
    std::vector<std::complex<double>> b;
  };
  std::vector<Trace> traces;
  struct Summary {
    double delta_phi = 0.0;
    double settle_s = 0.0;
    double dropout = 0.0;
    bool loss_risk = false;
  };
  std::vector<Summary> summaries;
};

struct StatUncertaintyResult {
  struct MeanRms {
    long n = 0;
    double rms = 0.0;
    double reference = 0.0;  // 1.24 / sqrt(N)
  };
  std::vector<MeanRms> mean_rms;

  struct GridPoint {
    long n = 0;
    double phi = 0.0;
    double rms = 0.0;
  };
  std::vector<GridPoint> grid;

  struct ComparisonPoint {
    double contrast = 1.0;
    double phi = 0.0;
    double rms_arcsin = 0.0;
    double rms_offset = 0.0;  // offset arctan2 estimator
  };
  std::vector<ComparisonPoint> comparison;
};

FringeResult run_fringe(const ScenarioConfig& config);
MethodBDriftResult run_method_b_drift(const ScenarioConfig& config);
ClosedLoopScenarioResult run_closed_loop(const ScenarioConfig& config);
RobustnessResult run_robustness(const ScenarioConfig& config);
RpeScalingResult run_rpe_scaling(const ScenarioConfig& config);
Geometry2dResult run_geometry_2d(const ScenarioConfig& config);
AxialResult run_axial(const ScenarioConfig& config);
StatUncertaintyResult run_stat_uncertainty(const ScenarioConfig& config);
ResonatorResult run_resonator(const ScenarioConfig& config);

// Executes the named scenario, writes its CSV artifacts and run_report.json
// into the output directory, and returns the report.
RunReport run_scenario(const ScenarioConfig& config);

// phi_PD response to a field applied along the beam's unit wavevector, rad per
// (V/m); shared by the sweep-style scenarios.
double phi_pd_per_field(const TrapContext& ctx, const LaserBeam& beam, const TrapSetting& a,
                        const TrapSetting& b);

}  // namespace trapcal
