#pragma once

#include <Eigen/Dense>
#include <span>
#include <string>
#include <vector>

#include "trapcal/estimators.hpp"
#include "trapcal/pulse.hpp"
#include "trapcal/rng.hpp"
#include "trapcal/trap.hpp"

namespace trapcal {

// Field at the RF null per volt on each compensation electrode (3 x n).
struct ElectrodeGeometry {
  explicit ElectrodeGeometry(const Eigen::MatrixXd& field_per_volt_);

  Eigen::MatrixXd field_per_volt;  // (V/m) / V

  int electrodes() const { return static_cast<int>(field_per_volt.cols()); }
};

struct GradientMatrix {
  Eigen::MatrixXd m;             // rad / V, observables x electrodes
  Eigen::MatrixXd residual_rms;  // rad, per-entry linear-fit residual
  std::vector<std::string> setting_labels;
};

struct DriftModel {
  Eigen::Vector3d field_walk_rate = Eigen::Vector3d::Zero();  // V/m per sqrt(s), per axis
  double voltage_noise_rms = 0.0;                             // V per update
};

enum class PhaseEstimatorKind {
  arcsin,
  arctan2,
  arctan2_offset,
  settings_i,
  settings_ii,
  settings_iii,
  averaged_i_ii,
};

// One interferometric phase observable: a sequence family plus the pair of
// control-phase variants its estimator needs. Method B observables report
// phi_T(A) - phi_T(B) from runs at both stiffness settings.
struct PhaseObservable {
  Method method = Method::A;
  std::string beam_alpha;
  std::string beam_beta;  // Method B/C only
  std::string setting_a;
  std::string setting_b;
  int big_m = 1;
  SubsetCounts subsets;  // Method C only
  PhaseEstimatorKind estimator = PhaseEstimatorKind::arcsin;
  long samples = 100;  // total per estimate, split across the estimator's runs
};

struct LoopConfig {
  TrapContext ctx;
  BeamSet beams;
  ElectrodeGeometry geometry{Eigen::MatrixXd::Identity(3, 2)};
  std::vector<PhaseObservable> observables;
  NoiseModel noise;
  SequenceTiming timing;
};

// Run the observable's sequences at the given effective field and reduce the
// measured excitation probabilities to a phi_T estimate. Projection sampling
// follows the noise model.
PhaseEstimate measure_phase(const PhaseObservable& obs, const TrapContext& ctx,
                            const BeamSet& beams, const NoiseModel& noise,
                            const SequenceTiming& timing, const StrayField& effective_field,
                            RngStream& rng);

// One stiffness variant of a Method B observable (phi_T at the given fixed
// setting), for callers that track phi_PD at each setting separately.
PhaseEstimate measure_phase_at_setting(const PhaseObservable& obs, const std::string& setting_id,
                                       const TrapContext& ctx, const BeamSet& beams,
                                       const NoiseModel& noise, const SequenceTiming& timing,
                                       const StrayField& effective_field, RngStream& rng);

// Analytic d(phi_T)/dE rows (observables x 3), the sequence-level response of
// each observable to the stray field.
Eigen::MatrixXd phase_field_matrix(const std::vector<PhaseObservable>& observables,
                                   const TrapContext& ctx, const BeamSet& beams);

struct CalibrationScan {
  double amplitude_v = 0.1;
  int points = 5;
};

// Least-squares slope of each observable against each electrode voltage.
// Throws RangeOverflow when a scanned phase wraps (or saturates an arcsin
// estimator) and RankDeficient when the scan or the assembled matrix is
// degenerate.
GradientMatrix calibrate_gradient_matrix(const LoopConfig& loop, const StrayField& base_field,
                                         const CalibrationScan& scan, RngStream& rng);

struct VoltageSolution {
  Eigen::VectorXd voltages;    // V
  Eigen::MatrixXd covariance;  // V^2, propagated from the phase sigmas
};

// V = M^-1 phi with statistical covariance M^-1 diag(sigma^2) M^-T.
VoltageSolution solve_voltages(const GradientMatrix& gradient, const Eigen::VectorXd& phases,
                               const Eigen::VectorXd& phase_sigmas = Eigen::VectorXd());

struct ClosedLoopSample {
  double t = 0.0;                  // s
  Eigen::Vector3d field_true;      // V/m, effective field at the ion
  Eigen::Vector3d field_estimate;  // V/m, per-interval stray-field determination
  Eigen::VectorXd voltages;        // V, commanded
  double rf_field = 0.0;           // V/m, residual oscillating dipole amplitude
};

struct ClosedLoopConfig {
  LoopConfig loop;
  RfDriveModel drive{Eigen::Vector2d(1.0, 1.0), 0.5, 0.0, 10.0};
  double rf_scale = 1.0;  // drive scale at which the residual RF field is quoted
  StrayField initial_stray;
  DriftModel drift;
  double duration_s = 110.0;
  double update_interval_s = 11.0;
};

// Simulate measure-and-correct cycles: every interval the observables are
// measured at the current effective field, the voltages are updated through
// the gradient matrix, and the true stray field random-walks per the drift
// model. Deterministic given the stream.
std::vector<ClosedLoopSample> closed_loop_run(const ClosedLoopConfig& config,
                                              const GradientMatrix& gradient, RngStream& rng);

struct AllanPoint {
  double tau = 0.0;        // s
  double deviation = 0.0;  // same units as the series
};

// Overlapping two-sample (Allan) deviation of the per-interval estimates;
// rows are intervals, columns are combined in quadrature. Throws TooShort for
// fewer than 4 intervals.
std::vector<AllanPoint> allan_style_deviation(const Eigen::MatrixXd& estimates,
                                              double interval_s);

// Least-squares slope of log(deviation) against log(tau).
double fit_loglog_slope(std::span<const AllanPoint> points);

// Micromotion amplitude u_i = (q_i/2) r_i from the lowest-order Mathieu
// relation, with q = 2 sqrt(2) w_pseudo / W_rf carrying opposite signs on the
// two radial axes (linear-trap quadrupole orientation).
Eigen::Vector3d micromotion_amplitude(const IonSpecies& ion, const RfDriveModel& drive,
                                      double scale, const StrayField& field);

// Sideband-to-carrier ratio |k . u|/2 of the resolved-sideband diagnostic.
double sideband_signal(const LaserBeam& beam, const IonSpecies& ion, const RfDriveModel& drive,
                       double scale, const StrayField& field);

// Oscillating dipole field driving the micromotion, E_rf = m W^2 u / q.
Eigen::Vector3d residual_rf_field(const StrayField& field, const IonSpecies& ion,
                                  const RfDriveModel& drive, double scale);

struct HybridConfig {
  TrapContext ctx;
  BeamSet beams;
  ElectrodeGeometry geometry{Eigen::MatrixXd::Identity(3, 2)};
  NoiseModel noise;
  SequenceTiming timing;
  PhaseObservable interferometric;  // Method A observable on the single probe beam
  int interferometry_electrode = 0;
  int sideband_electrode = 1;
  RfDriveModel drive{Eigen::Vector2d(1.0, 1.0), 0.5, 0.0, 10.0};
  double sideband_scale = 1.0;
  StrayField initial_stray;
  double phase_threshold = 0.01;     // rad
  double sideband_threshold = 1e-4;  // ratio
  int max_iterations = 30;
  double search_halfwidth_v = 1.0;   // V, sideband line-search bracket
};

struct HybridIteration {
  int iteration = 0;
  Eigen::Vector3d field;  // V/m, effective
  double phase = 0.0;     // rad
  double sideband = 0.0;  // ratio
  Eigen::VectorXd voltages;
};

struct HybridResult {
  bool converged = false;
  Eigen::Vector3d final_field;
  std::vector<HybridIteration> history;
};

// 2D compensation with one probe beam: interferometric updates null the field
// component the beam's phase observable sees; golden-section minimization of
// the sideband signal over the other electrode nulls the orthogonal
// component. Throws NoProgress when either observable is insensitive.
HybridResult hybrid_2d_minimize(const HybridConfig& config, RngStream& rng);

struct RfSegment {
  std::string label;
  double duration_s = 0.0;
  double power = 1.0;      // relative to nominal
  bool boostable = false;  // may be raised to balance the profile
};

struct DutyCycleReport {
  double reduced_fraction = 0.0;  // time share below nominal power
  double mean_power = 1.0;        // time-weighted
  double boost_power = 1.0;       // power assigned to boostable segments
  std::vector<RfSegment> balanced_profile;
};

// Time-weighted RF power bookkeeping plus a raised/lowered profile whose mean
// equals the nominal power exactly.
DutyCycleReport duty_cycle_report(std::span<const RfSegment> schedule, double nominal_power = 1.0);

}  // namespace trapcal
