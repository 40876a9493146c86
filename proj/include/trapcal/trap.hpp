#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "trapcal/constants.hpp"

namespace trapcal {

// Positions are absolute meters from the RF null; axes are the secular
// eigenmode frame (x, y radial; z axial). All quantities SI.

struct IonSpecies {
  IonSpecies(double charge_c, double mass_kg);

  double charge;  // C
  double mass;    // kg
};

// 88Sr+, nominal mass number times u.
IonSpecies make_sr88();

struct TrapSetting {
  TrapSetting(std::string label_, const Eigen::Vector3d& secular_rad_s);

  std::string label;
  Eigen::Vector3d secular;  // rad/s, all > 0
};

// Parametric secular-frequency model for RF-amplitude scaling. The radial
// pseudopotential frequencies scale linearly with the RF amplitude scale s and
// the static axial quadrupole defocuses each radial mode by half its own
// frequency squared:
//   w_radial_i(s)^2 = s^2 pseudo_radial_i^2 - static_axial^2 / 2
//   w_z(s)^2        = static_axial^2 + s^2 rf_axial^2
// rf_axial models the axial pseudopotential produced by a residual axial RF
// field; it is zero in an ideal linear trap.
struct RfDriveModel {
  RfDriveModel(const Eigen::Vector2d& pseudo_radial_rad_s, double static_axial_rad_s,
               double rf_axial_rad_s, double rf_drive_freq_rad_s);

  Eigen::Vector2d pseudo_radial;  // rad/s at s = 1
  double static_axial;            // rad/s
  double rf_axial;                // rad/s at s = 1
  double rf_drive_freq;           // rad/s
};

// Fit a drive model so that secular_from_scale(model, 1) reproduces
// setting_a exactly.
RfDriveModel drive_model_from_setting(const TrapSetting& setting_a, double rf_axial_rad_s,
                                      double rf_drive_freq_rad_s);

struct StrayField {
  StrayField() : field(Eigen::Vector3d::Zero()) {}
  explicit StrayField(const Eigen::Vector3d& v_per_m);

  Eigen::Vector3d field;  // V/m, secular frame
};

struct LaserBeam {
  LaserBeam(const Eigen::Vector3d& wavevector_rad_m, double phase_offset_rad,
            double nominal_rabi_rad_s);

  Eigen::Vector3d k;    // rad/m
  double phase_offset;  // rad, reduced to [-pi, pi)
  double nominal_rabi;  // rad/s
};

// Beam in the radial plane at the given angle from +x. With the secular
// axes at 45 degrees to the lab frame, the lab-horizontal and lab-vertical
// probe beams sit at -45 and +45 degrees.
LaserBeam beam_at_angle(double angle_rad, double wavelength_m, double phase_offset_rad = 0.0,
                        double nominal_rabi_rad_s = 0.0);

// r_i = q E_i / (m w_i^2)
Eigen::Vector3d equilibrium_displacement(const IonSpecies& ion, const TrapSetting& setting,
                                         const StrayField& field);

// r_AB_i = (q E_i / m) (1/w_Bi^2 - 1/w_Ai^2), the displacement when the
// stiffness is switched A -> B.
Eigen::Vector3d displacement_change(const IonSpecies& ion, const TrapSetting& setting_a,
                                    const TrapSetting& setting_b, const StrayField& field);

// Spatial laser phase k.r + phase_offset, not wrapped.
double field_phase_at(const LaserBeam& beam, const Eigen::Vector3d& position);

enum class Method { A, B, C };

// Method C pulse-subset weights. `minus` selects the combination
// M_alpha k_alpha - M_beta k_beta; the plus combination is the default.
struct SubsetCounts {
  int m_alpha = 1;
  int m_beta = 0;
  bool minus = false;
};

struct SensitivityDirection {
  Eigen::Vector3d d;     // k-weighted stiffness factors, unnormalized
  Eigen::Vector3d unit;  // d / |d|
};

// Direction along which the phase observable is sensitive to the stray field:
// d_i = kappa_i (1/w_Ai^2 - 1/w_Bi^2) with kappa the method's wavevector
// combination. Method A uses beams[0]; B and C use beams[0] and beams[1].
SensitivityDirection sensitivity_direction(Method method, const std::vector<LaserBeam>& beams,
                                           const TrapSetting& setting_a,
                                           const TrapSetting& setting_b,
                                           std::optional<SubsetCounts> subsets = std::nullopt);

// Secular frequencies at RF amplitude scale s. Throws IonLost when a radial
// frequency squared is not positive.
TrapSetting secular_from_scale(const RfDriveModel& model, double scale,
                               const std::string& label = "");

// Scale that realizes the requested radial-x frequency (inverse of the model).
double scale_for_radial_x(const RfDriveModel& model, double omega_x_rad_s);

}  // namespace trapcal
