#include "trapcal/trap.hpp"

#include <cmath>
#include <utility>

#include "trapcal/angles.hpp"
#include "trapcal/errors.hpp"

namespace trapcal {

IonSpecies::IonSpecies(double charge_c, double mass_kg) : charge(charge_c), mass(mass_kg) {
  if (!(charge > 0.0) || !(mass > 0.0)) {
    throw InvalidParameter("ion charge and mass must be positive");
  }
}

IonSpecies make_sr88() { return IonSpecies(elementary_charge, 88.0 * atomic_mass_unit); }

TrapSetting::TrapSetting(std::string label_, const Eigen::Vector3d& secular_rad_s)
    : label(std::move(label_)), secular(secular_rad_s) {
  if (!(secular.minCoeff() > 0.0)) {
    throw InvalidParameter("trap setting '" + label + "': all secular frequencies must be > 0");
  }
}

RfDriveModel::RfDriveModel(const Eigen::Vector2d& pseudo_radial_rad_s, double static_axial_rad_s,
                           double rf_axial_rad_s, double rf_drive_freq_rad_s)
    : pseudo_radial(pseudo_radial_rad_s),
      static_axial(static_axial_rad_s),
      rf_axial(rf_axial_rad_s),
      rf_drive_freq(rf_drive_freq_rad_s) {
  if (!(pseudo_radial.minCoeff() > 0.0)) {
    throw InvalidParameter("pseudopotential radial frequencies must be > 0");
  }
  if (static_axial < 0.0 || rf_axial < 0.0 || !(rf_drive_freq > 0.0)) {
    throw InvalidParameter("axial frequencies must be >= 0 and RF drive frequency > 0");
  }
}

RfDriveModel drive_model_from_setting(const TrapSetting& setting_a, double rf_axial_rad_s,
                                      double rf_drive_freq_rad_s) {
  const double wz2 = setting_a.secular[2] * setting_a.secular[2];
  const double ra2 = rf_axial_rad_s * rf_axial_rad_s;
  if (!(wz2 > ra2) && !(rf_axial_rad_s == 0.0)) {
    throw InvalidParameter("rf_axial must be below the axial secular frequency");
  }
  const double static_axial2 = wz2 - ra2;
  Eigen::Vector2d pseudo;
  for (int i = 0; i < 2; ++i) {
    pseudo[i] = std::sqrt(setting_a.secular[i] * setting_a.secular[i] + 0.5 * static_axial2);
  }
  return RfDriveModel(pseudo, std::sqrt(static_axial2), rf_axial_rad_s, rf_drive_freq_rad_s);
}

StrayField::StrayField(const Eigen::Vector3d& v_per_m) : field(v_per_m) {
  if (!field.allFinite()) {
    throw InvalidParameter("stray field components must be finite");
  }
}

LaserBeam::LaserBeam(const Eigen::Vector3d& wavevector_rad_m, double phase_offset_rad,
                     double nominal_rabi_rad_s)
    : k(wavevector_rad_m), phase_offset(wrap_pi(phase_offset_rad)), nominal_rabi(nominal_rabi_rad_s) {
  if (!(k.norm() > 0.0)) {
    throw InvalidParameter("beam wavevector must be non-zero");
  }
}

LaserBeam beam_at_angle(double angle_rad, double wavelength_m, double phase_offset_rad,
                        double nominal_rabi_rad_s) {
  if (!(wavelength_m > 0.0)) {
    throw InvalidParameter("wavelength must be positive");
  }
  const double k = two_pi / wavelength_m;
  return LaserBeam(Eigen::Vector3d(k * std::cos(angle_rad), k * std::sin(angle_rad), 0.0),
                   phase_offset_rad, nominal_rabi_rad_s);
}

Eigen::Vector3d equilibrium_displacement(const IonSpecies& ion, const TrapSetting& setting,
                                         const StrayField& field) {
  return (ion.charge / ion.mass) *
         field.field.cwiseQuotient(setting.secular.cwiseProduct(setting.secular));
}

Eigen::Vector3d displacement_change(const IonSpecies& ion, const TrapSetting& setting_a,
                                    const TrapSetting& setting_b, const StrayField& field) {
  const Eigen::Vector3d inv_b = setting_b.secular.cwiseProduct(setting_b.secular).cwiseInverse();
  const Eigen::Vector3d inv_a = setting_a.secular.cwiseProduct(setting_a.secular).cwiseInverse();
  return (ion.charge / ion.mass) * field.field.cwiseProduct(inv_b - inv_a);
}

double field_phase_at(const LaserBeam& beam, const Eigen::Vector3d& position) {
  return beam.k.dot(position) + beam.phase_offset;
}

SensitivityDirection sensitivity_direction(Method method, const std::vector<LaserBeam>& beams,
                                           const TrapSetting& setting_a,
                                           const TrapSetting& setting_b,
                                           std::optional<SubsetCounts> subsets) {
  if (beams.empty()) {
    throw InvalidParameter("sensitivity_direction needs at least one beam");
  }
  Eigen::Vector3d kappa;
  switch (method) {
    case Method::A:
      kappa = beams[0].k;
      break;
    case Method::B:
      if (beams.size() < 2) {
        throw InvalidParameter("Method B needs two beams");
      }
      kappa = beams[0].k - beams[1].k;
      break;
    case Method::C: {
      if (beams.size() < 2) {
        throw InvalidParameter("Method C needs two beams");
      }
      const SubsetCounts counts = subsets.value_or(SubsetCounts{});
      if (counts.m_alpha < 0 || counts.m_beta < 0) {
        throw InvalidParameter("Method C subset counts must be non-negative");
      }
      const double sign = counts.minus ? -1.0 : 1.0;
      kappa = counts.m_alpha * beams[0].k + sign * counts.m_beta * beams[1].k;
      break;
    }
  }
  const Eigen::Vector3d inv_a = setting_a.secular.cwiseProduct(setting_a.secular).cwiseInverse();
  const Eigen::Vector3d inv_b = setting_b.secular.cwiseProduct(setting_b.secular).cwiseInverse();
  SensitivityDirection out;
  out.d = kappa.cwiseProduct(inv_a - inv_b);
  const double norm = out.d.norm();
  if (norm == 0.0) {
    throw DegenerateDirection("sensitivity direction has zero length");
  }
  out.unit = out.d / norm;
  return out;
}

TrapSetting secular_from_scale(const RfDriveModel& model, double scale, const std::string& label) {
  if (!(scale > 0.0)) {
    throw InvalidParameter("RF amplitude scale must be positive");
  }
  const double s2 = scale * scale;
  const double sa2 = model.static_axial * model.static_axial;
  Eigen::Vector3d w;
  for (int i = 0; i < 2; ++i) {
    const double w2 = s2 * model.pseudo_radial[i] * model.pseudo_radial[i] - 0.5 * sa2;
    if (!(w2 > 0.0)) {
      throw IonLost("radial frequency squared <= 0 at scale " + std::to_string(scale));
    }
    w[i] = std::sqrt(w2);
  }
  w[2] = std::sqrt(sa2 + s2 * model.rf_axial * model.rf_axial);
  if (!(w[2] > 0.0)) {
    throw IonLost("axial frequency vanishes at scale " + std::to_string(scale));
  }
  return TrapSetting(label.empty() ? "s=" + std::to_string(scale) : label, w);
}

double scale_for_radial_x(const RfDriveModel& model, double omega_x_rad_s) {
  if (!(omega_x_rad_s > 0.0)) {
    throw InvalidParameter("target radial frequency must be positive");
  }
  const double sa2 = model.static_axial * model.static_axial;
  return std::sqrt((omega_x_rad_s * omega_x_rad_s + 0.5 * sa2) /
                   (model.pseudo_radial[0] * model.pseudo_radial[0]));
}

}  // namespace trapcal
