#pragma once

#include <cmath>

#include "trapcal/constants.hpp"

namespace trapcal {

// Wrap to [-pi, pi).
inline double wrap_pi(double x) {
  return x - two_pi * std::floor((x + pi) / two_pi);
}

// Wrap to (-pi, pi], the natural atan2 range.
inline double wrap_pi_atan(double x) {
  return std::atan2(std::sin(x), std::cos(x));
}

inline double deg_to_rad(double deg) { return deg * pi / 180.0; }
inline double rad_to_deg(double rad) { return rad * 180.0 / pi; }

// Mean of two angles taken on the circle (vector mean of unit phasors).
inline double circular_mean(double a, double b) {
  return std::atan2(std::sin(a) + std::sin(b), std::cos(a) + std::cos(b));
}

}  // namespace trapcal
