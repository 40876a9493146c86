#pragma once

namespace trapcal {

inline constexpr double pi = 3.14159265358979323846;
inline constexpr double two_pi = 2.0 * pi;

// SI defining constant (exact).
inline constexpr double elementary_charge = 1.602176634e-19;  // C

// CODATA 2018.
inline constexpr double atomic_mass_unit = 1.66053906660e-27;  // kg

}  // namespace trapcal
