#ifndef NVTRAP_CONSTANTS_HPP
#define NVTRAP_CONSTANTS_HPP

#include <numbers>

namespace nvtrap::constants {

inline constexpr double pi = std::numbers::pi;
inline constexpr double boltzmann = 1.380649e-23;        // J/K
inline constexpr double stefan_boltzmann = 5.670374419e-8;  // W/(m^2 K^4)
inline constexpr double atomic_mass = 1.66053906660e-27;   // kg
inline constexpr double elementary_charge = 1.602176634e-19;
inline constexpr double standard_gravity = 9.80665;        // m/s^2

// Pressure at the boundaries is in mbar; internally everything is SI.
inline constexpr double pascal_per_mbar = 100.0;

// NV electron gyromagnetic ratio, GHz/T.
inline constexpr double nv_gyromagnetic_ghz_per_t = 28.024;

}  // namespace nvtrap::constants

#endif
