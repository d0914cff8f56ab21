// Trap configurations at prescribed Mathieu parameters, shared by the unit
// tests and the acceptance run.
#ifndef NVTRAP_TESTS_TRAP_SETUP_HPP
#define NVTRAP_TESTS_TRAP_SETUP_HPP

#include <algorithm>
#include <cmath>

#include "nvtrap/trap_dynamics.hpp"

namespace setup {

using nvtrap::ParticleState;
using nvtrap::Vec3;
namespace trap = nvtrap::trap;
namespace thermal = nvtrap::thermal;

constexpr double two_pi = 2.0 * 3.14159265358979323846;

// 10 um diamond carrying Q/m = 4.39e-3 C/kg.
inline ParticleState particle() {
    auto p = ParticleState::from_diameter(10e-6, 3510.0, 1.0);
    p.charge_c = 4.39e-3 * p.mass_kg;
    return p;
}

// Drive at f_hz with v_pp chosen for the requested axial q.
inline trap::TrapConfig trap_at_q(double q, double f_hz = 1000.0, const ParticleState& p = particle()) {
    trap::TrapConfig t;
    t.omega_drive_rad_s = two_pi * f_hz;
    t.v_pp_volts = q * p.mass_kg * t.omega_drive_rad_s * t.omega_drive_rad_s * t.r0_m * t.r0_m /
                   (t.kappa * p.charge_c);
    return t;
}

// Air whose Epstein drag gives the requested normalized damping 2 gamma / omega.
inline thermal::GasEnvironment gas_at_damping(double gamma_norm, double omega, const ParticleState& p = particle()) {
    auto g = thermal::GasEnvironment::air(1.0);
    g.pressure_mbar = gamma_norm > 0.0 ? trap::pressure_for_damping_rate(p, g, 0.5 * gamma_norm * omega) : 0.0;
    return g;
}

// Bounded-motion verdict from the trajectory alone: the run must neither
// leave the trap nor grow by more than `growth` over its first drive periods.
inline bool trajectory_bounded(double q, double gamma_norm, int drive_periods = 400, double growth = 50.0) {
    const auto p0 = particle();
    auto p = p0;
    p.position_m = Vec3(2e-6, 2e-6, 2e-6);
    const auto t = trap_at_q(q, 1000.0, p0);
    const auto g = gas_at_damping(gamma_norm, t.omega_drive_rad_s, p0);
    const double dt = t.drive_period_s() / 64.0;
    const auto traj = trap::integrate_trajectory(t, p, g, {}, drive_periods * t.drive_period_s(), dt, 8);
    if (traj.status == trap::TrajectoryStatus::escaped) return false;
    const std::size_t head = 8 * 5;  // five drive periods
    double start = 0.0, end = 0.0;
    for (std::size_t i = 0; i < traj.size(); ++i) {
        const double r = traj.positions_m[i].cwiseAbs().maxCoeff();
        (i < head ? start : end) = std::max(i < head ? start : end, r);
    }
    return end <= growth * start;
}

}  // namespace setup

#endif
