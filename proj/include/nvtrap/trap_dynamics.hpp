#ifndef NVTRAP_TRAP_DYNAMICS_HPP
#define NVTRAP_TRAP_DYNAMICS_HPP

#include <array>
#include <complex>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "nvtrap/constants.hpp"
#include "nvtrap/error.hpp"
#include "nvtrap/particle.hpp"
#include "nvtrap/thermal_model.hpp"

namespace nvtrap::trap {

// Ring (Paul-Straubel) trap reduced to an ideal quadrupole.
//
// v_pp_volts is the PEAK-TO-PEAK drive; the oscillating potential amplitude
// is v_pp/2. The field is
//   E(r, t) = kappa U(t) / r0^2 * (x/2, y/2, -z) + dc_field,
//   U(t) = v_dc + (v_pp/2) cos(omega t),
// so z is the stiff (axial) direction. kappa < 1 for real ring traps; 1 is
// the ideal-quadrupole default.
struct TrapConfig {
    double v_pp_volts = 4000.0;
    double omega_drive_rad_s = 2.0 * constants::pi * 1000.0;
    double r0_m = 700e-6;
    double kappa = 1.0;
    double v_dc_volts = 0.0;
    Vec3 dc_field_v_m = Vec3::Zero();

    double drive_frequency_hz() const { return omega_drive_rad_s / (2.0 * constants::pi); }
    double drive_period_s() const { return 2.0 * constants::pi / omega_drive_rad_s; }
    void validate() const;
};

// Mathieu parameters in x'' + gamma_n x' + (a - 2 q cos 2 tau) x = 0 with
// tau = omega t / 2. The axial q is 2 kappa |Q| (v_pp/2) / (m omega^2 r0^2);
// radial values are -1/2 of the axial ones.
struct MathieuParameters {
    double a_axial = 0.0;
    double q_axial = 0.0;

    double a_radial() const { return -0.5 * a_axial; }
    double q_radial() const { return -0.5 * q_axial; }
    // x, y, z components.
    Vec3 a() const { return {a_radial(), a_radial(), a_axial}; }
    Vec3 q() const { return {q_radial(), q_radial(), q_axial}; }
};

MathieuParameters mathieu_q(const TrapConfig& t, const ParticleState& p);

// Normalized damping used by all Floquet work: 2 gamma / omega.
inline double normalized_damping(double gamma_s, double omega_drive_rad_s) {
    return 2.0 * gamma_s / omega_drive_rad_s;
}

// Epstein drag rate gamma = c_drag p / (rho r v_mean), 1/s.
// flagged: Kn < 1, outside the free-molecular regime (value still returned).
Flagged<double> damping_rate(const ParticleState& p, const thermal::GasEnvironment& g);

// Pressure (mbar) at which damping_rate equals gamma_s for this gas.
double pressure_for_damping_rate(const ParticleState& p, const thermal::GasEnvironment& g,
                                 double gamma_s);

struct ExternalForces {
    bool gravity = false;
    Vec3 gravity_direction = Vec3(0.0, 0.0, -1.0);
    Vec3 static_force_n = Vec3::Zero();
};

enum class TrajectoryStatus { completed, escaped };

// Uniformly sampled record. Divergent runs stop at the first sample with
// |r| > 100 r0 and carry status escaped; no non-finite values are stored.
struct Trajectory {
    std::vector<double> times_s;
    std::vector<Vec3> positions_m;
    std::vector<Vec3> velocities_m_s;
    std::vector<double> drive_phase_rad;
    double sample_interval_s = 0.0;
    double omega_drive_rad_s = 0.0;
    MathieuParameters mathieu;
    TrajectoryStatus status = TrajectoryStatus::completed;

    std::size_t size() const { return times_s.size(); }
};

// m r'' = Q E(r, t) - m gamma r' + F_static + m g.
//
// Kick-drift-kick with the damping applied exactly in two half steps around
// it; the drive is evaluated analytically at the start and end of each step.
// Throws InvalidArgument when dt > 2 pi / (50 omega).
Trajectory integrate_trajectory(const TrapConfig& t, const ParticleState& p,
                                const thermal::GasEnvironment& g, const ExternalForces& extras,
                                double duration_s, double dt_s, int record_stride = 1);

// Dominant sub-drive line of the position record along `axis` (Hann window,
// zero padded periodogram, parabolic interpolation of the log power), Hz.
// Throws NumericalError("no secular line") when nothing stands above the
// noise floor and when the record spans fewer than 50 secular periods.
double secular_frequency(const Trajectory& traj, int axis = 2);

// q omega / (2 sqrt 2) / (2 pi) for the axial mode, Hz (small q, a = 0).
double analytic_secular_frequency(const TrapConfig& t, const ParticleState& p);

// One-period state-transition matrix of the damped Mathieu equation in tau,
// integrated with classical RK4.
Eigen::Matrix2d monodromy(double a, double q, double gamma_norm, int steps = 2000);

std::array<std::complex<double>, 2> floquet_multipliers(const Eigen::Matrix2d& m);

// All multipliers inside the unit circle (<= 1 up to 1e-9 when undamped).
bool mathieu_stable(double a, double q, double gamma_norm);

// Characteristic exponent beta in [0, 1] of the damped equation, from the
// multiplier phase; the secular angular frequency is beta omega / 2.
double characteristic_exponent(double a, double q, double gamma_norm);

struct StabilityReport {
    bool stable = false;
    std::array<bool, 3> axis_stable{};  // x, y, z
    double max_multiplier = 0.0;
    // omega / omega_sec of the axial mode; 0 when unstable.
    double drive_to_secular_ratio = 0.0;
};

// Floquet classification of each axis with gamma from damping_rate.
StabilityReport stability_classify(const TrapConfig& t, const ParticleState& p,
                                   const thermal::GasEnvironment& g);

// Axial secular frequency including damping, from the Floquet exponent, Hz.
// Throws InstabilityError for unstable configurations.
double floquet_secular_frequency(const TrapConfig& t, const ParticleState& p,
                                 const thermal::GasEnvironment& g);

// Largest q of the first stability region at fixed a and normalized damping,
// by bisection on mathieu_stable after a coarse upward scan (for a < 0 the
// region starts at q > 0). Throws NumericalError when a >= 1, when no stable
// q is found, or when no instability is found below q = 20.
double stability_boundary(double a, double gamma_norm, double tolerance = 1e-4);

// Q/m = q_max(gamma_n) omega_c^2 r0^2 / (2 kappa v_pp/2), with gamma_n from
// the gas at omega_c. The particle supplies only the geometry for the drag.
double charge_to_mass_from_instability(double omega_c_rad_s, const TrapConfig& t,
                                       const ParticleState& geometry,
                                       const thermal::GasEnvironment& g);

struct EquilibriumOptions {
    int steps_per_period = 100;
    double transient_secular_periods = 20.0;
    double average_secular_periods = 20.0;
    bool gravity = false;
};

struct EquilibriumResult {
    Vec3 mean_position_m = Vec3::Zero();
    double displacement_m = 0.0;
    // F / (m omega_sec^2) per axis with the undamped pseudo-potential.
    Vec3 pseudo_potential_m = Vec3::Zero();
    double pseudo_potential_displacement_m = 0.0;
    // Post-transient record the mean was taken over.
    Trajectory trajectory;
};

// Time average of the driven steady state under a static force. The run
// starts on the periodic orbit of the discrete integrator (found by shooting
// over one drive period) so the record has no secular transient; the first
// `transient_secular_periods` are still discarded and the average is taken
// over whole drive periods. Throws InstabilityError for unstable traps.
EquilibriumResult equilibrium_displacement(const TrapConfig& t, const ParticleState& p,
                                           const thermal::GasEnvironment& g,
                                           const Vec3& static_force_n,
                                           const EquilibriumOptions& options = {});

struct MicromotionResult {
    double amplitude_m = 0.0;
    Vec3 per_axis_m = Vec3::Zero();
    // (|q_i|/2) |<r_i>| combined over axes, the small-q expectation.
    double analytic_m = 0.0;
};

// Lock-in amplitude of the drive-frequency component over whole drive
// periods after `transient_s`. Throws InstabilityError for escaped records.
MicromotionResult micromotion_amplitude(const Trajectory& traj, double transient_s = 0.0);

// Geometric steps of v_pp to v_pp_end with omega scaled by sqrt(v/v_start),
// so q is unchanged. Returns `steps` configurations ending at v_pp_end.
// Upward ramps are allowed, so a ramp can be retraced.
std::vector<TrapConfig> iso_q_ramp(const TrapConfig& start, double v_pp_end, int steps);

struct StabilityMapPoint {
    double q = 0.0;
    double a = 0.0;
    double gamma_norm = 0.0;
    bool stable = false;
};

// Every (q, a, gamma_n) combination, ordered q-major; rows are computed in
// parallel on `threads` workers (0: hardware concurrency).
std::vector<StabilityMapPoint> stability_map(const std::vector<double>& qs,
                                             const std::vector<double>& as,
                                             const std::vector<double>& gammas, int threads = 0);

}  // namespace nvtrap::trap

#endif
