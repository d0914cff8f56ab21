#ifndef NVTRAP_THERMAL_MODEL_HPP
#define NVTRAP_THERMAL_MODEL_HPP

#include <functional>
#include <string>
#include <vector>

#include "nvtrap/constants.hpp"
#include "nvtrap/error.hpp"
#include "nvtrap/particle.hpp"

namespace nvtrap::thermal {

// Residual gas. Pressure in mbar at this boundary, converted to Pa inside.
struct GasEnvironment {
    double pressure_mbar = 1.0;
    double temperature_k = 298.0;
    double molecule_mass_kg = 28.97 * constants::atomic_mass;
    double molecule_diameter_m = 3.7e-10;
    double accommodation = 1.0;
    double heat_capacity_ratio = 1.4;
    // Epstein drag prefactor; 1 + 8/pi for diffuse reflection.
    double drag_coefficient = 1.0 + 8.0 / constants::pi;

    static GasEnvironment air(double pressure_mbar, double temperature_k = 298.0);

    double pressure_pa() const { return pressure_mbar * constants::pascal_per_mbar; }
    // Mean molecular speed sqrt(8 kT / (pi m)).
    double mean_speed_m_s() const;
    void validate() const;
};

struct LaserBeam {
    double power_w = 0.0;
    double waist_m = 5e-6;
    double wavelength_m = 532e-9;

    // Peak intensity of a Gaussian beam, 2P/(pi w^2).
    double peak_intensity_w_m2() const;
    void validate() const;
};

// Absorbed power = cross_section * overlap * peak intensity. The overlap
// models the reduced illumination of a particle that is displaced from the
// focus and smeared by micromotion; `overlap_of_micromotion`, when set,
// replaces the constant with a function of the micromotion amplitude (m).
struct AbsorptionModel {
    double effective_cross_section_m2 = 0.0;
    double intensity_overlap = 1.0;
    std::function<double(double)> overlap_of_micromotion;

    double overlap(double micromotion_m = 0.0) const;
    void validate() const;
};

// flagged: zero pressure (value is +infinity).
Flagged<double> mean_free_path(const GasEnvironment& g);

// Mean free path over particle diameter; flagged as mean_free_path.
Flagged<double> knudsen(const GasEnvironment& g, const ParticleState& p);

double absorbed_power(const LaserBeam& b, const AbsorptionModel& a, double micromotion_m = 0.0);

// Free-molecular heat loss to the gas, W; negative when the particle is
// colder than the gas. flagged: Kn < 1 (continuum regime, formula invalid).
Flagged<double> gas_cooling_power(const GasEnvironment& g, const ParticleState& p,
                                  double t_internal_k);

// Grey-body exchange with surroundings at t_env.
double radiative_power(const ParticleState& p, double t_internal_k, double t_env_k,
                       double emissivity);

// Temperature where absorbed power equals gas + radiative loss (radiation
// exchanged with surroundings at the gas temperature). Bisection on
// [T_gas, 5000 K] run to full double precision. Throws NumericalError
// ("thermal runaway") when no root exists below 5000 K and InvalidArgument
// when neither cooling channel is active.
double steady_state_temperature(const LaserBeam& b, const AbsorptionModel& a,
                                const GasEnvironment& g, const ParticleState& p, double emissivity,
                                double micromotion_m = 0.0);

// Cross-section that puts the steady state at target_t_k for the given
// beam, gas and particle (the absorbed power is linear in it).
double calibrate_cross_section(double target_t_k, const LaserBeam& b, const AbsorptionModel& a,
                               const GasEnvironment& g, const ParticleState& p,
                               double emissivity);

enum class EmpiricalMode { linear_power, inverse_pressure };

std::string to_string(EmpiricalMode m);
EmpiricalMode empirical_mode_from_string(const std::string& s);

// T = t0 + coefficient * P_laser (K/W), or T = t0 + coefficient / p (K mbar).
struct EmpiricalThermalModel {
    EmpiricalMode mode = EmpiricalMode::linear_power;
    double t0_k = 298.0;
    double coefficient = 0.0;
    double residual_rms_k = 0.0;

    double predict(double control) const;
};

struct CalibrationPoint {
    double control = 0.0;  // laser power in W, or pressure in mbar
    double temperature_k = 0.0;
};

// Least squares. linear_power keeps the origin fixed at `fixed_origin_k`;
// inverse_pressure fits both t0 and the coefficient. Throws InvalidArgument
// on too few points or a degenerate design.
EmpiricalThermalModel calibrate_empirical(const std::vector<CalibrationPoint>& points,
                                          EmpiricalMode mode, double fixed_origin_k = 298.0);

}  // namespace nvtrap::thermal

#endif
