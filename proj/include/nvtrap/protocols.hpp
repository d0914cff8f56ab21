#ifndef NVTRAP_PROTOCOLS_HPP
#define NVTRAP_PROTOCOLS_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "nvtrap/odmr.hpp"
#include "nvtrap/particle.hpp"
#include "nvtrap/spin_model.hpp"
#include "nvtrap/thermal_model.hpp"
#include "nvtrap/trap_dynamics.hpp"

namespace nvtrap::protocols {

enum class Scenario { sweep_power, sweep_pressure, preselect, pumpdown, stability_map };

std::string to_string(Scenario s);
Scenario scenario_from_string(const std::string& s);

// Synthetic acquisition used by the sweeps.
struct OdmrSettings {
    odmr::FrequencyGrid grid;
    double sigma_ghz = 0.004;
    double s_max_cps = 8000.0;
    odmr::NoiseKind noise = odmr::NoiseKind::gaussian;
    double noise_scale = 0.01;
    odmr::LineShape shape = odmr::LineShape::gaussian;
};

struct ThermalSettings {
    thermal::AbsorptionModel absorption;
    double emissivity = 0.1;
    // When set, the cross-section is back-solved so that the scenario's
    // forward model gives calibration_temperature_k at calibration_control
    // (a laser power in uW for power sweeps, a pressure in mbar otherwise).
    std::optional<double> calibration_control;
    std::optional<double> calibration_temperature_k;
};

struct PreselectSettings {
    double f_start_hz = 5000.0;  // scan runs downward from here
    double f_stop_hz = 100.0;
    int n_points = 200;
    double tolerance_hz = 0.01;
    double accept_min_onset_hz = 1000.0;
};

struct PumpdownSettings {
    double v_pp_end_volts = 600.0;
    int ramp_steps = 20;
    std::vector<double> pressures_mbar{1.0, 0.3, 0.1, 0.03, 0.01};
    // p(t) = p0 exp(-t / tau) after the pump is switched on.
    double pump_time_constant_s = 60.0;
    Vec3 stray_force_n = Vec3::Zero();
    trap::EquilibriumOptions equilibrium;
};

struct StabilityMapSettings {
    std::vector<double> qs;
    std::vector<double> as{0.0};
    std::vector<double> gammas{0.0};
};

struct ProtocolConfig {
    Scenario scenario = Scenario::sweep_power;
    trap::TrapConfig trap;
    ParticleState particle = ParticleState::from_diameter(10e-6, 3510.0, 1e-12);
    thermal::GasEnvironment gas;
    thermal::LaserBeam beam;
    // Resolved doublet: splitting 2E = 16 MHz against 4 MHz line sigma.
    spin::SpinParams spin{2.87, 0.008};
    spin::ZfsCoefficients zfs;
    odmr::ContrastModel contrast;
    OdmrSettings odmr;
    ThermalSettings thermal;
    // Sweep control values: laser power in uW or pressure in mbar.
    std::vector<double> grid;
    PreselectSettings preselect;
    PumpdownSettings pumpdown;
    StabilityMapSettings stability_map;
    std::uint64_t seed = 1;
    int threads = 1;

    // Throws InvalidArgument naming the first offending field. validate()
    // adds the checks of the selected scenario to validate_common().
    void validate_common() const;
    void validate() const;
};

struct SweepRow {
    double control = 0.0;
    std::optional<double> true_t_k;
    std::optional<double> d_fit_ghz;
    std::optional<double> contrast;
    std::optional<double> t_inferred_k;
    std::optional<double> sigma_t_k;
    std::string status;  // "ok", "extrapolated" or the failure reason
    // Pressure sweeps only.
    std::optional<double> knudsen;
    std::optional<double> damping_rate_s;
};

struct SweepTable {
    Scenario scenario = Scenario::sweep_power;
    std::vector<SweepRow> rows;
    double effective_cross_section_m2 = 0.0;
    // Empirical model fitted to the inferred temperatures of the ok rows,
    // when at least the minimum number of rows succeeded.
    std::optional<thermal::EmpiricalThermalModel> empirical;
};

// Cross-section used by a sweep: the configured one, or the back-solved one
// when a calibration target is given.
double resolve_cross_section(const ProtocolConfig& c);

// Laser power (uW) at the configured gas: thermal model -> contrast model ->
// synthetic spectrum -> fit -> inversion. Row i uses noise seed seed + i.
SweepTable run_power_sweep(const ProtocolConfig& c);

// Pressure (mbar, strictly descending) at the configured beam power.
SweepTable run_pressure_sweep(const ProtocolConfig& c);

struct PreselectionResult {
    double onset_frequency_hz = 0.0;
    double q_over_m_c_kg = 0.0;
    bool accept = false;
    // Unstable already at f_start: onset and Q/m are lower bounds.
    bool onset_above_grid = false;
};

// Downward drive-frequency scan at the configured v_pp for the first
// unstable point, refined by bisection. Throws NumericalError("onset not
// bracketed") when every grid frequency is stable.
PreselectionResult run_preselection(const ProtocolConfig& c);

struct RampPoint {
    double v_pp_volts = 0.0;
    double drive_frequency_hz = 0.0;
    double q_axial = 0.0;
};

struct PumpdownRow {
    double time_s = 0.0;
    double pressure_mbar = 0.0;
    double damping_rate_s = 0.0;
    std::optional<double> f_secular_hz;
    std::optional<double> displacement_m;
    std::optional<double> micromotion_m;
    std::string status;
};

struct PumpdownResult {
    std::vector<RampPoint> ramp;
    // max |q_i - q_0| / q_0 over the ramp.
    double ramp_q_max_relative_deviation = 0.0;
    std::vector<PumpdownRow> rows;
};

// Iso-q ramp to v_pp_end, then the pressure schedule at the final drive.
// Unstable or failing rows are tagged and the schedule continues.
PumpdownResult run_pumpdown(const ProtocolConfig& c);

std::vector<trap::StabilityMapPoint> run_stability_map(const ProtocolConfig& c);

}  // namespace nvtrap::protocols

#endif
