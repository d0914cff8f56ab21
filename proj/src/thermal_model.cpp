#include "nvtrap/thermal_model.hpp"

#include <cmath>
#include <limits>

#include <fmt/format.h>

namespace nvtrap::thermal {

using constants::boltzmann;
using constants::pi;

GasEnvironment GasEnvironment::air(double pressure_mbar, double temperature_k) {
    GasEnvironment g;
    g.pressure_mbar = pressure_mbar;
    g.temperature_k = temperature_k;
    return g;
}

double GasEnvironment::mean_speed_m_s() const {
    return std::sqrt(8.0 * boltzmann * temperature_k / (pi * molecule_mass_kg));
}

void GasEnvironment::validate() const {
    if (!(pressure_mbar >= 0.0)) throw InvalidArgument("gas pressure must be >= 0");
    if (!(temperature_k > 0.0)) throw InvalidArgument("gas temperature must be > 0");
    if (!(molecule_mass_kg > 0.0) || !(molecule_diameter_m > 0.0))
        throw InvalidArgument("gas molecule mass and diameter must be positive");
    if (!(accommodation > 0.0 && accommodation <= 1.0))
        throw InvalidArgument("accommodation coefficient must lie in (0, 1]");
    if (!(heat_capacity_ratio > 1.0)) throw InvalidArgument("heat capacity ratio must exceed 1");
    if (!(drag_coefficient > 0.0)) throw InvalidArgument("drag coefficient must be positive");
}

double LaserBeam::peak_intensity_w_m2() const {
    return 2.0 * power_w / (pi * waist_m * waist_m);
}

void LaserBeam::validate() const {
    if (!(power_w >= 0.0)) throw InvalidArgument("laser power must be >= 0");
    if (!(waist_m > 0.0)) throw InvalidArgument("beam waist must be positive");
    if (!(wavelength_m > 0.0)) throw InvalidArgument("wavelength must be positive");
}

double AbsorptionModel::overlap(double micromotion_m) const {
    return overlap_of_micromotion ? overlap_of_micromotion(micromotion_m) : intensity_overlap;
}

void AbsorptionModel::validate() const {
    if (!(effective_cross_section_m2 > 0.0))
        throw InvalidArgument("effective absorption cross-section must be positive");
    if (!(intensity_overlap > 0.0 && intensity_overlap <= 1.0))
        throw InvalidArgument("intensity overlap must lie in (0, 1]");
}

Flagged<double> mean_free_path(const GasEnvironment& g) {
    g.validate();
    if (g.pressure_mbar == 0.0) return {std::numeric_limits<double>::infinity(), true};
    const double d = g.molecule_diameter_m;
    return {boltzmann * g.temperature_k / (std::sqrt(2.0) * pi * d * d * g.pressure_pa()), false};
}

Flagged<double> knudsen(const GasEnvironment& g, const ParticleState& p) {
    const auto mfp = mean_free_path(g);
    return {mfp.value / p.diameter_m, mfp.flagged};
}

double absorbed_power(const LaserBeam& b, const AbsorptionModel& a, double micromotion_m) {
    b.validate();
    return a.effective_cross_section_m2 * a.overlap(micromotion_m) * b.peak_intensity_w_m2();
}

Flagged<double> gas_cooling_power(const GasEnvironment& g, const ParticleState& p,
                                  double t_internal_k) {
    // Kinetic-theory free-molecular flux: alpha p A vbar / 8 (gamma+1)/(gamma-1) (T/Tg - 1).
    const double gam = g.heat_capacity_ratio;
    const double power = g.accommodation * g.pressure_pa() * p.surface_area_m2() / 8.0 *
                         g.mean_speed_m_s() * (gam + 1.0) / (gam - 1.0) *
                         (t_internal_k / g.temperature_k - 1.0);
    const auto kn = knudsen(g, p);
    return {power, !kn.flagged && kn.value < 1.0};
}

double radiative_power(const ParticleState& p, double t_internal_k, double t_env_k,
                       double emissivity) {
    const double t4 = t_internal_k * t_internal_k * t_internal_k * t_internal_k;
    const double e4 = t_env_k * t_env_k * t_env_k * t_env_k;
    return emissivity * constants::stefan_boltzmann * p.surface_area_m2() * (t4 - e4);
}

namespace {

constexpr double runaway_ceiling_k = 5000.0;

double cooling(const GasEnvironment& g, const ParticleState& p, double t, double emissivity) {
    return gas_cooling_power(g, p, t).value + radiative_power(p, t, g.temperature_k, emissivity);
}

}  // namespace

double steady_state_temperature(const LaserBeam& b, const AbsorptionModel& a,
                                const GasEnvironment& g, const ParticleState& p, double emissivity,
                                double micromotion_m) {
    g.validate();
    if (!(emissivity >= 0.0 && emissivity <= 1.0))
        throw InvalidArgument("emissivity must lie in [0, 1]");
    if (g.pressure_mbar == 0.0 && emissivity == 0.0)
        throw InvalidArgument("no cooling channel: zero pressure and zero emissivity");
    const double p_abs = absorbed_power(b, a, micromotion_m);
    if (p_abs == 0.0) return g.temperature_k;

    double lo = g.temperature_k;
    double hi = runaway_ceiling_k;
    if (cooling(g, p, hi, emissivity) < p_abs)
        throw NumericalError(fmt::format(
            "thermal runaway: {} W absorbed exceeds the cooling at {} K", p_abs, hi));
    // Full-precision bisection; the cooling power is strictly increasing in T.
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        if (cooling(g, p, mid, emissivity) < p_abs)
            lo = mid;
        else
            hi = mid;
    }
    const double r_lo = std::abs(cooling(g, p, lo, emissivity) - p_abs);
    const double r_hi = std::abs(cooling(g, p, hi, emissivity) - p_abs);
    return r_lo <= r_hi ? lo : hi;
}

double calibrate_cross_section(double target_t_k, const LaserBeam& b, const AbsorptionModel& a,
                               const GasEnvironment& g, const ParticleState& p,
                               double emissivity) {
    b.validate();
    g.validate();
    if (!(target_t_k > g.temperature_k))
        throw InvalidArgument("calibration temperature must exceed the gas temperature");
    if (!(b.power_w > 0.0)) throw InvalidArgument("calibration needs a positive laser power");
    const double needed = cooling(g, p, target_t_k, emissivity);
    return needed / (a.overlap() * b.peak_intensity_w_m2());
}

std::string to_string(EmpiricalMode m) {
    return m == EmpiricalMode::linear_power ? "linear_power" : "inverse_pressure";
}

EmpiricalMode empirical_mode_from_string(const std::string& s) {
    if (s == "linear_power") return EmpiricalMode::linear_power;
    if (s == "inverse_pressure") return EmpiricalMode::inverse_pressure;
    throw InvalidArgument("unknown empirical thermal mode '" + s + "'");
}

double EmpiricalThermalModel::predict(double control) const {
    if (mode == EmpiricalMode::linear_power) return t0_k + coefficient * control;
    if (!(control > 0.0)) throw RangeError("inverse-pressure model needs pressure > 0");
    return t0_k + coefficient / control;
}

EmpiricalThermalModel calibrate_empirical(const std::vector<CalibrationPoint>& points,
                                          EmpiricalMode mode, double fixed_origin_k) {
    EmpiricalThermalModel m;
    m.mode = mode;
    if (mode == EmpiricalMode::linear_power) {
        if (points.empty()) throw InvalidArgument("linear_power calibration needs >= 1 point");
        double sxx = 0.0, sxy = 0.0;
        for (const auto& pt : points) {
            sxx += pt.control * pt.control;
            sxy += pt.control * (pt.temperature_k - fixed_origin_k);
        }
        if (sxx == 0.0) throw InvalidArgument("degenerate design: all laser powers are zero");
        m.t0_k = fixed_origin_k;
        m.coefficient = sxy / sxx;
    } else {
        if (points.size() < 2) throw InvalidArgument("inverse_pressure calibration needs >= 2 points");
        const double n = static_cast<double>(points.size());
        double sx = 0.0, sy = 0.0;
        for (const auto& pt : points) {
            if (!(pt.control > 0.0)) throw InvalidArgument("pressures must be positive");
            sx += 1.0 / pt.control;
            sy += pt.temperature_k;
        }
        const double mx = sx / n, my = sy / n;
        double sxx = 0.0, sxy = 0.0;
        for (const auto& pt : points) {
            const double dx = 1.0 / pt.control - mx;
            sxx += dx * dx;
            sxy += dx * (pt.temperature_k - my);
        }
        if (sxx <= 1e-15 * mx * mx * n)
            throw InvalidArgument("degenerate design: all pressures are equal");
        m.coefficient = sxy / sxx;
        m.t0_k = my - m.coefficient * mx;
    }
    double ss = 0.0;
    for (const auto& pt : points) {
        const double r = pt.temperature_k - m.predict(pt.control);
        ss += r * r;
    }
    m.residual_rms_k = std::sqrt(ss / static_cast<double>(points.size()));
    return m;
}

}  // namespace nvtrap::thermal
