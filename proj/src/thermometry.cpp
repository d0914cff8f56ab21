#include "nvtrap/thermometry.hpp"

#include <cmath>

#include <fmt/format.h>

namespace nvtrap::thermometry {

namespace {

constexpr int max_bisection_steps = 60;

}  // namespace

Inversion invert_zfs(const spin::ZfsCoefficients& c, double d_meas_ghz,
                     double particle_offset_ghz) {
    const double d = d_meas_ghz - particle_offset_ghz;
    const double d_hot = spin::zfs_of_temperature(c, c.t_max_k).value;
    const double d_cold = spin::zfs_of_temperature(c, c.t_min_k).value;
    const double lo_adm = d_hot - inversion_slack_ghz;
    const double hi_adm = d_cold + inversion_slack_ghz;
    if (!std::isfinite(d) || d < lo_adm || d > hi_adm)
        throw RangeError(fmt::format(
            "D = {} GHz is not invertible: admissible interval is [{:.6f}, {:.6f}] GHz", d,
            lo_adm, hi_adm));

    double t_lo = c.t_min_k;  // D(t_lo) >= d
    double t_hi = c.t_max_k;  // D(t_hi) <= d
    bool extrapolated = false;
    if (d > d_cold) {
        extrapolated = true;
        t_lo = c.t_min_k - spin::ZfsCoefficients::extrapolation_band_k;
        t_hi = c.t_min_k;
    } else if (d < d_hot) {
        extrapolated = true;
        t_lo = c.t_max_k;
        t_hi = c.t_max_k + spin::ZfsCoefficients::extrapolation_band_k;
    }
    auto residual = [&](double t) { return spin::zfs_of_temperature(c, t).value - d; };
    if (residual(t_lo) < 0.0 || residual(t_hi) > 0.0)
        throw RangeError(fmt::format(
            "D = {} GHz is not bracketed by the ZFS polynomial on [{}, {}] K", d, t_lo, t_hi));

    for (int i = 0; i < max_bisection_steps; ++i) {
        const double mid = 0.5 * (t_lo + t_hi);
        if (mid <= t_lo || mid >= t_hi) break;
        if (residual(mid) > 0.0)
            t_lo = mid;
        else
            t_hi = mid;
    }
    return {0.5 * (t_lo + t_hi), extrapolated};
}

PipelineError::PipelineError(Stage stage, const std::string& what)
    : Error(std::string(stage == Stage::fit ? "fit: " : "inversion: ") + what), stage_(stage) {}

ThermoEstimate temperature_from_fit(const odmr::OdmrFit& fit, const spin::ZfsCoefficients& c,
                                    double particle_offset_ghz) {
    if (!fit.converged) throw PipelineError(Stage::fit, fit.message);
    Inversion inv;
    double slope = 0.0;
    try {
        inv = invert_zfs(c, fit.d_fit_ghz, particle_offset_ghz);
        slope = spin::zfs_slope(c, inv.temperature_k).value;
    } catch (const Error& e) {
        throw PipelineError(Stage::inversion, e.what());
    }
    ThermoEstimate out;
    out.temperature_k = inv.temperature_k;
    out.extrapolated = inv.extrapolated;
    out.d_used_ghz = fit.d_fit_ghz;
    out.sigma_t_k = fit.sigma_d_fit_ghz() / std::abs(slope);
    return out;
}

ThermoEstimate temperature_from_spectrum(const odmr::Spectrum& s, const spin::ZfsCoefficients& c,
                                         double particle_offset_ghz,
                                         const odmr::FitOptions& options) {
    const auto fit = odmr::fit_double_gaussian(s, std::nullopt, options);
    return temperature_from_fit(fit, c, particle_offset_ghz);
}

}  // namespace nvtrap::thermometry
