#include "nvtrap/protocols.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <thread>

#include <fmt/format.h>

#include "nvtrap/thermometry.hpp"

namespace nvtrap::protocols {

std::string to_string(Scenario s) {
    switch (s) {
        case Scenario::sweep_power: return "sweep_power";
        case Scenario::sweep_pressure: return "sweep_pressure";
        case Scenario::preselect: return "preselect";
        case Scenario::pumpdown: return "pumpdown";
        case Scenario::stability_map: return "stability_map";
    }
    return "unknown";
}

Scenario scenario_from_string(const std::string& s) {
    for (auto sc : {Scenario::sweep_power, Scenario::sweep_pressure, Scenario::preselect,
                    Scenario::pumpdown, Scenario::stability_map})
        if (to_string(sc) == s) return sc;
    throw InvalidArgument(fmt::format("unknown scenario '{}'", s));
}

namespace {

bool strictly_monotone(const std::vector<double>& v) {
    if (v.size() < 2) return true;
    const bool up = v[1] > v[0];
    for (std::size_t i = 1; i < v.size(); ++i)
        if (up ? !(v[i] > v[i - 1]) : !(v[i] < v[i - 1])) return false;
    return true;
}

// Runs body(i) for i in [0, n) on up to `threads` workers; results are
// written by index so ordering never depends on scheduling.
template <typename Body>
void parallel_for(std::size_t n, int threads, Body body) {
    const std::size_t workers =
        std::min<std::size_t>(n, static_cast<std::size_t>(std::max(1, threads)));
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) body(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w)
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < n; i = next++) body(i);
        });
    for (auto& t : pool) t.join();
}

thermal::LaserBeam beam_at_power_uw(const thermal::LaserBeam& b, double power_uw) {
    thermal::LaserBeam out = b;
    out.power_w = power_uw * 1e-6;
    return out;
}

thermal::GasEnvironment gas_at_pressure(const thermal::GasEnvironment& g, double p_mbar) {
    thermal::GasEnvironment out = g;
    out.pressure_mbar = p_mbar;
    return out;
}

SweepRow evaluate_row(const ProtocolConfig& c, double control, const thermal::LaserBeam& beam,
                      const thermal::GasEnvironment& gas, const thermal::AbsorptionModel& absorption,
                      std::uint64_t seed) {
    SweepRow row;
    row.control = control;
    double t_true = 0.0;
    try {
        t_true = thermal::steady_state_temperature(beam, absorption, gas, c.particle,
                                                   c.thermal.emissivity);
    } catch (const Error& e) {
        row.status = fmt::format("thermal model: {}", e.what());
        return row;
    }
    row.true_t_k = t_true;

    odmr::Spectrum spectrum;
    try {
        spin::SpinParams sp = c.spin;
        sp.d_zfs_ghz = spin::zfs_of_temperature(c.zfs, t_true).value;
        const double contrast =
            odmr::contrast_model_predict(c.contrast, std::max(t_true, c.contrast.t_ref_k));
        spectrum = odmr::synthesize_spectrum(sp, contrast, c.odmr.s_max_cps, c.odmr.sigma_ghz,
                                             c.odmr.grid, {c.odmr.noise, seed, c.odmr.noise_scale},
                                             c.odmr.shape);
        spectrum.meta.laser_power_w = beam.power_w;
        spectrum.meta.pressure_mbar = gas.pressure_mbar;
    } catch (const Error& e) {
        row.status = fmt::format("forward model: {}", e.what());
        return row;
    }

    odmr::FitOptions options;
    options.shape = c.odmr.shape;
    const auto fit = odmr::fit_double_gaussian(spectrum, std::nullopt, options);
    if (!fit.converged) {
        row.status = fmt::format("fit: {}", fit.message);
        return row;
    }
    row.d_fit_ghz = fit.d_fit_ghz;
    row.contrast = fit.contrast;
    try {
        const auto est = thermometry::temperature_from_fit(fit, c.zfs);
        row.t_inferred_k = est.temperature_k;
        row.sigma_t_k = est.sigma_t_k;
        row.status = est.extrapolated ? "extrapolated" : "ok";
    } catch (const Error& e) {
        row.status = e.what();
    }
    return row;
}

std::optional<thermal::EmpiricalThermalModel> fit_empirical(const SweepTable& table,
                                                            thermal::EmpiricalMode mode,
                                                            double t_gas_k) {
    std::vector<thermal::CalibrationPoint> points;
    for (const auto& r : table.rows) {
        if (!r.t_inferred_k) continue;
        const double control = mode == thermal::EmpiricalMode::linear_power ? r.control * 1e-6
                                                                            : r.control;
        points.push_back({control, *r.t_inferred_k});
    }
    try {
        return thermal::calibrate_empirical(points, mode, t_gas_k);
    } catch (const InvalidArgument&) {
        return std::nullopt;
    }
}

}  // namespace

void ProtocolConfig::validate_common() const {
    trap.validate();
    particle.validate();
    gas.validate();
    beam.validate();
    spin.validate();
    zfs.validate();
    contrast.validate();
    if (!(odmr.sigma_ghz > 0.0)) throw InvalidArgument("odmr.sigma_ghz must be positive");
    if (!(odmr.s_max_cps > 0.0)) throw InvalidArgument("odmr.s_max_cps must be positive");
    if (!(odmr.noise_scale >= 0.0)) throw InvalidArgument("odmr.noise_scale must be >= 0");
    if (odmr.grid.n_points < 16 || !(odmr.grid.f_stop_ghz > odmr.grid.f_start_ghz))
        throw InvalidArgument("odmr grid needs >= 16 points and f_stop > f_start");
    if (!(thermal.emissivity >= 0.0 && thermal.emissivity <= 1.0))
        throw InvalidArgument("thermal.emissivity must lie in [0, 1]");
    if (thermal.calibration_control.has_value() != thermal.calibration_temperature_k.has_value())
        throw InvalidArgument("calibration_control and calibration_temperature_k go together");
    if (threads < 1) throw InvalidArgument("threads must be >= 1");
}

void ProtocolConfig::validate() const {
    validate_common();
    switch (scenario) {
        case Scenario::sweep_power:
        case Scenario::sweep_pressure:
            if (grid.empty()) throw InvalidArgument("sweep grid is empty");
            if (!strictly_monotone(grid)) throw InvalidArgument("sweep grid is not strictly monotone");
            if (scenario == Scenario::sweep_power) {
                for (double v : grid)
                    if (!(v >= 0.0)) throw InvalidArgument("laser powers must be >= 0");
            } else {
                if (grid.size() > 1 && !(grid[1] < grid[0]))
                    throw InvalidArgument("pressure grid must be descending");
                for (double v : grid)
                    if (!(v > 0.0)) throw InvalidArgument("pressures must be > 0");
            }
            if (!thermal.calibration_control) thermal.absorption.validate();
            break;
        case Scenario::preselect:
            if (!(preselect.f_start_hz > preselect.f_stop_hz && preselect.f_stop_hz > 0.0))
                throw InvalidArgument("preselect needs f_start_hz > f_stop_hz > 0");
            if (preselect.n_points < 2) throw InvalidArgument("preselect needs >= 2 grid points");
            if (!(preselect.tolerance_hz > 0.0))
                throw InvalidArgument("preselect tolerance must be positive");
            break;
        case Scenario::pumpdown:
            if (pumpdown.pressures_mbar.empty())
                throw InvalidArgument("pumpdown pressure schedule is empty");
            if (!strictly_monotone(pumpdown.pressures_mbar) ||
                (pumpdown.pressures_mbar.size() > 1 &&
                 !(pumpdown.pressures_mbar[1] < pumpdown.pressures_mbar[0])))
                throw InvalidArgument("pumpdown pressures must be strictly descending");
            for (double p : pumpdown.pressures_mbar)
                if (!(p > 0.0)) throw InvalidArgument("pumpdown pressures must be > 0");
            if (!(pumpdown.pump_time_constant_s > 0.0))
                throw InvalidArgument("pump time constant must be positive");
            break;
        case Scenario::stability_map:
            if (stability_map.qs.empty() || stability_map.as.empty() || stability_map.gammas.empty())
                throw InvalidArgument("stability map axes must be non-empty");
            for (double g : stability_map.gammas)
                if (!(g >= 0.0)) throw InvalidArgument("normalized damping must be >= 0");
            break;
    }
}

double resolve_cross_section(const ProtocolConfig& c) {
    if (!c.thermal.calibration_control) return c.thermal.absorption.effective_cross_section_m2;
    const double control = *c.thermal.calibration_control;
    switch (c.scenario) {
        case Scenario::sweep_power:
            return thermal::calibrate_cross_section(*c.thermal.calibration_temperature_k,
                                                    beam_at_power_uw(c.beam, control),
                                                    c.thermal.absorption, c.gas, c.particle,
                                                    c.thermal.emissivity);
        case Scenario::sweep_pressure:
            return thermal::calibrate_cross_section(*c.thermal.calibration_temperature_k, c.beam,
                                                    c.thermal.absorption,
                                                    gas_at_pressure(c.gas, control), c.particle,
                                                    c.thermal.emissivity);
        default:
            throw InvalidArgument("cross-section calibration applies to sweeps only");
    }
}

SweepTable run_power_sweep(const ProtocolConfig& c) {
    if (c.scenario != Scenario::sweep_power) throw InvalidArgument("scenario is not sweep_power");
    c.validate();
    SweepTable table;
    table.scenario = c.scenario;
    thermal::AbsorptionModel absorption = c.thermal.absorption;
    absorption.effective_cross_section_m2 = resolve_cross_section(c);
    table.effective_cross_section_m2 = absorption.effective_cross_section_m2;
    table.rows.resize(c.grid.size());
    parallel_for(c.grid.size(), c.threads, [&](std::size_t i) {
        table.rows[i] = evaluate_row(c, c.grid[i], beam_at_power_uw(c.beam, c.grid[i]), c.gas,
                                     absorption, c.seed + i);
    });
    table.empirical = fit_empirical(table, thermal::EmpiricalMode::linear_power, c.gas.temperature_k);
    return table;
}

SweepTable run_pressure_sweep(const ProtocolConfig& c) {
    if (c.scenario != Scenario::sweep_pressure)
        throw InvalidArgument("scenario is not sweep_pressure");
    c.validate();
    SweepTable table;
    table.scenario = c.scenario;
    thermal::AbsorptionModel absorption = c.thermal.absorption;
    absorption.effective_cross_section_m2 = resolve_cross_section(c);
    table.effective_cross_section_m2 = absorption.effective_cross_section_m2;
    table.rows.resize(c.grid.size());
    parallel_for(c.grid.size(), c.threads, [&](std::size_t i) {
        const auto gas = gas_at_pressure(c.gas, c.grid[i]);
        SweepRow row = evaluate_row(c, c.grid[i], c.beam, gas, absorption, c.seed + i);
        row.knudsen = thermal::knudsen(gas, c.particle).value;
        row.damping_rate_s = trap::damping_rate(c.particle, gas).value;
        table.rows[i] = std::move(row);
    });
    table.empirical =
        fit_empirical(table, thermal::EmpiricalMode::inverse_pressure, c.gas.temperature_k);
    return table;
}

PreselectionResult run_preselection(const ProtocolConfig& c) {
    if (c.scenario != Scenario::preselect) throw InvalidArgument("scenario is not preselect");
    c.validate();
    const auto& s = c.preselect;
    auto stable_at = [&](double f_hz) {
        trap::TrapConfig t = c.trap;
        t.omega_drive_rad_s = 2.0 * constants::pi * f_hz;
        return trap::stability_classify(t, c.particle, c.gas).stable;
    };
    auto estimate = [&](double f_hz) {
        return trap::charge_to_mass_from_instability(2.0 * constants::pi * f_hz, c.trap,
                                                     c.particle, c.gas);
    };

    PreselectionResult r;
    if (!stable_at(s.f_start_hz)) {
        r.onset_above_grid = true;
        r.onset_frequency_hz = s.f_start_hz;
        r.q_over_m_c_kg = estimate(s.f_start_hz);
        r.accept = r.onset_frequency_hz >= s.accept_min_onset_hz;
        return r;
    }
    const double step = (s.f_start_hz - s.f_stop_hz) / (s.n_points - 1);
    double f_stable = s.f_start_hz;
    for (int k = 1; k < s.n_points; ++k) {
        const double f = k == s.n_points - 1 ? s.f_stop_hz : s.f_start_hz - k * step;
        if (stable_at(f)) {
            f_stable = f;
            continue;
        }
        double lo = f, hi = f_stable;  // lo unstable, hi stable
        while (hi - lo > s.tolerance_hz) {
            const double mid = 0.5 * (lo + hi);
            (stable_at(mid) ? hi : lo) = mid;
        }
        r.onset_frequency_hz = 0.5 * (lo + hi);
        r.q_over_m_c_kg = estimate(r.onset_frequency_hz);
        r.accept = r.onset_frequency_hz >= s.accept_min_onset_hz;
        return r;
    }
    throw NumericalError(
        fmt::format("onset not bracketed: stable over [{}, {}] Hz", s.f_stop_hz, s.f_start_hz));
}

PumpdownResult run_pumpdown(const ProtocolConfig& c) {
    if (c.scenario != Scenario::pumpdown) throw InvalidArgument("scenario is not pumpdown");
    c.validate();
    const auto& s = c.pumpdown;
    PumpdownResult out;

    const double q0 = trap::mathieu_q(c.trap, c.particle).q_axial;
    out.ramp.push_back({c.trap.v_pp_volts, c.trap.drive_frequency_hz(), q0});
    const auto schedule = trap::iso_q_ramp(c.trap, s.v_pp_end_volts, s.ramp_steps);
    for (const auto& t : schedule) {
        const double q = trap::mathieu_q(t, c.particle).q_axial;
        out.ramp.push_back({t.v_pp_volts, t.drive_frequency_hz(), q});
        out.ramp_q_max_relative_deviation =
            std::max(out.ramp_q_max_relative_deviation, std::abs(q - q0) / q0);
    }
    const trap::TrapConfig& final_trap = schedule.back();

    const double p0 = s.pressures_mbar.front();
    out.rows.resize(s.pressures_mbar.size());
    parallel_for(s.pressures_mbar.size(), c.threads, [&](std::size_t i) {
        PumpdownRow row;
        row.pressure_mbar = s.pressures_mbar[i];
        row.time_s = s.pump_time_constant_s * std::log(p0 / row.pressure_mbar);
        const auto gas = gas_at_pressure(c.gas, row.pressure_mbar);
        row.damping_rate_s = trap::damping_rate(c.particle, gas).value;
        try {
            if (!trap::stability_classify(final_trap, c.particle, gas).stable) {
                row.status = "unstable";
            } else {
                row.f_secular_hz = trap::floquet_secular_frequency(final_trap, c.particle, gas);
                const auto eq = trap::equilibrium_displacement(final_trap, c.particle, gas,
                                                               s.stray_force_n, s.equilibrium);
                row.displacement_m = eq.displacement_m;
                row.micromotion_m = trap::micromotion_amplitude(eq.trajectory).amplitude_m;
                row.status = "ok";
            }
        } catch (const Error& e) {
            row.status = e.what();
        }
        out.rows[i] = std::move(row);
    });
    return out;
}

std::vector<trap::StabilityMapPoint> run_stability_map(const ProtocolConfig& c) {
    if (c.scenario != Scenario::stability_map)
        throw InvalidArgument("scenario is not stability_map");
    c.validate();
    return trap::stability_map(c.stability_map.qs, c.stability_map.as, c.stability_map.gammas,
                               c.threads);
}

}  // namespace nvtrap::protocols
