#include <doctest.h>

#include <cmath>
#include <string>

#include "nvtrap/config.hpp"
#include "nvtrap/io.hpp"
#include "nvtrap/protocols.hpp"

using namespace nvtrap;
using namespace nvtrap::protocols;

namespace {

ProtocolConfig load(const std::string& name) {
    return config::load_config(std::string(NVTRAP_DATA_DIR) + "/" + name).protocol;
}

const SweepRow& row_at(const SweepTable& t, double control) {
    for (const auto& r : t.rows)
        if (std::abs(r.control - control) < 1e-12) return r;
    throw std::runtime_error("no such row");
}

}  // namespace

TEST_CASE("power sweep with the shipped configuration") {
    const auto c = load("sweep_power.toml");
    const auto t = run_power_sweep(c);
    REQUIRE(t.rows.size() == c.grid.size());
    CHECK(t.effective_cross_section_m2 > 0.0);

    const auto& first = row_at(t, 50.0);
    const auto& last = row_at(t, 700.0);
    REQUIRE(first.t_inferred_k);
    REQUIRE(last.t_inferred_k);
    CHECK(*first.t_inferred_k == doctest::Approx(310.0).epsilon(5.0 / 310.0));
    CHECK(std::abs(*last.t_inferred_k - 470.0) <= 15.0);
    CHECK(*last.true_t_k == doctest::Approx(470.0).epsilon(1e-9));
    CHECK(*first.contrast > *last.contrast);

    const auto& zero = row_at(t, 0.0);
    REQUIRE(zero.t_inferred_k);
    CHECK(std::abs(*zero.t_inferred_k - 298.0) <= 5.0);
    CHECK(*zero.true_t_k == 298.0);

    for (const auto& r : t.rows) {
        CAPTURE(r.control);
        CHECK((r.status == "ok" || r.status == "extrapolated"));
        CHECK(r.sigma_t_k.value() > 0.0);
    }
    REQUIRE(t.empirical);
    CHECK(t.empirical->mode == thermal::EmpiricalMode::linear_power);
    CHECK(t.empirical->t0_k == 298.0);
    CHECK(t.empirical->coefficient * 1e-6 == doctest::Approx(0.2457).epsilon(0.05));
}

TEST_CASE("noise-free power sweep closes the loop on every row") {
    auto c = load("sweep_power.toml");
    c.odmr.noise = odmr::NoiseKind::none;
    const auto t = run_power_sweep(c);
    for (const auto& r : t.rows) {
        CAPTURE(r.control);
        REQUIRE(r.t_inferred_k);
        CHECK(std::abs(*r.t_inferred_k - *r.true_t_k) < 0.5);
    }
}

TEST_CASE("pressure sweep with the shipped configuration") {
    const auto c = load("sweep_pressure.toml");
    const auto t = run_pressure_sweep(c);
    REQUIRE(t.rows.size() == c.grid.size());
    double previous = 0.0;
    for (const auto& r : t.rows) {
        CAPTURE(r.control);
        REQUIRE(r.true_t_k);
        CHECK(*r.true_t_k > previous);
        previous = *r.true_t_k;
        REQUIRE(r.knudsen);
        CHECK(*r.knudsen > 1.0);
        REQUIRE(r.damping_rate_s);
        CHECK(*r.damping_rate_s > 0.0);
        CHECK(r.status == "ok");
    }
    const auto& last = row_at(t, 0.2);
    CHECK(std::abs(*last.t_inferred_k - 390.0) <= 20.0);
    CHECK(*last.true_t_k == doctest::Approx(390.0).epsilon(1e-9));
    CHECK(*t.rows.front().contrast == doctest::Approx(0.035).epsilon(0.15));
    CHECK(*last.contrast == doctest::Approx(0.015).epsilon(0.2));
    CHECK(*t.rows.front().t_inferred_k < *last.t_inferred_k);
    REQUIRE(t.empirical);
    CHECK(t.empirical->mode == thermal::EmpiricalMode::inverse_pressure);
    CHECK(t.empirical->coefficient > 0.0);
}

TEST_CASE("noise-free pressure sweep closes the loop on every row") {
    auto c = load("sweep_pressure.toml");
    c.odmr.noise = odmr::NoiseKind::none;
    for (const auto& r : run_pressure_sweep(c).rows) CHECK(std::abs(*r.t_inferred_k - *r.true_t_k) < 0.5);
}

TEST_CASE("sweeps are deterministic and independent of the worker count") {
    auto c = load("sweep_power.toml");
    c.threads = 1;
    const auto serial = io::sweep_csv(run_power_sweep(c));
    c.threads = 4;
    CHECK(io::sweep_csv(run_power_sweep(c)) == serial);
    CHECK(io::sweep_csv(run_power_sweep(c)) == serial);
    c.seed = 2;
    CHECK(io::sweep_csv(run_power_sweep(c)) != serial);
}

TEST_CASE("failing rows carry a status instead of values") {
    auto c = load("sweep_power.toml");
    c.grid = {100.0, 5000.0};
    c.odmr.grid = {2.84, 2.91, 1401};  // the hot row's lines leave the window
    const auto t = run_power_sweep(c);
    REQUIRE(t.rows.size() == 2);
    CHECK(t.rows[0].status == "ok");
    CHECK(t.rows[1].status != "ok");
    CHECK_FALSE(t.rows[1].t_inferred_k);
    CHECK_FALSE(t.rows[1].d_fit_ghz);
    // The linear model needs one point and is fitted to the surviving row.
    REQUIRE(t.empirical);
    CHECK(t.empirical->predict(100e-6) == doctest::Approx(*t.rows[0].t_inferred_k));
}

TEST_CASE("sweep grid validation") {
    auto c = load("sweep_pressure.toml");
    c.grid = {0.2, 0.5};
    CHECK_THROWS_AS(c.validate(), InvalidArgument);
    c.grid = {};
    CHECK_THROWS_AS(c.validate(), InvalidArgument);
    auto p = load("sweep_power.toml");
    p.grid = {100.0, 100.0};
    CHECK_THROWS_AS(p.validate(), InvalidArgument);
}

TEST_CASE("preselection at 4000 V") {
    auto c = load("preselect.toml");
    SUBCASE("the reference particle sits on the 1 kHz boundary") {
        const auto r = run_preselection(c);
        CHECK(r.onset_frequency_hz == doctest::Approx(1000.0).epsilon(0.002));
        CHECK(r.q_over_m_c_kg == doctest::Approx(4.39e-3).epsilon(0.01));
        CHECK_FALSE(r.onset_above_grid);
    }
    SUBCASE("ten times less charge: onset near 316 Hz, rejected") {
        c.particle.charge_c /= 10.0;
        const auto r = run_preselection(c);
        CHECK(r.onset_frequency_hz == doctest::Approx(1000.0 / std::sqrt(10.0)).epsilon(0.01));
        CHECK_FALSE(r.accept);
    }
    SUBCASE("very large charge: accepted, onset above the grid") {
        c.particle.charge_c *= 1000.0;
        const auto r = run_preselection(c);
        CHECK(r.accept);
        CHECK(r.onset_above_grid);
    }
    SUBCASE("no instability on the grid") {
        c.particle.charge_c /= 1e4;
        CHECK_THROWS_WITH_AS(run_preselection(c), doctest::Contains("onset not bracketed"), NumericalError);
    }
}

TEST_CASE("pump-down schedule") {
    const auto c = load("pumpdown.toml");
    const auto r = run_pumpdown(c);
    REQUIRE(r.ramp.size() == 21);  // start plus 20 steps
    CHECK(r.ramp.front().v_pp_volts == 4000.0);
    CHECK(r.ramp_q_max_relative_deviation <= 1e-12);
    CHECK(r.ramp.back().v_pp_volts == 600.0);
    REQUIRE(r.rows.size() == c.pumpdown.pressures_mbar.size());
    for (std::size_t i = 1; i < r.rows.size(); ++i) {
        CAPTURE(i);
        const auto& a = r.rows[i - 1];
        const auto& b = r.rows[i];
        REQUIRE(b.status == "ok");
        CHECK(b.time_s > a.time_s);
        CHECK(b.pressure_mbar == c.pumpdown.pressures_mbar[i]);
        CHECK(b.damping_rate_s < a.damping_rate_s);
        // Less damping: the pseudo-potential minimum is approached from
        // above, so both the offset and the micromotion shrink.
        CHECK(*b.displacement_m < *a.displacement_m);
        CHECK(*b.micromotion_m < *a.micromotion_m);
    }
    // Pump time follows p0 exp(-t / tau).
    const double tau = c.pumpdown.pump_time_constant_s;
    CHECK(r.rows.back().time_s ==
          doctest::Approx(tau * std::log(r.rows.front().pressure_mbar / r.rows.back().pressure_mbar)));
}

TEST_CASE("pump-down rows do not depend on the worker count") {
    auto c = load("pumpdown.toml");
    c.threads = 1;
    const auto a = io::pumpdown_csv(run_pumpdown(c));
    c.threads = 3;
    CHECK(io::pumpdown_csv(run_pumpdown(c)) == a);
}

TEST_CASE("an unstable pump-down row is tagged and the schedule continues") {
    auto c = load("pumpdown.toml");
    c.particle.charge_c *= 3.2;  // q about 1 after the ramp, stable only with strong damping
    c.pumpdown.pressures_mbar = {50.0, 0.01};
    const auto r = run_pumpdown(c);
    REQUIRE(r.rows.size() == 2);
    CHECK(r.rows[1].status == "unstable");
    CHECK_FALSE(r.rows[1].micromotion_m);
}

TEST_CASE("stability map from the shipped configuration") {
    const auto c = load("stability_map.toml");
    const auto points = run_stability_map(c);
    CHECK(points.size() == 24 * 3 * 4);
    for (const auto& p : points) CHECK(p.stable == trap::mathieu_stable(p.a, p.q, p.gamma_norm));
}

TEST_CASE("scenario names round trip") {
    for (auto s : {Scenario::sweep_power, Scenario::sweep_pressure, Scenario::preselect, Scenario::pumpdown,
                   Scenario::stability_map})
        CHECK(scenario_from_string(to_string(s)) == s);
    CHECK_THROWS(scenario_from_string("sweep_temperature"));
}
