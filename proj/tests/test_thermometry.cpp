#include <doctest.h>

#include <cmath>

#include "nvtrap/thermometry.hpp"
#include "oracles.hpp"

using namespace nvtrap;
using namespace nvtrap::thermometry;

namespace {

const spin::ZfsCoefficients defaults{};

// Default cubic written out by hand.
double cubic(double t) { return 2.8697 + 9.7e-5 * t - 3.7e-7 * t * t + 1.6667e-10 * t * t * t; }

odmr::Spectrum spectrum_at(double t_k, std::uint64_t seed, double noise) {
    const double d = spin::zfs_of_temperature(defaults, t_k).value;
    return odmr::synthesize_spectrum({d, 0.008}, 0.017, 8000.0, 0.004, {2.81, 2.91, 2001},
                                     {noise > 0 ? odmr::NoiseKind::gaussian : odmr::NoiseKind::none, seed, noise});
}

}  // namespace

TEST_CASE("inversion undoes the polynomial on a 1 K grid") {
    for (int t = 298; t <= 700; ++t) {
        const double d = spin::zfs_of_temperature(defaults, t).value;
        const auto inv = invert_zfs(defaults, d);
        CHECK(std::abs(inv.temperature_k - t) < 1e-3);
        CHECK_FALSE(inv.extrapolated);
    }
    CHECK(invert_zfs(defaults, spin::zfs_of_temperature(defaults, 300.0).value).temperature_k ==
          doctest::Approx(300.0).epsilon(1e-6));
}

TEST_CASE("2.8558 GHz inverts to about 434 K, matching an independent bisection") {
    const double t = invert_zfs(defaults, 2.8558).temperature_k;
    const double ref = oracle::bisect_decreasing(cubic, 2.8558, 298.0, 700.0);
    CHECK(std::abs(t - ref) < 1e-3);
    CHECK(t > 425.0);
    CHECK(t < 445.0);
    CHECK(t == doctest::Approx(433.47).epsilon(1e-4));
}

TEST_CASE("non-invertible splittings name the admissible interval") {
    CHECK_THROWS_AS(invert_zfs(defaults, 2.90), RangeError);
    CHECK_THROWS_WITH(invert_zfs(defaults, 2.90), doctest::Contains("admissible interval"));
    CHECK_THROWS_AS(invert_zfs(defaults, 2.70), RangeError);
    CHECK_THROWS_AS(invert_zfs(defaults, std::nan("")), RangeError);
}

TEST_CASE("slack beyond the calibrated range is flagged") {
    const double d_cold = spin::zfs_of_temperature(defaults, defaults.t_min_k).value;
    const auto inv = invert_zfs(defaults, d_cold + 0.001);
    CHECK(inv.extrapolated);
    CHECK(inv.temperature_k < defaults.t_min_k);
    const double d_hot = spin::zfs_of_temperature(defaults, defaults.t_max_k).value;
    const auto hot = invert_zfs(defaults, d_hot - 0.001);
    CHECK(hot.extrapolated);
    CHECK(hot.temperature_k > defaults.t_max_k);
}

TEST_CASE("a particle offset shifts the inversion") {
    const double d = spin::zfs_of_temperature(defaults, 400.0).value;
    CHECK(invert_zfs(defaults, d + 0.0014, 0.0014).temperature_k == doctest::Approx(400.0).epsilon(1e-6));
}

TEST_CASE("larger splitting means colder") {
    double previous = 1e9;
    for (double d = 2.845; d <= 2.8705; d += 0.0005) {
        const double t = invert_zfs(defaults, d).temperature_k;
        CHECK(t < previous);
        previous = t;
    }
}

TEST_CASE("temperature uncertainty is linear in the splitting uncertainty") {
    const auto fit = odmr::fit_double_gaussian(spectrum_at(390.0, 4, 0.01));
    REQUIRE(fit.converged);
    auto doubled = fit;
    doubled.covariance *= 4.0;
    const auto a = temperature_from_fit(fit, defaults);
    const auto b = temperature_from_fit(doubled, defaults);
    CHECK(b.sigma_t_k == doctest::Approx(2.0 * a.sigma_t_k).epsilon(1e-12));
    CHECK(a.sigma_t_k ==
          doctest::Approx(fit.sigma_d_fit_ghz() / std::abs(spin::zfs_slope(defaults, a.temperature_k).value)));
}

TEST_CASE("390 K spectrum with 1 % noise comes back within 10 K") {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const auto e = temperature_from_spectrum(spectrum_at(390.0, seed, 0.01), defaults);
        CHECK(std::abs(e.temperature_k - 390.0) < 10.0);
        CHECK(e.sigma_t_k > 0.0);
    }
}

TEST_CASE("sigma_T matches the scatter of repeated estimates") {
    // Seeds 101.. keep this sample disjoint from the acceptance run.
    double z2 = 0.0;
    int beyond_2 = 0;
    const int n = 200;
    for (int i = 0; i < n; ++i) {
        const auto e = temperature_from_spectrum(spectrum_at(390.0, 101 + i, 0.01), defaults);
        const double z = (e.temperature_k - 390.0) / e.sigma_t_k;
        z2 += z * z;
        if (std::abs(z) > 2.0) ++beyond_2;
    }
    const double rms = std::sqrt(z2 / n);
    CHECK(rms > 0.8);
    CHECK(rms < 1.25);
    // About 4.6 % expected beyond 2 sigma.
    CHECK(beyond_2 <= 20);
}

TEST_CASE("noiseless spectra invert to within 0.1 K") {
    for (double t : {300.0, 350.0, 435.0, 520.0, 650.0}) {
        const auto e = temperature_from_spectrum(spectrum_at(t, 0, 0.0), defaults);
        CHECK(std::abs(e.temperature_k - t) < 0.1);
    }
}

TEST_CASE("pipeline errors carry the failing stage") {
    odmr::Spectrum flat;
    for (int i = 0; i < 100; ++i) {
        flat.freq_ghz.push_back(2.82 + 0.001 * i);
        flat.pl_cps.push_back(5000.0);
    }
    try {
        temperature_from_spectrum(flat, defaults);
        FAIL("expected a pipeline error");
    } catch (const PipelineError& e) {
        CHECK(e.stage() == Stage::fit);
    }

    odmr::OdmrFit fit;
    fit.converged = true;
    fit.d_fit_ghz = 2.95;
    try {
        temperature_from_fit(fit, defaults);
        FAIL("expected a pipeline error");
    } catch (const PipelineError& e) {
        CHECK(e.stage() == Stage::inversion);
    }
}
