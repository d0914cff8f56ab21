#ifndef NVTRAP_ODMR_HPP
#define NVTRAP_ODMR_HPP

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "nvtrap/spin_model.hpp"

namespace nvtrap::odmr {

struct SpectrumMetadata {
    double laser_power_w = 0.0;
    double pressure_mbar = 0.0;
    std::string integration;
};

// Photoluminescence versus microwave frequency.
struct Spectrum {
    std::vector<double> freq_ghz;
    std::vector<double> pl_cps;
    SpectrumMetadata meta;

    std::size_t size() const { return freq_ghz.size(); }
    // >= 8 points, strictly increasing frequencies, pl >= 0, equal lengths.
    void validate() const;
};

enum class LineShape { gaussian, lorentzian };

struct FrequencyGrid {
    double f_start_ghz = 2.81;
    double f_stop_ghz = 2.91;
    int n_points = 2001;
};

enum class NoiseKind { none, gaussian, poisson };

// scale is the standard deviation of additive noise as a fraction of s_max
// (ignored for Poisson counting noise).
struct NoiseSpec {
    NoiseKind kind = NoiseKind::gaussian;
    std::uint64_t seed = 0;
    double scale = 0.01;
};

// One dip of the double-line model. For the Gaussian shape sigma is the
// standard deviation; for the Lorentzian shape it is the half width.
struct Dip {
    double center_ghz = 0.0;
    double sigma_ghz = 0.0;
    double depth_cps = 0.0;
};

struct FitParameters {
    double s_max_cps = 0.0;
    std::array<Dip, 2> dips{};
};

// Unit-peak line profile.
double line_profile(LineShape shape, double x);

// s_max - sum of dips.
double model_value(const FitParameters& p, LineShape shape, double f_ghz);

// Smallest model value over [f_lo, f_hi]: dense scan then golden-section
// refinement around the best sample.
double model_minimum(const FitParameters& p, LineShape shape, double f_lo, double f_hi);

// Noise-free PL with the two transition lines of `sp`. `contrast` is the
// observed normalized dip depth (s_max - min)/s_max of the resulting
// spectrum: both lines share one depth, scaled for their overlap so the
// combined profile reaches exactly 1 - contrast.
Spectrum synthesize_spectrum(const spin::SpinParams& sp, double contrast, double s_max_cps,
                             double sigma_ghz, const FrequencyGrid& grid, const NoiseSpec& noise,
                             LineShape shape = LineShape::gaussian,
                             const spin::MagneticField& b = {});

// Starting point for the fit. Throws NumericalError("no dip detected") on
// spectra whose smoothed dip is within three noise standard deviations.
FitParameters initial_guess(const Spectrum& s);

struct FitOptions {
    LineShape shape = LineShape::gaussian;
    int max_iterations = 200;
    double relative_cost_tolerance = 1e-10;
};

struct OdmrFit {
    double s_max_cps = 0.0;
    std::array<Dip, 2> dips{};  // sorted by center
    double d_fit_ghz = 0.0;
    double e_fit_ghz = 0.0;
    double contrast = 0.0;
    // Order: s_max, c1, c2, sigma1, sigma2, depth1, depth2.
    Eigen::Matrix<double, 7, 7> covariance = Eigen::Matrix<double, 7, 7>::Zero();
    bool converged = false;
    double residual_rms_cps = 0.0;
    int iterations = 0;
    std::string message;
    LineShape shape = LineShape::gaussian;
    double window_lo_ghz = 0.0;
    double window_hi_ghz = 0.0;
    // Cost (sum of squared residuals) after each accepted step, first entry
    // is the starting cost.
    std::vector<double> cost_history;

    FitParameters parameters() const { return {s_max_cps, dips}; }
    // Standard error of d_fit from the covariance of the two centers.
    double sigma_d_fit_ghz() const;
};

// Damped least squares over {s_max, c1, c2, log sigma1, log sigma2,
// log depth1, log depth2}. Never throws on bad data: failures come back
// with converged == false and the reason in `message`.
OdmrFit fit_double_gaussian(const Spectrum& s, const std::optional<FitParameters>& init = {},
                            const FitOptions& options = {});

// (s_max - model minimum)/s_max over the fit window.
double contrast_of_fit(const OdmrFit& f);

// Empirical contrast loss with temperature, clamped to [floor, c_ref].
struct ContrastModel {
    double c_ref = 0.025;
    double t_ref_k = 310.0;
    double slope_per_k = 9.375e-5;
    double floor = 0.005;

    void validate() const;
};

// Throws RangeError for t < t_ref.
double contrast_model_predict(const ContrastModel& m, double t_k);

}  // namespace nvtrap::odmr

#endif
