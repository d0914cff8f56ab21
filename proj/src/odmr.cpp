#include "nvtrap/odmr.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include <fmt/format.h>

#include "least_squares.hpp"
#include "nvtrap/error.hpp"

namespace nvtrap::odmr {

void Spectrum::validate() const {
    if (freq_ghz.size() != pl_cps.size())
        throw InvalidArgument("spectrum frequency and PL arrays differ in length");
    if (freq_ghz.size() < 8)
        throw InvalidArgument(fmt::format("spectrum has {} points, need >= 8", freq_ghz.size()));
    for (std::size_t i = 0; i < size(); ++i) {
        if (!std::isfinite(freq_ghz[i]) || !std::isfinite(pl_cps[i]))
            throw InvalidArgument("spectrum contains non-finite values");
        if (pl_cps[i] < 0.0) throw InvalidArgument("spectrum PL must be non-negative");
        if (i > 0 && !(freq_ghz[i] > freq_ghz[i - 1]))
            throw InvalidArgument("spectrum frequencies must be strictly increasing");
    }
}

double line_profile(LineShape shape, double x) {
    if (shape == LineShape::gaussian) return std::exp(-0.5 * x * x);
    return 1.0 / (1.0 + x * x);
}

namespace {

// d(profile)/dx
double line_profile_derivative(LineShape shape, double x) {
    if (shape == LineShape::gaussian) return -x * std::exp(-0.5 * x * x);
    const double den = 1.0 + x * x;
    return -2.0 * x / (den * den);
}

double golden_minimum(const std::function<double(double)>& f, double lo, double hi) {
    const double ratio = 0.5 * (std::sqrt(5.0) - 1.0);
    double a = lo, b = hi;
    double c = b - ratio * (b - a), d = a + ratio * (b - a);
    double fc = f(c), fd = f(d);
    for (int i = 0; i < 200 && (b - a) > 1e-15 * std::max(1.0, std::abs(a)); ++i) {
        if (fc < fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - ratio * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + ratio * (b - a);
            fd = f(d);
        }
    }
    return std::min({fc, fd, f(0.5 * (a + b))});
}

double percentile(std::vector<double> v, double frac) {
    const std::size_t k = static_cast<std::size_t>(frac * static_cast<double>(v.size() - 1));
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(k), v.end());
    return v[k];
}

std::vector<double> moving_average(const std::vector<double>& y, int window) {
    const int n = static_cast<int>(y.size());
    std::vector<double> prefix(y.size() + 1, 0.0);
    for (int i = 0; i < n; ++i) prefix[i + 1] = prefix[i] + y[i];
    std::vector<double> out(y.size());
    const int left = window / 2;
    for (int i = 0; i < n; ++i) {
        const int lo = std::max(0, i - left);
        const int hi = std::min(n, i - left + window);
        out[i] = (prefix[hi] - prefix[lo]) / (hi - lo);
    }
    return out;
}

// Robust white-noise estimate from the median absolute first difference.
double noise_estimate(const std::vector<double>& y) {
    std::vector<double> diffs(y.size() - 1);
    for (std::size_t i = 1; i < y.size(); ++i) diffs[i - 1] = std::abs(y[i] - y[i - 1]);
    return percentile(std::move(diffs), 0.5) / (0.6744897501960817 * std::sqrt(2.0));
}

constexpr int n_params = 7;

}  // namespace

double model_value(const FitParameters& p, LineShape shape, double f_ghz) {
    double v = p.s_max_cps;
    for (const auto& d : p.dips)
        v -= d.depth_cps * line_profile(shape, (f_ghz - d.center_ghz) / d.sigma_ghz);
    return v;
}

double model_minimum(const FitParameters& p, LineShape shape, double f_lo, double f_hi) {
    constexpr int samples = 4001;
    const double h = (f_hi - f_lo) / (samples - 1);
    auto f = [&](double x) { return model_value(p, shape, x); };
    double best_x = f_lo;
    double best = f(f_lo);
    for (int i = 1; i < samples; ++i) {
        const double x = f_lo + h * i;
        const double v = f(x);
        if (v < best) {
            best = v;
            best_x = x;
        }
    }
    for (const auto& d : p.dips) {
        if (d.center_ghz >= f_lo && d.center_ghz <= f_hi && f(d.center_ghz) < best) {
            best = f(d.center_ghz);
            best_x = d.center_ghz;
        }
    }
    const double lo = std::max(f_lo, best_x - h);
    const double hi = std::min(f_hi, best_x + h);
    return std::min(best, golden_minimum(f, lo, hi));
}

Spectrum synthesize_spectrum(const spin::SpinParams& sp, double contrast, double s_max_cps,
                             double sigma_ghz, const FrequencyGrid& grid, const NoiseSpec& noise,
                             LineShape shape, const spin::MagneticField& b) {
    sp.validate();
    b.validate();
    if (!(contrast >= 0.0 && contrast < 1.0))
        throw InvalidArgument(fmt::format("contrast {} outside [0, 1)", contrast));
    if (!(s_max_cps > 0.0)) throw InvalidArgument("s_max must be positive");
    if (!(sigma_ghz > 0.0)) throw InvalidArgument("line width must be positive");
    if (grid.n_points < 16) throw InvalidArgument("frequency grid needs >= 16 points");
    if (!(grid.f_start_ghz < grid.f_stop_ghz))
        throw InvalidArgument("frequency grid must satisfy f_start < f_stop");
    if (!(noise.scale >= 0.0)) throw InvalidArgument("noise scale must be non-negative");

    const auto lines = spin::transition_frequencies(sp, b);
    if (!(grid.f_start_ghz < lines.f_minus_ghz && lines.f_plus_ghz < grid.f_stop_ghz))
        throw InvalidArgument(fmt::format(
            "grid [{}, {}] GHz does not bracket the transitions at {} and {} GHz",
            grid.f_start_ghz, grid.f_stop_ghz, lines.f_minus_ghz, lines.f_plus_ghz));

    // Depth per line such that the combined profile dips by exactly
    // `contrast` at its deepest point.
    FitParameters unit{1.0, {Dip{lines.f_minus_ghz, sigma_ghz, 1.0},
                             Dip{lines.f_plus_ghz, sigma_ghz, 1.0}}};
    const double peak = 1.0 - model_minimum(unit, shape, lines.f_minus_ghz - 10.0 * sigma_ghz,
                                            lines.f_plus_ghz + 10.0 * sigma_ghz);
    const double depth = contrast * s_max_cps / peak;
    FitParameters model{s_max_cps, {Dip{lines.f_minus_ghz, sigma_ghz, depth},
                                    Dip{lines.f_plus_ghz, sigma_ghz, depth}}};

    Spectrum s;
    s.freq_ghz.resize(static_cast<std::size_t>(grid.n_points));
    s.pl_cps.resize(s.freq_ghz.size());
    std::mt19937_64 rng(noise.seed);
    std::normal_distribution<double> gauss(0.0, noise.scale * s_max_cps);
    const double step = (grid.f_stop_ghz - grid.f_start_ghz) / (grid.n_points - 1);
    for (int i = 0; i < grid.n_points; ++i) {
        const double f = i + 1 == grid.n_points ? grid.f_stop_ghz : grid.f_start_ghz + step * i;
        double pl = model_value(model, shape, f);
        switch (noise.kind) {
            case NoiseKind::none:
                break;
            case NoiseKind::gaussian:
                pl += gauss(rng);
                break;
            case NoiseKind::poisson: {
                std::poisson_distribution<long long> counts(pl);
                pl = static_cast<double>(counts(rng));
                break;
            }
        }
        s.freq_ghz[i] = f;
        s.pl_cps[i] = std::max(0.0, pl);
    }
    static constexpr const char* noise_names[] = {"none", "gaussian", "poisson"};
    s.meta.integration = fmt::format("synthetic; noise={} scale={} seed={}",
                                     noise_names[static_cast<int>(noise.kind)], noise.scale,
                                     noise.seed);
    return s;
}

FitParameters initial_guess(const Spectrum& s) {
    s.validate();
    const int n = static_cast<int>(s.size());
    const int window = std::max(5, n / 20);
    const auto smooth = moving_average(s.pl_cps, window);
    const double step = (s.freq_ghz.back() - s.freq_ghz.front()) / (n - 1);

    const double baseline_smooth = percentile(smooth, 0.9);
    const double sigma_smooth = noise_estimate(s.pl_cps) / std::sqrt(static_cast<double>(window));
    const auto i_min = static_cast<int>(std::min_element(smooth.begin(), smooth.end()) - smooth.begin());
    const double depth_main = baseline_smooth - smooth[i_min];
    // The smoothed record still wanders by a few sigma_smooth between its
    // upper decile and its minimum on pure noise, hence 6 rather than 3.
    if (depth_main <= 6.0 * sigma_smooth) throw NumericalError("no dip detected");

    // Second dip: deepest local minimum at least one window away that is
    // itself significant.
    int i_second = -1;
    for (int i = 1; i + 1 < n; ++i) {
        if (!(smooth[i] < smooth[i - 1] && smooth[i] <= smooth[i + 1])) continue;
        if (std::abs(i - i_min) < window) continue;
        const double depth = baseline_smooth - smooth[i];
        if (depth <= 3.0 * sigma_smooth || depth < 0.3 * depth_main) continue;
        if (i_second < 0 || smooth[i] < smooth[i_second]) i_second = i;
    }

    // Width from the half-depth crossings around the main dip, corrected for
    // the boxcar smoothing.
    const double half = baseline_smooth - 0.5 * depth_main;
    int left = i_min, right = i_min;
    while (left > 0 && smooth[left] < half) --left;
    while (right + 1 < n && smooth[right] < half) ++right;
    const double fwhm = s.freq_ghz[right] - s.freq_ghz[left];
    const double boxcar_var = (window * step) * (window * step) / 12.0;
    double sigma_smoothed = fwhm / 2.3548200450309493;
    double sigma0 = std::sqrt(std::max(sigma_smoothed * sigma_smoothed - boxcar_var,
                                       4.0 * step * step));
    sigma0 = std::min(sigma0, 0.25 * (s.freq_ghz.back() - s.freq_ghz.front()));

    FitParameters p;
    p.s_max_cps = percentile(s.pl_cps, 0.9);
    if (i_second >= 0) {
        const int a = std::min(i_min, i_second), b = std::max(i_min, i_second);
        for (int k = 0; k < 2; ++k) {
            const int idx = k == 0 ? a : b;
            p.dips[k] = Dip{s.freq_ghz[idx], sigma0,
                            std::max(p.s_max_cps - smooth[idx], 0.25 * depth_main)};
        }
        // The half-depth walk may have spanned both dips.
        const double sep = s.freq_ghz[b] - s.freq_ghz[a];
        for (auto& d : p.dips) d.sigma_ghz = std::min(d.sigma_ghz, std::max(0.5 * sep, 2.0 * step));
    } else {
        const double offset = window * step;
        const double depth = std::max(0.5 * (p.s_max_cps - smooth[i_min]), 0.25 * depth_main);
        p.dips[0] = Dip{s.freq_ghz[i_min] - offset, sigma0, depth};
        p.dips[1] = Dip{s.freq_ghz[i_min] + offset, sigma0, depth};
    }
    return p;
}

double OdmrFit::sigma_d_fit_ghz() const {
    const double var = covariance(1, 1) + covariance(2, 2) + 2.0 * covariance(1, 2);
    return 0.5 * std::sqrt(std::max(var, 0.0));
}

namespace {

Eigen::VectorXd pack(const FitParameters& p) {
    Eigen::VectorXd x(n_params);
    x << p.s_max_cps, p.dips[0].center_ghz, p.dips[1].center_ghz, std::log(p.dips[0].sigma_ghz),
        std::log(p.dips[1].sigma_ghz), std::log(p.dips[0].depth_cps), std::log(p.dips[1].depth_cps);
    return x;
}

FitParameters unpack(const Eigen::VectorXd& x) {
    FitParameters p;
    p.s_max_cps = x(0);
    for (int k = 0; k < 2; ++k)
        p.dips[k] = Dip{x(1 + k), std::exp(x(3 + k)), std::exp(x(5 + k))};
    return p;
}

OdmrFit failed_fit(const Spectrum& s, LineShape shape, std::string why) {
    OdmrFit f;
    f.shape = shape;
    f.converged = false;
    f.message = std::move(why);
    if (!s.freq_ghz.empty()) {
        f.window_lo_ghz = s.freq_ghz.front();
        f.window_hi_ghz = s.freq_ghz.back();
    }
    return f;
}

}  // namespace

OdmrFit fit_double_gaussian(const Spectrum& s, const std::optional<FitParameters>& init,
                            const FitOptions& options) {
    const LineShape shape = options.shape;
    try {
        s.validate();
    } catch (const Error& e) {
        return failed_fit(s, shape, e.what());
    }

    FitParameters start;
    if (init) {
        start = *init;
    } else {
        try {
            start = initial_guess(s);
        } catch (const Error& e) {
            return failed_fit(s, shape, e.what());
        }
    }
    // Canonical dip order makes the result independent of the labels in init.
    if (start.dips[1].center_ghz < start.dips[0].center_ghz) std::swap(start.dips[0], start.dips[1]);
    for (auto& d : start.dips) {
        if (!(d.sigma_ghz > 0.0) || !(d.depth_cps > 0.0))
            return failed_fit(s, shape, "initial widths and depths must be positive");
    }

    const auto n = static_cast<Eigen::Index>(s.size());
    auto residuals = [&](const Eigen::VectorXd& x, Eigen::VectorXd& r, Eigen::MatrixXd* jac) {
        r.resize(n);
        if (jac) jac->resize(n, n_params);
        const double sig[2] = {std::exp(x(3)), std::exp(x(4))};
        const double dep[2] = {std::exp(x(5)), std::exp(x(6))};
        for (Eigen::Index i = 0; i < n; ++i) {
            const double f = s.freq_ghz[static_cast<std::size_t>(i)];
            double m = x(0);
            if (jac) (*jac)(i, 0) = 1.0;
            for (int k = 0; k < 2; ++k) {
                const double u = (f - x(1 + k)) / sig[k];
                const double phi = line_profile(shape, u);
                m -= dep[k] * phi;
                if (jac) {
                    const double dphi = line_profile_derivative(shape, u);
                    (*jac)(i, 1 + k) = dep[k] * dphi / sig[k];
                    (*jac)(i, 3 + k) = dep[k] * dphi * u;
                    (*jac)(i, 5 + k) = -dep[k] * phi;
                }
            }
            r(i) = m - s.pl_cps[static_cast<std::size_t>(i)];
        }
    };

    const auto lm = detail::levenberg_marquardt(residuals, pack(start), options.max_iterations,
                                                options.relative_cost_tolerance);

    OdmrFit out;
    out.shape = shape;
    out.window_lo_ghz = s.freq_ghz.front();
    out.window_hi_ghz = s.freq_ghz.back();
    out.iterations = lm.iterations;
    out.converged = lm.converged;
    out.message = lm.message;
    out.cost_history = lm.cost_history;
    out.residual_rms_cps = std::sqrt(lm.cost / static_cast<double>(n));

    FitParameters p = unpack(lm.x);
    // Covariance in the log parameterization, mapped back to sigma/depth.
    const Eigen::MatrixXd jtj = lm.jacobian.transpose() * lm.jacobian;
    const double dof = std::max<double>(1.0, static_cast<double>(n - n_params));
    Eigen::MatrixXd cov = jtj.completeOrthogonalDecomposition().pseudoInverse() * (lm.cost / dof);
    Eigen::VectorXd g(n_params);
    g << 1.0, 1.0, 1.0, p.dips[0].sigma_ghz, p.dips[1].sigma_ghz, p.dips[0].depth_cps,
        p.dips[1].depth_cps;
    cov = g.asDiagonal() * cov * g.asDiagonal();

    if (p.dips[1].center_ghz < p.dips[0].center_ghz) {
        std::swap(p.dips[0], p.dips[1]);
        Eigen::PermutationMatrix<n_params> perm;
        perm.indices() << 0, 2, 1, 4, 3, 6, 5;
        cov = perm * cov * perm.transpose();
    }
    out.s_max_cps = p.s_max_cps;
    out.dips = p.dips;
    out.covariance = cov;
    out.d_fit_ghz = 0.5 * (p.dips[0].center_ghz + p.dips[1].center_ghz);
    out.e_fit_ghz = 0.5 * std::abs(p.dips[1].center_ghz - p.dips[0].center_ghz);

    if (!lm.x.allFinite() || !cov.allFinite()) {
        out.converged = false;
        out.message = "non-finite parameters";
        return out;
    }
    out.contrast = contrast_of_fit(out);
    const double step = (out.window_hi_ghz - out.window_lo_ghz) / static_cast<double>(n - 1);
    for (const auto& d : p.dips) {
        if (d.depth_cps > p.s_max_cps) {
            out.converged = false;
            out.message = "dip depth exceeds baseline";
        }
        if (d.sigma_ghz < 0.5 * step) {
            out.converged = false;
            out.message = "dip narrower than the grid spacing";
        }
        if (d.center_ghz < out.window_lo_ghz || d.center_ghz > out.window_hi_ghz) {
            out.converged = false;
            out.message = "dip center outside the fitted window";
        }
    }
    return out;
}

double contrast_of_fit(const OdmrFit& f) {
    if (!(f.s_max_cps > 0.0)) return 0.0;
    const double lo = f.window_lo_ghz, hi = f.window_hi_ghz;
    const double min_value = model_minimum(f.parameters(), f.shape, lo, hi);
    return std::clamp((f.s_max_cps - min_value) / f.s_max_cps, 0.0, 1.0);
}

void ContrastModel::validate() const {
    if (!(c_ref > 0.0 && c_ref <= 0.2)) throw InvalidArgument("c_ref must lie in (0, 0.2]");
    if (!(floor >= 0.0 && floor <= c_ref)) throw InvalidArgument("floor must lie in [0, c_ref]");
    if (!(slope_per_k >= 0.0)) throw InvalidArgument("contrast slope must be non-negative");
    if (!(t_ref_k > 0.0)) throw InvalidArgument("t_ref must be positive");
}

double contrast_model_predict(const ContrastModel& m, double t_k) {
    if (t_k < m.t_ref_k)
        throw RangeError(fmt::format("T = {} K below the contrast reference {} K", t_k, m.t_ref_k));
    return std::clamp(m.c_ref - m.slope_per_k * (t_k - m.t_ref_k), m.floor, m.c_ref);
}

}  // namespace nvtrap::odmr
