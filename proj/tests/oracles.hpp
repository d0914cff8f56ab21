// Reference computations used by the tests. Each one reaches its answer by
// a different route than the library code it checks, without Eigen.
#ifndef NVTRAP_TESTS_ORACLES_HPP
#define NVTRAP_TESTS_ORACLES_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <functional>
#include <vector>

namespace oracle {

constexpr double pi = 3.14159265358979323846;

// Eigenvalues of a 3x3 Hermitian matrix from its characteristic polynomial
// (trigonometric form of the cubic roots), ascending.
inline std::array<double, 3> hermitian3_eigenvalues(const std::array<std::array<std::complex<double>, 3>, 3>& h) {
    const double a = h[0][0].real(), b = h[1][1].real(), c = h[2][2].real();
    const std::complex<double> d = h[0][1], e = h[1][2], f = h[0][2];
    const double p1 = std::norm(d) + std::norm(e) + std::norm(f);
    const double q = (a + b + c) / 3.0;
    const double p2 = (a - q) * (a - q) + (b - q) * (b - q) + (c - q) * (c - q) + 2.0 * p1;
    const double p = std::sqrt(p2 / 6.0);
    if (p == 0.0) return {a, b, c};
    // det((H - qI)/p) / 2
    const double aa = (a - q) / p, bb = (b - q) / p, cc = (c - q) / p;
    const std::complex<double> dd = d / p, ee = e / p, ff = f / p;
    const std::complex<double> det = aa * (bb * cc - ee * std::conj(ee)) - dd * (std::conj(dd) * cc - ee * std::conj(ff)) +
                                     ff * (std::conj(dd) * std::conj(ee) - bb * std::conj(ff));
    const double r = std::clamp(det.real() / 2.0, -1.0, 1.0);
    const double phi = std::acos(r) / 3.0;
    const double l1 = q + 2.0 * p * std::cos(phi);
    const double l3 = q + 2.0 * p * std::cos(phi + 2.0 * pi / 3.0);
    const double l2 = 3.0 * q - l1 - l3;
    std::array<double, 3> out{l1, l2, l3};
    std::sort(out.begin(), out.end());
    return out;
}

// Root of a decreasing function on [lo, hi] by plain bisection.
inline double bisect_decreasing(const std::function<double(double)>& f, double target, double lo,
                                double hi, int iterations = 200) {
    for (int i = 0; i < iterations; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (f(mid) > target)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

inline double central_difference(const std::function<double(double)>& f, double x, double h) {
    return (f(x + h) - f(x - h)) / (2.0 * h);
}

// Number of eigenvalues below x of the symmetric tridiagonal matrix with
// diagonal d and off-diagonal e (Sturm sequence).
inline int sturm_count(const std::vector<double>& d, const std::vector<double>& e, double x) {
    int count = 0;
    double s = 1.0;
    for (std::size_t i = 0; i < d.size(); ++i) {
        const double off = i == 0 ? 0.0 : e[i - 1] * e[i - 1];
        s = d[i] - x - (i == 0 ? 0.0 : off / s);
        if (s == 0.0) s = 1e-300;
        if (s < 0.0) ++count;
    }
    return count;
}

// Mathieu characteristic value b1(q) < a test: the odd, period-2pi
// solutions se1 = sum B_{2r+1} sin((2r+1) tau) satisfy a tridiagonal
// recurrence with diagonal (1 - q, 9, 25, ...) and off-diagonal q.
inline bool b1_below(double q, double a, int terms = 40) {
    std::vector<double> d(static_cast<std::size_t>(terms)), e(static_cast<std::size_t>(terms - 1), q);
    for (int r = 0; r < terms; ++r) d[static_cast<std::size_t>(r)] = (2.0 * r + 1.0) * (2.0 * r + 1.0);
    d[0] -= q;
    return sturm_count(d, e, a) > 0;
}

inline bool b1_negative(double q) { return b1_below(q, 0.0); }

// Upper edge of the first stability region, undamped: b1(q) = a, for
// -0.2 < a < 0.2.
inline double mathieu_q_max_undamped(double a = 0.0) {
    double lo = 0.5, hi = 1.3;
    for (int i = 0; i < 100; ++i) {
        const double mid = 0.5 * (lo + hi);
        (b1_below(mid, a) ? hi : lo) = mid;
    }
    return 0.5 * (lo + hi);
}

// Lowest-order harmonic balance of x'' + g x' - 2 q cos(2 tau) x = f.
struct HarmonicBalance {
    double mean;
    double micromotion;
};
inline HarmonicBalance harmonic_balance(double q, double gamma_norm, double f) {
    return {f * (4.0 + gamma_norm * gamma_norm) / (2.0 * q * q),
            f * std::sqrt(4.0 + gamma_norm * gamma_norm) / (2.0 * q)};
}

// Plain DFT power at frequency f of a uniformly sampled, mean-removed
// record: scans f on a fine grid and returns the location of the largest
// power below f_max.
inline double dft_peak(const std::vector<double>& x, double dt, double f_min, double f_max, int n_grid) {
    double mean = 0.0;
    for (double v : x) mean += v;
    mean /= static_cast<double>(x.size());
    double best_f = f_min, best_p = -1.0;
    for (int k = 0; k <= n_grid; ++k) {
        const double f = f_min + (f_max - f_min) * k / n_grid;
        double re = 0.0, im = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            const double ph = 2.0 * pi * f * dt * static_cast<double>(i);
            re += (x[i] - mean) * std::cos(ph);
            im -= (x[i] - mean) * std::sin(ph);
        }
        const double p = re * re + im * im;
        if (p > best_p) {
            best_p = p;
            best_f = f;
        }
    }
    return best_f;
}

// Free-molecular energy balance solved independently: bisection of
// P_abs - [h (T - Tg) + eps sigma A (T^4 - Tg^4)] with h the linear gas
// conductance (W/K).
inline double steady_temperature(double p_abs, double h_w_per_k, double eps_sigma_area, double t_gas) {
    auto excess = [&](double t) {
        return p_abs - h_w_per_k * (t - t_gas) - eps_sigma_area * (std::pow(t, 4) - std::pow(t_gas, 4));
    };
    double lo = t_gas, hi = 5000.0;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        (excess(mid) > 0.0 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

}  // namespace oracle

#endif
