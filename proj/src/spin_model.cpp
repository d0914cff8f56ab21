#include "nvtrap/spin_model.hpp"

#include <cmath>
#include <complex>
#include <string>

#include <fmt/format.h>

namespace nvtrap::spin {

void SpinParams::validate() const {
    if (!(d_zfs_ghz > 2.5 && d_zfs_ghz < 3.2))
        throw InvalidArgument(fmt::format("D = {} GHz outside (2.5, 3.2)", d_zfs_ghz));
    if (!(e_strain_ghz >= 0.0 && e_strain_ghz < 0.1 * d_zfs_ghz))
        throw InvalidArgument(fmt::format("E = {} GHz outside [0, 0.1 D)", e_strain_ghz));
    if (!(gyromagnetic_ghz_per_t > 0.0))
        throw InvalidArgument("gyromagnetic ratio must be positive");
}

double MagneticField::magnitude() const {
    return std::sqrt(bx_t * bx_t + by_t * by_t + bz_t * bz_t);
}

void MagneticField::validate() const {
    if (!(magnitude() < 0.1))
        throw InvalidArgument(fmt::format("|B| = {} T outside the weak-field regime", magnitude()));
}

namespace {

double poly(const ZfsCoefficients& c, double t) {
    return c.a0_ghz + t * (c.a1_ghz_per_k + t * (c.a2_ghz_per_k2 + t * c.a3_ghz_per_k3));
}

double poly_slope(const ZfsCoefficients& c, double t) {
    return c.a1_ghz_per_k + t * (2.0 * c.a2_ghz_per_k2 + 3.0 * t * c.a3_ghz_per_k3);
}

bool check_range(const ZfsCoefficients& c, double t_k) {
    const double band = ZfsCoefficients::extrapolation_band_k;
    if (!std::isfinite(t_k) || t_k < c.t_min_k - band || t_k > c.t_max_k + band)
        throw RangeError(fmt::format("T = {} K outside [{}, {}] K (valid range +/- {} K)", t_k,
                                     c.t_min_k - band, c.t_max_k + band, band));
    return t_k < c.t_min_k || t_k > c.t_max_k;
}

}  // namespace

void ZfsCoefficients::validate() const {
    if (!(t_max_k > t_min_k) || !(t_min_k > 0.0))
        throw InvalidArgument("ZFS valid range must satisfy 0 < t_min < t_max");
    const int n = static_cast<int>(std::ceil(t_max_k - t_min_k)) + 1;
    for (int i = 0; i <= n; ++i) {
        const double t = t_min_k + (t_max_k - t_min_k) * i / n;
        if (!(poly_slope(*this, t) < 0.0))
            throw InvalidArgument(
                fmt::format("D(T) is not strictly decreasing on [{}, {}] K (dD/dT >= 0 at {} K)",
                            t_min_k, t_max_k, t));
    }
}

SpinMatrix build_hamiltonian(const SpinParams& p, const MagneticField& b) {
    using C = std::complex<double>;
    const double g = p.gyromagnetic_ghz_per_t;
    const double bz = g * b.bz_t;
    // gamma (Bx Sx + By Sy) couples |0> to |+-1> with (bx -+ i by)/sqrt 2.
    const C b_minus = C(g * b.bx_t, -g * b.by_t) / std::sqrt(2.0);
    const C b_plus = std::conj(b_minus);
    const double d = p.d_zfs_ghz;
    const double e = p.e_strain_ghz;

    SpinMatrix h;
    h << C(d + bz), b_minus, C(e),
         b_plus, C(0.0), b_minus,
         C(e), b_plus, C(d - bz);
    return h;
}

TransitionPair transition_frequencies(const SpinParams& p, const MagneticField& b) {
    const Eigen::SelfAdjointEigenSolver<SpinMatrix> es(build_hamiltonian(p, b));
    const auto& values = es.eigenvalues();  // ascending
    const auto& vectors = es.eigenvectors();

    int ground = 0;
    double best = -1.0;
    for (int k = 0; k < 3; ++k) {
        const double weight = std::norm(vectors(1, k));
        if (weight > best) {  // strict: ties keep the lower eigenvalue
            best = weight;
            ground = k;
        }
    }
    double f[2];
    int j = 0;
    for (int k = 0; k < 3; ++k)
        if (k != ground) f[j++] = values(k) - values(ground);
    if (f[0] > f[1]) std::swap(f[0], f[1]);
    return {f[0], f[1]};
}

Flagged<double> zfs_of_temperature(const ZfsCoefficients& c, double t_k) {
    const bool extrapolated = check_range(c, t_k);
    return {poly(c, t_k), extrapolated};
}

Flagged<double> zfs_slope(const ZfsCoefficients& c, double t_k) {
    const bool extrapolated = check_range(c, t_k);
    return {poly_slope(c, t_k), extrapolated};
}

}  // namespace nvtrap::spin
