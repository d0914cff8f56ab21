#ifndef NVTRAP_SPIN_MODEL_HPP
#define NVTRAP_SPIN_MODEL_HPP

#include <Eigen/Dense>

#include "nvtrap/constants.hpp"
#include "nvtrap/error.hpp"

namespace nvtrap::spin {

// NV- ground-state triplet constants, frequency units (GHz, hbar = 1).
// The Zeeman coupling of the NV ensemble is carried by one effective spin.
struct SpinParams {
    double d_zfs_ghz = 2.87;
    double e_strain_ghz = 0.0;
    double gyromagnetic_ghz_per_t = constants::nv_gyromagnetic_ghz_per_t;

    // Throws InvalidArgument unless 2.5 < D < 3.2, 0 <= E < 0.1 D, gamma > 0.
    void validate() const;
};

// Field in the NV frame (z along the NV axis), tesla.
struct MagneticField {
    double bx_t = 0.0;
    double by_t = 0.0;
    double bz_t = 0.0;

    double magnitude() const;
    void validate() const;  // weak-field regime: |B| < 0.1 T
};

// D(T) = a0 + a1 T + a2 T^2 + a3 T^3 (GHz, T in kelvin).
//
// a3 is not a published number: the shipped value makes dD/dT(300 K) equal
// to -80 kHz/K. Override it with an independently measured value if one is
// available for the diamond at hand.
struct ZfsCoefficients {
    double a0_ghz = 2.8697;
    double a1_ghz_per_k = 9.7e-5;
    double a2_ghz_per_k2 = -3.7e-7;
    double a3_ghz_per_k3 = 1.6667e-10;
    double t_min_k = 298.0;
    double t_max_k = 700.0;

    // Half-width of the band outside [t_min, t_max] where evaluation is
    // still allowed but flagged as extrapolated.
    static constexpr double extrapolation_band_k = 50.0;

    // Rejects coefficient sets that are not strictly decreasing on
    // [t_min, t_max] (sampled at <= 1 K spacing plus the endpoints).
    void validate() const;
};

using SpinMatrix = Eigen::Matrix3cd;

// Hamiltonian in the {|+1>, |0>, |-1>} basis, GHz.
SpinMatrix build_hamiltonian(const SpinParams& p, const MagneticField& b);

struct TransitionPair {
    double f_minus_ghz;
    double f_plus_ghz;
};

// Frequencies from the |0>-dominated eigenstate to the two others, ascending.
// When two eigenstates carry the same |0> weight the lower eigenvalue is the
// ground state.
TransitionPair transition_frequencies(const SpinParams& p, const MagneticField& b);

// flagged == true when t lies in the extrapolation band. Throws RangeError
// beyond it.
Flagged<double> zfs_of_temperature(const ZfsCoefficients& c, double t_k);

// Analytic dD/dT in GHz/K; same range policy as zfs_of_temperature.
Flagged<double> zfs_slope(const ZfsCoefficients& c, double t_k);

}  // namespace nvtrap::spin

#endif
