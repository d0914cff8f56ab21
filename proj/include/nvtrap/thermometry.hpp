#ifndef NVTRAP_THERMOMETRY_HPP
#define NVTRAP_THERMOMETRY_HPP

#include <string>

#include "nvtrap/error.hpp"
#include "nvtrap/odmr.hpp"
#include "nvtrap/spin_model.hpp"

namespace nvtrap::thermometry {

struct ThermoEstimate {
    double temperature_k = 0.0;
    double sigma_t_k = 0.0;
    double d_used_ghz = 0.0;
    bool extrapolated = false;
};

// Slack on D beyond [D(t_max), D(t_min)] that is still inverted, flagged.
inline constexpr double inversion_slack_ghz = 0.002;

struct Inversion {
    double temperature_k = 0.0;
    bool extrapolated = false;
};

// Root of D(T) = d_meas - particle_offset by bisection on the monotone
// branch. particle_offset_ghz is the particle's room-temperature D minus the
// coefficient set's, zero unless measured. Throws RangeError naming the
// admissible interval when d_meas cannot be inverted.
Inversion invert_zfs(const spin::ZfsCoefficients& c, double d_meas_ghz,
                     double particle_offset_ghz = 0.0);

enum class Stage { fit, inversion };

// Error from the spectrum-to-temperature pipeline, tagged with the stage
// that failed.
class PipelineError : public Error {
public:
    PipelineError(Stage stage, const std::string& what);
    Stage stage() const { return stage_; }

private:
    Stage stage_;
};

// fit_double_gaussian -> invert_zfs, sigma_T = sigma(d_fit)/|dD/dT|.
ThermoEstimate temperature_from_spectrum(const odmr::Spectrum& s, const spin::ZfsCoefficients& c,
                                         double particle_offset_ghz = 0.0,
                                         const odmr::FitOptions& options = {});

// Same propagation for an already fitted spectrum.
ThermoEstimate temperature_from_fit(const odmr::OdmrFit& fit, const spin::ZfsCoefficients& c,
                                    double particle_offset_ghz = 0.0);

}  // namespace nvtrap::thermometry

#endif
