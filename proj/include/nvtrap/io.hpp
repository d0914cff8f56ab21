#ifndef NVTRAP_IO_HPP
#define NVTRAP_IO_HPP

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "nvtrap/odmr.hpp"
#include "nvtrap/protocols.hpp"
#include "nvtrap/thermometry.hpp"
#include "nvtrap/trap_dynamics.hpp"

namespace nvtrap::io {

// Writes through a sibling temporary file and renames it into place, so a
// reader never sees a partial file.
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);

// Shortest text that reads back to the same double.
std::string format_number(double v);

// CSV with header `freq_ghz,pl_cps`. Throws Error on malformed input.
odmr::Spectrum read_spectrum_csv(const std::filesystem::path& path);
std::string spectrum_csv(const odmr::Spectrum& s);
std::string spectrum_json(const odmr::Spectrum& s);

// control,true_t_k,d_fit_ghz,contrast,t_inferred_k,sigma_t_k,status
// Missing values are empty fields.
std::string sweep_csv(const protocols::SweepTable& t);
std::string sweep_json(const protocols::SweepTable& t);
// control,knudsen,damping_rate_s for pressure sweeps.
std::string gas_csv(const protocols::SweepTable& t);

std::string trajectory_csv(const trap::Trajectory& t);
std::string stability_map_csv(const std::vector<trap::StabilityMapPoint>& points);
std::string stability_map_json(const std::vector<trap::StabilityMapPoint>& points);

std::string pumpdown_csv(const protocols::PumpdownResult& r);
std::string pumpdown_json(const protocols::PumpdownResult& r);
std::string ramp_csv(const protocols::PumpdownResult& r);

std::string preselection_csv(const protocols::PreselectionResult& r);
std::string preselection_json(const protocols::PreselectionResult& r);

std::string fit_json(const odmr::OdmrFit& f);
std::string fit_csv(const odmr::OdmrFit& f);

// {temperature_k, sigma_t_k, d_ghz, extrapolated}
std::string thermometry_json(const thermometry::ThermoEstimate& e);
std::string thermometry_csv(const thermometry::ThermoEstimate& e);

// {mode, points: [{control, temperature_k}]}
std::vector<thermal::CalibrationPoint> read_calibration_json(const std::filesystem::path& path,
                                                             thermal::EmpiricalMode& mode);
std::string empirical_model_json(const thermal::EmpiricalThermalModel& m);

struct Manifest {
    std::string command;
    std::uint64_t seed = 0;
    std::string config_path;
    std::string config_text;
    std::vector<std::string> outputs;
};

// Config echo, library version and seed. No timestamps, so identical runs
// produce identical manifests.
std::string manifest_json(const Manifest& m);

const char* version();

}  // namespace nvtrap::io

#endif
