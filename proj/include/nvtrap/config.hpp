#ifndef NVTRAP_CONFIG_HPP
#define NVTRAP_CONFIG_HPP

#include <filesystem>
#include <optional>
#include <string>

#include "nvtrap/protocols.hpp"

namespace nvtrap::config {

// [synth]: spectrum for synth-odmr. D comes from temperature_k through the
// ZFS polynomial when given, else from [spin] d_zfs_ghz.
struct SynthSettings {
    std::optional<double> temperature_k;
    double contrast = 0.017;
};

// [input]: data for fit-odmr and invert-temp. spectrum_csv is resolved
// relative to the config file.
struct InputSettings {
    std::optional<std::filesystem::path> spectrum_csv;
    std::optional<double> d_ghz;
    double sigma_d_ghz = 0.0;
    double particle_offset_ghz = 0.0;
};

struct RunConfig {
    protocols::ProtocolConfig protocol;
    SynthSettings synth;
    InputSettings input;
    std::string text;  // verbatim file contents, echoed in manifests
};

// Sectioned key-value (TOML) configuration with units in the key names.
// Unknown sections, unknown keys, wrong types and invalid physics all
// throw ConfigError. `scenario` overrides [run] scenario; a conflicting
// explicit value is an error.
RunConfig parse_config(const std::string& text, const std::filesystem::path& base_dir,
                       std::optional<protocols::Scenario> scenario = std::nullopt);

RunConfig load_config(const std::filesystem::path& path,
                      std::optional<protocols::Scenario> scenario = std::nullopt);

}  // namespace nvtrap::config

#endif
