#include "nvtrap/config.hpp"

#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <toml.hpp>

namespace nvtrap::config {

namespace {

using protocols::Scenario;

const std::map<std::string, std::set<std::string>>& schema() {
    static const std::map<std::string, std::set<std::string>> s{
        {"run", {"scenario", "seed", "threads"}},
        {"trap",
         {"v_pp_volts", "drive_frequency_hz", "r0_m", "kappa", "v_dc_volts", "dc_field_v_m"}},
        {"particle",
         {"diameter_m", "density_kg_m3", "charge_c", "charge_to_mass_c_kg", "position_m",
          "velocity_m_s"}},
        {"gas",
         {"pressure_mbar", "temperature_k", "molecule_mass_kg", "molecule_diameter_m",
          "accommodation", "heat_capacity_ratio", "drag_coefficient"}},
        {"beam", {"power_w", "waist_m", "wavelength_m"}},
        {"thermal",
         {"effective_cross_section_m2", "intensity_overlap", "emissivity", "calibration_power_uw",
          "calibration_pressure_mbar", "calibration_temperature_k"}},
        {"spin", {"d_zfs_ghz", "e_strain_ghz", "gyromagnetic_ghz_per_t"}},
        {"zfs",
         {"a0_ghz", "a1_ghz_per_k", "a2_ghz_per_k2", "a3_ghz_per_k3", "t_min_k", "t_max_k"}},
        {"contrast", {"c_ref", "t_ref_k", "slope_per_k", "floor"}},
        {"odmr",
         {"f_start_ghz", "f_stop_ghz", "n_points", "sigma_ghz", "s_max_cps", "noise",
          "noise_scale", "line_shape"}},
        {"sweep", {"powers_uw", "pressures_mbar"}},
        {"preselect",
         {"f_start_hz", "f_stop_hz", "n_points", "tolerance_hz", "accept_min_onset_hz"}},
        {"pumpdown",
         {"v_pp_end_volts", "ramp_steps", "pressures_mbar", "pump_time_constant_s",
          "stray_force_n", "steps_per_period", "transient_secular_periods",
          "average_secular_periods", "gravity"}},
        {"stability_map", {"q_min", "q_max", "q_points", "a_values", "gamma_norm_values"}},
        {"synth", {"temperature_k", "contrast"}},
        {"input", {"spectrum_csv", "d_ghz", "sigma_d_ghz", "particle_offset_ghz"}},
    };
    return s;
}

// Typed access to one section; a missing section behaves as empty.
class Section {
public:
    Section(const toml::table& root, std::string name) : name_(std::move(name)) {
        if (const auto* t = root.get_as<toml::table>(name_)) table_ = t;
    }

    void get(const char* key, double& out) const {
        if (auto v = number(key)) out = *v;
    }
    void get(const char* key, std::optional<double>& out) const {
        if (auto v = number(key)) out = *v;
    }
    void get(const char* key, int& out) const {
        if (const auto* n = node(key)) {
            auto v = n->value_exact<std::int64_t>();
            if (!v) throw type_error(key, "an integer");
            out = static_cast<int>(*v);
        }
    }
    void get(const char* key, std::uint64_t& out) const {
        if (const auto* n = node(key)) {
            auto v = n->value_exact<std::int64_t>();
            if (!v || *v < 0) throw type_error(key, "a non-negative integer");
            out = static_cast<std::uint64_t>(*v);
        }
    }
    void get(const char* key, bool& out) const {
        if (const auto* n = node(key)) {
            auto v = n->value_exact<bool>();
            if (!v) throw type_error(key, "a boolean");
            out = *v;
        }
    }
    void get(const char* key, std::string& out) const {
        if (auto v = string(key)) out = *v;
    }
    std::optional<std::string> string(const char* key) const {
        if (const auto* n = node(key)) {
            auto v = n->value_exact<std::string>();
            if (!v) throw type_error(key, "a string");
            return *v;
        }
        return std::nullopt;
    }
    void get(const char* key, std::vector<double>& out) const {
        if (const auto* n = node(key)) {
            const auto* arr = n->as_array();
            if (!arr) throw type_error(key, "an array of numbers");
            out.clear();
            for (const auto& el : *arr) {
                auto v = el.value<double>();
                if (!v) throw type_error(key, "an array of numbers");
                out.push_back(*v);
            }
        }
    }
    void get(const char* key, Vec3& out) const {
        if (!node(key)) return;
        std::vector<double> v;
        get(key, v);
        if (v.size() != 3) throw type_error(key, "an array of 3 numbers");
        out = Vec3(v[0], v[1], v[2]);
    }
    bool has(const char* key) const { return node(key) != nullptr; }

private:
    const toml::node* node(const char* key) const {
        return table_ ? table_->get(key) : nullptr;
    }
    std::optional<double> number(const char* key) const {
        if (const auto* n = node(key)) {
            if (!n->is_number()) throw type_error(key, "a number");
            return n->value<double>();
        }
        return std::nullopt;
    }
    ConfigError type_error(const char* key, const char* expected) const {
        return ConfigError(fmt::format("[{}] {} must be {}", name_, key, expected));
    }

    std::string name_;
    const toml::table* table_ = nullptr;
};

void check_schema(const toml::table& root) {
    const auto& s = schema();
    for (const auto& [name, node] : root) {
        const std::string section(name.str());
        const auto it = s.find(section);
        if (it == s.end()) throw ConfigError(fmt::format("unknown section [{}]", section));
        const auto* table = node.as_table();
        if (!table) throw ConfigError(fmt::format("[{}] must be a section", section));
        for (const auto& [key, value] : *table) {
            if (!it->second.count(std::string(key.str())))
                throw ConfigError(fmt::format("unknown key '{}' in [{}]", key.str(), section));
        }
    }
}

odmr::NoiseKind noise_from_string(const std::string& s) {
    if (s == "none") return odmr::NoiseKind::none;
    if (s == "gaussian") return odmr::NoiseKind::gaussian;
    if (s == "poisson") return odmr::NoiseKind::poisson;
    throw ConfigError(fmt::format("[odmr] noise must be none, gaussian or poisson, got '{}'", s));
}

odmr::LineShape shape_from_string(const std::string& s) {
    if (s == "gaussian") return odmr::LineShape::gaussian;
    if (s == "lorentzian") return odmr::LineShape::lorentzian;
    throw ConfigError(fmt::format("[odmr] line_shape must be gaussian or lorentzian, got '{}'", s));
}

std::vector<double> linspace(double lo, double hi, int n) {
    std::vector<double> v(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) v[static_cast<std::size_t>(i)] = n == 1 ? lo : lo + (hi - lo) * i / (n - 1);
    return v;
}

void read_sections(const toml::table& root, RunConfig& rc, std::optional<Scenario> scenario) {
    auto& c = rc.protocol;

    const Section run(root, "run");
    if (auto s = run.string("scenario")) {
        Scenario declared;
        try {
            declared = protocols::scenario_from_string(*s);
        } catch (const InvalidArgument& e) {
            throw ConfigError(fmt::format("[run] {}", e.what()));
        }
        if (scenario && *scenario != declared)
            throw ConfigError(fmt::format("[run] scenario = '{}' conflicts with the requested '{}'",
                                          *s, protocols::to_string(*scenario)));
        c.scenario = declared;
    } else if (scenario) {
        c.scenario = *scenario;
    }
    run.get("seed", c.seed);
    run.get("threads", c.threads);

    const Section trap(root, "trap");
    trap.get("v_pp_volts", c.trap.v_pp_volts);
    double f_drive = c.trap.drive_frequency_hz();
    trap.get("drive_frequency_hz", f_drive);
    c.trap.omega_drive_rad_s = 2.0 * constants::pi * f_drive;
    trap.get("r0_m", c.trap.r0_m);
    trap.get("kappa", c.trap.kappa);
    trap.get("v_dc_volts", c.trap.v_dc_volts);
    trap.get("dc_field_v_m", c.trap.dc_field_v_m);

    const Section particle(root, "particle");
    double diameter = c.particle.diameter_m, density = c.particle.density_kg_m3;
    double charge = c.particle.charge_c;
    particle.get("diameter_m", diameter);
    particle.get("density_kg_m3", density);
    if (particle.has("charge_c") && particle.has("charge_to_mass_c_kg"))
        throw ConfigError("[particle] give either charge_c or charge_to_mass_c_kg, not both");
    particle.get("charge_c", charge);
    std::optional<double> q_over_m;
    particle.get("charge_to_mass_c_kg", q_over_m);
    if (!(diameter > 0.0 && density > 0.0))
        throw ConfigError("[particle] diameter_m and density_kg_m3 must be positive");
    c.particle = ParticleState::from_diameter(diameter, density, charge);
    if (q_over_m) c.particle.charge_c = *q_over_m * c.particle.mass_kg;
    particle.get("position_m", c.particle.position_m);
    particle.get("velocity_m_s", c.particle.velocity_m_s);

    const Section gas(root, "gas");
    gas.get("pressure_mbar", c.gas.pressure_mbar);
    gas.get("temperature_k", c.gas.temperature_k);
    gas.get("molecule_mass_kg", c.gas.molecule_mass_kg);
    gas.get("molecule_diameter_m", c.gas.molecule_diameter_m);
    gas.get("accommodation", c.gas.accommodation);
    gas.get("heat_capacity_ratio", c.gas.heat_capacity_ratio);
    gas.get("drag_coefficient", c.gas.drag_coefficient);

    const Section beam(root, "beam");
    beam.get("power_w", c.beam.power_w);
    beam.get("waist_m", c.beam.waist_m);
    beam.get("wavelength_m", c.beam.wavelength_m);

    const Section thermal(root, "thermal");
    thermal.get("effective_cross_section_m2", c.thermal.absorption.effective_cross_section_m2);
    thermal.get("intensity_overlap", c.thermal.absorption.intensity_overlap);
    thermal.get("emissivity", c.thermal.emissivity);
    thermal.get("calibration_temperature_k", c.thermal.calibration_temperature_k);
    if (c.thermal.calibration_temperature_k) {
        const char* key = c.scenario == Scenario::sweep_pressure ? "calibration_pressure_mbar"
                                                                 : "calibration_power_uw";
        thermal.get(key, c.thermal.calibration_control);
        if (!c.thermal.calibration_control &&
            (c.scenario == Scenario::sweep_power || c.scenario == Scenario::sweep_pressure))
            throw ConfigError(fmt::format("[thermal] calibration_temperature_k needs {} for {}", key,
                                          protocols::to_string(c.scenario)));
        if (c.scenario != Scenario::sweep_power && c.scenario != Scenario::sweep_pressure) {
            c.thermal.calibration_control.reset();
            c.thermal.calibration_temperature_k.reset();
        }
    }

    const Section spin(root, "spin");
    spin.get("d_zfs_ghz", c.spin.d_zfs_ghz);
    spin.get("e_strain_ghz", c.spin.e_strain_ghz);
    spin.get("gyromagnetic_ghz_per_t", c.spin.gyromagnetic_ghz_per_t);

    const Section zfs(root, "zfs");
    zfs.get("a0_ghz", c.zfs.a0_ghz);
    zfs.get("a1_ghz_per_k", c.zfs.a1_ghz_per_k);
    zfs.get("a2_ghz_per_k2", c.zfs.a2_ghz_per_k2);
    zfs.get("a3_ghz_per_k3", c.zfs.a3_ghz_per_k3);
    zfs.get("t_min_k", c.zfs.t_min_k);
    zfs.get("t_max_k", c.zfs.t_max_k);

    const Section contrast(root, "contrast");
    contrast.get("c_ref", c.contrast.c_ref);
    contrast.get("t_ref_k", c.contrast.t_ref_k);
    contrast.get("slope_per_k", c.contrast.slope_per_k);
    contrast.get("floor", c.contrast.floor);

    const Section od(root, "odmr");
    od.get("f_start_ghz", c.odmr.grid.f_start_ghz);
    od.get("f_stop_ghz", c.odmr.grid.f_stop_ghz);
    od.get("n_points", c.odmr.grid.n_points);
    od.get("sigma_ghz", c.odmr.sigma_ghz);
    od.get("s_max_cps", c.odmr.s_max_cps);
    if (auto s = od.string("noise")) c.odmr.noise = noise_from_string(*s);
    od.get("noise_scale", c.odmr.noise_scale);
    if (auto s = od.string("line_shape")) c.odmr.shape = shape_from_string(*s);

    const Section sweep(root, "sweep");
    if (c.scenario == Scenario::sweep_power) sweep.get("powers_uw", c.grid);
    if (c.scenario == Scenario::sweep_pressure) sweep.get("pressures_mbar", c.grid);

    const Section pre(root, "preselect");
    pre.get("f_start_hz", c.preselect.f_start_hz);
    pre.get("f_stop_hz", c.preselect.f_stop_hz);
    pre.get("n_points", c.preselect.n_points);
    pre.get("tolerance_hz", c.preselect.tolerance_hz);
    pre.get("accept_min_onset_hz", c.preselect.accept_min_onset_hz);

    const Section pump(root, "pumpdown");
    pump.get("v_pp_end_volts", c.pumpdown.v_pp_end_volts);
    pump.get("ramp_steps", c.pumpdown.ramp_steps);
    pump.get("pressures_mbar", c.pumpdown.pressures_mbar);
    pump.get("pump_time_constant_s", c.pumpdown.pump_time_constant_s);
    pump.get("stray_force_n", c.pumpdown.stray_force_n);
    pump.get("steps_per_period", c.pumpdown.equilibrium.steps_per_period);
    pump.get("transient_secular_periods", c.pumpdown.equilibrium.transient_secular_periods);
    pump.get("average_secular_periods", c.pumpdown.equilibrium.average_secular_periods);
    pump.get("gravity", c.pumpdown.equilibrium.gravity);

    const Section map(root, "stability_map");
    double q_min = 0.05, q_max = 1.0;
    int q_points = 20;
    map.get("q_min", q_min);
    map.get("q_max", q_max);
    map.get("q_points", q_points);
    if (q_points < 1 || !(q_max >= q_min))
        throw ConfigError("[stability_map] needs q_points >= 1 and q_max >= q_min");
    c.stability_map.qs = linspace(q_min, q_max, q_points);
    map.get("a_values", c.stability_map.as);
    map.get("gamma_norm_values", c.stability_map.gammas);

    const Section synth(root, "synth");
    synth.get("temperature_k", rc.synth.temperature_k);
    synth.get("contrast", rc.synth.contrast);

    const Section input(root, "input");
    if (auto s = input.string("spectrum_csv")) rc.input.spectrum_csv = *s;
    input.get("d_ghz", rc.input.d_ghz);
    input.get("sigma_d_ghz", rc.input.sigma_d_ghz);
    input.get("particle_offset_ghz", rc.input.particle_offset_ghz);
}

}  // namespace

RunConfig parse_config(const std::string& text, const std::filesystem::path& base_dir,
                       std::optional<Scenario> scenario) {
    toml::table root;
    try {
        root = toml::parse(text);
    } catch (const toml::parse_error& e) {
        const auto& where = e.source().begin;
        throw ConfigError(fmt::format("line {}, column {}: {}", where.line, where.column,
                                      e.description()));
    }
    check_schema(root);

    RunConfig rc;
    rc.text = text;
    read_sections(root, rc, scenario);
    if (rc.input.spectrum_csv && rc.input.spectrum_csv->is_relative())
        rc.input.spectrum_csv = base_dir / *rc.input.spectrum_csv;
    try {
        if (scenario || root["run"]["scenario"])
            rc.protocol.validate();
        else
            rc.protocol.validate_common();
    } catch (const InvalidArgument& e) {
        throw ConfigError(e.what());
    }
    if (!(rc.synth.contrast >= 0.0 && rc.synth.contrast < 1.0))
        throw ConfigError("[synth] contrast must lie in [0, 1)");
    return rc;
}

RunConfig load_config(const std::filesystem::path& path, std::optional<Scenario> scenario) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError(fmt::format("cannot read config file '{}'", path.string()));
    std::ostringstream buf;
    buf << in.rdbuf();
    try {
        return parse_config(buf.str(), path.parent_path(), scenario);
    } catch (const ConfigError& e) {
        throw ConfigError(fmt::format("{}: {}", path.string(), e.what()));
    }
}

}  // namespace nvtrap::config
