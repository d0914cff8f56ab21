#include "nvtrap/cli.hpp"

#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "nvtrap/config.hpp"
#include "nvtrap/io.hpp"
#include "nvtrap/protocols.hpp"
#include "nvtrap/svg_plot.hpp"
#include "nvtrap/thermometry.hpp"

namespace nvtrap::cli {

namespace {

namespace fs = std::filesystem;
using protocols::Scenario;

struct Options {
    std::string config_path;
    std::string out_dir;
    std::optional<std::uint64_t> seed;
    std::string format;  // empty: the command's default
};

// Collects outputs and writes them only after the command has finished, so
// a failing run leaves nothing behind.
class Outputs {
public:
    void add(std::string name, std::string contents) {
        files_.emplace_back(std::move(name), std::move(contents));
    }

    void commit(const fs::path& dir, io::Manifest manifest) const {
        fs::create_directories(dir);
        for (const auto& [name, contents] : files_) {
            io::write_file_atomic(dir / name, contents);
            manifest.outputs.push_back(name);
        }
        io::write_file_atomic(dir / "manifest.json", io::manifest_json(manifest));
    }

private:
    std::vector<std::pair<std::string, std::string>> files_;
};

bool want_json(const Options& o, bool json_default) {
    return o.format.empty() ? json_default : o.format == "json";
}

std::vector<double> column(const protocols::SweepTable& t,
                           const std::function<std::optional<double>(const protocols::SweepRow&)>& get,
                           std::vector<double>& x) {
    std::vector<double> y;
    x.clear();
    for (const auto& r : t.rows) {
        if (auto v = get(r)) {
            x.push_back(r.control);
            y.push_back(*v);
        }
    }
    return y;
}

std::string sweep_plot(const protocols::SweepTable& t) {
    plot::Figure fig;
    const bool power = t.scenario == Scenario::sweep_power;
    fig.title = power ? "Temperature versus laser power" : "Temperature versus pressure";
    fig.x_label = power ? "laser power (uW)" : "pressure (mbar)";
    fig.y_label = "temperature (K)";
    plot::Series model, inferred;
    model.y = column(t, [](const auto& r) { return r.true_t_k; }, model.x);
    model.label = "thermal model";
    model.points = false;
    inferred.y = column(t, [](const auto& r) { return r.t_inferred_k; }, inferred.x);
    inferred.label = "from ODMR fit";
    inferred.line = false;
    fig.series = {model, inferred};
    return plot::render_svg(fig);
}

void run_sweep(const config::RunConfig& rc, const Options& o, Outputs& out) {
    const auto& c = rc.protocol;
    const auto table = c.scenario == Scenario::sweep_power ? protocols::run_power_sweep(c)
                                                           : protocols::run_pressure_sweep(c);
    if (want_json(o, false))
        out.add("sweep.json", io::sweep_json(table));
    else
        out.add("sweep.csv", io::sweep_csv(table));
    if (c.scenario == Scenario::sweep_pressure) out.add("gas.csv", io::gas_csv(table));
    if (table.empirical) out.add("empirical_model.json", io::empirical_model_json(*table.empirical));
    out.add("sweep.svg", sweep_plot(table));
}

void run_preselect(const config::RunConfig& rc, const Options& o, Outputs& out) {
    const auto r = protocols::run_preselection(rc.protocol);
    if (want_json(o, false))
        out.add("preselect.json", io::preselection_json(r));
    else
        out.add("preselect.csv", io::preselection_csv(r));
}

void run_pumpdown(const config::RunConfig& rc, const Options& o, Outputs& out) {
    const auto r = protocols::run_pumpdown(rc.protocol);
    if (want_json(o, false)) {
        out.add("pumpdown.json", io::pumpdown_json(r));
    } else {
        out.add("pumpdown.csv", io::pumpdown_csv(r));
        out.add("ramp.csv", io::ramp_csv(r));
    }
    plot::Figure fig;
    fig.title = "Micromotion during pump-down";
    fig.x_label = "time since pump start (s)";
    fig.y_label = "micromotion amplitude (m)";
    plot::Series s;
    for (const auto& row : r.rows) {
        if (!row.micromotion_m) continue;
        s.x.push_back(row.time_s);
        s.y.push_back(*row.micromotion_m);
    }
    fig.series = {s};
    out.add("pumpdown.svg", plot::render_svg(fig));
}

void run_stability_map(const config::RunConfig& rc, const Options& o, Outputs& out) {
    const auto points = protocols::run_stability_map(rc.protocol);
    if (want_json(o, false))
        out.add("stability_map.json", io::stability_map_json(points));
    else
        out.add("stability_map.csv", io::stability_map_csv(points));
}

std::string spectrum_plot(const odmr::Spectrum& s, const odmr::OdmrFit* fit) {
    plot::Figure fig;
    fig.title = "ODMR spectrum";
    fig.x_label = "microwave frequency (GHz)";
    fig.y_label = "PL (counts/s)";
    plot::Series data{s.freq_ghz, s.pl_cps, "data", false, true};
    fig.series.push_back(data);
    if (fit) {
        plot::Series model;
        model.label = "double-Gaussian fit";
        model.points = false;
        for (double f : s.freq_ghz) {
            model.x.push_back(f);
            model.y.push_back(odmr::model_value(fit->parameters(), fit->shape, f));
        }
        fig.series.push_back(model);
    }
    return plot::render_svg(fig);
}

void run_synth(const config::RunConfig& rc, const Options& o, Outputs& out) {
    const auto& c = rc.protocol;
    spin::SpinParams sp = c.spin;
    if (rc.synth.temperature_k)
        sp.d_zfs_ghz = spin::zfs_of_temperature(c.zfs, *rc.synth.temperature_k).value;
    const auto s = odmr::synthesize_spectrum(sp, rc.synth.contrast, c.odmr.s_max_cps,
                                             c.odmr.sigma_ghz, c.odmr.grid,
                                             {c.odmr.noise, c.seed, c.odmr.noise_scale}, c.odmr.shape);
    if (want_json(o, false))
        out.add("spectrum.json", io::spectrum_json(s));
    else
        out.add("spectrum.csv", io::spectrum_csv(s));
    out.add("spectrum.svg", spectrum_plot(s, nullptr));
}

odmr::Spectrum input_spectrum(const config::RunConfig& rc) {
    if (!rc.input.spectrum_csv) throw ConfigError("[input] spectrum_csv is required");
    try {
        return io::read_spectrum_csv(*rc.input.spectrum_csv);
    } catch (const Error& e) {
        throw ConfigError(e.what());
    }
}

void run_fit(const config::RunConfig& rc, const Options& o, Outputs& out) {
    const auto s = input_spectrum(rc);
    odmr::FitOptions options;
    options.shape = rc.protocol.odmr.shape;
    const auto fit = odmr::fit_double_gaussian(s, std::nullopt, options);
    if (!fit.converged) throw NumericalError(fmt::format("fit did not converge: {}", fit.message));
    if (want_json(o, true))
        out.add("fit.json", io::fit_json(fit));
    else
        out.add("fit.csv", io::fit_csv(fit));
    out.add("fit.svg", spectrum_plot(s, &fit));
}

void run_invert(const config::RunConfig& rc, const Options& o, Outputs& out) {
    const auto& zfs = rc.protocol.zfs;
    thermometry::ThermoEstimate e;
    if (rc.input.d_ghz) {
        if (rc.input.spectrum_csv)
            throw ConfigError("[input] give either d_ghz or spectrum_csv for invert-temp");
        const auto inv = thermometry::invert_zfs(zfs, *rc.input.d_ghz, rc.input.particle_offset_ghz);
        e.temperature_k = inv.temperature_k;
        e.extrapolated = inv.extrapolated;
        e.d_used_ghz = *rc.input.d_ghz;
        e.sigma_t_k = rc.input.sigma_d_ghz / std::abs(spin::zfs_slope(zfs, inv.temperature_k).value);
    } else {
        odmr::FitOptions options;
        options.shape = rc.protocol.odmr.shape;
        e = thermometry::temperature_from_spectrum(input_spectrum(rc), zfs,
                                                   rc.input.particle_offset_ghz, options);
    }
    if (want_json(o, true))
        out.add("thermometry.json", io::thermometry_json(e));
    else
        out.add("thermometry.csv", io::thermometry_csv(e));
}

struct Command {
    const char* name;
    const char* help;
    std::optional<Scenario> scenario;
    void (*run)(const config::RunConfig&, const Options&, Outputs&);
};

const std::vector<Command>& commands() {
    static const std::vector<Command> list{
        {"stability-map", "Floquet stability over a (q, a, damping) grid", Scenario::stability_map,
         run_stability_map},
        {"preselect", "charge-to-mass preselection by instability onset", Scenario::preselect,
         run_preselect},
        {"pumpdown", "iso-q ramp and pressure schedule", Scenario::pumpdown, run_pumpdown},
        {"sweep-power", "temperature versus laser power", Scenario::sweep_power, run_sweep},
        {"sweep-pressure", "temperature versus gas pressure", Scenario::sweep_pressure, run_sweep},
        {"synth-odmr", "synthesize an ODMR spectrum", std::nullopt, run_synth},
        {"fit-odmr", "double-Gaussian fit of a spectrum", std::nullopt, run_fit},
        {"invert-temp", "temperature from a zero-field splitting", std::nullopt, run_invert},
    };
    return list;
}

}  // namespace

int dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Levitated-nanodiamond trap and NV thermometry toolkit", "nvtrap"};
    app.require_subcommand(1);
    app.set_version_flag("--version", io::version());

    Options opts;
    std::map<std::string, const Command*> by_name;
    for (const auto& cmd : commands()) {
        auto* sub = app.add_subcommand(cmd.name, cmd.help);
        sub->add_option("--config", opts.config_path, "configuration file (TOML)")->required();
        sub->add_option("--out", opts.out_dir, "output directory")->required();
        sub->add_option("--seed", opts.seed, "noise seed, overrides [run] seed");
        sub->add_option("--format", opts.format, "table format")
            ->check(CLI::IsMember({"csv", "json"}));
        by_name[cmd.name] = &cmd;
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return exit_ok;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return exit_ok;
    } catch (const CLI::CallForVersion&) {
        out << io::version() << "\n";
        return exit_ok;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n\n" << app.help();
        return exit_config;
    }

    const Command* cmd = nullptr;
    for (auto* sub : app.get_subcommands()) cmd = by_name.at(sub->get_name());

    config::RunConfig rc;
    try {
        rc = config::load_config(opts.config_path, cmd->scenario);
        if (opts.seed) rc.protocol.seed = *opts.seed;
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << "\n";
        return exit_config;
    }

    try {
        Outputs outputs;
        cmd->run(rc, opts, outputs);
        io::Manifest m;
        m.command = cmd->name;
        m.seed = rc.protocol.seed;
        m.config_path = opts.config_path;
        m.config_text = rc.text;
        outputs.commit(opts.out_dir, m);
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << "\n";
        return exit_config;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return exit_runtime;
    }
    return exit_ok;
}

}  // namespace nvtrap::cli
