#include "nvtrap/io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include <unistd.h>

#include <fmt/format.h>
#include <json.hpp>

namespace nvtrap::io {

using nlohmann::ordered_json;

const char* version() { return "0.1.0"; }

void write_file_atomic(const std::filesystem::path& path, const std::string& contents) {
    namespace fs = std::filesystem;
    const fs::path tmp = path.parent_path() /
                         fmt::format(".{}.tmp-{}", path.filename().string(), ::getpid());
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error(fmt::format("cannot write '{}'", tmp.string()));
        out << contents;
        out.flush();
        if (!out) {
            std::error_code ec;
            fs::remove(tmp, ec);
            throw Error(fmt::format("write to '{}' failed", tmp.string()));
        }
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) {
        fs::remove(tmp, ec);
        throw Error(fmt::format("cannot move output into '{}'", path.string()));
    }
}

std::string format_number(double v) { return fmt::format("{}", v); }

namespace {

std::string opt(const std::optional<double>& v) { return v ? format_number(*v) : std::string(); }

// Status strings are free text; quote them when they would break the row.
std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char ch : s) {
        if (ch == '"') out += '"';
        out += ch;
    }
    return out + "\"";
}

ordered_json opt_json(const std::optional<double>& v) {
    return v ? ordered_json(*v) : ordered_json(nullptr);
}

std::string dump(const ordered_json& j) { return j.dump(2) + "\n"; }

double parse_double(std::string_view s, const std::string& where) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
        s.remove_suffix(1);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size())
        throw Error(fmt::format("{}: '{}' is not a number", where, std::string(s)));
    return v;
}

const char* shape_name(odmr::LineShape s) {
    return s == odmr::LineShape::gaussian ? "gaussian" : "lorentzian";
}

}  // namespace

odmr::Spectrum read_spectrum_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(fmt::format("cannot read spectrum '{}'", path.string()));
    odmr::Spectrum s;
    std::string line;
    bool header = false;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        if (!header) {
            if (line != "freq_ghz,pl_cps")
                throw Error(fmt::format("{}: expected header 'freq_ghz,pl_cps'", path.string()));
            header = true;
            continue;
        }
        const auto comma = line.find(',');
        if (comma == std::string::npos || line.find(',', comma + 1) != std::string::npos)
            throw Error(fmt::format("{}:{}: expected two fields", path.string(), line_no));
        const std::string where = fmt::format("{}:{}", path.string(), line_no);
        s.freq_ghz.push_back(parse_double(std::string_view(line).substr(0, comma), where));
        s.pl_cps.push_back(parse_double(std::string_view(line).substr(comma + 1), where));
    }
    if (!header) throw Error(fmt::format("{}: empty spectrum file", path.string()));
    s.validate();
    return s;
}

std::string spectrum_csv(const odmr::Spectrum& s) {
    std::string out = "freq_ghz,pl_cps\n";
    for (std::size_t i = 0; i < s.size(); ++i)
        out += fmt::format("{},{}\n", format_number(s.freq_ghz[i]), format_number(s.pl_cps[i]));
    return out;
}

std::string spectrum_json(const odmr::Spectrum& s) {
    ordered_json j;
    j["freq_ghz"] = s.freq_ghz;
    j["pl_cps"] = s.pl_cps;
    j["laser_power_w"] = s.meta.laser_power_w;
    j["pressure_mbar"] = s.meta.pressure_mbar;
    j["integration"] = s.meta.integration;
    return dump(j);
}

std::string sweep_csv(const protocols::SweepTable& t) {
    std::string out = "control,true_t_k,d_fit_ghz,contrast,t_inferred_k,sigma_t_k,status\n";
    for (const auto& r : t.rows)
        out += fmt::format("{},{},{},{},{},{},{}\n", format_number(r.control), opt(r.true_t_k),
                           opt(r.d_fit_ghz), opt(r.contrast), opt(r.t_inferred_k),
                           opt(r.sigma_t_k), csv_field(r.status));
    return out;
}

std::string sweep_json(const protocols::SweepTable& t) {
    ordered_json j;
    j["scenario"] = protocols::to_string(t.scenario);
    j["effective_cross_section_m2"] = t.effective_cross_section_m2;
    ordered_json rows = ordered_json::array();
    for (const auto& r : t.rows) {
        ordered_json row;
        row["control"] = r.control;
        row["true_t_k"] = opt_json(r.true_t_k);
        row["d_fit_ghz"] = opt_json(r.d_fit_ghz);
        row["contrast"] = opt_json(r.contrast);
        row["t_inferred_k"] = opt_json(r.t_inferred_k);
        row["sigma_t_k"] = opt_json(r.sigma_t_k);
        row["status"] = r.status;
        if (r.knudsen) row["knudsen"] = *r.knudsen;
        if (r.damping_rate_s) row["damping_rate_s"] = *r.damping_rate_s;
        rows.push_back(row);
    }
    j["rows"] = rows;
    if (t.empirical) j["empirical_model"] = ordered_json::parse(empirical_model_json(*t.empirical));
    return dump(j);
}

std::string gas_csv(const protocols::SweepTable& t) {
    std::string out = "control,knudsen,damping_rate_s\n";
    for (const auto& r : t.rows)
        out += fmt::format("{},{},{}\n", format_number(r.control), opt(r.knudsen),
                           opt(r.damping_rate_s));
    return out;
}

std::string trajectory_csv(const trap::Trajectory& t) {
    std::string out = "t_s,x_m,y_m,z_m,vx,vy,vz\n";
    for (std::size_t i = 0; i < t.size(); ++i) {
        const auto& x = t.positions_m[i];
        const auto& v = t.velocities_m_s[i];
        out += fmt::format("{},{},{},{},{},{},{}\n", format_number(t.times_s[i]),
                           format_number(x(0)), format_number(x(1)), format_number(x(2)),
                           format_number(v(0)), format_number(v(1)), format_number(v(2)));
    }
    return out;
}

std::string stability_map_csv(const std::vector<trap::StabilityMapPoint>& points) {
    std::string out = "q,a,gamma_norm,stable\n";
    for (const auto& p : points)
        out += fmt::format("{},{},{},{}\n", format_number(p.q), format_number(p.a),
                           format_number(p.gamma_norm), p.stable ? 1 : 0);
    return out;
}

std::string stability_map_json(const std::vector<trap::StabilityMapPoint>& points) {
    ordered_json arr = ordered_json::array();
    for (const auto& p : points)
        arr.push_back({{"q", p.q}, {"a", p.a}, {"gamma_norm", p.gamma_norm}, {"stable", p.stable}});
    return dump(ordered_json{{"points", arr}});
}

std::string pumpdown_csv(const protocols::PumpdownResult& r) {
    std::string out =
        "time_s,pressure_mbar,damping_rate_s,f_secular_hz,displacement_m,micromotion_m,status\n";
    for (const auto& row : r.rows)
        out += fmt::format("{},{},{},{},{},{},{}\n", format_number(row.time_s),
                           format_number(row.pressure_mbar), format_number(row.damping_rate_s),
                           opt(row.f_secular_hz), opt(row.displacement_m), opt(row.micromotion_m),
                           csv_field(row.status));
    return out;
}

std::string pumpdown_json(const protocols::PumpdownResult& r) {
    ordered_json j;
    ordered_json ramp = ordered_json::array();
    for (const auto& p : r.ramp)
        ramp.push_back({{"v_pp_volts", p.v_pp_volts},
                        {"drive_frequency_hz", p.drive_frequency_hz},
                        {"q_axial", p.q_axial}});
    j["ramp"] = ramp;
    j["ramp_q_max_relative_deviation"] = r.ramp_q_max_relative_deviation;
    ordered_json rows = ordered_json::array();
    for (const auto& row : r.rows)
        rows.push_back({{"time_s", row.time_s},
                        {"pressure_mbar", row.pressure_mbar},
                        {"damping_rate_s", row.damping_rate_s},
                        {"f_secular_hz", opt_json(row.f_secular_hz)},
                        {"displacement_m", opt_json(row.displacement_m)},
                        {"micromotion_m", opt_json(row.micromotion_m)},
                        {"status", row.status}});
    j["rows"] = rows;
    return dump(j);
}

std::string ramp_csv(const protocols::PumpdownResult& r) {
    std::string out = "v_pp_volts,drive_frequency_hz,q_axial\n";
    for (const auto& p : r.ramp)
        out += fmt::format("{},{},{}\n", format_number(p.v_pp_volts),
                           format_number(p.drive_frequency_hz), format_number(p.q_axial));
    return out;
}

std::string preselection_csv(const protocols::PreselectionResult& r) {
    return fmt::format("onset_frequency_hz,q_over_m_c_kg,accept,onset_above_grid\n{},{},{},{}\n",
                       format_number(r.onset_frequency_hz), format_number(r.q_over_m_c_kg),
                       r.accept ? 1 : 0, r.onset_above_grid ? 1 : 0);
}

std::string preselection_json(const protocols::PreselectionResult& r) {
    ordered_json j;
    j["onset_frequency_hz"] = r.onset_frequency_hz;
    j["q_over_m_c_kg"] = r.q_over_m_c_kg;
    j["accept"] = r.accept;
    j["onset_above_grid"] = r.onset_above_grid;
    return dump(j);
}

std::string fit_json(const odmr::OdmrFit& f) {
    ordered_json j;
    j["converged"] = f.converged;
    j["message"] = f.message;
    j["d_ghz"] = f.d_fit_ghz;
    j["e_ghz"] = f.e_fit_ghz;
    j["sigma_d_ghz"] = f.converged ? ordered_json(f.sigma_d_fit_ghz()) : ordered_json(nullptr);
    j["contrast"] = f.contrast;
    j["s_max_cps"] = f.s_max_cps;
    ordered_json dips = ordered_json::array();
    for (const auto& d : f.dips)
        dips.push_back(
            {{"center_ghz", d.center_ghz}, {"sigma_ghz", d.sigma_ghz}, {"depth_cps", d.depth_cps}});
    j["dips"] = dips;
    j["line_shape"] = shape_name(f.shape);
    j["residual_rms_cps"] = f.residual_rms_cps;
    j["iterations"] = f.iterations;
    j["window_ghz"] = {f.window_lo_ghz, f.window_hi_ghz};
    ordered_json cov = ordered_json::array();
    for (int r = 0; r < 7; ++r) {
        ordered_json row = ordered_json::array();
        for (int c = 0; c < 7; ++c) row.push_back(f.covariance(r, c));
        cov.push_back(row);
    }
    j["covariance"] = cov;
    return dump(j);
}

std::string fit_csv(const odmr::OdmrFit& f) {
    return fmt::format(
        "d_ghz,e_ghz,sigma_d_ghz,contrast,s_max_cps,residual_rms_cps,converged\n{},{},{},{},{},{},{}\n",
        format_number(f.d_fit_ghz), format_number(f.e_fit_ghz),
        f.converged ? format_number(f.sigma_d_fit_ghz()) : std::string(),
        format_number(f.contrast), format_number(f.s_max_cps), format_number(f.residual_rms_cps),
        f.converged ? 1 : 0);
}

std::string thermometry_json(const thermometry::ThermoEstimate& e) {
    ordered_json j;
    j["temperature_k"] = e.temperature_k;
    j["sigma_t_k"] = e.sigma_t_k;
    j["d_ghz"] = e.d_used_ghz;
    j["extrapolated"] = e.extrapolated;
    return dump(j);
}

std::string thermometry_csv(const thermometry::ThermoEstimate& e) {
    return fmt::format("temperature_k,sigma_t_k,d_ghz,extrapolated\n{},{},{},{}\n",
                       format_number(e.temperature_k), format_number(e.sigma_t_k),
                       format_number(e.d_used_ghz), e.extrapolated ? 1 : 0);
}

std::vector<thermal::CalibrationPoint> read_calibration_json(const std::filesystem::path& path,
                                                             thermal::EmpiricalMode& mode) {
    std::ifstream in(path);
    if (!in) throw Error(fmt::format("cannot read calibration '{}'", path.string()));
    try {
        const auto j = nlohmann::json::parse(in);
        mode = thermal::empirical_mode_from_string(j.at("mode").get<std::string>());
        std::vector<thermal::CalibrationPoint> points;
        for (const auto& p : j.at("points"))
            points.push_back({p.at("control").get<double>(), p.at("temperature_k").get<double>()});
        return points;
    } catch (const nlohmann::json::exception& e) {
        throw Error(fmt::format("{}: {}", path.string(), e.what()));
    }
}

std::string empirical_model_json(const thermal::EmpiricalThermalModel& m) {
    ordered_json j;
    j["mode"] = thermal::to_string(m.mode);
    j["t0_k"] = m.t0_k;
    j["coefficient"] = m.coefficient;
    j["residual_rms_k"] = m.residual_rms_k;
    return dump(j);
}

std::string manifest_json(const Manifest& m) {
    ordered_json j;
    j["tool"] = "nvtrap";
    j["version"] = version();
    j["command"] = m.command;
    j["seed"] = m.seed;
    j["config_path"] = m.config_path;
    j["config"] = m.config_text;
    j["outputs"] = m.outputs;
    return dump(j);
}

}  // namespace nvtrap::io
