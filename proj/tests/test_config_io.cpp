#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <unistd.h>

#include <json.hpp>

#include "nvtrap/config.hpp"
#include "nvtrap/io.hpp"

using namespace nvtrap;
namespace fs = std::filesystem;

namespace {

config::RunConfig parse(const std::string& text) { return config::parse_config(text, fs::temp_directory_path()); }

fs::path scratch(const std::string& name) {
    auto dir = fs::temp_directory_path() / ("nvtrap_io_" + std::to_string(::getpid()));
    fs::create_directories(dir);
    return dir / name;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST_CASE("every shipped configuration parses") {
    for (const auto& entry : fs::directory_iterator(NVTRAP_DATA_DIR)) {
        if (entry.path().extension() != ".toml") continue;
        CAPTURE(entry.path().string());
        CHECK_NOTHROW(config::load_config(entry.path()));
    }
}

TEST_CASE("units live in the key names and reach the right fields") {
    const auto rc = parse(R"(
[run]
scenario = "sweep_pressure"
seed = 7
[trap]
v_pp_volts = 600.0
drive_frequency_hz = 500.0
[particle]
diameter_m = 5e-6
density_kg_m3 = 3510.0
charge_to_mass_c_kg = 1e-3
[gas]
temperature_k = 300
[beam]
power_w = 40e-6
[thermal]
effective_cross_section_m2 = 1e-13
[odmr]
noise = "poisson"
line_shape = "lorentzian"
[sweep]
pressures_mbar = [0.9, 0.5, 0.2]
)");
    const auto& c = rc.protocol;
    CHECK(c.scenario == protocols::Scenario::sweep_pressure);
    CHECK(c.seed == 7);
    CHECK(c.trap.v_pp_volts == 600.0);
    CHECK(c.trap.omega_drive_rad_s == doctest::Approx(2.0 * 3.14159265358979 * 500.0));
    CHECK(c.particle.diameter_m == 5e-6);
    CHECK(c.particle.charge_to_mass() == doctest::Approx(1e-3));
    CHECK(c.gas.temperature_k == 300.0);
    CHECK(c.odmr.noise == odmr::NoiseKind::poisson);
    CHECK(c.odmr.shape == odmr::LineShape::lorentzian);
    CHECK(c.grid == std::vector<double>{0.9, 0.5, 0.2});
    CHECK(rc.text.find("sweep_pressure") != std::string::npos);
}

TEST_CASE("configuration errors") {
    CHECK_THROWS_WITH_AS(parse("[gas]\npresure_mbar = 1.0\n"), doctest::Contains("presure_mbar"), ConfigError);
    CHECK_THROWS_WITH_AS(parse("[gaz]\npressure_mbar = 1.0\n"), doctest::Contains("gaz"), ConfigError);
    CHECK_THROWS_AS(parse("[gas]\npressure_mbar = \"low\"\n"), ConfigError);
    CHECK_THROWS_AS(parse("[gas]\npressure_mbar = -1.0\n"), ConfigError);
    CHECK_THROWS_AS(parse("[run]\nscenario = \"sweep_temperature\"\n"), ConfigError);
    CHECK_THROWS_AS(parse("[odmr]\nnoise = \"pink\"\n"), ConfigError);
    CHECK_THROWS_AS(parse("[particle]\ncharge_c = 1e-12\ncharge_to_mass_c_kg = 1e-3\n"), ConfigError);
    CHECK_THROWS_AS(parse("this is not toml ["), ConfigError);
    CHECK_THROWS_AS(config::load_config("/nonexistent/config.toml"), ConfigError);
    // Scenario validation runs only when a scenario is selected.
    CHECK_THROWS_AS(config::parse_config("[run]\nscenario = \"sweep_power\"\n", ".", protocols::Scenario::sweep_power),
                    ConfigError);
    CHECK_THROWS_AS(config::parse_config("[run]\nscenario = \"preselect\"\n", ".", protocols::Scenario::pumpdown),
                    ConfigError);
}

TEST_CASE("input paths resolve against the configuration directory") {
    const auto rc = config::load_config(fs::path(NVTRAP_DATA_DIR) / "fit_golden.toml");
    REQUIRE(rc.input.spectrum_csv);
    CHECK(fs::exists(*rc.input.spectrum_csv));
}

TEST_CASE("spectrum CSV round trip") {
    odmr::Spectrum s = odmr::synthesize_spectrum({2.8558, 0.008}, 0.017, 8000.0, 0.004, {2.81, 2.90, 181},
                                                 {odmr::NoiseKind::gaussian, 1, 0.01});
    const auto path = scratch("spectrum.csv");
    io::write_file_atomic(path, io::spectrum_csv(s));
    const auto back = io::read_spectrum_csv(path);
    CHECK(back.freq_ghz == s.freq_ghz);
    CHECK(back.pl_cps == s.pl_cps);
    CHECK(slurp(path).rfind("freq_ghz,pl_cps\n", 0) == 0);
}

TEST_CASE("malformed spectrum files are rejected") {
    const auto path = scratch("bad.csv");
    io::write_file_atomic(path, "freq,pl\n2.8,1\n");
    CHECK_THROWS_AS(io::read_spectrum_csv(path), Error);
    io::write_file_atomic(path, "freq_ghz,pl_cps\n2.8,abc\n");
    CHECK_THROWS_AS(io::read_spectrum_csv(path), Error);
    io::write_file_atomic(path, "# comment\nfreq_ghz,pl_cps\n2.9,1\n2.8,1\n2.81,1\n2.82,1\n2.83,1\n2.84,1\n2.85,1\n2.86,1\n");
    CHECK_THROWS_AS(io::read_spectrum_csv(path), Error);
    CHECK_THROWS_AS(io::read_spectrum_csv(scratch("missing.csv")), Error);
}

TEST_CASE("atomic writes replace the file and leave no temporaries") {
    const auto path = scratch("atomic.txt");
    io::write_file_atomic(path, "first");
    io::write_file_atomic(path, "second");
    CHECK(slurp(path) == "second");
    for (const auto& e : fs::directory_iterator(path.parent_path()))
        CHECK(e.path().filename().string().find(".tmp") == std::string::npos);
}

TEST_CASE("numbers print shortest and read back exactly") {
    for (double v : {0.1, 2.8558, 1.0 / 3.0, 6.02214076e23, -4.39e-3, 0.0}) {
        const auto s = io::format_number(v);
        CHECK(std::stod(s) == v);
    }
    CHECK(io::format_number(0.5) == "0.5");
}

TEST_CASE("sweep CSV schema and empty fields") {
    protocols::SweepTable t;
    protocols::SweepRow ok;
    ok.control = 50.0;
    ok.true_t_k = 310.0;
    ok.d_fit_ghz = 2.869;
    ok.contrast = 0.025;
    ok.t_inferred_k = 311.0;
    ok.sigma_t_k = 2.0;
    ok.status = "ok";
    protocols::SweepRow failed;
    failed.control = 60.0;
    failed.true_t_k = 320.0;
    failed.status = "fit: no dip detected";
    t.rows = {ok, failed};
    const auto csv = io::sweep_csv(t);
    std::istringstream in(csv);
    std::string header, l1, l2;
    std::getline(in, header);
    std::getline(in, l1);
    std::getline(in, l2);
    CHECK(header == "control,true_t_k,d_fit_ghz,contrast,t_inferred_k,sigma_t_k,status");
    CHECK(l1 == "50,310,2.869,0.025,311,2,ok");
    CHECK(l2 == "60,320,,,,,fit: no dip detected");

    const auto j = nlohmann::json::parse(io::sweep_json(t));
    CHECK(j["rows"].size() == 2);
    CHECK(j["rows"][1]["t_inferred_k"].is_null());
}

TEST_CASE("fit and thermometry JSON carry every field") {
    const auto s = odmr::synthesize_spectrum({2.8558, 0.008}, 0.017, 8000.0, 0.004, {2.81, 2.90, 901},
                                             {odmr::NoiseKind::gaussian, 1, 0.01});
    const auto fit = odmr::fit_double_gaussian(s);
    const auto j = nlohmann::json::parse(io::fit_json(fit));
    for (const char* key : {"d_ghz", "e_ghz", "sigma_d_ghz", "contrast", "s_max_cps", "dips", "covariance", "residual_rms_cps",
                            "iterations", "line_shape"})
        CHECK(j.contains(key));
    CHECK(j["d_ghz"].get<double>() == fit.d_fit_ghz);

    thermometry::ThermoEstimate e{433.5, 3.0, 2.8558, false};
    const auto tj = nlohmann::json::parse(io::thermometry_json(e));
    CHECK(tj["temperature_k"] == 433.5);
    CHECK(tj["sigma_t_k"] == 3.0);
    CHECK(tj["d_ghz"] == 2.8558);
    CHECK(tj["extrapolated"] == false);
}

TEST_CASE("calibration files and model export") {
    const auto path = scratch("calibration.json");
    io::write_file_atomic(path, R"({"mode": "inverse_pressure", "points": [{"control": 0.2, "temperature_k": 390},
                                    {"control": 0.8, "temperature_k": 320}]})");
    thermal::EmpiricalMode mode{};
    const auto pts = io::read_calibration_json(path, mode);
    CHECK(mode == thermal::EmpiricalMode::inverse_pressure);
    REQUIRE(pts.size() == 2);
    const auto m = thermal::calibrate_empirical(pts, mode);
    const auto j = nlohmann::json::parse(io::empirical_model_json(m));
    CHECK(j["mode"] == "inverse_pressure");
    CHECK(j["coefficient"].get<double>() == m.coefficient);
    CHECK(j["t0_k"].get<double>() == m.t0_k);
}

TEST_CASE("trajectory and stability map exports") {
    trap::Trajectory t;
    t.times_s = {0.0, 1e-5};
    t.positions_m = {Vec3(1e-6, 0, 0), Vec3(2e-6, 0, 0)};
    t.velocities_m_s = {Vec3::Zero(), Vec3(0.1, 0, 0)};
    t.drive_phase_rad = {0.0, 0.06};
    const auto csv = io::trajectory_csv(t);
    CHECK(csv.rfind("t_s,x_m,y_m,z_m,vx,vy,vz\n", 0) == 0);
    const auto map = io::stability_map_csv({{0.5, 0.0, 0.1, true}, {1.0, 0.0, 0.0, false}});
    CHECK(map == "q,a,gamma_norm,stable\n0.5,0,0.1,1\n1,0,0,0\n");
}

TEST_CASE("manifests are reproducible") {
    io::Manifest m;
    m.command = "sweep-power";
    m.seed = 3;
    m.config_text = "[run]\nseed = 3\n";
    m.outputs = {"sweep.csv"};
    const auto a = io::manifest_json(m);
    CHECK(a == io::manifest_json(m));
    const auto j = nlohmann::json::parse(a);
    CHECK(j["seed"] == 3);
    CHECK(j["version"] == io::version());
    CHECK(j["config"] == m.config_text);
}
