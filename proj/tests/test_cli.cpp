#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <unistd.h>
#include <vector>

#include <json.hpp>

#include "nvtrap/cli.hpp"

namespace fs = std::filesystem;
using nvtrap::cli::dispatch;

namespace {

struct Run {
    int code;
    std::string out;
    std::string err;
};

Run run(std::vector<std::string> args) {
    args.insert(args.begin(), "nvtrap");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = dispatch(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

fs::path fresh_dir(const std::string& name) {
    const auto dir = fs::temp_directory_path() / ("nvtrap_cli_" + std::to_string(::getpid())) / name;
    fs::remove_all(dir);
    return dir;
}

std::string data(const std::string& name) { return std::string(NVTRAP_DATA_DIR) + "/" + name; }

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST_CASE("fit-odmr on the shipped sample spectrum") {
    const auto out = fresh_dir("fit");
    const auto r = run({"fit-odmr", "--config", data("fit_golden.toml"), "--out", out.string()});
    REQUIRE(r.code == 0);
    const auto j = nlohmann::json::parse(slurp(out / "fit.json"));
    CHECK(j["d_ghz"].get<double>() == doctest::Approx(2.8558).epsilon(0.0005 / 2.8558));
    CHECK(j["contrast"].get<double>() == doctest::Approx(0.017).epsilon(0.003 / 0.017));
    CHECK(fs::exists(out / "fit.svg"));
    const auto m = nlohmann::json::parse(slurp(out / "manifest.json"));
    CHECK(m["command"] == "fit-odmr");
    CHECK(m["outputs"].size() == 2);
}

TEST_CASE("invert-temp from a splitting") {
    const auto out = fresh_dir("invert");
    REQUIRE(run({"invert-temp", "--config", data("invert.toml"), "--out", out.string()}).code == 0);
    const auto j = nlohmann::json::parse(slurp(out / "thermometry.json"));
    CHECK(j["temperature_k"].get<double>() == doctest::Approx(433.47).epsilon(1e-4));
    CHECK(j["sigma_t_k"].get<double>() > 0.0);
    CHECK(j["extrapolated"] == false);
}

TEST_CASE("missing configuration exits 1 and writes nothing") {
    const auto out = fresh_dir("missing");
    const auto r = run({"sweep-power", "--config", "/nonexistent.toml", "--out", out.string()});
    CHECK(r.code == nvtrap::cli::exit_config);
    CHECK_FALSE(fs::exists(out));
    CHECK(r.err.find("config error") != std::string::npos);
}

TEST_CASE("usage errors exit 1 with usage text") {
    const auto out = fresh_dir("usage");
    auto r = run({"sweep-power", "--config", data("sweep_power.toml"), "--out", out.string(), "--bogus"});
    CHECK(r.code == nvtrap::cli::exit_config);
    CHECK(r.err.find("Usage") != std::string::npos);
    CHECK_FALSE(fs::exists(out));
    CHECK(run({"no-such-command"}).code == nvtrap::cli::exit_config);
    CHECK(run({"sweep-power", "--out", out.string()}).code == nvtrap::cli::exit_config);
    CHECK(run({"sweep-power", "--config", data("sweep_power.toml"), "--out", out.string(), "--format", "xml"}).code ==
          nvtrap::cli::exit_config);
    CHECK(run({"--help"}).code == nvtrap::cli::exit_ok);
}

TEST_CASE("a scenario mismatch is a configuration error") {
    const auto out = fresh_dir("mismatch");
    CHECK(run({"pumpdown", "--config", data("preselect.toml"), "--out", out.string()}).code ==
          nvtrap::cli::exit_config);
    CHECK_FALSE(fs::exists(out));
}

TEST_CASE("runtime failures exit 2 and write nothing") {
    const auto dir = fresh_dir("runtime_cfg");
    fs::create_directories(dir);
    // A particle so lightly charged that the whole preselection grid is stable.
    std::ofstream(dir / "c.toml") << "[run]\nscenario = \"preselect\"\n[particle]\ncharge_to_mass_c_kg = 1e-7\n";
    const auto out = fresh_dir("runtime");
    const auto r = run({"preselect", "--config", (dir / "c.toml").string(), "--out", out.string()});
    CHECK(r.code == nvtrap::cli::exit_runtime);
    CHECK(r.err.find("onset not bracketed") != std::string::npos);
    CHECK_FALSE(fs::exists(out));
}

TEST_CASE("identical runs give byte-identical outputs") {
    const std::vector<std::pair<std::string, std::string>> cases{
        {"sweep-power", "sweep_power.toml"},     {"sweep-pressure", "sweep_pressure.toml"},
        {"preselect", "preselect.toml"},         {"pumpdown", "pumpdown.toml"},
        {"stability-map", "stability_map.toml"}, {"synth-odmr", "golden_synth.toml"},
    };
    for (const auto& [cmd, cfg] : cases) {
        CAPTURE(cmd);
        for (const char* format : {"csv", "json"}) {
            const auto a = fresh_dir(cmd + "_a"), b = fresh_dir(cmd + "_b");
            REQUIRE(run({cmd, "--config", data(cfg), "--out", a.string(), "--format", format}).code == 0);
            REQUIRE(run({cmd, "--config", data(cfg), "--out", b.string(), "--format", format}).code == 0);
            std::size_t files = 0;
            for (const auto& e : fs::directory_iterator(a)) {
                ++files;
                CHECK(slurp(e.path()) == slurp(b / e.path().filename()));
            }
            CHECK(files >= 2);
        }
    }
}

TEST_CASE("the seed flag overrides the configuration") {
    const auto a = fresh_dir("seed_a"), b = fresh_dir("seed_b");
    REQUIRE(run({"synth-odmr", "--config", data("golden_synth.toml"), "--out", a.string()}).code == 0);
    REQUIRE(run({"synth-odmr", "--config", data("golden_synth.toml"), "--out", b.string(), "--seed", "2"}).code == 0);
    CHECK(slurp(a / "spectrum.csv") != slurp(b / "spectrum.csv"));
    CHECK(nlohmann::json::parse(slurp(b / "manifest.json"))["seed"] == 2);
}

TEST_CASE("the shipped sample spectrum is what synth-odmr produces") {
    const auto out = fresh_dir("golden");
    REQUIRE(run({"synth-odmr", "--config", data("golden_synth.toml"), "--out", out.string()}).code == 0);
    CHECK(slurp(out / "spectrum.csv") == slurp(data("golden_spectrum.csv")));
}

TEST_CASE("sweep outputs") {
    const auto out = fresh_dir("sweep_files");
    REQUIRE(run({"sweep-pressure", "--config", data("sweep_pressure.toml"), "--out", out.string()}).code == 0);
    for (const char* f : {"sweep.csv", "gas.csv", "sweep.svg", "empirical_model.json", "manifest.json"})
        CHECK(fs::exists(out / f));
    const auto svg = slurp(out / "sweep.svg");
    CHECK(svg.rfind("<svg", 0) == 0);
    CHECK(svg.find("</svg>") != std::string::npos);
}
