#include <catch2/catch_amalgamated.hpp>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "erase/config.hpp"
#include "erase/io.hpp"
#include "helpers.hpp"

using namespace erase;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("erase_cli_" + std::to_string(std::random_device{}()));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string sub(const std::string& name) const { return (path / name).string(); }
};

int run_cli(const std::string& args) {
    const std::string cmd = std::string(ERASE_CLI_PATH) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WEXITSTATUS(status);
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_small_scene_spec(const std::string& path, std::uint64_t seed) {
    SceneSpec spec = default_scene();
    spec.n_trials = 8;
    spec.seed = seed;
    std::ofstream out(path);
    out << to_json(spec).dump(2) << "\n";
}

}  // namespace

TEST_CASE("pipeline config json round trip") {
    const PipelineConfig defaults;
    SECTION("serialized defaults parse back unchanged") {
        const PipelineConfig back = pipeline_config_from_json(to_json(defaults));
        REQUIRE(back.seed == defaults.seed);
        REQUIRE(back.theta == defaults.theta);
        REQUIRE(back.ica.tol == defaults.ica.tol);
        REQUIRE(back.emg.n_sources == defaults.emg.n_sources);
        REQUIRE(back.stft.window_len == defaults.stft.window_len);
        REQUIRE(back.high_gamma.low_hz == defaults.high_gamma.low_hz);
    }
    SECTION("partial overrides keep the remaining defaults") {
        const PipelineConfig cfg =
            pipeline_config_from_json(Json{{"theta", 0.8}, {"ica", Json{{"tol", 1e-3}}}});
        REQUIRE(cfg.theta == 0.8);
        REQUIRE(cfg.ica.tol == 1e-3);
        REQUIRE(cfg.ica.max_iter == defaults.ica.max_iter);
        REQUIRE(cfg.emg.amplitude_uv == defaults.emg.amplitude_uv);
    }
    SECTION("unknown keys are rejected") {
        REQUIRE_THROWS_AS(pipeline_config_from_json(Json{{"thata", 0.8}}), InvalidSpecError);
        REQUIRE_THROWS_AS(pipeline_config_from_json(Json{{"ica", Json{{"tolerance", 1e-3}}}}),
                          InvalidSpecError);
    }
    SECTION("scene spec round trips") {
        const SceneSpec spec = default_scene();
        const SceneSpec back = scene_from_json(to_json(spec));
        REQUIRE(back.n_trials == spec.n_trials);
        REQUIRE(back.channels == spec.channels);
        REQUIRE(back.neural.size() == spec.neural.size());
        REQUIRE(back.emg.gain_uv == spec.emg.gain_uv);
        REQUIRE(back.seed == spec.seed);
    }
}

TEST_CASE("cli simulate") {
    TempDir tmp;
    write_small_scene_spec(tmp.sub("scene.json"), 42);

    SECTION("writes recording, ground truth, and a manifest echoing the seed") {
        REQUIRE(run_cli("simulate --spec " + tmp.sub("scene.json") + " --out " + tmp.sub("a")) == 0);
        REQUIRE(fs::exists(tmp.sub("a") + "/recording.bin"));
        REQUIRE(fs::exists(tmp.sub("a") + "/truth_clean.bin"));
        REQUIRE(fs::exists(tmp.sub("a") + "/truth_emg.bin"));
        REQUIRE(fs::exists(tmp.sub("a") + "/events.txt"));
        REQUIRE(fs::exists(tmp.sub("a") + "/montage.csv"));
        const Json manifest = load_json(tmp.sub("a") + "/manifest.json");
        REQUIRE(manifest.at("seed").get<std::uint64_t>() == 42);
    }
    SECTION("two runs with the same seed are byte-identical") {
        REQUIRE(run_cli("simulate --spec " + tmp.sub("scene.json") + " --out " + tmp.sub("r1")) == 0);
        REQUIRE(run_cli("simulate --spec " + tmp.sub("scene.json") + " --out " + tmp.sub("r2")) == 0);
        for (const char* f : {"recording.bin", "truth_clean.bin", "events.txt", "manifest.json"})
            REQUIRE(slurp(tmp.sub("r1") + "/" + f) == slurp(tmp.sub("r2") + "/" + f));
    }
    SECTION("an invalid spec exits with code 2") {
        std::ofstream out(tmp.sub("bad.json"));
        out << "{\"n_trials\": 0}";
        out.close();
        REQUIRE(run_cli("simulate --spec " + tmp.sub("bad.json") + " --out " + tmp.sub("x")) == 2);
    }
    SECTION("unknown spec keys exit with code 2") {
        std::ofstream out(tmp.sub("odd.json"));
        out << "{\"n_trails\": 5}";
        out.close();
        REQUIRE(run_cli("simulate --spec " + tmp.sub("odd.json") + " --out " + tmp.sub("x")) == 2);
    }
    SECTION("missing required flags exit with code 2") {
        REQUIRE(run_cli("simulate") == 2);
    }
}

TEST_CASE("cli run and report") {
    TempDir tmp;
    write_small_scene_spec(tmp.sub("scene.json"), 7);
    REQUIRE(run_cli("simulate --spec " + tmp.sub("scene.json") + " --out " + tmp.sub("sim")) == 0);
    const std::string inputs = " --recording " + tmp.sub("sim") + "/recording.bin --events " +
                               tmp.sub("sim") + "/events.txt --montage " + tmp.sub("sim") +
                               "/montage.csv";

    SECTION("baseline writes metrics without a cleaned recording") {
        REQUIRE(run_cli("run" + inputs + " --condition baseline --out " + tmp.sub("base")) == 0);
        REQUIRE(fs::exists(tmp.sub("base") + "/band_power_mu.csv"));
        REQUIRE(fs::exists(tmp.sub("base") + "/band_power_high_gamma.csv"));
        REQUIRE(fs::exists(tmp.sub("base") + "/snr_high_gamma.csv"));
        REQUIRE(fs::exists(tmp.sub("base") + "/fd_correlation.csv"));
        REQUIRE(fs::exists(tmp.sub("base") + "/region_summary.csv"));
        REQUIRE_FALSE(fs::exists(tmp.sub("base") + "/cleaned.bin"));
        const Json manifest = load_json(tmp.sub("base") + "/manifest.json");
        REQUIRE(manifest.at("condition") == "baseline");
        REQUIRE(manifest.at("inputs").contains("recording"));
    }
    SECTION("erase writes the cleaned recording, model, and rejection table") {
        REQUIRE(run_cli("run" + inputs + " --condition erase --seed 5 --out " + tmp.sub("er")) == 0);
        REQUIRE(fs::exists(tmp.sub("er") + "/cleaned.bin"));
        REQUIRE(fs::exists(tmp.sub("er") + "/ica_model.bin"));
        REQUIRE(fs::exists(tmp.sub("er") + "/rejected.csv"));
        const Recording cleaned = read_recording(tmp.sub("er") + "/cleaned.bin");
        REQUIRE(cleaned.channels.size() == 20);  // virtual channels dropped
        for (const auto& ch : cleaned.channels) REQUIRE(ch.kind == ChannelKind::scalp);

        SECTION("report renders svg outputs from the metrics directory") {
            REQUIRE(run_cli("report --metrics " + tmp.sub("er") + " --montage " + tmp.sub("sim") +
                            "/montage.csv --out " + tmp.sub("rep")) == 0);
            for (const char* f : {"topo_mu.svg", "topo_high_gamma.svg", "fd_bars.svg"}) {
                REQUIRE(fs::exists(tmp.sub("rep") + "/" + f));
                REQUIRE(testutil::xml_well_formed(slurp(tmp.sub("rep") + "/" + f)));
            }
        }
    }
    SECTION("conventional condition runs end to end") {
        REQUIRE(run_cli("run" + inputs + " --condition conventional --seed 3 --out " +
                        tmp.sub("conv")) == 0);
        REQUIRE(fs::exists(tmp.sub("conv") + "/cleaned.bin"));
        REQUIRE(fs::exists(tmp.sub("conv") + "/rejected.csv"));
        const Json manifest = load_json(tmp.sub("conv") + "/manifest.json");
        REQUIRE(manifest.at("condition") == "conventional");
    }
    SECTION("unreadable inputs exit nonzero") {
        REQUIRE(run_cli("run --recording missing.bin --events none.txt --montage nope.csv "
                        "--condition baseline --out " +
                        tmp.sub("x")) != 0);
    }
    SECTION("unknown condition exits with code 2") {
        REQUIRE(run_cli("run" + inputs + " --condition sideways --out " + tmp.sub("x")) == 2);
    }
}
