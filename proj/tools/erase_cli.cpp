// Command-line front end: scene simulation, pipeline runs, report rendering.

#include <CLI11.hpp>
#include <filesystem>
#include <iostream>
#include <map>
#include <string>

#include "erase/erase.hpp"

namespace fs = std::filesystem;
using namespace erase;

namespace {

Json digest_map(const std::map<std::string, std::string>& files) {
    Json j = Json::object();
    for (const auto& [name, path] : files) j[name] = file_digest(path);
    return j;
}

void write_svg(const std::string& path, const std::string& svg) {
    std::ofstream out(path);
    if (!out) throw Error("cannot open '" + path + "' for writing");
    out << svg;
}

Recording bandpass_recording(const Recording& rec, const PipelineConfig& cfg) {
    const BiquadCascade cascade = design_butterworth(
        FilterSpec::band(cfg.bandpass_low_hz, cfg.bandpass_high_hz, cfg.bandpass_order),
        rec.sample_rate);
    Recording out = rec;
    for (Eigen::Index c = 0; c < rec.n_channels(); ++c) {
        if (rec.channels[static_cast<std::size_t>(c)].kind == ChannelKind::force) continue;
        TimeSeries ts(rec.data.row(c).transpose(), rec.sample_rate);
        ts = cfg.zero_phase ? filter_forward_backward(ts, cascade) : filter_forward(ts, cascade);
        out.data.row(c) = ts.samples.transpose();
    }
    return out;
}

int cmd_simulate(const std::string& spec_path, std::uint64_t seed_override, bool has_seed,
                 const std::string& out_dir) {
    SceneSpec spec = spec_path.empty() ? default_scene() : scene_from_json(load_json(spec_path));
    if (has_seed) spec.seed = seed_override;
    const Scene scene = generate_scene(spec);

    fs::create_directories(out_dir);
    const auto p = [&](const char* name) { return (fs::path(out_dir) / name).string(); };
    write_recording(p("recording.bin"), scene.recording);
    write_recording(p("truth_clean.bin"), scene.clean_recording());
    write_recording(p("truth_emg.bin"), scene.emg_recording());
    write_events(p("events.txt"), scene.onsets_s);
    write_montage(p("montage.csv"), scene.montage);
    {
        std::ofstream out(p("scene.json"));
        out << to_json(scene.spec).dump(2) << "\n";
    }

    Json manifest;
    manifest["command"] = "simulate";
    manifest["scene"] = to_json(scene.spec);
    manifest["seed"] = scene.spec.seed;
    if (!spec_path.empty()) manifest["inputs"] = Json{{"spec", file_digest(spec_path)}};
    manifest["outputs"] = digest_map({{"recording.bin", p("recording.bin")},
                                      {"truth_clean.bin", p("truth_clean.bin")},
                                      {"truth_emg.bin", p("truth_emg.bin")},
                                      {"events.txt", p("events.txt")},
                                      {"montage.csv", p("montage.csv")},
                                      {"scene.json", p("scene.json")}});
    write_manifest(p("manifest.json"), manifest);
    std::cout << "wrote scene (" << scene.recording.n_channels() << " channels, "
              << scene.recording.n_samples() << " samples, " << scene.onsets_s.size()
              << " trials) to " << out_dir << "\n";
    return 0;
}

int cmd_run(const std::string& rec_path, const std::string& events_path,
            const std::string& montage_path, const std::string& condition,
            const std::string& config_path, double theta, bool has_theta, std::uint64_t seed,
            bool has_seed, const std::string& out_dir) {
    PipelineConfig cfg;
    if (!config_path.empty()) cfg = pipeline_config_from_json(load_json(config_path), cfg);
    if (has_theta) cfg.theta = theta;
    if (has_seed) cfg.seed = seed;

    const Recording raw = read_recording(rec_path);
    const std::vector<double> events = read_events(events_path);
    const Montage montage = read_montage(montage_path);

    const Recording filtered = bandpass_recording(raw, cfg);
    const TrialSet trials = segment_trials(filtered, events, cfg.idle_len_s, cfg.move_len_s);
    if (trials.trials.empty()) throw InvalidSpecError("no usable trials after segmentation");

    fs::create_directories(out_dir);
    const auto p = [&](const std::string& name) { return (fs::path(out_dir) / name).string(); };
    std::map<std::string, std::string> outputs;

    TrialSet final_trials;
    Json condition_info;
    if (condition == "baseline") {
        final_trials = trials;
        condition_info["rejected"] = Json::array();
    } else if (condition == "erase" || condition == "conventional") {
        const Recording cat = concatenate_trials(trials);
        EraseResult result;
        if (condition == "erase") {
            EraseConfig ecfg;
            ecfg.emg = cfg.emg;
            ecfg.emg.seed = derive_seed(cfg.seed, 0xE39);
            ecfg.emg.bursts = emg_schedule_for_trials(trials, cfg.emg_force_coupling);
            ecfg.ica = cfg.ica;
            ecfg.ica.seed = derive_seed(cfg.seed, 0x1CA);
            ecfg.theta = cfg.theta;
            ecfg.retries = cfg.retries;
            result = run_erase(cat, ecfg);
        } else {
            ConventionalIcaConfig ccfg;
            ccfg.ica = cfg.ica;
            ccfg.ica.seed = derive_seed(cfg.seed, 0x1CB);
            ccfg.gamma_fraction = cfg.conventional_gamma_fraction;
            ccfg.gamma_band = cfg.high_gamma;
            ccfg.stft = cfg.stft;
            ccfg.retries = cfg.retries;
            result = run_conventional_ica(cat, ccfg);
        }
        final_trials = trialset_from_concatenated(result.cleaned, trials);
        write_recording(p("cleaned.bin"), result.cleaned);
        write_ica_model(p("ica_model.bin"), result.model);
        outputs["cleaned.bin"] = p("cleaned.bin");
        outputs["ica_model.bin"] = p("ica_model.bin");
        {
            std::ofstream out(p("rejected.csv"));
            out << "component,score,rejected\n";
            for (int j = 0; j < result.model.n_components; ++j) {
                char buf[40];
                std::snprintf(buf, sizeof(buf), "%.17g", result.rejection_scores[j]);
                out << j << ',' << buf << ',' << (result.rejected.count(j) ? 1 : 0) << "\n";
            }
            outputs["rejected.csv"] = p("rejected.csv");
        }
        condition_info["rejected"] = Json(std::vector<int>(result.rejected.begin(),
                                                           result.rejected.end()));
        condition_info["ica_attempts"] = result.ica_attempts;
        condition_info["ica_iterations"] = result.model.iterations;
    } else {
        throw InvalidSpecError("condition must be baseline, erase, or conventional");
    }

    // metrics
    BandPowerParams bp;
    bp.stft = cfg.stft;
    bp.alpha = cfg.alpha;
    const BandPowerSummary mu_summary = band_power_z(final_trials, cfg.mu, bp);
    const BandPowerSummary hg_summary = band_power_z(final_trials, cfg.high_gamma, bp);
    write_band_power_csv(p("band_power_mu.csv"), mu_summary);
    write_band_power_csv(p("band_power_high_gamma.csv"), hg_summary);
    outputs["band_power_mu.csv"] = p("band_power_mu.csv");
    outputs["band_power_high_gamma.csv"] = p("band_power_high_gamma.csv");

    for (const auto& [band_name, band] :
         std::vector<std::pair<std::string, BandDef>>{{"mu", cfg.mu}, {"high_gamma", cfg.high_gamma}}) {
        std::map<std::string, std::vector<double>> snr_table;
        for (const auto& ch : final_trials.channels)
            if (ch.kind == ChannelKind::scalp)
                snr_table[ch.label] = snr_db(final_trials, ch.label, band, cfg.snr);
        write_snr_csv(p("snr_" + band_name + ".csv"), snr_table);
        outputs["snr_" + band_name + ".csv"] = p("snr_" + band_name + ".csv");
    }

    bool fd_available = true;
    try {
        FdForceParams fdp = cfg.fd;
        fdp.band = cfg.high_gamma;
        fdp.alpha = cfg.alpha;
        const FdCorrelation fd = fd_force_correlation(final_trials, fdp);
        write_fd_correlation_csv(p("fd_correlation.csv"), fd);
        write_fd_levels_csv(p("fd_levels.csv"), fd);
        outputs["fd_correlation.csv"] = p("fd_correlation.csv");
        outputs["fd_levels.csv"] = p("fd_levels.csv");
        const RegionSummary region = region_summary(hg_summary, fd, montage);
        write_region_summary_csv(p("region_summary.csv"), region);
        outputs["region_summary.csv"] = p("region_summary.csv");
    } catch (const InvalidSpecError& e) {
        // degenerate force range (e.g. no force channel); power metrics stand
        fd_available = false;
        std::cerr << "fd correlation skipped: " << e.what() << "\n";
    }

    Json manifest;
    manifest["command"] = "run";
    manifest["condition"] = condition;
    manifest["config"] = to_json(cfg);
    manifest["condition_info"] = condition_info;
    manifest["fd_available"] = fd_available;
    manifest["skipped_events"] = trials.skipped_events;
    manifest["n_trials"] = static_cast<int>(trials.n_trials());
    Json inputs = Json{{"recording", file_digest(rec_path)},
                       {"events", file_digest(events_path)},
                       {"montage", file_digest(montage_path)}};
    if (!config_path.empty()) inputs["config"] = file_digest(config_path);
    manifest["inputs"] = inputs;
    manifest["outputs"] = digest_map(outputs);
    write_manifest(p("manifest.json"), manifest);
    std::cout << "condition " << condition << ": " << trials.n_trials() << " trials, metrics in "
              << out_dir << "\n";
    return 0;
}

int cmd_report(const std::string& metrics_dir, const std::string& montage_path,
               const std::string& out_dir) {
    const Montage montage = read_montage(montage_path);
    const auto m = [&](const char* name) { return (fs::path(metrics_dir) / name).string(); };
    fs::create_directories(out_dir);
    const auto p = [&](const char* name) { return (fs::path(out_dir) / name).string(); };

    int n_virtual = 0;
    if (fs::exists(m("manifest.json"))) {
        const Json manifest = load_json(m("manifest.json"));
        if (manifest.contains("condition") && manifest.at("condition") == "erase")
            n_virtual = manifest.at("config").at("emg").at("n_sources").get<int>();
    }

    std::map<std::string, std::string> outputs;
    for (const auto& [band, file] : std::vector<std::pair<std::string, const char*>>{
             {"mu", "band_power_mu.csv"}, {"high_gamma", "band_power_high_gamma.csv"}}) {
        if (!fs::exists(m(file))) throw Error(std::string("missing metrics file ") + file);
        const CsvTable t = read_csv(m(file));
        std::vector<std::string> electrodes;
        Vector values(static_cast<Eigen::Index>(t.rows.size()));
        std::vector<bool> significant;
        const auto ce = t.column("electrode"), cz = t.column("mean_move_z"),
                   cs = t.column("significant");
        for (std::size_t i = 0; i < t.rows.size(); ++i) {
            electrodes.push_back(t.rows[i][ce]);
            values[static_cast<Eigen::Index>(i)] = std::stod(t.rows[i][cz]);
            significant.push_back(t.rows[i][cs] == "1");
        }
        TopographyOptions opt;
        opt.n_virtual = n_virtual;
        opt.title = band + " move-epoch z-scored power";
        const std::string name = "topo_" + band + ".svg";
        write_svg(p(name.c_str()), render_topography_svg(montage, electrodes, values, significant, opt));
        outputs[name] = p(name.c_str());
    }

    if (!fs::exists(m("fd_correlation.csv"))) throw Error("missing metrics file fd_correlation.csv");
    const CsvTable fd = read_csv(m("fd_correlation.csv"));
    std::vector<std::string> electrodes;
    Vector sig_r(static_cast<Eigen::Index>(fd.rows.size()));
    const auto ce = fd.column("electrode"), cr = fd.column("significant_r");
    for (std::size_t i = 0; i < fd.rows.size(); ++i) {
        electrodes.push_back(fd.rows[i][ce]);
        sig_r[static_cast<Eigen::Index>(i)] = std::stod(fd.rows[i][cr]);
    }
    write_svg(p("fd_bars.svg"),
              render_correlation_bars_svg(montage, electrodes, sig_r,
                                          "significant |R|, relative FD vs force"));
    outputs["fd_bars.svg"] = p("fd_bars.svg");

    Json manifest;
    manifest["command"] = "report";
    manifest["inputs"] = Json{{"montage", file_digest(montage_path)}};
    manifest["outputs"] = digest_map(outputs);
    write_manifest(p("manifest.json"), manifest);
    std::cout << "report rendered to " << out_dir << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"EMG artifact removal by adding sources of EMG"};
    app.require_subcommand(1);

    // simulate
    auto* sim = app.add_subcommand("simulate", "generate a synthetic ground-truth scene");
    std::string sim_spec, sim_out = "out";
    std::uint64_t sim_seed = 0;
    sim->add_option("--spec", sim_spec, "scene spec json (defaults to the built-in scene)")
        ->envname("ERASE_SCENE_SPEC");
    auto* sim_seed_opt = sim->add_option("--seed", sim_seed, "master seed override")
                             ->envname("ERASE_SEED");
    sim->add_option("--out", sim_out, "output directory")->required()->envname("ERASE_OUT");

    // run
    auto* run = app.add_subcommand("run", "run a condition and compute metrics");
    std::string run_rec, run_events, run_montage, run_condition = "baseline", run_config,
                run_out = "out";
    double run_theta = 1.0;
    std::uint64_t run_seed = 0;
    run->add_option("--recording", run_rec, "recording file")->required();
    run->add_option("--events", run_events, "move onset times, one per line")->required();
    run->add_option("--montage", run_montage, "montage csv")->required();
    run->add_option("--condition", run_condition, "baseline | erase | conventional")
        ->envname("ERASE_CONDITION");
    run->add_option("--config", run_config, "pipeline config json")->envname("ERASE_CONFIG");
    auto* theta_opt = run->add_option("--theta", run_theta, "rejection threshold")
                          ->envname("ERASE_THETA");
    auto* run_seed_opt = run->add_option("--seed", run_seed, "pipeline seed")->envname("ERASE_SEED");
    run->add_option("--out", run_out, "output directory")->required()->envname("ERASE_OUT");

    // report
    auto* rep = app.add_subcommand("report", "render SVG topographies and bar charts");
    std::string rep_metrics, rep_montage, rep_out = "report";
    rep->add_option("--metrics", rep_metrics, "metrics directory from a run")->required();
    rep->add_option("--montage", rep_montage, "montage csv")->required();
    rep->add_option("--out", rep_out, "output directory")->required()->envname("ERASE_OUT");

    try {
        app.parse(argc, argv);
        if (sim->parsed())
            return cmd_simulate(sim_spec, sim_seed, sim_seed_opt->count() > 0, sim_out);
        if (run->parsed())
            return cmd_run(run_rec, run_events, run_montage, run_condition, run_config, run_theta,
                           theta_opt->count() > 0, run_seed, run_seed_opt->count() > 0, run_out);
        if (rep->parsed()) return cmd_report(rep_metrics, rep_montage, rep_out);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    } catch (const InvalidSpecError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const ParseError& e) {
        std::cerr << "error: " << e.what() << " (byte " << e.offset << ")\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
