#pragma once

#include <fstream>
#include <json.hpp>
#include <string>

#include "erase/emg.hpp"
#include "erase/fastica.hpp"
#include "erase/metrics.hpp"
#include "erase/pipeline.hpp"
#include "erase/synth.hpp"
#include "erase/types.hpp"

namespace erase {

using Json = nlohmann::json;

// Full pipeline configuration; every field has a working default and is
// overridable from a JSON config file or CLI flags.
struct PipelineConfig {
    std::uint64_t seed = 1;
    double theta = 1.0;
    int retries = 2;
    double idle_len_s = 1.0;
    double move_len_s = 2.0;
    double bandpass_low_hz = 3.0;
    double bandpass_high_hz = 200.0;
    int bandpass_order = 3;
    bool zero_phase = false;
    FastIcaConfig ica;
    EmgSpec emg;
    double emg_force_coupling = 2.0;  // virtual burst amplitude 1 + c * fhat
    StftParams stft;
    BandDef mu{8.0, 12.0};
    BandDef high_gamma{80.0, 160.0};
    double conventional_gamma_fraction = 0.5;
    SnrParams snr;
    FdForceParams fd;
    double alpha = 0.05;

    PipelineConfig() {
        // the concatenated-trial ICA sits on its sampling-noise floor well
        // above the bare-op default, see docs
        ica.tol = 1e-4;
    }
};

namespace detail {

template <typename T>
inline void assign_if(const Json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

inline void check_keys(const Json& j, std::initializer_list<const char*> known,
                       const std::string& context) {
    for (const auto& [key, value] : j.items()) {
        bool ok = false;
        for (const char* k : known)
            if (key == k) ok = true;
        if (!ok) throw InvalidSpecError("unknown key '" + key + "' in " + context);
    }
}

}  // namespace detail

// -------------------------------------------------- json round trips

inline Json to_json(const BandDef& b) { return Json{{"low_hz", b.low_hz}, {"high_hz", b.high_hz}}; }
inline BandDef band_from_json(const Json& j) {
    detail::check_keys(j, {"low_hz", "high_hz"}, "band");
    BandDef b;
    detail::assign_if(j, "low_hz", b.low_hz);
    detail::assign_if(j, "high_hz", b.high_hz);
    return b;
}

inline Json to_json(const FastIcaConfig& c) {
    return Json{{"n_components", c.n_components},
                {"nonlinearity", c.nonlinearity == Nonlinearity::tanh_contrast ? "tanh" : "cube"},
                {"max_iter", c.max_iter},
                {"tol", c.tol},
                {"seed", c.seed}};
}
inline FastIcaConfig fastica_from_json(const Json& j, FastIcaConfig c = {}) {
    detail::check_keys(j, {"n_components", "nonlinearity", "max_iter", "tol", "seed"}, "ica");
    detail::assign_if(j, "n_components", c.n_components);
    if (j.contains("nonlinearity")) {
        const std::string nl = j.at("nonlinearity").get<std::string>();
        if (nl == "tanh") c.nonlinearity = Nonlinearity::tanh_contrast;
        else if (nl == "cube") c.nonlinearity = Nonlinearity::cube_contrast;
        else throw InvalidSpecError("nonlinearity must be 'tanh' or 'cube'");
    }
    detail::assign_if(j, "max_iter", c.max_iter);
    detail::assign_if(j, "tol", c.tol);
    detail::assign_if(j, "seed", c.seed);
    return c;
}

inline Json to_json(const EmgSpec& e) {
    Json bursts = Json::array();
    for (const auto& b : e.bursts)
        bursts.push_back({{"onset_s", b.onset_s}, {"offset_s", b.offset_s}, {"amplitude", b.amplitude}});
    return Json{{"band_low_hz", e.band_low_hz}, {"band_high_hz", e.band_high_hz},
                {"filter_order", e.filter_order}, {"rise_ms", e.rise_ms}, {"fall_ms", e.fall_ms},
                {"amplitude_uv", e.amplitude_uv}, {"n_sources", e.n_sources}, {"seed", e.seed},
                {"bursts", bursts}};
}
inline EmgSpec emg_from_json(const Json& j, EmgSpec e = {}) {
    detail::check_keys(j,
                       {"band_low_hz", "band_high_hz", "filter_order", "rise_ms", "fall_ms",
                        "amplitude_uv", "n_sources", "seed", "bursts"},
                       "emg");
    detail::assign_if(j, "band_low_hz", e.band_low_hz);
    detail::assign_if(j, "band_high_hz", e.band_high_hz);
    detail::assign_if(j, "filter_order", e.filter_order);
    detail::assign_if(j, "rise_ms", e.rise_ms);
    detail::assign_if(j, "fall_ms", e.fall_ms);
    detail::assign_if(j, "amplitude_uv", e.amplitude_uv);
    detail::assign_if(j, "n_sources", e.n_sources);
    detail::assign_if(j, "seed", e.seed);
    if (j.contains("bursts")) {
        e.bursts.clear();
        for (const auto& bj : j.at("bursts")) {
            detail::check_keys(bj, {"onset_s", "offset_s", "amplitude"}, "burst");
            Burst b;
            detail::assign_if(bj, "onset_s", b.onset_s);
            detail::assign_if(bj, "offset_s", b.offset_s);
            detail::assign_if(bj, "amplitude", b.amplitude);
            e.bursts.push_back(b);
        }
    }
    return e;
}

inline Json to_json(const PipelineConfig& c) {
    return Json{{"seed", c.seed},
                {"theta", c.theta},
                {"retries", c.retries},
                {"idle_len_s", c.idle_len_s},
                {"move_len_s", c.move_len_s},
                {"bandpass_low_hz", c.bandpass_low_hz},
                {"bandpass_high_hz", c.bandpass_high_hz},
                {"bandpass_order", c.bandpass_order},
                {"zero_phase", c.zero_phase},
                {"ica", to_json(c.ica)},
                {"emg", to_json(c.emg)},
                {"emg_force_coupling", c.emg_force_coupling},
                {"stft", Json{{"window_len", c.stft.window_len}, {"hop", c.stft.hop}}},
                {"mu_band", to_json(c.mu)},
                {"high_gamma_band", to_json(c.high_gamma)},
                {"conventional_gamma_fraction", c.conventional_gamma_fraction},
                {"snr",
                 Json{{"band_order", c.snr.band_order},
                      {"smooth_hz", c.snr.smooth_hz},
                      {"smooth_order", c.snr.smooth_order},
                      {"transient_skip", c.snr.transient_skip}}},
                {"fd",
                 Json{{"n_levels", c.fd.n_levels},
                      {"band_order", c.fd.band_order},
                      {"time_unit_ms", c.fd.time_unit_ms},
                      {"amp_unit_uv", c.fd.amp_unit_uv},
                      {"t_variant", c.fd.t_variant == TValueVariant::sqrt_n_minus_1
                                        ? "sqrt_n_minus_1"
                                        : "sqrt_n_minus_2"}}},
                {"alpha", c.alpha}};
}

inline PipelineConfig pipeline_config_from_json(const Json& j, PipelineConfig c = {}) {
    detail::check_keys(j,
                       {"seed", "theta", "retries", "idle_len_s", "move_len_s", "bandpass_low_hz",
                        "bandpass_high_hz", "bandpass_order", "zero_phase", "ica", "emg",
                        "emg_force_coupling", "stft", "mu_band", "high_gamma_band",
                        "conventional_gamma_fraction", "snr", "fd", "alpha"},
                       "pipeline config");
    detail::assign_if(j, "seed", c.seed);
    detail::assign_if(j, "theta", c.theta);
    detail::assign_if(j, "retries", c.retries);
    detail::assign_if(j, "idle_len_s", c.idle_len_s);
    detail::assign_if(j, "move_len_s", c.move_len_s);
    detail::assign_if(j, "bandpass_low_hz", c.bandpass_low_hz);
    detail::assign_if(j, "bandpass_high_hz", c.bandpass_high_hz);
    detail::assign_if(j, "bandpass_order", c.bandpass_order);
    detail::assign_if(j, "zero_phase", c.zero_phase);
    if (j.contains("ica")) c.ica = fastica_from_json(j.at("ica"), c.ica);
    if (j.contains("emg")) c.emg = emg_from_json(j.at("emg"), c.emg);
    detail::assign_if(j, "emg_force_coupling", c.emg_force_coupling);
    if (j.contains("stft")) {
        detail::check_keys(j.at("stft"), {"window_len", "hop"}, "stft");
        long long w = c.stft.window_len, h = c.stft.hop;
        detail::assign_if(j.at("stft"), "window_len", w);
        detail::assign_if(j.at("stft"), "hop", h);
        c.stft.window_len = w;
        c.stft.hop = h;
    }
    if (j.contains("mu_band")) c.mu = band_from_json(j.at("mu_band"));
    if (j.contains("high_gamma_band")) c.high_gamma = band_from_json(j.at("high_gamma_band"));
    detail::assign_if(j, "conventional_gamma_fraction", c.conventional_gamma_fraction);
    if (j.contains("snr")) {
        const Json& s = j.at("snr");
        detail::check_keys(s, {"band_order", "smooth_hz", "smooth_order", "transient_skip"}, "snr");
        detail::assign_if(s, "band_order", c.snr.band_order);
        detail::assign_if(s, "smooth_hz", c.snr.smooth_hz);
        detail::assign_if(s, "smooth_order", c.snr.smooth_order);
        long long skip = c.snr.transient_skip;
        detail::assign_if(s, "transient_skip", skip);
        c.snr.transient_skip = skip;
    }
    if (j.contains("fd")) {
        const Json& f = j.at("fd");
        detail::check_keys(f, {"n_levels", "band_order", "time_unit_ms", "amp_unit_uv", "t_variant"},
                           "fd");
        detail::assign_if(f, "n_levels", c.fd.n_levels);
        detail::assign_if(f, "band_order", c.fd.band_order);
        detail::assign_if(f, "time_unit_ms", c.fd.time_unit_ms);
        detail::assign_if(f, "amp_unit_uv", c.fd.amp_unit_uv);
        if (f.contains("t_variant")) {
            const std::string v = f.at("t_variant").get<std::string>();
            if (v == "sqrt_n_minus_1") c.fd.t_variant = TValueVariant::sqrt_n_minus_1;
            else if (v == "sqrt_n_minus_2") c.fd.t_variant = TValueVariant::sqrt_n_minus_2;
            else throw InvalidSpecError("t_variant must be sqrt_n_minus_1 or sqrt_n_minus_2");
        }
    }
    detail::assign_if(j, "alpha", c.alpha);
    c.fd.band = c.high_gamma;
    c.fd.alpha = c.alpha;
    return c;
}

// -------------------------------------------------- scene spec json

inline Json to_json(const NeuralSourceSpec& s) {
    return Json{{"name", s.name},
                {"waveform", s.is_tone ? "tone" : "band_noise"},
                {"tone_hz", s.tone_hz},
                {"band_low_hz", s.band_low_hz},
                {"band_high_hz", s.band_high_hz},
                {"band_order", s.band_order},
                {"idle_gain_uv", s.idle_gain_uv},
                {"move_gain_uv", s.move_gain_uv},
                {"force_coupling", s.force_coupling},
                {"center", s.center},
                {"spatial_sigma", s.spatial_sigma},
                {"global_weights", s.global_weights},
                {"weight_jitter", s.weight_jitter}};
}

inline NeuralSourceSpec neural_from_json(const Json& j) {
    detail::check_keys(j,
                       {"name", "waveform", "tone_hz", "band_low_hz", "band_high_hz", "band_order",
                        "idle_gain_uv", "move_gain_uv", "force_coupling", "center", "spatial_sigma",
                        "global_weights", "weight_jitter"},
                       "neural source");
    NeuralSourceSpec s;
    detail::assign_if(j, "name", s.name);
    if (j.contains("waveform")) {
        const std::string w = j.at("waveform").get<std::string>();
        if (w == "tone") s.is_tone = true;
        else if (w == "band_noise") s.is_tone = false;
        else throw InvalidSpecError("waveform must be 'tone' or 'band_noise'");
    }
    detail::assign_if(j, "tone_hz", s.tone_hz);
    detail::assign_if(j, "band_low_hz", s.band_low_hz);
    detail::assign_if(j, "band_high_hz", s.band_high_hz);
    detail::assign_if(j, "band_order", s.band_order);
    detail::assign_if(j, "idle_gain_uv", s.idle_gain_uv);
    detail::assign_if(j, "move_gain_uv", s.move_gain_uv);
    detail::assign_if(j, "force_coupling", s.force_coupling);
    detail::assign_if(j, "center", s.center);
    detail::assign_if(j, "spatial_sigma", s.spatial_sigma);
    detail::assign_if(j, "global_weights", s.global_weights);
    detail::assign_if(j, "weight_jitter", s.weight_jitter);
    return s;
}

inline Json to_json(const SceneSpec& s) {
    Json neural = Json::array();
    for (const auto& n : s.neural) neural.push_back(to_json(n));
    Json centers = Json::array();
    for (const auto& c : s.emg.centers) centers.push_back({c.first, c.second});
    return Json{{"n_trials", s.n_trials},
                {"sample_rate", s.sample_rate},
                {"channels", s.channels},
                {"ha_side", s.ha_side == HaSide::left ? "left" : "right"},
                {"lead_in_s", s.lead_in_s},
                {"gap_min_s", s.gap_min_s},
                {"gap_max_s", s.gap_max_s},
                {"move_len_s", s.move_len_s},
                {"end_pad_s", s.end_pad_s},
                {"neural", neural},
                {"emg",
                 Json{{"n_sources", s.emg.n_sources},
                      {"band_low_hz", s.emg.band_low_hz},
                      {"band_high_hz", s.emg.band_high_hz},
                      {"band_order", s.emg.band_order},
                      {"gain_uv", s.emg.gain_uv},
                      {"force_coupling", s.emg.force_coupling},
                      {"rise_ms", s.emg.rise_ms},
                      {"fall_ms", s.emg.fall_ms},
                      {"centers", centers},
                      {"spatial_sigma", s.emg.spatial_sigma}}},
                {"force_min", s.force_min},
                {"force_max", s.force_max},
                {"force_ramp_ms", s.force_ramp_ms},
                {"force_noise", s.force_noise},
                {"noise_sigma_uv", s.noise_sigma_uv},
                {"seed", s.seed}};
}

inline SceneSpec scene_from_json(const Json& j) {
    detail::check_keys(j,
                       {"n_trials", "sample_rate", "channels", "ha_side", "lead_in_s", "gap_min_s",
                        "gap_max_s", "move_len_s", "end_pad_s", "neural", "emg", "force_min",
                        "force_max", "force_ramp_ms", "force_noise", "noise_sigma_uv", "seed"},
                       "scene spec");
    SceneSpec s = default_scene();
    detail::assign_if(j, "n_trials", s.n_trials);
    detail::assign_if(j, "sample_rate", s.sample_rate);
    detail::assign_if(j, "channels", s.channels);
    if (j.contains("ha_side")) {
        const std::string side = j.at("ha_side").get<std::string>();
        if (side == "left") s.ha_side = HaSide::left;
        else if (side == "right") s.ha_side = HaSide::right;
        else throw InvalidSpecError("ha_side must be 'left' or 'right'");
    }
    detail::assign_if(j, "lead_in_s", s.lead_in_s);
    detail::assign_if(j, "gap_min_s", s.gap_min_s);
    detail::assign_if(j, "gap_max_s", s.gap_max_s);
    detail::assign_if(j, "move_len_s", s.move_len_s);
    detail::assign_if(j, "end_pad_s", s.end_pad_s);
    if (j.contains("neural")) {
        s.neural.clear();
        for (const auto& nj : j.at("neural")) s.neural.push_back(neural_from_json(nj));
    }
    if (j.contains("emg")) {
        const Json& e = j.at("emg");
        detail::check_keys(e,
                           {"n_sources", "band_low_hz", "band_high_hz", "band_order", "gain_uv",
                            "force_coupling", "rise_ms", "fall_ms", "centers", "spatial_sigma"},
                           "scene emg");
        detail::assign_if(e, "n_sources", s.emg.n_sources);
        detail::assign_if(e, "band_low_hz", s.emg.band_low_hz);
        detail::assign_if(e, "band_high_hz", s.emg.band_high_hz);
        detail::assign_if(e, "band_order", s.emg.band_order);
        detail::assign_if(e, "gain_uv", s.emg.gain_uv);
        detail::assign_if(e, "force_coupling", s.emg.force_coupling);
        detail::assign_if(e, "rise_ms", s.emg.rise_ms);
        detail::assign_if(e, "fall_ms", s.emg.fall_ms);
        if (e.contains("centers")) {
            s.emg.centers.clear();
            for (const auto& c : e.at("centers"))
                s.emg.centers.emplace_back(c.at(0).get<double>(), c.at(1).get<double>());
        }
        detail::assign_if(e, "spatial_sigma", s.emg.spatial_sigma);
    }
    detail::assign_if(j, "force_min", s.force_min);
    detail::assign_if(j, "force_max", s.force_max);
    detail::assign_if(j, "force_ramp_ms", s.force_ramp_ms);
    detail::assign_if(j, "force_noise", s.force_noise);
    detail::assign_if(j, "noise_sigma_uv", s.noise_sigma_uv);
    detail::assign_if(j, "seed", s.seed);
    return s;
}

// -------------------------------------------------- file helpers

inline Json load_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open '" + path + "'");
    try {
        return Json::parse(in);
    } catch (const Json::parse_error& e) {
        throw ParseError(std::string("json parse error: ") + e.what(),
                         static_cast<std::size_t>(e.byte));
    }
}

// Manifests carry everything needed to reproduce a run byte-for-byte: the
// resolved config, seeds, and input digests. No timestamps or absolute paths.
inline void write_manifest(const std::string& path, const Json& manifest) {
    std::ofstream out(path);
    if (!out) throw Error("cannot open '" + path + "' for writing");
    out << manifest.dump(2) << "\n";
}

}  // namespace erase
