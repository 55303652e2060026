#pragma once

#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "erase/dsp.hpp"
#include "erase/emg.hpp"
#include "erase/montage.hpp"
#include "erase/pipeline.hpp"
#include "erase/rng.hpp"
#include "erase/trials.hpp"
#include "erase/types.hpp"

namespace erase {

// ---------------------------------------------------------------- scene spec

struct NeuralSourceSpec {
    std::string name = "source";
    bool is_tone = true;
    double tone_hz = 100.0;
    double band_low_hz = 80.0, band_high_hz = 160.0;
    int band_order = 4;
    double idle_gain_uv = 0.0;   // RMS during idle
    double move_gain_uv = 0.0;   // RMS during move at zero normalized force
    double force_coupling = 0.0; // move amplitude factor 1 + coupling * fhat
    std::string center = "C3";
    double spatial_sigma = 0.25;
    bool global_weights = false; // unit weights everywhere (plus jitter)
    double weight_jitter = 0.0;
};

struct EmgContaminationSpec {
    int n_sources = 4;
    double band_low_hz = 20.0, band_high_hz = 110.0;
    int band_order = 4;
    double gain_uv = 3.0;        // per-source RMS at zero normalized force
    double force_coupling = 2.0;
    double rise_ms = 100.0, fall_ms = 100.0;
    std::vector<std::pair<double, double>> centers = {
        {0.95, 0.35}, {0.95, -0.35}, {0.5, 0.8}, {0.5, -0.8}};
    double spatial_sigma = 0.45;
};

struct SceneSpec {
    int n_trials = 200;
    double sample_rate = 2000.0;
    std::vector<std::string> channels = {
        "C3", "C5", "C1", "FCC5h", "FCC3h", "CCP5h", "CCP3h", "F3", "P3", "T7",
        "C4", "C6", "C2", "FCC6h", "FCC4h", "CCP6h", "CCP4h", "F4", "P4", "T8"};
    HaSide ha_side = HaSide::left;
    double lead_in_s = 2.0;
    double gap_min_s = 3.0, gap_max_s = 5.0;
    double move_len_s = 2.0;
    double end_pad_s = 1.0;
    std::vector<NeuralSourceSpec> neural;  // empty -> defaults (see default_scene)
    EmgContaminationSpec emg;
    double force_min = 2.0, force_max = 10.0;  // sensor units
    double force_ramp_ms = 150.0;
    double force_noise = 0.02;
    double noise_sigma_uv = 3.0;  // Laplacian electrode noise
    std::uint64_t seed = 20250809;
};

inline std::vector<NeuralSourceSpec> default_neural_sources() {
    std::vector<NeuralSourceSpec> v;
    NeuralSourceSpec mu;
    mu.name = "mu_rhythm";
    mu.is_tone = true;
    mu.tone_hz = 10.0;
    mu.idle_gain_uv = 12.0;
    mu.move_gain_uv = 3.0;  // desynchronization
    v.push_back(mu);

    NeuralSourceSpec gtone;
    gtone.name = "gamma_oscillation";
    gtone.is_tone = true;
    gtone.tone_hz = 105.0;
    gtone.idle_gain_uv = 0.8;
    gtone.move_gain_uv = 3.0;
    gtone.force_coupling = 1.5;
    v.push_back(gtone);

    NeuralSourceSpec gnoise;
    gnoise.name = "gamma_broadband";
    gnoise.is_tone = false;
    gnoise.band_low_hz = 80.0;
    gnoise.band_high_hz = 160.0;
    gnoise.idle_gain_uv = 1.2;
    gnoise.move_gain_uv = 2.5;
    v.push_back(gnoise);

    NeuralSourceSpec line;
    line.name = "line_harmonic";
    line.is_tone = true;
    line.tone_hz = 120.0;
    line.idle_gain_uv = 2.0;
    line.move_gain_uv = 2.0;
    line.global_weights = true;
    line.weight_jitter = 0.15;
    v.push_back(line);
    return v;
}

inline SceneSpec default_scene() {
    SceneSpec spec;
    spec.neural = default_neural_sources();
    return spec;
}

// ---------------------------------------------------------------- scene

struct Scene {
    SceneSpec spec;
    Montage montage;          // scene channels only, HA mask applied
    Recording recording;      // scalp channels + trailing force channel
    Matrix clean, emg, noise; // scalp rows, same column count as recording
    std::vector<double> onsets_s;
    std::vector<double> trial_forces;  // per-trial plateau force (sensor units)

    // ground-truth component wrapped as a recording (scalp + force channel)
    Recording component_recording(const Matrix& rows) const {
        Recording out;
        out.sample_rate = recording.sample_rate;
        out.channels = recording.channels;
        out.data.resize(recording.n_channels(), recording.n_samples());
        out.data.topRows(rows.rows()) = rows;
        out.data.bottomRows(1) = recording.data.bottomRows(1);
        return out;
    }
    Recording clean_recording() const { return component_recording(clean); }
    Recording emg_recording() const { return component_recording(emg); }
};

namespace detail {

// per-sample envelope: idle_amp outside move epochs, ramping to amp[k] inside
inline Vector move_envelope(const std::vector<double>& amp_per_trial, double idle_amp,
                            const std::vector<double>& onsets_s, double move_len_s,
                            double ramp_ms, Eigen::Index n, double fs) {
    Vector env = Vector::Constant(n, idle_amp);
    const auto ramp = static_cast<Eigen::Index>(ramp_ms / 1000.0 * fs);
    for (std::size_t k = 0; k < onsets_s.size(); ++k) {
        const auto s = static_cast<Eigen::Index>(std::llround(onsets_s[k] * fs));
        const auto e = std::min<Eigen::Index>(
            s + static_cast<Eigen::Index>(std::llround(move_len_s * fs)), n);
        const double a = amp_per_trial[k];
        for (Eigen::Index i = s; i < e; ++i) env[i] = a;
        for (Eigen::Index i = 0; i < std::min(ramp, e - s); ++i)
            env[s + i] = idle_amp + (a - idle_amp) * double(i) / double(ramp);
        for (Eigen::Index i = 0; i < std::min(ramp, e - s); ++i)
            env[e - 1 - i] = idle_amp + (a - idle_amp) * double(i + 1) / double(ramp);
    }
    return env;
}

inline Vector unit_rms_tone(std::mt19937_64& gen, double hz, Eigen::Index n, double fs) {
    std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
    const double p0 = phase(gen);
    Vector v(n);
    for (Eigen::Index i = 0; i < n; ++i)
        v[i] = std::numbers::sqrt2 * std::sin(2.0 * std::numbers::pi * hz * double(i) / fs + p0);
    return v;
}

inline Vector unit_rms_band_noise(std::mt19937_64& gen, double lo, double hi, int order,
                                  Eigen::Index n, double fs) {
    TimeSeries white(gaussian_vector(gen, n), fs);
    TimeSeries filtered = filter_forward(white, design_butterworth(FilterSpec::band(lo, hi, order), fs));
    const double rms = std::sqrt(filtered.samples.squaredNorm() / double(n));
    return filtered.samples / rms;
}

inline Vector laplace_vector(std::mt19937_64& gen, Eigen::Index n, double sigma) {
    std::uniform_real_distribution<double> uni(-0.5, 0.5);
    Vector v(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double u = uni(gen);
        // unit-variance Laplace via inverse CDF
        v[i] = -std::copysign(std::log1p(-2.0 * std::abs(u)), u) / std::numbers::sqrt2 * sigma;
    }
    return v;
}

}  // namespace detail

// Ground-truth generator: recording = clean + projected EMG + electrode noise,
// with a trailing force channel. Decomposition matrices are retained as the
// oracle. Deterministic given the master seed.
inline Scene generate_scene(const SceneSpec& spec_in) {
    SceneSpec spec = spec_in;
    if (spec.neural.empty()) spec.neural = default_neural_sources();
    if (spec.n_trials < 1) throw InvalidSpecError("scene needs at least one trial");
    if (!(spec.gap_min_s <= spec.gap_max_s) || spec.gap_min_s < 0)
        throw InvalidSpecError("bad inter-trial gap range");
    if (!(spec.force_max > spec.force_min)) throw InvalidSpecError("force range is empty");

    Scene scene;
    scene.spec = spec;
    const Montage full = default_montage(spec.ha_side);
    for (const auto& ch : spec.channels)
        if (!full.contains(ch)) throw Error("electrode '" + ch + "' missing from montage");
    scene.montage = full.subset(spec.channels);

    const double fs = spec.sample_rate;
    const auto n_ch = static_cast<Eigen::Index>(spec.channels.size());

    // protocol timeline
    {
        std::mt19937_64 gen(derive_seed(spec.seed, 1));
        std::uniform_real_distribution<double> gap(spec.gap_min_s, spec.gap_max_s);
        double t = spec.lead_in_s;
        for (int k = 0; k < spec.n_trials; ++k) {
            t += gap(gen);
            scene.onsets_s.push_back(t);
            t += spec.move_len_s;
        }
    }
    const double duration_s = scene.onsets_s.back() + spec.move_len_s + spec.end_pad_s;
    const auto n = static_cast<Eigen::Index>(std::llround(duration_s * fs));

    // per-trial forces, normalized coupling factor
    std::vector<double> fhat(static_cast<std::size_t>(spec.n_trials));
    {
        std::mt19937_64 gen(derive_seed(spec.seed, 2));
        std::uniform_real_distribution<double> f(spec.force_min, spec.force_max);
        for (int k = 0; k < spec.n_trials; ++k) scene.trial_forces.push_back(f(gen));
        const double fmin = *std::min_element(scene.trial_forces.begin(), scene.trial_forces.end());
        const double fmax = *std::max_element(scene.trial_forces.begin(), scene.trial_forces.end());
        for (std::size_t k = 0; k < fhat.size(); ++k)
            fhat[k] = (scene.trial_forces[k] - fmin) / (fmax - fmin);
    }

    scene.clean = Matrix::Zero(n_ch, n);
    scene.emg = Matrix::Zero(n_ch, n);

    auto weights_around = [&](double cx, double cy, double sigma) {
        Vector w(n_ch);
        for (Eigen::Index i = 0; i < n_ch; ++i) {
            const auto& p = scene.montage.positions[static_cast<std::size_t>(i)];
            const double d2 = (p.x() - cx) * (p.x() - cx) + (p.y() - cy) * (p.y() - cy);
            w[i] = std::exp(-d2 / (2.0 * sigma * sigma));
        }
        return w;
    };

    // neural sources
    for (std::size_t s = 0; s < spec.neural.size(); ++s) {
        const NeuralSourceSpec& src = spec.neural[s];
        std::mt19937_64 gen(derive_seed(spec.seed, 3, s));
        Vector carrier = src.is_tone
                             ? detail::unit_rms_tone(gen, src.tone_hz, n, fs)
                             : detail::unit_rms_band_noise(gen, src.band_low_hz, src.band_high_hz,
                                                           src.band_order, n, fs);
        std::vector<double> amps(static_cast<std::size_t>(spec.n_trials));
        for (std::size_t k = 0; k < amps.size(); ++k)
            amps[k] = src.move_gain_uv * (1.0 + src.force_coupling * fhat[k]);
        const Vector env = detail::move_envelope(amps, src.idle_gain_uv, scene.onsets_s,
                                                 spec.move_len_s, 100.0, n, fs);
        Vector w;
        if (src.global_weights) {
            w = Vector::Ones(n_ch);
            if (src.weight_jitter > 0) w += src.weight_jitter * gaussian_vector(gen, n_ch);
        } else {
            const auto& p =
                scene.montage.positions[static_cast<std::size_t>(scene.montage.index_of(src.center))];
            w = weights_around(p.x(), p.y(), src.spatial_sigma);
        }
        scene.clean.noalias() += w * carrier.cwiseProduct(env).transpose();
    }

    // EMG contamination
    {
        const EmgContaminationSpec& e = spec.emg;
        if (e.centers.size() < static_cast<std::size_t>(e.n_sources))
            throw InvalidSpecError("emg contamination needs a center per source");
        std::vector<double> amps(static_cast<std::size_t>(spec.n_trials));
        for (std::size_t k = 0; k < amps.size(); ++k)
            amps[k] = e.gain_uv * (1.0 + e.force_coupling * fhat[k]);
        for (int s = 0; s < e.n_sources; ++s) {
            std::mt19937_64 gen(derive_seed(spec.seed, 4, static_cast<std::uint64_t>(s)));
            const Vector carrier =
                detail::unit_rms_band_noise(gen, e.band_low_hz, e.band_high_hz, e.band_order, n, fs);
            const Vector env = detail::move_envelope(amps, 0.0, scene.onsets_s, spec.move_len_s,
                                                     e.rise_ms, n, fs);
            const Vector w = weights_around(e.centers[static_cast<std::size_t>(s)].first,
                                            e.centers[static_cast<std::size_t>(s)].second,
                                            e.spatial_sigma);
            scene.emg.noalias() += w * carrier.cwiseProduct(env).transpose();
        }
    }

    // electrode noise (heavy-tailed)
    scene.noise.resize(n_ch, n);
    for (Eigen::Index c = 0; c < n_ch; ++c) {
        std::mt19937_64 gen(derive_seed(spec.seed, 5, static_cast<std::uint64_t>(c)));
        scene.noise.row(c) = detail::laplace_vector(gen, n, spec.noise_sigma_uv).transpose();
    }

    // force channel: trapezoid to the per-trial target during move
    Vector force;
    {
        std::mt19937_64 gen(derive_seed(spec.seed, 6));
        force = detail::move_envelope(scene.trial_forces, 0.0, scene.onsets_s, spec.move_len_s,
                                      spec.force_ramp_ms, n, fs);
        if (spec.force_noise > 0) force += gaussian_vector(gen, n, spec.force_noise);
    }

    scene.recording.sample_rate = fs;
    for (const auto& ch : spec.channels) scene.recording.channels.push_back({ch, ChannelKind::scalp});
    scene.recording.channels.push_back({"FORCE", ChannelKind::force});
    scene.recording.data.resize(n_ch + 1, n);
    scene.recording.data.topRows(n_ch) = (scene.clean + scene.emg) + scene.noise;
    scene.recording.data.bottomRows(1) = force.transpose();
    return scene;
}

// ---------------------------------------------------------------- oracle

struct OracleParams {
    BandDef band{80.0, 160.0};
    int band_order = 4;
    double smooth_hz = 4.0;
    int smooth_order = 4;
    Eigen::Index transient_skip = 512;
    double planted_r2 = 0.5;  // IC counts as planted EMG above this subspace R^2
};

struct OracleScores {
    Vector residual_emg_fraction;      // per scalp channel
    double residual_emg_fraction_total = 0.0;  // sum of residual over sum of injected
    std::vector<std::string> motor_labels;
    Vector distortion_corr;            // cleaned-vs-clean envelope corr, per motor electrode
    std::vector<int> planted;          // component indices with EMG-subspace R^2 > threshold
    Vector component_emg_r2;
    double recall = 1.0;
    double precision = 1.0;
};

// Score an ERASE run against scene ground truth, all in concatenated trial
// space: `input` is the recording the pipeline saw, `clean_cat`/`emg_cat` the
// matching ground-truth components.
inline OracleScores oracle_scores(const EraseResult& result, const EraseConfig& cfg,
                                  const Recording& input, const Recording& clean_cat,
                                  const Recording& emg_cat,
                                  const std::vector<std::string>& motor_labels,
                                  const OracleParams& params = {}) {
    if (input.n_samples() != result.cleaned.n_samples() ||
        clean_cat.n_samples() != input.n_samples() || emg_cat.n_samples() != input.n_samples())
        throw InvalidSpecError("oracle inputs are misaligned");

    OracleScores out;
    const BiquadCascade band = design_butterworth(
        FilterSpec::band(params.band.low_hz, params.band.high_hz, params.band_order),
        input.sample_rate);

    // (a) residual EMG power fraction per channel; with no injected EMG the
    // fraction is 0 whenever the residual is negligible against the channel
    const Eigen::Index n_ch = result.cleaned.n_channels();
    out.residual_emg_fraction.resize(n_ch);
    double res_total = 0.0, emg_total = 0.0, ref_total = 0.0;
    for (Eigen::Index c = 0; c < n_ch; ++c) {
        const auto& label = result.cleaned.channels[static_cast<std::size_t>(c)].label;
        const Eigen::Index ci = input.index_of(label);
        Vector residual = result.cleaned.data.row(c) - input.data.row(ci) +
                          emg_cat.data.row(emg_cat.index_of(label));
        const Vector emg_row = emg_cat.data.row(emg_cat.index_of(label));
        const double emg_power =
            filter_forward(TimeSeries(emg_row, input.sample_rate), band).samples.squaredNorm();
        const double res_power =
            filter_forward(TimeSeries(std::move(residual), input.sample_rate), band)
                .samples.squaredNorm();
        const double ref_power =
            filter_forward(TimeSeries(input.data.row(ci).transpose(), input.sample_rate), band)
                .samples.squaredNorm();
        if (emg_power > 1e-12 * ref_power) {
            out.residual_emg_fraction[c] = res_power / emg_power;
        } else {
            out.residual_emg_fraction[c] =
                res_power <= 1e-9 * ref_power ? 0.0 : std::numeric_limits<double>::infinity();
        }
        res_total += res_power;
        emg_total += emg_power;
        ref_total += ref_power;
    }
    if (emg_total > 1e-12 * ref_total) {
        out.residual_emg_fraction_total = res_total / emg_total;
    } else {
        out.residual_emg_fraction_total = res_total <= 1e-9 * ref_total
                                              ? 0.0
                                              : std::numeric_limits<double>::infinity();
    }

    // (b) high-gamma envelope correlation at motor electrodes
    out.motor_labels = motor_labels;
    out.distortion_corr.resize(static_cast<Eigen::Index>(motor_labels.size()));
    const FilterSpec band_spec =
        FilterSpec::band(params.band.low_hz, params.band.high_hz, params.band_order);
    const FilterSpec smooth_spec = FilterSpec::low(params.smooth_hz, params.smooth_order);
    for (std::size_t m = 0; m < motor_labels.size(); ++m) {
        const Vector e1 =
            envelope_power(clean_cat.series(motor_labels[m]), band_spec, smooth_spec).samples;
        const Vector e2 =
            envelope_power(result.cleaned.series(motor_labels[m]), band_spec, smooth_spec).samples;
        const Eigen::Index len = e1.size() - params.transient_skip;
        const Vector a = e1.tail(len).array() - e1.tail(len).mean();
        const Vector b = e2.tail(len).array() - e2.tail(len).mean();
        out.distortion_corr[static_cast<Eigen::Index>(m)] =
            a.dot(b) / std::sqrt(a.squaredNorm() * b.squaredNorm());
    }

    // (c) rejected-component recall/precision vs planted EMG components
    const auto sources = simulate_emg(cfg.emg, input.n_samples(), input.sample_rate);
    const Recording augmented = augment_with_virtual_channels(input, sources);
    const Matrix components = result.model.transform(augmented.data);

    // orthonormal basis of the true EMG span: contamination rows + virtual sources
    Matrix basis(emg_cat.n_channels() + static_cast<Eigen::Index>(sources.size()),
                 input.n_samples());
    basis.topRows(emg_cat.n_channels()) = emg_cat.data;
    for (std::size_t v = 0; v < sources.size(); ++v)
        basis.row(emg_cat.n_channels() + static_cast<Eigen::Index>(v)) =
            sources[v].samples.transpose();
    basis = basis.colwise() - basis.rowwise().mean().eval();
    Eigen::BDCSVD<Matrix> svd(basis.transpose(), Eigen::ComputeThinU);
    Eigen::Index rank = 0;
    for (Eigen::Index i = 0; i < svd.singularValues().size(); ++i)
        if (svd.singularValues()[i] > svd.singularValues()[0] * 1e-9) ++rank;
    const Matrix q = svd.matrixU().leftCols(rank);  // samples x rank, orthonormal

    out.component_emg_r2.resize(components.rows());
    for (Eigen::Index j = 0; j < components.rows(); ++j) {
        Vector s = components.row(j).transpose();
        s.array() -= s.mean();
        const double total = s.squaredNorm();
        const double projected = (q.transpose() * s).squaredNorm();
        out.component_emg_r2[j] = total > 0 ? projected / total : 0.0;
        if (out.component_emg_r2[j] > params.planted_r2)
            out.planted.push_back(static_cast<int>(j));
    }
    int hit = 0;
    for (int j : out.planted)
        if (result.rejected.count(j)) ++hit;
    out.recall = out.planted.empty() ? 1.0 : double(hit) / double(out.planted.size());
    out.precision = result.rejected.empty()
                        ? 1.0
                        : double(hit) / double(result.rejected.size());
    return out;
}

}  // namespace erase
