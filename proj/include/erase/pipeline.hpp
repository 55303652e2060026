#pragma once

#include <algorithm>
#include <set>
#include <string>
#include <vector>

#include "erase/dsp.hpp"
#include "erase/emg.hpp"
#include "erase/fastica.hpp"
#include "erase/trials.hpp"
#include "erase/types.hpp"

namespace erase {

// Append simulated-EMG time series as extra channels; EEG rows are untouched.
inline Recording augment_with_virtual_channels(const Recording& eeg,
                                               const std::vector<TimeSeries>& sources) {
    Recording out;
    out.sample_rate = eeg.sample_rate;
    out.channels = eeg.channels;
    out.data.resize(eeg.n_channels() + static_cast<Eigen::Index>(sources.size()),
                    eeg.n_samples());
    out.data.topRows(eeg.n_channels()) = eeg.data;
    for (std::size_t v = 0; v < sources.size(); ++v) {
        if (sources[v].samples.size() != eeg.n_samples())
            throw InvalidSpecError("virtual channel " + std::to_string(v) + " has " +
                                   std::to_string(sources[v].samples.size()) + " samples, EEG has " +
                                   std::to_string(eeg.n_samples()));
        if (sources[v].sample_rate != eeg.sample_rate)
            throw InvalidSpecError("virtual channel sample rate mismatch");
        out.channels.push_back({"EMG" + std::to_string(v + 1), ChannelKind::virtual_emg});
        out.data.row(eeg.n_channels() + static_cast<Eigen::Index>(v)) =
            sources[v].samples.transpose();
    }
    return out;
}

// Loading-ratio score per component: mean |A_ij| over virtual channels divided
// by mean |A_ij| over all channels, columns normalized to unit length first.
// Components with score > theta are rejected.
inline std::pair<std::set<int>, Vector> classify_artifact_ics(const IcaModel& model,
                                                              const std::vector<bool>& virtual_mask,
                                                              double theta) {
    const Eigen::Index n_ch = model.mixing.rows();
    if (static_cast<Eigen::Index>(virtual_mask.size()) != n_ch)
        throw InvalidSpecError("virtual mask length does not match channel count");
    Eigen::Index n_virtual = 0;
    for (bool b : virtual_mask) n_virtual += b ? 1 : 0;
    if (n_virtual == 0) throw InvalidSpecError("no virtual channels flagged");

    Vector scores(model.n_components);
    std::set<int> rejected;
    for (int j = 0; j < model.n_components; ++j) {
        const Vector col = model.mixing.col(j);
        const double norm = col.norm();
        if (norm <= 0.0)
            throw Error("mixing column of component " + std::to_string(j) + " is zero");
        double virt_sum = 0.0, all_sum = 0.0;
        for (Eigen::Index i = 0; i < n_ch; ++i) {
            const double a = std::abs(col[i]) / norm;
            all_sum += a;
            if (virtual_mask[static_cast<std::size_t>(i)]) virt_sum += a;
        }
        const double score =
            (virt_sum / double(n_virtual)) / (all_sum / double(n_ch));
        scores[j] = score;
        if (score > theta) rejected.insert(j);
    }
    return {rejected, scores};
}

struct EraseConfig {
    EmgSpec emg;       // bursts filled from the trial layout by the caller
    FastIcaConfig ica;
    double theta = 1.0;
    int retries = 2;   // extra ICA attempts with derived seeds on non-convergence
};

struct EraseResult {
    Recording cleaned;  // original EEG channels only
    IcaModel model;
    std::set<int> rejected;
    Vector rejection_scores;
    int ica_attempts = 1;
};

namespace detail {

inline IcaModel fit_with_retries(const Matrix& data, FastIcaConfig cfg, int retries,
                                 int& attempts) {
    for (int attempt = 0;; ++attempt) {
        attempts = attempt + 1;
        try {
            return fit_fastica(data, cfg);
        } catch (const ConvergenceError&) {
            if (attempt >= retries) throw;
            cfg.seed = derive_seed(cfg.seed, 0x1CA, static_cast<std::uint64_t>(attempt + 1));
        }
    }
}

inline Recording drop_virtual_channels(const Recording& rec, const Matrix& data) {
    Recording out;
    out.sample_rate = rec.sample_rate;
    std::vector<Eigen::Index> keep;
    for (Eigen::Index c = 0; c < rec.n_channels(); ++c)
        if (rec.channels[static_cast<std::size_t>(c)].kind != ChannelKind::virtual_emg) {
            keep.push_back(c);
            out.channels.push_back(rec.channels[static_cast<std::size_t>(c)]);
        }
    out.data.resize(static_cast<Eigen::Index>(keep.size()), data.cols());
    for (std::size_t r = 0; r < keep.size(); ++r)
        out.data.row(static_cast<Eigen::Index>(r)) = data.row(keep[r]);
    return out;
}

}  // namespace detail

// ERASE: simulate reference EMG, append as virtual electrodes, run ICA over the
// augmented data, reject components by loading ratio, reconstruct, and drop the
// virtual channels. `eeg` is expected to be bandpassed concatenated trials.
inline EraseResult run_erase(const Recording& eeg, const EraseConfig& cfg) {
    const auto sources = simulate_emg(cfg.emg, eeg.n_samples(), eeg.sample_rate);
    const Recording augmented = augment_with_virtual_channels(eeg, sources);

    EraseResult result;
    result.model =
        detail::fit_with_retries(augmented.data, cfg.ica, cfg.retries, result.ica_attempts);

    std::vector<bool> virtual_mask(static_cast<std::size_t>(augmented.n_channels()), false);
    for (Eigen::Index c = 0; c < augmented.n_channels(); ++c)
        virtual_mask[static_cast<std::size_t>(c)] =
            augmented.channels[static_cast<std::size_t>(c)].kind == ChannelKind::virtual_emg;
    auto [rejected, scores] = classify_artifact_ics(result.model, virtual_mask, cfg.theta);
    result.rejected = std::move(rejected);
    result.rejection_scores = std::move(scores);

    const Matrix components = result.model.transform(augmented.data);
    const Matrix reconstructed = result.model.inverse_transform(components, result.rejected);
    result.cleaned = detail::drop_virtual_channels(augmented, reconstructed);
    return result;
}

struct ConventionalIcaConfig {
    FastIcaConfig ica;
    double gamma_fraction = 0.5;        // reject when band share exceeds this
    BandDef gamma_band{80.0, 160.0};
    StftParams stft;
    int retries = 2;
};

// Fraction of total spectral power (Welch mean over frames) inside the band.
inline double band_power_fraction(const TimeSeries& ts, const BandDef& band,
                                  const StftParams& stft) {
    const Spectrogram sp = stft_power(ts, stft);
    double total = 0.0, in_band = 0.0;
    for (std::size_t k = 0; k < sp.freqs_hz.size(); ++k) {
        const double p = sp.power.col(static_cast<Eigen::Index>(k)).mean();
        total += p;
        if (sp.freqs_hz[k] >= band.low_hz && sp.freqs_hz[k] <= band.high_hz) in_band += p;
    }
    if (total <= 0.0) throw Error("component has zero spectral power");
    return in_band / total;
}

// Baseline comparison condition: ICA on the EEG alone, rejecting components
// whose high-gamma share of power exceeds the configured fraction.
inline EraseResult run_conventional_ica(const Recording& eeg, const ConventionalIcaConfig& cfg) {
    EraseResult result;
    result.model = detail::fit_with_retries(eeg.data, cfg.ica, cfg.retries, result.ica_attempts);

    const Matrix components = result.model.transform(eeg.data);
    result.rejection_scores.resize(result.model.n_components);
    for (int j = 0; j < result.model.n_components; ++j) {
        const double frac = band_power_fraction(
            TimeSeries(components.row(j).transpose(), eeg.sample_rate), cfg.gamma_band, cfg.stft);
        result.rejection_scores[j] = frac;
        if (frac > cfg.gamma_fraction) result.rejected.insert(j);
    }
    const Matrix reconstructed = result.model.inverse_transform(components, result.rejected);
    result.cleaned = eeg;
    result.cleaned.data = reconstructed;
    return result;
}

// Burst schedule matching a concatenated trial layout: one burst per move
// epoch, amplitude 1 + force_coupling * (normalized per-trial mean force).
inline std::vector<Burst> emg_schedule_for_trials(const TrialSet& trials,
                                                  double force_coupling = 0.0) {
    std::vector<Burst> bursts;
    const double fs = trials.sample_rate;
    const auto forces = trials.forces();
    double fmin = 0.0, fmax = 0.0;
    if (!forces.empty()) {
        fmin = *std::min_element(forces.begin(), forces.end());
        fmax = *std::max_element(forces.begin(), forces.end());
    }
    for (Eigen::Index k = 0; k < trials.n_trials(); ++k) {
        Burst b;
        b.onset_s = double(k * trials.trial_len() + trials.idle_len) / fs;
        b.offset_s = double((k + 1) * trials.trial_len()) / fs;
        double fhat = 0.0;
        if (fmax > fmin)
            fhat = (forces[static_cast<std::size_t>(k)] - fmin) / (fmax - fmin);
        b.amplitude = 1.0 + force_coupling * fhat;
        bursts.push_back(b);
    }
    return bursts;
}

}  // namespace erase
