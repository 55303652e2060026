#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "erase/types.hpp"

namespace erase {

struct Trial {
    Matrix data;              // channels x (idle_len + move_len)
    double mean_force = 0.0;  // mean force-channel value during the move epoch
};

// Extracted per-trial epochs (idle then move) for the non-force channels.
struct TrialSet {
    std::vector<Trial> trials;
    std::vector<Channel> channels;  // rows of each trial's data
    Eigen::Index idle_len = 0;      // samples
    Eigen::Index move_len = 0;
    double sample_rate = 0.0;
    int skipped_events = 0;  // events too close to the recording edges

    Eigen::Index trial_len() const { return idle_len + move_len; }
    Eigen::Index n_trials() const { return static_cast<Eigen::Index>(trials.size()); }
    Eigen::Index n_channels() const { return static_cast<Eigen::Index>(channels.size()); }

    std::vector<double> forces() const {
        std::vector<double> out;
        out.reserve(trials.size());
        for (const auto& t : trials) out.push_back(t.mean_force);
        return out;
    }

    Eigen::Index index_of(const std::string& label) const {
        for (std::size_t i = 0; i < channels.size(); ++i)
            if (channels[i].label == label) return static_cast<Eigen::Index>(i);
        throw Error("channel '" + label + "' not present in trial set");
    }

    // concatenation boundary table: trial k occupies [table[k], table[k+1])
    std::vector<Eigen::Index> boundaries() const {
        std::vector<Eigen::Index> out(trials.size() + 1);
        for (std::size_t k = 0; k <= trials.size(); ++k)
            out[k] = static_cast<Eigen::Index>(k) * trial_len();
        return out;
    }
};

// Cut one trial per onset: idle epoch = idle_len_s immediately before the
// onset, move epoch = move_len_s from the onset. Events without enough
// surrounding data are skipped and counted.
inline TrialSet segment_trials(const Recording& rec, const std::vector<double>& onsets_s,
                               double idle_len_s = 1.0, double move_len_s = 2.0) {
    if (rec.sample_rate <= 0) throw InvalidSpecError("recording sample rate must be positive");
    TrialSet ts;
    ts.sample_rate = rec.sample_rate;
    ts.idle_len = static_cast<Eigen::Index>(std::llround(idle_len_s * rec.sample_rate));
    ts.move_len = static_cast<Eigen::Index>(std::llround(move_len_s * rec.sample_rate));
    if (ts.idle_len < 1 || ts.move_len < 1)
        throw InvalidSpecError("idle/move lengths must be positive");

    std::vector<Eigen::Index> keep_rows;
    Eigen::Index force_row = -1;
    for (Eigen::Index c = 0; c < rec.n_channels(); ++c) {
        if (rec.channels[static_cast<std::size_t>(c)].kind == ChannelKind::force) {
            force_row = c;
        } else {
            keep_rows.push_back(c);
            ts.channels.push_back(rec.channels[static_cast<std::size_t>(c)]);
        }
    }
    if (keep_rows.empty()) throw InvalidSpecError("recording has no non-force channels");

    std::vector<double> sorted = onsets_s;
    std::sort(sorted.begin(), sorted.end());
    for (double onset_s : sorted) {
        const auto onset = static_cast<Eigen::Index>(std::llround(onset_s * rec.sample_rate));
        if (onset - ts.idle_len < 0 || onset + ts.move_len > rec.n_samples()) {
            ++ts.skipped_events;
            continue;
        }
        Trial t;
        t.data.resize(static_cast<Eigen::Index>(keep_rows.size()), ts.trial_len());
        for (std::size_t r = 0; r < keep_rows.size(); ++r)
            t.data.row(static_cast<Eigen::Index>(r)) =
                rec.data.row(keep_rows[r]).segment(onset - ts.idle_len, ts.trial_len());
        if (force_row >= 0)
            t.mean_force = rec.data.row(force_row).segment(onset, ts.move_len).mean();
        ts.trials.push_back(std::move(t));
    }
    return ts;
}

// Channelwise concatenation in trial order.
inline Recording concatenate_trials(const TrialSet& ts) {
    if (ts.trials.empty()) throw InvalidSpecError("cannot concatenate an empty trial set");
    Recording rec;
    rec.channels = ts.channels;
    rec.sample_rate = ts.sample_rate;
    rec.data.resize(ts.n_channels(), ts.n_trials() * ts.trial_len());
    for (Eigen::Index k = 0; k < ts.n_trials(); ++k)
        rec.data.middleCols(k * ts.trial_len(), ts.trial_len()) =
            ts.trials[static_cast<std::size_t>(k)].data;
    return rec;
}

// Rewrap concatenated data (e.g. a cleaned recording) as a TrialSet, reusing
// the trial layout and per-trial forces of `like`.
inline TrialSet trialset_from_concatenated(const Recording& rec, const TrialSet& like) {
    if (rec.n_samples() != like.n_trials() * like.trial_len())
        throw InvalidSpecError("concatenated length does not match the trial layout");
    TrialSet ts;
    ts.channels = rec.channels;
    ts.idle_len = like.idle_len;
    ts.move_len = like.move_len;
    ts.sample_rate = rec.sample_rate;
    for (Eigen::Index k = 0; k < like.n_trials(); ++k) {
        Trial t;
        t.data = rec.data.middleCols(k * like.trial_len(), like.trial_len());
        t.mean_force = like.trials[static_cast<std::size_t>(k)].mean_force;
        ts.trials.push_back(std::move(t));
    }
    return ts;
}

}  // namespace erase
