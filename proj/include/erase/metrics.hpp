#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "erase/dsp.hpp"
#include "erase/montage.hpp"
#include "erase/stats.hpp"
#include "erase/trials.hpp"
#include "erase/types.hpp"

namespace erase {

// ---------------------------------------------------------------- band power

struct BandPowerSummary {
    std::vector<std::string> electrodes;
    BandDef band;
    Vector mean_move_z;  // per electrode, mean over trials of per-trial move-frame means
    Vector mean_idle_z;
    Vector p_value;      // move vs idle rank-sum per electrode
    std::vector<bool> significant;  // p < alpha
    Matrix move_trial_z;  // electrodes x trials
    Matrix idle_trial_z;
    int n_trials = 0;
    double alpha = 0.05;
};

struct BandPowerParams {
    StftParams stft;
    double alpha = 0.05;
};

// STFT per trial -> z-score each (channel, frequency) series over all frames
// -> band mean -> per-trial move/idle frame means -> rank-sum per electrode.
// Frames straddling the idle/move boundary are excluded from the means.
inline BandPowerSummary band_power_z(const TrialSet& trials, const BandDef& band,
                                     const BandPowerParams& params = {}) {
    if (trials.trials.empty()) throw InvalidSpecError("band power needs a nonempty trial set");
    const Eigen::Index n_trials = trials.n_trials();
    const Eigen::Index trial_len = trials.trial_len();
    const Eigen::Index win = params.stft.window_len, hop = params.stft.hop;
    if (win > trial_len) throw InvalidSpecError("stft window longer than a trial");
    const Eigen::Index frames_per_trial = (trial_len - win) / hop + 1;

    std::vector<bool> frame_idle, frame_move;
    for (Eigen::Index f = 0; f < frames_per_trial; ++f) {
        const Eigen::Index start = f * hop;
        frame_idle.push_back(start + win <= trials.idle_len);
        frame_move.push_back(start >= trials.idle_len);
    }

    BandPowerSummary out;
    out.band = band;
    out.alpha = params.alpha;
    out.n_trials = static_cast<int>(n_trials);
    const Eigen::Index n_elec = trials.n_channels();
    out.mean_move_z.resize(n_elec);
    out.mean_idle_z.resize(n_elec);
    out.p_value.resize(n_elec);
    out.move_trial_z.resize(n_elec, n_trials);
    out.idle_trial_z.resize(n_elec, n_trials);

    for (Eigen::Index c = 0; c < n_elec; ++c) {
        const std::string& label = trials.channels[static_cast<std::size_t>(c)].label;
        out.electrodes.push_back(label);

        Matrix all_power;  // (trials * frames) x bins
        std::vector<double> freqs;
        for (Eigen::Index k = 0; k < n_trials; ++k) {
            const TimeSeries seg(
                trials.trials[static_cast<std::size_t>(k)].data.row(c).transpose(),
                trials.sample_rate);
            const Spectrogram sp = stft_power(seg, params.stft);
            if (k == 0) {
                freqs = sp.freqs_hz;
                all_power.resize(n_trials * sp.power.rows(), sp.power.cols());
            }
            all_power.middleRows(k * frames_per_trial, frames_per_trial) = sp.power;
        }

        Spectrogram stacked;
        stacked.power = std::move(all_power);
        stacked.freqs_hz = freqs;
        stacked.window_len = win;
        stacked.hop = hop;
        const Spectrogram z = zscore_spectrogram(stacked, label);
        const Vector band_z = band_mean(z, band);

        for (Eigen::Index k = 0; k < n_trials; ++k) {
            double move_sum = 0.0, idle_sum = 0.0;
            int move_n = 0, idle_n = 0;
            for (Eigen::Index f = 0; f < frames_per_trial; ++f) {
                const double v = band_z[k * frames_per_trial + f];
                if (frame_move[static_cast<std::size_t>(f)]) {
                    move_sum += v;
                    ++move_n;
                } else if (frame_idle[static_cast<std::size_t>(f)]) {
                    idle_sum += v;
                    ++idle_n;
                }
            }
            if (move_n == 0 || idle_n == 0)
                throw InvalidSpecError("no frames fully inside idle or move epochs");
            out.move_trial_z(c, k) = move_sum / move_n;
            out.idle_trial_z(c, k) = idle_sum / idle_n;
        }
        out.mean_move_z[c] = out.move_trial_z.row(c).mean();
        out.mean_idle_z[c] = out.idle_trial_z.row(c).mean();

        std::vector<double> mv(out.move_trial_z.row(c).begin(), out.move_trial_z.row(c).end());
        std::vector<double> id(out.idle_trial_z.row(c).begin(), out.idle_trial_z.row(c).end());
        out.p_value[c] = wilcoxon_ranksum(mv, id).p;
        out.significant.push_back(out.p_value[c] < params.alpha);
    }
    return out;
}

// 100 * (Z_before - Z_after) / Z_before over the electrode set, where Z is the
// mean move-epoch z-scored band power.
inline double percent_reduction(const BandPowerSummary& before, const BandPowerSummary& after,
                                const std::vector<std::string>& electrodes) {
    if (electrodes.empty()) throw InvalidSpecError("percent reduction needs electrodes");
    auto mean_over = [&](const BandPowerSummary& s) {
        double acc = 0.0;
        for (const auto& e : electrodes) {
            bool found = false;
            for (std::size_t i = 0; i < s.electrodes.size(); ++i)
                if (s.electrodes[i] == e) {
                    acc += s.mean_move_z[static_cast<Eigen::Index>(i)];
                    found = true;
                    break;
                }
            if (!found) throw Error("electrode '" + e + "' missing from band power summary");
        }
        return acc / static_cast<double>(electrodes.size());
    };
    const double zb = mean_over(before), za = mean_over(after);
    if (zb <= 0.0)
        throw InvalidSpecError("percent reduction undefined for nonpositive baseline power " +
                               std::to_string(zb));
    return 100.0 * (zb - za) / zb;
}

// ---------------------------------------------------------------- SNR

struct SnrParams {
    int band_order = 4;
    double smooth_hz = 4.0;
    int smooth_order = 4;
    Eigen::Index transient_skip = 512;  // samples dropped from the idle mean
};

// Per-trial 10*log10(mean move envelope power / mean idle envelope power).
inline std::vector<double> snr_db(const TrialSet& trials, const std::string& electrode,
                                  const BandDef& band, const SnrParams& params = {}) {
    const Eigen::Index c = trials.index_of(electrode);
    const FilterSpec band_spec = FilterSpec::band(band.low_hz, band.high_hz, params.band_order);
    const FilterSpec smooth_spec = FilterSpec::low(params.smooth_hz, params.smooth_order);
    if (params.transient_skip >= trials.idle_len)
        throw InvalidSpecError("transient skip consumes the whole idle epoch");

    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(trials.n_trials()));
    for (const auto& trial : trials.trials) {
        const TimeSeries ts(trial.data.row(c).transpose(), trials.sample_rate);
        const TimeSeries env = envelope_power(ts, band_spec, smooth_spec);
        const double idle_mean =
            env.samples.segment(params.transient_skip, trials.idle_len - params.transient_skip)
                .mean();
        const double move_mean = env.samples.segment(trials.idle_len, trials.move_len).mean();
        if (idle_mean <= 0.0 || move_mean <= 0.0)
            throw Error("nonpositive mean envelope for electrode '" + electrode + "'");
        out.push_back(10.0 * std::log10(move_mean / idle_mean));
    }
    return out;
}

// ---------------------------------------------------------------- fractal dimension

// FD = ln(N-1) / (ln(N-1) + ln(d/L)) over non-overlapping data vectors of
// consecutive samples (time_unit_ms worth each; 2 samples at 2000 Hz), with
// L the summed Euclidean distance between successive vectors and d the
// farthest vector from the first.
inline double fractal_dimension(const TimeSeries& epoch, double time_unit_ms = 1.0,
                                double amp_unit_uv = 1.0) {
    const Eigen::Index n = epoch.samples.size();
    if (n < 4) throw InvalidSpecError("fractal dimension needs at least 4 samples");
    if (amp_unit_uv <= 0 || time_unit_ms <= 0)
        throw InvalidSpecError("quantization units must be positive");
    Eigen::Index spv = static_cast<Eigen::Index>(
        std::llround(time_unit_ms / 1000.0 * epoch.sample_rate));
    spv = std::max<Eigen::Index>(spv, 1);
    if (spv >= n / 2) throw InvalidSpecError("data vector length must stay below N/2");
    const Eigen::Index m = n / spv;  // vector count

    double length = 0.0, dmax = 0.0;
    for (Eigen::Index k = 1; k < m; ++k) {
        double step = 0.0, from_first = 0.0;
        for (Eigen::Index j = 0; j < spv; ++j) {
            const double prev = epoch.samples[(k - 1) * spv + j] / amp_unit_uv;
            const double cur = epoch.samples[k * spv + j] / amp_unit_uv;
            const double first = epoch.samples[j] / amp_unit_uv;
            step += (cur - prev) * (cur - prev);
            from_first += (cur - first) * (cur - first);
        }
        length += std::sqrt(step);
        dmax = std::max(dmax, std::sqrt(from_first));
    }
    if (length <= 0.0 || dmax <= 0.0)
        throw DegenerateEpochError("constant epoch has no path length");
    const double log_n1 = std::log(static_cast<double>(n) - 1.0);
    return log_n1 / (log_n1 + std::log(dmax / length));
}

// FD(move) - FD(idle)
inline double relative_fd(const TimeSeries& idle, const TimeSeries& move,
                          double time_unit_ms = 1.0, double amp_unit_uv = 1.0) {
    return fractal_dimension(move, time_unit_ms, amp_unit_uv) -
           fractal_dimension(idle, time_unit_ms, amp_unit_uv);
}

// ---------------------------------------------------------------- force levels

struct ForceLevels {
    std::vector<int> assignment;  // per trial, 1-based level
    std::vector<double> centers;  // bin centers
    std::vector<int> counts;      // trials per level
    double bin_width = 0.0;
};

// Evenly discretize per-trial mean forces into n_levels bins from min to max;
// the maximum lands in the top level.
inline ForceLevels force_levels(const std::vector<double>& forces, int n_levels = 10) {
    if (forces.empty()) throw InvalidSpecError("force levels need at least one trial");
    if (n_levels < 2) throw InvalidSpecError("need at least two force levels");
    const double fmin = *std::min_element(forces.begin(), forces.end());
    const double fmax = *std::max_element(forces.begin(), forces.end());
    if (!(fmax > fmin)) throw InvalidSpecError("force range is empty (max == min)");

    ForceLevels out;
    out.bin_width = (fmax - fmin) / static_cast<double>(n_levels);
    out.counts.assign(static_cast<std::size_t>(n_levels), 0);
    for (int l = 0; l < n_levels; ++l)
        out.centers.push_back(fmin + (l + 0.5) * out.bin_width);
    for (double f : forces) {
        int level = static_cast<int>((f - fmin) / out.bin_width);
        level = std::min(level, n_levels - 1);
        out.assignment.push_back(level + 1);
        ++out.counts[static_cast<std::size_t>(level)];
    }
    return out;
}

// ---------------------------------------------------------------- FD vs force

struct FdCorrelation {
    std::vector<std::string> electrodes;
    Vector r;
    Vector t;
    Vector p;
    Vector significant_r;           // zeroed when p > alpha
    std::vector<double> level_centers;
    std::vector<int> level_counts;
    Matrix level_mean_rel_fd;       // electrodes x levels (NaN where empty)
    Matrix rel_fd;                  // electrodes x trials
};

struct FdForceParams {
    BandDef band{80.0, 160.0};
    int band_order = 4;
    int n_levels = 10;
    double time_unit_ms = 1.0;
    double amp_unit_uv = 1.0;
    double alpha = 0.05;
    TValueVariant t_variant = TValueVariant::sqrt_n_minus_1;
};

// Band-filter each trial, take relative FD per trial, average per force level,
// and correlate populated level indices against the level means.
inline FdCorrelation fd_force_correlation(const TrialSet& trials, const FdForceParams& params = {}) {
    if (trials.trials.empty()) throw InvalidSpecError("fd correlation needs trials");
    const ForceLevels levels = force_levels(trials.forces(), params.n_levels);
    const BiquadCascade band = design_butterworth(
        FilterSpec::band(params.band.low_hz, params.band.high_hz, params.band_order),
        trials.sample_rate);

    FdCorrelation out;
    out.level_centers = levels.centers;
    out.level_counts = levels.counts;
    const Eigen::Index n_elec = trials.n_channels();
    const Eigen::Index n_trials = trials.n_trials();
    out.r.resize(n_elec);
    out.t.resize(n_elec);
    out.p.resize(n_elec);
    out.significant_r.resize(n_elec);
    out.level_mean_rel_fd =
        Matrix::Constant(n_elec, params.n_levels, std::nan(""));
    out.rel_fd.resize(n_elec, n_trials);

    for (Eigen::Index c = 0; c < n_elec; ++c) {
        out.electrodes.push_back(trials.channels[static_cast<std::size_t>(c)].label);
        for (Eigen::Index k = 0; k < n_trials; ++k) {
            const TimeSeries ts(
                trials.trials[static_cast<std::size_t>(k)].data.row(c).transpose(),
                trials.sample_rate);
            const TimeSeries filtered = filter_forward(ts, band);
            const TimeSeries idle(filtered.samples.head(trials.idle_len), trials.sample_rate);
            const TimeSeries move(filtered.samples.tail(trials.move_len), trials.sample_rate);
            out.rel_fd(c, k) = relative_fd(idle, move, params.time_unit_ms, params.amp_unit_uv);
        }

        std::vector<double> xs, ys;
        for (int l = 0; l < params.n_levels; ++l) {
            if (levels.counts[static_cast<std::size_t>(l)] == 0) continue;
            double acc = 0.0;
            int cnt = 0;
            for (Eigen::Index k = 0; k < n_trials; ++k)
                if (levels.assignment[static_cast<std::size_t>(k)] == l + 1) {
                    acc += out.rel_fd(c, k);
                    ++cnt;
                }
            const double mean = acc / cnt;
            out.level_mean_rel_fd(c, l) = mean;
            xs.push_back(static_cast<double>(l + 1));
            ys.push_back(mean);
        }
        const PearsonTest test = pearson_significance(xs, ys, params.t_variant, params.alpha);
        out.r[c] = test.r;
        out.t[c] = test.t;
        out.p[c] = test.p;
        out.significant_r[c] = test.significant_r;
    }
    return out;
}

// ---------------------------------------------------------------- region summary

struct RegionSummary {
    double ha_mean_move_z = 0.0;
    double nha_mean_move_z = 0.0;
    double ha_vs_nha_p = 1.0;
    int sce_total = 0;
    int sce_in_ha = 0;
    std::optional<double> sce_proportion_in_ha;  // percent; absent when no SCE
    double hand_motor_mean_sig_abs_r = 0.0;
    double contralesional_mean_sig_abs_r = 0.0;
};

// HA/NHA aggregates of move-epoch band power plus significant-correlation
// electrode bookkeeping. Non-significant electrodes contribute 0 to the
// hand-motor and contralesional |R| means.
inline RegionSummary region_summary(const BandPowerSummary& power, const FdCorrelation& fd,
                                    const Montage& montage) {
    for (const auto& e : power.electrodes)
        if (!montage.contains(e)) throw Error("electrode '" + e + "' missing from montage");
    for (const auto& e : fd.electrodes)
        if (!montage.contains(e)) throw Error("electrode '" + e + "' missing from montage");

    RegionSummary out;
    std::vector<double> ha_vals, nha_vals;
    for (std::size_t i = 0; i < power.electrodes.size(); ++i) {
        const double v = power.mean_move_z[static_cast<Eigen::Index>(i)];
        if (montage.in_ha(power.electrodes[i])) ha_vals.push_back(v);
        else nha_vals.push_back(v);
    }
    if (ha_vals.empty() || nha_vals.empty())
        throw InvalidSpecError("region summary needs electrodes in both HA and NHA");
    out.ha_mean_move_z = mean_of(ha_vals);
    out.nha_mean_move_z = mean_of(nha_vals);
    out.ha_vs_nha_p = wilcoxon_ranksum(ha_vals, nha_vals).p;

    for (std::size_t i = 0; i < fd.electrodes.size(); ++i) {
        if (fd.significant_r[static_cast<Eigen::Index>(i)] != 0.0) {
            ++out.sce_total;
            if (montage.in_ha(fd.electrodes[i])) ++out.sce_in_ha;
        }
    }
    if (out.sce_total > 0)
        out.sce_proportion_in_ha = 100.0 * out.sce_in_ha / out.sce_total;

    auto mean_sig_abs_r = [&](const std::vector<std::string>& set) {
        double acc = 0.0;
        for (const auto& e : set) {
            double v = 0.0;
            for (std::size_t i = 0; i < fd.electrodes.size(); ++i)
                if (fd.electrodes[i] == e) {
                    v = std::abs(fd.significant_r[static_cast<Eigen::Index>(i)]);
                    break;
                }
            acc += v;  // electrodes absent from the set contribute 0
        }
        return acc / static_cast<double>(set.size());
    };
    out.hand_motor_mean_sig_abs_r = mean_sig_abs_r(montage.hand_motor_labels());
    out.contralesional_mean_sig_abs_r = mean_sig_abs_r(montage.contralesional_labels());
    return out;
}

}  // namespace erase
