#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "erase/dsp.hpp"
#include "erase/rng.hpp"
#include "erase/types.hpp"

namespace erase {

// One burst of muscle activity; amplitude scales the plateau (1.0 = nominal).
struct Burst {
    double onset_s = 0.0;
    double offset_s = 0.0;
    double amplitude = 1.0;
};

struct EmgSpec {
    double band_low_hz = 20.0;
    double band_high_hz = 200.0;
    int filter_order = 4;
    double rise_ms = 100.0;
    double fall_ms = 100.0;
    double amplitude_uv = 30.0;  // RMS at unit envelope over burst plateaus
    int n_sources = 8;
    std::uint64_t seed = 0;
    std::vector<Burst> bursts;
};

inline void validate(const EmgSpec& spec, double sample_rate) {
    if (!(spec.band_low_hz > 0 && spec.band_low_hz < spec.band_high_hz &&
          spec.band_high_hz < sample_rate / 2.0))
        throw InvalidSpecError("emg band must satisfy 0 < low < high < Nyquist");
    if (spec.amplitude_uv <= 0) throw InvalidSpecError("emg amplitude must be positive");
    if (spec.n_sources < 1) throw InvalidSpecError("emg needs at least one source");
    if (spec.rise_ms < 0 || spec.fall_ms < 0) throw InvalidSpecError("emg ramps must be >= 0");
}

// Trapezoidal burst envelope over [0, n_samples).
inline Vector burst_envelope(const std::vector<Burst>& bursts, double rise_ms, double fall_ms,
                             Eigen::Index n_samples, double sample_rate) {
    Vector env = Vector::Zero(n_samples);
    for (const Burst& b : bursts) {
        const auto on = static_cast<Eigen::Index>(std::llround(b.onset_s * sample_rate));
        const auto off = static_cast<Eigen::Index>(std::llround(b.offset_s * sample_rate));
        if (off <= on) throw InvalidSpecError("burst offset must follow onset");
        const Eigen::Index lo = std::max<Eigen::Index>(on, 0);
        const Eigen::Index hi = std::min<Eigen::Index>(off, n_samples);
        for (Eigen::Index i = lo; i < hi; ++i) env[i] = b.amplitude;
        const auto rise = std::min<Eigen::Index>(
            static_cast<Eigen::Index>(rise_ms / 1000.0 * sample_rate), off - on);
        const auto fall = std::min<Eigen::Index>(
            static_cast<Eigen::Index>(fall_ms / 1000.0 * sample_rate), off - on);
        for (Eigen::Index i = 0; i < rise; ++i) {
            const Eigen::Index t = on + i;
            if (t >= 0 && t < n_samples) env[t] = b.amplitude * double(i) / double(rise);
        }
        for (Eigen::Index i = 0; i < fall; ++i) {
            const Eigen::Index t = off - 1 - i;
            if (t >= 0 && t < n_samples) env[t] = b.amplitude * double(i + 1) / double(fall);
        }
    }
    return env;
}

// Band-limited Gaussian noise gated by the burst schedule; the carrier is
// normalized to unit RMS over burst plateaus so amplitude_uv sets the plateau
// RMS for a unit-amplitude burst. Sources use independent derived seeds.
inline std::vector<TimeSeries> simulate_emg(const EmgSpec& spec, Eigen::Index n_samples,
                                            double sample_rate) {
    validate(spec, sample_rate);
    const BiquadCascade band = design_butterworth(
        FilterSpec::band(spec.band_low_hz, spec.band_high_hz, spec.filter_order), sample_rate);
    const Vector env =
        burst_envelope(spec.bursts, spec.rise_ms, spec.fall_ms, n_samples, sample_rate);

    // plateau = samples at full burst amplitude
    std::vector<Eigen::Index> plateau;
    for (const Burst& b : spec.bursts) {
        const auto on = static_cast<Eigen::Index>(std::llround(b.onset_s * sample_rate));
        const auto off = static_cast<Eigen::Index>(std::llround(b.offset_s * sample_rate));
        const auto rise = static_cast<Eigen::Index>(spec.rise_ms / 1000.0 * sample_rate);
        const auto fall = static_cast<Eigen::Index>(spec.fall_ms / 1000.0 * sample_rate);
        for (Eigen::Index i = std::max<Eigen::Index>(on + rise, 0);
             i < std::min<Eigen::Index>(off - fall, n_samples); ++i)
            plateau.push_back(i);
    }

    std::vector<TimeSeries> sources;
    sources.reserve(static_cast<std::size_t>(spec.n_sources));
    for (int s = 0; s < spec.n_sources; ++s) {
        std::mt19937_64 gen(derive_seed(spec.seed, 0xE36, static_cast<std::uint64_t>(s)));
        TimeSeries carrier(gaussian_vector(gen, n_samples), sample_rate);
        carrier = filter_forward(carrier, band);

        double plateau_ss = 0.0;
        for (Eigen::Index i : plateau) plateau_ss += carrier.samples[i] * carrier.samples[i];
        double scale = 0.0;
        if (!plateau.empty() && plateau_ss > 0.0)
            scale = spec.amplitude_uv / std::sqrt(plateau_ss / double(plateau.size()));

        Vector x = carrier.samples.cwiseProduct(env) * scale;
        sources.emplace_back(std::move(x), sample_rate);
    }
    return sources;
}

}  // namespace erase
