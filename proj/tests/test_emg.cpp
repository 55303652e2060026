#include <catch2/catch_amalgamated.hpp>

#include "erase/dsp.hpp"
#include "erase/emg.hpp"
#include "helpers.hpp"

using namespace erase;

namespace {
EmgSpec spec_with_bursts(int n_bursts, double cycle_s = 3.0, double move_s = 2.0) {
    EmgSpec spec;
    spec.seed = 2024;
    for (int k = 0; k < n_bursts; ++k)
        spec.bursts.push_back({k * cycle_s + (cycle_s - move_s), (k + 1) * cycle_s, 1.0});
    return spec;
}
}  // namespace

TEST_CASE("simulated emg determinism and gating") {
    const double fs = 2000.0;
    auto spec = spec_with_bursts(4);
    const Eigen::Index n = static_cast<Eigen::Index>(12.5 * fs);

    SECTION("same seed reproduces bit-identical sources") {
        const auto a = simulate_emg(spec, n, fs);
        const auto b = simulate_emg(spec, n, fs);
        REQUIRE(a.size() == static_cast<std::size_t>(spec.n_sources));
        for (std::size_t s = 0; s < a.size(); ++s)
            REQUIRE(a[s].samples == b[s].samples);
    }
    SECTION("different master seeds differ") {
        const auto a = simulate_emg(spec, n, fs);
        auto spec2 = spec;
        spec2.seed = 9;
        const auto b = simulate_emg(spec2, n, fs);
        REQUIRE(a[0].samples != b[0].samples);
    }
    SECTION("empty burst schedule produces silence") {
        EmgSpec silent;
        silent.bursts.clear();
        const auto sources = simulate_emg(silent, 4000, fs);
        for (const auto& src : sources) REQUIRE(src.samples.cwiseAbs().maxCoeff() == 0.0);
    }
    SECTION("signal is zero outside bursts and live inside") {
        const auto src = simulate_emg(spec, n, fs)[0];
        // idle stretch of the first cycle (before the first burst onset)
        REQUIRE(src.samples.head(1900).cwiseAbs().maxCoeff() == 0.0);
        // plateau of the first burst
        REQUIRE(testutil::rms(src.samples.segment(2500, 2000)) > 1.0);
    }
    SECTION("invalid band is rejected") {
        auto bad = spec;
        bad.band_low_hz = 300.0;
        bad.band_high_hz = 200.0;
        REQUIRE_THROWS_AS(simulate_emg(bad, n, fs), InvalidSpecError);
    }
}

TEST_CASE("simulated emg spectral and amplitude properties") {
    const double fs = 2000.0;
    // one long burst covering the whole span keeps the periodogram clean
    EmgSpec spec;
    spec.seed = 5;
    spec.n_sources = 4;
    const double dur_s = 60.0;
    spec.bursts.push_back({0.0, dur_s, 1.0});
    const auto n = static_cast<Eigen::Index>(dur_s * fs);
    const auto sources = simulate_emg(spec, n, fs);

    SECTION("at least 90 percent of power inside the 20-200 Hz band") {
        const Spectrogram sp = stft_power(TimeSeries(sources[0].samples, fs), 1024, 512);
        double total = 0.0, in_band = 0.0;
        for (std::size_t k = 0; k < sp.freqs_hz.size(); ++k) {
            const double p = sp.power.col(static_cast<Eigen::Index>(k)).sum();
            total += p;
            if (sp.freqs_hz[k] >= spec.band_low_hz && sp.freqs_hz[k] <= spec.band_high_hz)
                in_band += p;
        }
        REQUIRE(in_band / total >= 0.90);
    }
    SECTION("high-gamma band holds at least a quarter of the power") {
        const Spectrogram sp = stft_power(TimeSeries(sources[0].samples, fs), 1024, 512);
        double total = 0.0, gamma = 0.0;
        for (std::size_t k = 0; k < sp.freqs_hz.size(); ++k) {
            const double p = sp.power.col(static_cast<Eigen::Index>(k)).sum();
            total += p;
            if (sp.freqs_hz[k] >= 80.0 && sp.freqs_hz[k] <= 160.0) gamma += p;
        }
        REQUIRE(gamma / total >= 0.25);
        REQUIRE(gamma > 0.0);
    }
    SECTION("plateau RMS calibrated to the amplitude target within 2 percent") {
        const Eigen::Index rise = static_cast<Eigen::Index>(spec.rise_ms / 1000.0 * fs);
        for (const auto& src : sources) {
            const double r = testutil::rms(src.samples.segment(rise, n - 2 * rise));
            REQUIRE(r == Catch::Approx(spec.amplitude_uv).epsilon(0.02));
        }
    }
    SECTION("sources are pairwise decorrelated") {
        for (std::size_t i = 0; i < sources.size(); ++i)
            for (std::size_t j = i + 1; j < sources.size(); ++j)
                REQUIRE(std::abs(testutil::pearson(sources[i].samples, sources[j].samples)) < 0.05);
    }
}

TEST_CASE("per-burst amplitudes scale the envelope") {
    const double fs = 2000.0;
    EmgSpec spec;
    spec.seed = 77;
    spec.n_sources = 1;
    spec.bursts.push_back({1.0, 3.0, 1.0});
    spec.bursts.push_back({4.0, 6.0, 2.0});
    const auto src = simulate_emg(spec, static_cast<Eigen::Index>(7.0 * fs), fs)[0];
    const double rms1 = testutil::rms(src.samples.segment(3000, 3000));
    const double rms2 = testutil::rms(src.samples.segment(9000, 3000));
    REQUIRE(rms2 / rms1 == Catch::Approx(2.0).epsilon(0.10));
}
