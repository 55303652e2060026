#pragma once

// Shared test utilities and independent oracle implementations. Oracles here
// deliberately avoid the library's code paths.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "erase/types.hpp"

namespace testutil {

// ---------------------------------------------------------------- oracle: FD

// Independent implementation of the fractal-dimension formula: plain loops,
// long double accumulation, no Eigen.
inline double reference_fd(const std::vector<double>& samples, double sample_rate,
                           double time_unit_ms = 1.0, double amp_unit_uv = 1.0) {
    const std::size_t n = samples.size();
    std::size_t spv = static_cast<std::size_t>(std::llround(time_unit_ms / 1000.0 * sample_rate));
    if (spv < 1) spv = 1;
    const std::size_t m = n / spv;
    long double total_length = 0.0L;
    long double max_dist = 0.0L;
    for (std::size_t k = 1; k < m; ++k) {
        long double step = 0.0L, from_first = 0.0L;
        for (std::size_t j = 0; j < spv; ++j) {
            const long double prev = samples[(k - 1) * spv + j] / amp_unit_uv;
            const long double cur = samples[k * spv + j] / amp_unit_uv;
            const long double first = samples[j] / amp_unit_uv;
            step += (cur - prev) * (cur - prev);
            from_first += (cur - first) * (cur - first);
        }
        total_length += std::sqrt(step);
        if (std::sqrt(from_first) > max_dist) max_dist = std::sqrt(from_first);
    }
    const long double log_n1 = std::log(static_cast<long double>(n) - 1.0L);
    return static_cast<double>(log_n1 / (log_n1 + std::log(max_dist / total_length)));
}

// ------------------------------------------------- oracle: analytic Butterworth

// |H| of the analog Butterworth prototype evaluated at the bilinear-prewarped
// frequency; exact for the digital filter the library is supposed to build.
inline double analytic_butter_gain_lowpass(double f_hz, double cutoff_hz, int order, double fs) {
    auto warp = [&](double f) { return 2.0 * fs * std::tan(std::numbers::pi * f / fs); };
    const double ratio = warp(f_hz) / warp(cutoff_hz);
    return 1.0 / std::sqrt(1.0 + std::pow(ratio, 2.0 * order));
}

inline double analytic_butter_gain_bandpass(double f_hz, double low_hz, double high_hz, int order,
                                            double fs) {
    auto warp = [&](double f) { return 2.0 * fs * std::tan(std::numbers::pi * f / fs); };
    const double w = warp(f_hz), w1 = warp(low_hz), w2 = warp(high_hz);
    const double x = (w * w - w1 * w2) / ((w2 - w1) * w);
    return 1.0 / std::sqrt(1.0 + std::pow(x, 2.0 * order));
}

// ---------------------------------------------------------------- signals

inline std::vector<double> sine(double freq_hz, double fs, std::size_t n, double amp = 1.0,
                                double phase = 0.0) {
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i)
        v[i] = amp * std::sin(2.0 * std::numbers::pi * freq_hz * double(i) / fs + phase);
    return v;
}

inline std::vector<double> sawtooth(double freq_hz, double fs, std::size_t n, double amp = 1.0) {
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double t = freq_hz * double(i) / fs;
        v[i] = amp * (2.0 * (t - std::floor(t + 0.5)));
    }
    return v;
}

inline std::vector<double> square_wave(double freq_hz, double fs, std::size_t n, double amp = 1.0) {
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double t = freq_hz * double(i) / fs;
        v[i] = amp * (t - std::floor(t) < 0.5 ? 1.0 : -1.0);
    }
    return v;
}

inline std::vector<double> gaussian_noise(std::size_t n, std::uint64_t seed, double sigma = 1.0) {
    std::mt19937_64 gen(seed);
    std::normal_distribution<double> d(0.0, sigma);
    std::vector<double> v(n);
    for (auto& x : v) x = d(gen);
    return v;
}

inline std::vector<double> laplace_noise(std::size_t n, std::uint64_t seed, double b = 1.0) {
    std::mt19937_64 gen(seed);
    std::uniform_real_distribution<double> u(-0.5, 0.5);
    std::vector<double> v(n);
    for (auto& x : v) {
        const double q = u(gen);
        x = -b * std::copysign(std::log1p(-2.0 * std::abs(q)), q);
    }
    return v;
}

inline std::vector<double> uniform_noise(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 gen(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<double> v(n);
    for (auto& x : v) x = u(gen);
    return v;
}

inline erase::Vector to_vector(const std::vector<double>& v) {
    erase::Vector out(static_cast<Eigen::Index>(v.size()));
    for (std::size_t i = 0; i < v.size(); ++i) out[static_cast<Eigen::Index>(i)] = v[i];
    return out;
}

inline double rms(const erase::Vector& v) { return std::sqrt(v.squaredNorm() / double(v.size())); }

inline double pearson(const erase::Vector& a, const erase::Vector& b) {
    const erase::Vector x = a.array() - a.mean();
    const erase::Vector y = b.array() - b.mean();
    return x.dot(y) / std::sqrt(x.squaredNorm() * y.squaredNorm());
}

// For each true source, the best |corr| against any recovered component.
inline double mean_best_abs_corr(const erase::Matrix& truth, const erase::Matrix& recovered) {
    double acc = 0.0;
    for (Eigen::Index s = 0; s < truth.rows(); ++s) {
        double best = 0.0;
        for (Eigen::Index c = 0; c < recovered.rows(); ++c)
            best = std::max(best, std::abs(pearson(truth.row(s).transpose(),
                                                   recovered.row(c).transpose())));
        acc += best;
    }
    return acc / double(truth.rows());
}

// -------------------------------------------------- oracle: permutation tests

// Two-sided permutation p-value for a Pearson correlation.
inline double permutation_pearson_p(std::vector<double> x, const std::vector<double>& y,
                                    int n_perm, std::uint64_t seed) {
    const auto xv = to_vector(x);
    const auto yv = to_vector(y);
    const double observed = std::abs(pearson(xv, yv));
    std::mt19937_64 gen(seed);
    int extreme = 0;
    std::vector<double> shuffled = x;
    for (int p = 0; p < n_perm; ++p) {
        std::shuffle(shuffled.begin(), shuffled.end(), gen);
        if (std::abs(pearson(to_vector(shuffled), yv)) >= observed - 1e-12) ++extreme;
    }
    return double(extreme + 1) / double(n_perm + 1);
}

// ---------------------------------------------------------------- misc

// Minimal XML well-formedness check: tag balance and quoted attributes.
inline bool xml_well_formed(const std::string& xml) {
    std::vector<std::string> stack;
    std::size_t i = 0;
    if (xml.rfind("<?xml", 0) == 0) {
        i = xml.find("?>");
        if (i == std::string::npos) return false;
        i += 2;
    }
    while (i < xml.size()) {
        if (xml[i] != '<') {
            ++i;
            continue;
        }
        const std::size_t end = xml.find('>', i);
        if (end == std::string::npos) return false;
        std::string tag = xml.substr(i + 1, end - i - 1);
        // quotes must pair inside the tag
        if (std::count(tag.begin(), tag.end(), '"') % 2 != 0) return false;
        if (!tag.empty() && tag[0] == '/') {
            if (stack.empty()) return false;
            if (stack.back() != tag.substr(1)) return false;
            stack.pop_back();
        } else if (!tag.empty() && tag.back() != '/') {
            const std::size_t sp = tag.find_first_of(" \t\n");
            stack.push_back(sp == std::string::npos ? tag : tag.substr(0, sp));
        }
        i = end + 1;
    }
    return stack.empty();
}

}  // namespace testutil
