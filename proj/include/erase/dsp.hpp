#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <string>
#include <vector>

#include "erase/types.hpp"

namespace erase {

// ---------------------------------------------------------------- filter spec

enum class FilterKind { bandpass, lowpass };

struct FilterSpec {
    FilterKind kind = FilterKind::bandpass;
    int order = 4;
    double low_hz = 0.0;   // ignored for lowpass
    double high_hz = 0.0;

    static FilterSpec band(double lo, double hi, int order) {
        return FilterSpec{FilterKind::bandpass, order, lo, hi};
    }
    static FilterSpec low(double hz, int order) {
        return FilterSpec{FilterKind::lowpass, order, 0.0, hz};
    }
};

inline void validate(const FilterSpec& spec, double sample_rate) {
    if (sample_rate <= 0) throw InvalidSpecError("sample rate must be positive");
    if (spec.order < 1) throw InvalidSpecError("filter order must be >= 1");
    const double nyq = sample_rate / 2.0;
    if (spec.kind == FilterKind::bandpass) {
        if (!(spec.low_hz > 0 && spec.low_hz < spec.high_hz && spec.high_hz < nyq))
            throw InvalidSpecError("bandpass requires 0 < low < high < Nyquist (got " +
                                   std::to_string(spec.low_hz) + "-" + std::to_string(spec.high_hz) +
                                   " Hz at fs=" + std::to_string(sample_rate) + ")");
    } else {
        if (!(spec.high_hz > 0 && spec.high_hz < nyq))
            throw InvalidSpecError("lowpass cutoff must lie in (0, Nyquist) (got " +
                                   std::to_string(spec.high_hz) + " Hz at fs=" +
                                   std::to_string(sample_rate) + ")");
    }
}

// ---------------------------------------------------------------- biquad cascade

struct Biquad {
    // y[n] = b0 x[n] + b1 x[n-1] + b2 x[n-2] - a1 y[n-1] - a2 y[n-2]
    double b0 = 1, b1 = 0, b2 = 0, a1 = 0, a2 = 0;
};

struct BiquadCascade {
    std::vector<Biquad> sections;

    // all pole magnitudes of the cascade
    std::vector<double> pole_magnitudes() const {
        std::vector<double> out;
        for (const auto& s : sections) {
            const double disc = s.a1 * s.a1 - 4.0 * s.a2;
            if (disc >= 0) {
                const double r = std::sqrt(disc);
                out.push_back(std::abs((-s.a1 + r) / 2.0));
                out.push_back(std::abs((-s.a1 - r) / 2.0));
            } else {
                const double mag = std::sqrt(s.a2);  // conjugate pair, |p|^2 = a2
                out.push_back(mag);
                out.push_back(mag);
            }
        }
        return out;
    }

    bool stable() const {
        for (double m : pole_magnitudes())
            if (!(m < 1.0 - 1e-8)) return false;
        return true;
    }

    // |H(e^{j 2 pi f / fs})|
    double gain_at(double freq_hz, double sample_rate) const {
        const std::complex<double> z =
            std::polar(1.0, 2.0 * std::numbers::pi * freq_hz / sample_rate);
        const std::complex<double> zi = 1.0 / z;
        std::complex<double> h = 1.0;
        for (const auto& s : sections)
            h *= (s.b0 + s.b1 * zi + s.b2 * zi * zi) / (1.0 + s.a1 * zi + s.a2 * zi * zi);
        return std::abs(h);
    }
};

// ---------------------------------------------------------------- design

namespace detail {

using cd = std::complex<double>;

// Butterworth analog prototype poles (unit cutoff, left half-plane).
inline std::vector<cd> butter_prototype(int order) {
    std::vector<cd> poles;
    for (int k = 0; k < order; ++k) {
        const double theta = std::numbers::pi * (2.0 * k + 1.0 + order) / (2.0 * order);
        cd p = std::polar(1.0, theta);
        if (std::abs(p.imag()) < 1e-15) p = cd(p.real(), 0.0);
        poles.push_back(p);
    }
    return poles;
}

struct Zpk {
    std::vector<cd> zeros, poles;
    double gain = 1.0;
};

inline cd bilinear_map(cd s, double fs2) { return (fs2 + s) / (fs2 - s); }

// Bilinear transform of an analog zpk; missing zeros land at z = -1.
inline Zpk bilinear(const Zpk& analog, double fs2) {
    Zpk digital;
    cd num = 1.0, den = 1.0;
    for (const cd& z : analog.zeros) {
        digital.zeros.push_back(bilinear_map(z, fs2));
        num *= fs2 - z;
    }
    for (const cd& p : analog.poles) {
        digital.poles.push_back(bilinear_map(p, fs2));
        den *= fs2 - p;
    }
    while (digital.zeros.size() < digital.poles.size()) digital.zeros.push_back(cd(-1.0, 0.0));
    digital.gain = analog.gain * (num / den).real();
    return digital;
}

// Split poles into conjugate pairs (and real leftovers) for SOS grouping.
inline std::vector<std::pair<cd, cd>> pair_poles(std::vector<cd> poles) {
    std::vector<cd> complex_upper, reals;
    for (const cd& p : poles) {
        if (std::abs(p.imag()) > 1e-12) {
            if (p.imag() > 0) complex_upper.push_back(p);
        } else {
            reals.push_back(p);
        }
    }
    auto by_real = [](const cd& a, const cd& b) { return a.real() < b.real(); };
    std::sort(complex_upper.begin(), complex_upper.end(), by_real);
    std::sort(reals.begin(), reals.end(), by_real);

    std::vector<std::pair<cd, cd>> pairs;
    for (const cd& p : complex_upper) pairs.emplace_back(p, std::conj(p));
    for (std::size_t i = 0; i + 1 < reals.size(); i += 2) pairs.emplace_back(reals[i], reals[i + 1]);
    if (reals.size() % 2 == 1) pairs.emplace_back(reals.back(), cd(0.0, 0.0));  // first-order tail
    return pairs;
}

}  // namespace detail

// Butterworth design discretized by bilinear transform with frequency
// prewarping, returned as cascaded second-order sections.
inline BiquadCascade design_butterworth(const FilterSpec& spec, double sample_rate) {
    validate(spec, sample_rate);
    using detail::cd;
    const double fs2 = 2.0 * sample_rate;
    auto prewarp = [&](double f) {
        return fs2 * std::tan(std::numbers::pi * f / sample_rate);
    };

    detail::Zpk analog;
    const auto proto = detail::butter_prototype(spec.order);
    bool odd_real_pole = false;
    if (spec.kind == FilterKind::lowpass) {
        const double wc = prewarp(spec.high_hz);
        for (const cd& p : proto) analog.poles.push_back(p * wc);
        analog.gain = std::pow(wc, spec.order);
        odd_real_pole = (spec.order % 2 == 1);
    } else {
        const double w1 = prewarp(spec.low_hz), w2 = prewarp(spec.high_hz);
        const double w0sq = w1 * w2, bw = w2 - w1;
        for (const cd& p : proto) {
            const cd pb = p * bw;
            const cd disc = std::sqrt(pb * pb - 4.0 * w0sq);
            analog.poles.push_back((pb + disc) / 2.0);
            analog.poles.push_back((pb - disc) / 2.0);
        }
        analog.zeros.assign(static_cast<std::size_t>(spec.order), cd(0.0, 0.0));
        analog.gain = std::pow(bw, spec.order);
    }

    const detail::Zpk digital = detail::bilinear(analog, fs2);
    const auto pole_pairs = detail::pair_poles(digital.poles);

    BiquadCascade cascade;
    const double section_gain =
        std::pow(std::abs(digital.gain), 1.0 / static_cast<double>(pole_pairs.size()));
    const double gain_sign = digital.gain < 0 ? -1.0 : 1.0;

    for (std::size_t i = 0; i < pole_pairs.size(); ++i) {
        const auto& [p1, p2] = pole_pairs[i];
        Biquad s;
        const bool first_order = (i + 1 == pole_pairs.size()) && odd_real_pole;
        if (first_order) {
            s.a1 = -p1.real();
            s.a2 = 0.0;
        } else {
            s.a1 = -(p1 + p2).real();
            s.a2 = (p1 * p2).real();
        }
        double g = section_gain * (i == 0 ? gain_sign : 1.0);
        if (spec.kind == FilterKind::bandpass) {
            // one zero at z=+1 and one at z=-1 per section: (z-1)(z+1)
            s.b0 = g; s.b1 = 0.0; s.b2 = -g;
        } else if (first_order) {
            s.b0 = g; s.b1 = g; s.b2 = 0.0;
        } else {
            s.b0 = g; s.b1 = 2.0 * g; s.b2 = g;
        }
        cascade.sections.push_back(s);
    }
    return cascade;
}

// ---------------------------------------------------------------- filtering

// Causal forward filtering, direct form II transposed per section.
inline TimeSeries filter_forward(const TimeSeries& ts, const BiquadCascade& cascade) {
    if (!cascade.stable()) throw InvalidSpecError("filter cascade is unstable");
    const Eigen::Index n = ts.samples.size();
    Vector x = ts.samples;
    for (Eigen::Index i = 0; i < n; ++i)
        if (!std::isfinite(x[i]))
            throw Error("non-finite input sample at index " + std::to_string(i));
    for (const auto& s : cascade.sections) {
        double z1 = 0.0, z2 = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
            const double xin = x[i];
            const double y = s.b0 * xin + z1;
            z1 = s.b1 * xin - s.a1 * y + z2;
            z2 = s.b2 * xin - s.a2 * y;
            x[i] = y;
        }
    }
    return TimeSeries(std::move(x), ts.sample_rate);
}

// Zero-phase variant (forward pass, reverse, forward, reverse) with odd
// reflection padding; available for sensitivity checks.
inline TimeSeries filter_forward_backward(const TimeSeries& ts, const BiquadCascade& cascade) {
    const Eigen::Index n = ts.samples.size();
    const Eigen::Index pad =
        std::min<Eigen::Index>(n - 1, 3 * static_cast<Eigen::Index>(2 * cascade.sections.size() + 1));
    Vector ext(n + 2 * pad);
    for (Eigen::Index i = 0; i < pad; ++i)
        ext[i] = 2.0 * ts.samples[0] - ts.samples[pad - i];
    ext.segment(pad, n) = ts.samples;
    for (Eigen::Index i = 0; i < pad; ++i)
        ext[pad + n + i] = 2.0 * ts.samples[n - 1] - ts.samples[n - 2 - i];

    TimeSeries fwd(std::move(ext), ts.sample_rate);
    fwd = filter_forward(fwd, cascade);
    fwd.samples.reverseInPlace();
    fwd = filter_forward(fwd, cascade);
    fwd.samples.reverseInPlace();
    return TimeSeries(fwd.samples.segment(pad, n), ts.sample_rate);
}

// P(t) = lowpass(bandpass(x)^2): instantaneous band power envelope.
inline TimeSeries envelope_power(const TimeSeries& ts, const FilterSpec& band,
                                 const FilterSpec& smooth) {
    if (band.kind != FilterKind::bandpass) throw InvalidSpecError("envelope band must be bandpass");
    if (smooth.kind != FilterKind::lowpass) throw InvalidSpecError("envelope smoother must be lowpass");
    TimeSeries y = filter_forward(ts, design_butterworth(band, ts.sample_rate));
    y.samples = y.samples.array().square();
    return filter_forward(y, design_butterworth(smooth, ts.sample_rate));
}

// ---------------------------------------------------------------- FFT / STFT

namespace detail {

inline void fft_radix2(std::vector<cd>& a) {
    const std::size_t n = a.size();
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const double ang = -2.0 * std::numbers::pi / static_cast<double>(len);
        const cd wl = std::polar(1.0, ang);
        for (std::size_t i = 0; i < n; i += len) {
            cd w = 1.0;
            for (std::size_t j = 0; j < len / 2; ++j) {
                const cd u = a[i + j];
                const cd v = a[i + j + len / 2] * w;
                a[i + j] = u + v;
                a[i + j + len / 2] = u - v;
                w *= wl;
            }
        }
    }
}

inline std::vector<cd> dft(const std::vector<cd>& in) {
    const std::size_t n = in.size();
    std::vector<cd> out(n);
    for (std::size_t k = 0; k < n; ++k) {
        cd acc = 0.0;
        for (std::size_t t = 0; t < n; ++t)
            acc += in[t] * std::polar(1.0, -2.0 * std::numbers::pi * double(k) * double(t) / double(n));
        out[k] = acc;
    }
    return out;
}

inline bool is_pow2(std::size_t n) { return n && (n & (n - 1)) == 0; }

}  // namespace detail

struct Spectrogram {
    Matrix power;                 // frames x freq bins, one-sided
    std::vector<double> freqs_hz;
    std::vector<double> times_s;  // frame centers
    Eigen::Index window_len = 0;
    Eigen::Index hop = 0;
};

struct StftParams {
    Eigen::Index window_len = 512;
    Eigen::Index hop = 128;
};

// Per-frame Hann periodogram scaled so the one-sided bin powers sum to the
// windowed frame energy.
inline Spectrogram stft_power(const TimeSeries& ts, Eigen::Index window_len, Eigen::Index hop) {
    const Eigen::Index n = ts.samples.size();
    if (window_len < 2 || window_len > n)
        throw InvalidSpecError("stft window (" + std::to_string(window_len) +
                               ") must fit inside the signal (" + std::to_string(n) + ")");
    if (hop < 1) throw InvalidSpecError("stft hop must be >= 1");

    std::vector<double> window(static_cast<std::size_t>(window_len));
    for (Eigen::Index i = 0; i < window_len; ++i)
        window[static_cast<std::size_t>(i)] =
            0.5 * (1.0 - std::cos(2.0 * std::numbers::pi * double(i) / double(window_len)));

    const Eigen::Index n_frames = (n - window_len) / hop + 1;
    const Eigen::Index n_bins = window_len / 2 + 1;
    Spectrogram sp;
    sp.window_len = window_len;
    sp.hop = hop;
    sp.power.resize(n_frames, n_bins);
    sp.freqs_hz.resize(static_cast<std::size_t>(n_bins));
    for (Eigen::Index k = 0; k < n_bins; ++k)
        sp.freqs_hz[static_cast<std::size_t>(k)] = double(k) * ts.sample_rate / double(window_len);
    sp.times_s.resize(static_cast<std::size_t>(n_frames));

    std::vector<detail::cd> buf(static_cast<std::size_t>(window_len));
    const bool pow2 = detail::is_pow2(static_cast<std::size_t>(window_len));
    for (Eigen::Index f = 0; f < n_frames; ++f) {
        const Eigen::Index start = f * hop;
        sp.times_s[static_cast<std::size_t>(f)] =
            (double(start) + double(window_len) / 2.0) / ts.sample_rate;
        for (Eigen::Index i = 0; i < window_len; ++i)
            buf[static_cast<std::size_t>(i)] =
                ts.samples[start + i] * window[static_cast<std::size_t>(i)];
        std::vector<detail::cd> spec;
        if (pow2) {
            spec = buf;
            detail::fft_radix2(spec);
        } else {
            spec = detail::dft(buf);
        }
        for (Eigen::Index k = 0; k < n_bins; ++k) {
            const double mag2 = std::norm(spec[static_cast<std::size_t>(k)]);
            const double one_sided = (k == 0 || k == window_len / 2) ? 1.0 : 2.0;
            sp.power(f, k) = one_sided * mag2 / double(window_len);
        }
    }
    return sp;
}

inline Spectrogram stft_power(const TimeSeries& ts, const StftParams& p) {
    return stft_power(ts, p.window_len, p.hop);
}

// z-score each frequency bin's power series across time (population moments).
// `context` names the channel in error messages.
inline Spectrogram zscore_spectrogram(const Spectrogram& in, const std::string& context = "") {
    Spectrogram out = in;
    const Eigen::Index n_frames = in.power.rows();
    if (n_frames < 2) throw InvalidSpecError("z-scoring needs at least two frames");
    for (Eigen::Index k = 0; k < in.power.cols(); ++k) {
        const double mean = in.power.col(k).mean();
        const double var = (in.power.col(k).array() - mean).square().sum() / double(n_frames);
        if (var <= 0.0) {
            throw Error("zero variance in frequency bin " + std::to_string(k) + " (" +
                        std::to_string(in.freqs_hz[static_cast<std::size_t>(k)]) + " Hz)" +
                        (context.empty() ? "" : " of channel " + context));
        }
        out.power.col(k) = (in.power.col(k).array() - mean) / std::sqrt(var);
    }
    return out;
}

// Mean over the bins whose centers fall inside [band.low_hz, band.high_hz].
inline Vector band_mean(const Spectrogram& sp, const BandDef& band) {
    std::vector<Eigen::Index> sel;
    for (std::size_t k = 0; k < sp.freqs_hz.size(); ++k)
        if (sp.freqs_hz[k] >= band.low_hz && sp.freqs_hz[k] <= band.high_hz)
            sel.push_back(static_cast<Eigen::Index>(k));
    if (sel.empty()) throw InvalidSpecError("no stft bins inside requested band");
    Vector out = Vector::Zero(sp.power.rows());
    for (Eigen::Index k : sel) out += sp.power.col(k);
    return out / double(sel.size());
}

}  // namespace erase
