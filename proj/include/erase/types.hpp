#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace erase {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// ---------------------------------------------------------------- errors

struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Bad filter/EMG/scene specification, malformed arguments.
struct InvalidSpecError : Error {
    using Error::Error;
};

// Covariance rank too low for the requested component count.
struct RankError : Error {
    int rank;
    RankError(const std::string& msg, int r) : Error(msg), rank(r) {}
};

// Fixed-point iteration ran out of iterations; carries the last delta so the
// caller can decide whether to retry with a fresh seed.
struct ConvergenceError : Error {
    double last_delta;
    ConvergenceError(const std::string& msg, double d) : Error(msg), last_delta(d) {}
};

// Constant (or otherwise degenerate) epoch handed to the fractal-dimension op.
struct DegenerateEpochError : Error {
    using Error::Error;
};

// Malformed file; offset is the byte position where parsing failed.
struct ParseError : Error {
    std::size_t offset;
    ParseError(const std::string& msg, std::size_t off) : Error(msg), offset(off) {}
};

// ---------------------------------------------------------------- time series

// Single-channel signal in microvolts.
struct TimeSeries {
    Vector samples;
    double sample_rate = 0.0;

    TimeSeries() = default;
    TimeSeries(Vector s, double fs) : samples(std::move(s)), sample_rate(fs) {}

    Eigen::Index size() const { return samples.size(); }
};

// ---------------------------------------------------------------- recording

enum class ChannelKind : std::uint8_t { scalp = 0, virtual_emg = 1, force = 2 };

inline const char* to_string(ChannelKind k) {
    switch (k) {
        case ChannelKind::scalp: return "scalp";
        case ChannelKind::virtual_emg: return "virtual";
        case ChannelKind::force: return "force";
    }
    return "?";
}

inline ChannelKind channel_kind_from_string(const std::string& s) {
    if (s == "scalp") return ChannelKind::scalp;
    if (s == "virtual") return ChannelKind::virtual_emg;
    if (s == "force") return ChannelKind::force;
    throw InvalidSpecError("unknown channel kind '" + s + "'");
}

struct Channel {
    std::string label;
    ChannelKind kind = ChannelKind::scalp;
};

// Multichannel recording; data rows follow the channel table order.
struct Recording {
    std::vector<Channel> channels;
    double sample_rate = 0.0;
    Matrix data;  // channels x samples

    Eigen::Index n_channels() const { return static_cast<Eigen::Index>(channels.size()); }
    Eigen::Index n_samples() const { return data.cols(); }

    Eigen::Index index_of(const std::string& label) const {
        for (std::size_t i = 0; i < channels.size(); ++i)
            if (channels[i].label == label) return static_cast<Eigen::Index>(i);
        throw Error("channel '" + label + "' not present in recording");
    }

    bool has_channel(const std::string& label) const {
        for (const auto& c : channels)
            if (c.label == label) return true;
        return false;
    }

    std::vector<Eigen::Index> indices_of_kind(ChannelKind k) const {
        std::vector<Eigen::Index> out;
        for (std::size_t i = 0; i < channels.size(); ++i)
            if (channels[i].kind == k) out.push_back(static_cast<Eigen::Index>(i));
        return out;
    }

    TimeSeries series(const std::string& label) const {
        return TimeSeries(data.row(index_of(label)).transpose(), sample_rate);
    }
};

// Frequency band in Hz, edges inclusive.
struct BandDef {
    double low_hz = 0.0;
    double high_hz = 0.0;
};

}  // namespace erase
