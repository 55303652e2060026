#pragma once

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "erase/fastica.hpp"
#include "erase/montage.hpp"
#include "erase/types.hpp"

namespace erase {

// ---------------------------------------------------------------- digest

// FNV-1a 64-bit over raw bytes; used for manifest input/output fingerprints.
inline std::uint64_t fnv1a64(const void* data, std::size_t len) {
    const auto* p = static_cast<const unsigned char*>(data);
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (std::size_t i = 0; i < len; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::string file_digest(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open '" + path + "' for digest");
    std::ostringstream ss;
    ss << in.rdbuf();
    const std::string bytes = ss.str();
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(fnv1a64(bytes.data(), bytes.size())));
    return buf;
}

// ---------------------------------------------------------------- binary recording

namespace detail {

constexpr char kRecordingMagic[4] = {'E', 'R', 'S', 'R'};
constexpr std::uint32_t kRecordingVersion = 1;

struct ByteReader {
    std::istream& in;
    std::size_t offset = 0;

    void read(void* dst, std::size_t n, const char* what) {
        in.read(static_cast<char*>(dst), static_cast<std::streamsize>(n));
        if (static_cast<std::size_t>(in.gcount()) != n)
            throw ParseError(std::string("truncated file while reading ") + what, offset);
        offset += n;
    }
    template <typename T>
    T get(const char* what) {
        T v;
        read(&v, sizeof(T), what);
        return v;
    }
};

}  // namespace detail

// Layout: magic 'ERSR', version u32, sample_rate f64, n_channels u32,
// n_samples u64, channel table (u16 label length + bytes, kind u8), then
// channel-major float32 little-endian samples.
inline void write_recording(const std::string& path, const Recording& rec) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot open '" + path + "' for writing");
    out.write(detail::kRecordingMagic, 4);
    const std::uint32_t version = detail::kRecordingVersion;
    out.write(reinterpret_cast<const char*>(&version), 4);
    out.write(reinterpret_cast<const char*>(&rec.sample_rate), 8);
    const std::uint32_t nch = static_cast<std::uint32_t>(rec.n_channels());
    const std::uint64_t ns = static_cast<std::uint64_t>(rec.n_samples());
    out.write(reinterpret_cast<const char*>(&nch), 4);
    out.write(reinterpret_cast<const char*>(&ns), 8);
    for (const auto& ch : rec.channels) {
        const std::uint16_t len = static_cast<std::uint16_t>(ch.label.size());
        out.write(reinterpret_cast<const char*>(&len), 2);
        out.write(ch.label.data(), len);
        const std::uint8_t kind = static_cast<std::uint8_t>(ch.kind);
        out.write(reinterpret_cast<const char*>(&kind), 1);
    }
    std::vector<float> row(static_cast<std::size_t>(rec.n_samples()));
    for (Eigen::Index c = 0; c < rec.n_channels(); ++c) {
        for (Eigen::Index i = 0; i < rec.n_samples(); ++i)
            row[static_cast<std::size_t>(i)] = static_cast<float>(rec.data(c, i));
        out.write(reinterpret_cast<const char*>(row.data()),
                  static_cast<std::streamsize>(row.size() * sizeof(float)));
    }
    if (!out) throw Error("write failed for '" + path + "'");
}

inline Recording read_recording(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open '" + path + "'");
    detail::ByteReader r{in};

    char magic[4];
    r.read(magic, 4, "magic");
    if (std::memcmp(magic, detail::kRecordingMagic, 4) != 0)
        throw ParseError("bad magic (not a recording file)", 0);
    const auto version = r.get<std::uint32_t>("version");
    if (version != detail::kRecordingVersion)
        throw ParseError("unsupported recording version " + std::to_string(version), 4);

    Recording rec;
    rec.sample_rate = r.get<double>("sample rate");
    if (!(rec.sample_rate > 0)) throw ParseError("sample rate must be positive", 8);
    const auto nch = r.get<std::uint32_t>("channel count");
    const auto ns = r.get<std::uint64_t>("sample count");
    for (std::uint32_t c = 0; c < nch; ++c) {
        const auto len = r.get<std::uint16_t>("label length");
        std::string label(len, '\0');
        r.read(label.data(), len, "label");
        const auto kind = r.get<std::uint8_t>("channel kind");
        if (kind > 2) throw ParseError("invalid channel kind " + std::to_string(kind), r.offset - 1);
        rec.channels.push_back({label, static_cast<ChannelKind>(kind)});
    }
    rec.data.resize(nch, static_cast<Eigen::Index>(ns));
    std::vector<float> row(static_cast<std::size_t>(ns));
    for (std::uint32_t c = 0; c < nch; ++c) {
        const std::size_t row_offset = r.offset;
        r.read(row.data(), row.size() * sizeof(float), "samples");
        for (std::uint64_t i = 0; i < ns; ++i) {
            const float v = row[static_cast<std::size_t>(i)];
            if (std::isnan(v))
                throw ParseError("NaN sample in channel '" + rec.channels[c].label + "'",
                                 row_offset + static_cast<std::size_t>(i) * sizeof(float));
            rec.data(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(i)) = v;
        }
    }
    return rec;
}

// ---------------------------------------------------------------- CSV recording

// Small-file alternative: first line "sample_rate,<hz>", second line
// "label:kind,..." header, then one row per sample.
inline void write_recording_csv(const std::string& path, const Recording& rec) {
    std::ofstream out(path);
    if (!out) throw Error("cannot open '" + path + "' for writing");
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", rec.sample_rate);
    out << "sample_rate," << buf << "\n";
    for (Eigen::Index c = 0; c < rec.n_channels(); ++c)
        out << (c ? "," : "") << rec.channels[static_cast<std::size_t>(c)].label << ':'
            << to_string(rec.channels[static_cast<std::size_t>(c)].kind);
    out << "\n";
    for (Eigen::Index i = 0; i < rec.n_samples(); ++i) {
        for (Eigen::Index c = 0; c < rec.n_channels(); ++c) {
            std::snprintf(buf, sizeof(buf), "%.9g", static_cast<float>(rec.data(c, i)));
            out << (c ? "," : "") << buf;
        }
        out << "\n";
    }
}

namespace detail {
inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : line) {
        if (ch == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (ch != '\r') {
            cur.push_back(ch);
        }
    }
    out.push_back(cur);
    return out;
}
}  // namespace detail

inline Recording read_recording_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open '" + path + "'");
    std::string line;
    std::size_t offset = 0;
    if (!std::getline(in, line)) throw ParseError("empty file", 0);
    auto fields = detail::split_csv_line(line);
    if (fields.size() != 2 || fields[0] != "sample_rate")
        throw ParseError("expected 'sample_rate,<hz>' header", 0);
    Recording rec;
    rec.sample_rate = std::stod(fields[1]);
    offset += line.size() + 1;

    if (!std::getline(in, line)) throw ParseError("missing channel header", offset);
    for (const auto& f : detail::split_csv_line(line)) {
        const auto colon = f.find(':');
        if (colon == std::string::npos)
            throw ParseError("channel header entry '" + f + "' lacks ':kind'", offset);
        rec.channels.push_back(
            {f.substr(0, colon), channel_kind_from_string(f.substr(colon + 1))});
    }
    offset += line.size() + 1;

    std::vector<std::vector<double>> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto vals = detail::split_csv_line(line);
        if (vals.size() != rec.channels.size())
            throw ParseError("row has " + std::to_string(vals.size()) + " fields, expected " +
                                 std::to_string(rec.channels.size()),
                             offset);
        std::vector<double> row;
        for (const auto& v : vals) {
            const double d = std::stod(v);
            if (std::isnan(d)) throw ParseError("NaN sample", offset);
            row.push_back(d);
        }
        rows.push_back(std::move(row));
        offset += line.size() + 1;
    }
    rec.data.resize(static_cast<Eigen::Index>(rec.channels.size()),
                    static_cast<Eigen::Index>(rows.size()));
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t c = 0; c < rec.channels.size(); ++c)
            rec.data(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(i)) = rows[i][c];
    return rec;
}

// ---------------------------------------------------------------- montage file

// CSV: "label,x,y,ha" with ha in {0,1}.
inline void write_montage(const std::string& path, const Montage& m) {
    std::ofstream out(path);
    if (!out) throw Error("cannot open '" + path + "' for writing");
    out << "label,x,y,ha\n";
    char buf[80];
    for (std::size_t i = 0; i < m.labels.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "%s,%.6g,%.6g,%d", m.labels[i].c_str(),
                      m.positions[i].x(), m.positions[i].y(), m.in_ha(m.labels[i]) ? 1 : 0);
        out << buf << "\n";
    }
}

inline Montage read_montage(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open '" + path + "'");
    std::string line;
    std::size_t offset = 0;
    if (!std::getline(in, line) || detail::split_csv_line(line) !=
                                       std::vector<std::string>{"label", "x", "y", "ha"})
        throw ParseError("expected 'label,x,y,ha' header", 0);
    offset += line.size() + 1;
    Montage m;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto f = detail::split_csv_line(line);
        if (f.size() != 4) throw ParseError("montage row needs 4 fields", offset);
        m.labels.push_back(f[0]);
        m.positions.emplace_back(std::stod(f[1]), std::stod(f[2]));
        if (f[3] == "1") m.ha.insert(f[0]);
        else if (f[3] != "0") throw ParseError("ha flag must be 0 or 1", offset);
        offset += line.size() + 1;
    }
    m.validate();
    return m;
}

// ---------------------------------------------------------------- ica model bundle

namespace detail {
constexpr char kModelMagic[4] = {'E', 'R', 'I', 'M'};

inline void write_matrix(std::ofstream& out, const Matrix& m) {
    for (Eigen::Index r = 0; r < m.rows(); ++r)
        for (Eigen::Index c = 0; c < m.cols(); ++c) {
            const double v = m(r, c);
            out.write(reinterpret_cast<const char*>(&v), 8);
        }
}

inline Matrix read_matrix(ByteReader& r, Eigen::Index rows, Eigen::Index cols) {
    Matrix m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = r.get<double>("matrix entry");
    return m;
}
}  // namespace detail

// Binary bundle: magic 'ERIM', version, dims, seed, nonlinearity, iterations,
// then means / whitening / unmixing / mixing as row-major little-endian f64.
inline void write_ica_model(const std::string& path, const IcaModel& model) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot open '" + path + "' for writing");
    out.write(detail::kModelMagic, 4);
    const std::uint32_t version = 1;
    out.write(reinterpret_cast<const char*>(&version), 4);
    const std::uint32_t nch = static_cast<std::uint32_t>(model.channel_means.size());
    const std::uint32_t ncomp = static_cast<std::uint32_t>(model.n_components);
    out.write(reinterpret_cast<const char*>(&nch), 4);
    out.write(reinterpret_cast<const char*>(&ncomp), 4);
    out.write(reinterpret_cast<const char*>(&model.seed), 8);
    const std::uint8_t nonlin = model.nonlinearity == Nonlinearity::tanh_contrast ? 0 : 1;
    out.write(reinterpret_cast<const char*>(&nonlin), 1);
    const std::int32_t iterations = model.iterations;
    out.write(reinterpret_cast<const char*>(&iterations), 4);
    detail::write_matrix(out, model.channel_means);
    detail::write_matrix(out, model.whitening);
    detail::write_matrix(out, model.unmixing);
    detail::write_matrix(out, model.mixing);
    if (!out) throw Error("write failed for '" + path + "'");
}

inline IcaModel read_ica_model(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open '" + path + "'");
    detail::ByteReader r{in};
    char magic[4];
    r.read(magic, 4, "magic");
    if (std::memcmp(magic, detail::kModelMagic, 4) != 0)
        throw ParseError("bad magic (not an ica model bundle)", 0);
    const auto version = r.get<std::uint32_t>("version");
    if (version != 1) throw ParseError("unsupported model version", 4);
    const auto nch = static_cast<Eigen::Index>(r.get<std::uint32_t>("channel count"));
    const auto ncomp = static_cast<Eigen::Index>(r.get<std::uint32_t>("component count"));
    IcaModel model;
    model.n_components = static_cast<int>(ncomp);
    model.seed = r.get<std::uint64_t>("seed");
    model.nonlinearity =
        r.get<std::uint8_t>("nonlinearity") == 0 ? Nonlinearity::tanh_contrast
                                                 : Nonlinearity::cube_contrast;
    model.iterations = r.get<std::int32_t>("iterations");
    model.channel_means = detail::read_matrix(r, nch, 1);
    model.whitening = detail::read_matrix(r, ncomp, nch);
    model.unmixing = detail::read_matrix(r, ncomp, ncomp);
    model.mixing = detail::read_matrix(r, nch, ncomp);
    return model;
}

// ---------------------------------------------------------------- events file

// One move-onset time per line, seconds.
inline std::vector<double> read_events(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open '" + path + "'");
    std::vector<double> out;
    std::string line;
    std::size_t offset = 0;
    while (std::getline(in, line)) {
        if (!line.empty() && line[0] != '#') {
            try {
                out.push_back(std::stod(line));
            } catch (const std::exception&) {
                throw ParseError("bad event time '" + line + "'", offset);
            }
        }
        offset += line.size() + 1;
    }
    return out;
}

inline void write_events(const std::string& path, const std::vector<double>& onsets) {
    std::ofstream out(path);
    if (!out) throw Error("cannot open '" + path + "' for writing");
    char buf[40];
    for (double t : onsets) {
        std::snprintf(buf, sizeof(buf), "%.17g", t);
        out << buf << "\n";
    }
}

}  // namespace erase
