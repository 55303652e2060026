#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "erase/io.hpp"
#include "erase/metrics.hpp"
#include "erase/montage.hpp"
#include "erase/types.hpp"

namespace erase {

namespace detail {

inline std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline std::ofstream open_out(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot open '" + path + "' for writing");
    return out;
}

}  // namespace detail

// ---------------------------------------------------------------- CSV exports

// columns: electrode,mean_move_z,mean_idle_z,p_value,significant
inline void write_band_power_csv(const std::string& path, const BandPowerSummary& s) {
    auto out = detail::open_out(path);
    out << "electrode,mean_move_z,mean_idle_z,p_value,significant\n";
    for (std::size_t i = 0; i < s.electrodes.size(); ++i) {
        const auto c = static_cast<Eigen::Index>(i);
        out << s.electrodes[i] << ',' << detail::fmt(s.mean_move_z[c]) << ','
            << detail::fmt(s.mean_idle_z[c]) << ',' << detail::fmt(s.p_value[c]) << ','
            << (s.significant[i] ? 1 : 0) << "\n";
    }
}

// columns: electrode,trial,snr_db
inline void write_snr_csv(const std::string& path,
                          const std::map<std::string, std::vector<double>>& per_electrode) {
    auto out = detail::open_out(path);
    out << "electrode,trial,snr_db\n";
    for (const auto& [electrode, values] : per_electrode)
        for (std::size_t k = 0; k < values.size(); ++k)
            out << electrode << ',' << k << ',' << detail::fmt(values[k]) << "\n";
}

// columns: electrode,r,t,p,significant_r,n_levels
inline void write_fd_correlation_csv(const std::string& path, const FdCorrelation& fd) {
    auto out = detail::open_out(path);
    out << "electrode,r,t,p,significant_r,n_levels\n";
    int populated = 0;
    for (int c : fd.level_counts)
        if (c > 0) ++populated;
    for (std::size_t i = 0; i < fd.electrodes.size(); ++i) {
        const auto c = static_cast<Eigen::Index>(i);
        out << fd.electrodes[i] << ',' << detail::fmt(fd.r[c]) << ',' << detail::fmt(fd.t[c]) << ','
            << detail::fmt(fd.p[c]) << ',' << detail::fmt(fd.significant_r[c]) << ',' << populated
            << "\n";
    }
}

// columns: electrode,level,center,mean_rel_fd,n_trials
inline void write_fd_levels_csv(const std::string& path, const FdCorrelation& fd) {
    auto out = detail::open_out(path);
    out << "electrode,level,center,mean_rel_fd,n_trials\n";
    for (std::size_t i = 0; i < fd.electrodes.size(); ++i)
        for (std::size_t l = 0; l < fd.level_centers.size(); ++l) {
            if (fd.level_counts[l] == 0) continue;
            out << fd.electrodes[i] << ',' << (l + 1) << ',' << detail::fmt(fd.level_centers[l])
                << ','
                << detail::fmt(fd.level_mean_rel_fd(static_cast<Eigen::Index>(i),
                                                    static_cast<Eigen::Index>(l)))
                << ',' << fd.level_counts[l] << "\n";
        }
}

// columns: metric,value ('sce_proportion_in_ha' left empty when undefined)
inline void write_region_summary_csv(const std::string& path, const RegionSummary& r) {
    auto out = detail::open_out(path);
    out << "metric,value\n";
    out << "ha_mean_move_z," << detail::fmt(r.ha_mean_move_z) << "\n";
    out << "nha_mean_move_z," << detail::fmt(r.nha_mean_move_z) << "\n";
    out << "ha_vs_nha_p," << detail::fmt(r.ha_vs_nha_p) << "\n";
    out << "sce_total," << r.sce_total << "\n";
    out << "sce_in_ha," << r.sce_in_ha << "\n";
    out << "sce_proportion_in_ha,"
        << (r.sce_proportion_in_ha ? detail::fmt(*r.sce_proportion_in_ha) : std::string()) << "\n";
    out << "hand_motor_mean_sig_abs_r," << detail::fmt(r.hand_motor_mean_sig_abs_r) << "\n";
    out << "contralesional_mean_sig_abs_r," << detail::fmt(r.contralesional_mean_sig_abs_r) << "\n";
}

// generic CSV table reader (header + rows), used by the report command
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    std::size_t column(const std::string& name) const {
        for (std::size_t i = 0; i < header.size(); ++i)
            if (header[i] == name) return i;
        throw Error("csv column '" + name + "' not found");
    }
};

inline CsvTable read_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open '" + path + "'");
    CsvTable t;
    std::string line;
    if (!std::getline(in, line)) throw ParseError("empty csv", 0);
    t.header = detail::split_csv_line(line);
    while (std::getline(in, line))
        if (!line.empty()) t.rows.push_back(detail::split_csv_line(line));
    return t;
}

// ---------------------------------------------------------------- SVG helpers

namespace detail {

inline void svg_open(std::ostringstream& svg, int w, int h) {
    svg << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
        << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h
        << "\" viewBox=\"0 0 " << w << " " << h << "\">\n";
}

// diverging blue-white-red map over [-1, 1]
inline std::string diverging_color(double t) {
    t = std::clamp(t, -1.0, 1.0);
    int r, g, b;
    if (t < 0) {
        r = static_cast<int>(255 * (1.0 + t));
        g = static_cast<int>(255 * (1.0 + t * 0.55));
        b = 255;
    } else {
        r = 255;
        g = static_cast<int>(255 * (1.0 - t * 0.55));
        b = static_cast<int>(255 * (1.0 - t));
    }
    char buf[10];
    std::snprintf(buf, sizeof(buf), "#%02x%02x%02x", r, g, b);
    return buf;
}

// convex hull (monotone chain) for the HA outline
inline std::vector<Eigen::Vector2d> convex_hull(std::vector<Eigen::Vector2d> pts) {
    if (pts.size() < 3) return pts;
    std::sort(pts.begin(), pts.end(), [](const auto& a, const auto& b) {
        return a.x() < b.x() || (a.x() == b.x() && a.y() < b.y());
    });
    auto cross = [](const Eigen::Vector2d& o, const Eigen::Vector2d& a, const Eigen::Vector2d& b) {
        return (a.x() - o.x()) * (b.y() - o.y()) - (a.y() - o.y()) * (b.x() - o.x());
    };
    std::vector<Eigen::Vector2d> hull(2 * pts.size());
    std::size_t k = 0;
    for (const auto& p : pts) {
        while (k >= 2 && cross(hull[k - 2], hull[k - 1], p) <= 0) --k;
        hull[k++] = p;
    }
    for (std::size_t i = pts.size() - 1, t = k + 1; i-- > 0;) {
        while (k >= t && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0) --k;
        hull[k++] = pts[i];
    }
    hull.resize(k - 1);
    return hull;
}

}  // namespace detail

struct TopographyOptions {
    int size_px = 440;
    int grid = 60;         // interpolation cells across the head disk
    double idw_power = 2.0;
    int n_virtual = 0;     // virtual-electrode dots drawn on the rim
    std::string title;
};

// Interpolated scalp map of per-electrode values (inverse-distance weighting),
// masked to significant electrodes, with the HA outline and virtual-electrode
// rim dots.
inline std::string render_topography_svg(const Montage& montage,
                                         const std::vector<std::string>& electrodes,
                                         const Vector& values,
                                         const std::vector<bool>& significant,
                                         const TopographyOptions& opt = {}) {
    if (electrodes.size() != static_cast<std::size_t>(values.size()) ||
        electrodes.size() != significant.size())
        throw InvalidSpecError("topography inputs must have equal lengths");

    const int s = opt.size_px;
    const double cx = s / 2.0, cy = s / 2.0, radius = s * 0.38;
    auto px = [&](const Eigen::Vector2d& p) {
        return Eigen::Vector2d(cx + p.x() * radius, cy - p.y() * radius);
    };

    std::vector<Eigen::Vector2d> sig_pos;
    std::vector<double> sig_val;
    double vmax = 1e-12;
    for (std::size_t i = 0; i < electrodes.size(); ++i) {
        if (!significant[i]) continue;
        sig_pos.push_back(montage.positions[static_cast<std::size_t>(montage.index_of(electrodes[i]))]);
        sig_val.push_back(values[static_cast<Eigen::Index>(i)]);
        vmax = std::max(vmax, std::abs(values[static_cast<Eigen::Index>(i)]));
    }

    std::ostringstream svg;
    detail::svg_open(svg, s, s);
    svg << "<rect width=\"" << s << "\" height=\"" << s << "\" fill=\"white\"/>\n";
    if (!opt.title.empty())
        svg << "<text x=\"" << cx << "\" y=\"18\" text-anchor=\"middle\" font-size=\"14\">"
            << opt.title << "</text>\n";

    // interpolated field over the disk, only when something is significant
    if (!sig_pos.empty()) {
        const double cell = 2.0 / opt.grid;
        for (int gy = 0; gy < opt.grid; ++gy) {
            for (int gx = 0; gx < opt.grid; ++gx) {
                const double x = -1.0 + (gx + 0.5) * cell;
                const double y = -1.0 + (gy + 0.5) * cell;
                if (x * x + y * y > 1.0) continue;
                double wsum = 0.0, vsum = 0.0;
                bool exact = false;
                for (std::size_t i = 0; i < sig_pos.size(); ++i) {
                    const double d2 = (sig_pos[i].x() - x) * (sig_pos[i].x() - x) +
                                      (sig_pos[i].y() - y) * (sig_pos[i].y() - y);
                    if (d2 < 1e-12) {
                        vsum = sig_val[i];
                        wsum = 1.0;
                        exact = true;
                        break;
                    }
                    const double w = std::pow(d2, -opt.idw_power / 2.0);
                    wsum += w;
                    vsum += w * sig_val[i];
                }
                const double v = exact ? vsum : vsum / wsum;
                const Eigen::Vector2d c = px({x, y});
                svg << "<rect x=\"" << c.x() - cell * radius / 2 << "\" y=\""
                    << c.y() - cell * radius / 2 << "\" width=\"" << cell * radius + 0.5
                    << "\" height=\"" << cell * radius + 0.5 << "\" fill=\""
                    << detail::diverging_color(v / vmax) << "\"/>\n";
            }
        }
    }

    // head outline and nose
    svg << "<circle cx=\"" << cx << "\" cy=\"" << cy << "\" r=\"" << radius
        << "\" fill=\"none\" stroke=\"black\" stroke-width=\"2\"/>\n";
    svg << "<path d=\"M " << cx - radius * 0.08 << " " << cy - radius * 0.996 << " L " << cx << " "
        << cy - radius * 1.08 << " L " << cx + radius * 0.08 << " " << cy - radius * 0.996
        << "\" fill=\"none\" stroke=\"black\" stroke-width=\"2\"/>\n";

    // HA outline (red convex hull of HA electrodes present in this map)
    std::vector<Eigen::Vector2d> ha_pts;
    for (const auto& e : electrodes)
        if (montage.in_ha(e))
            ha_pts.push_back(montage.positions[static_cast<std::size_t>(montage.index_of(e))]);
    if (ha_pts.size() >= 3) {
        Eigen::Vector2d centroid(0, 0);
        for (const auto& p : ha_pts) centroid += p;
        centroid /= static_cast<double>(ha_pts.size());
        auto hull = detail::convex_hull(ha_pts);
        svg << "<polygon points=\"";
        for (const auto& p : hull) {
            const Eigen::Vector2d q = px(centroid + (p - centroid) * 1.18);
            svg << q.x() << ',' << q.y() << ' ';
        }
        svg << "\" fill=\"none\" stroke=\"red\" stroke-width=\"2\"/>\n";
    }

    // electrode dots: significant filled, others hollow
    for (std::size_t i = 0; i < electrodes.size(); ++i) {
        const Eigen::Vector2d c =
            px(montage.positions[static_cast<std::size_t>(montage.index_of(electrodes[i]))]);
        svg << "<circle cx=\"" << c.x() << "\" cy=\"" << c.y() << "\" r=\"3\" fill=\""
            << (significant[i] ? "black" : "none") << "\" stroke=\"black\"/>\n";
    }

    // virtual-electrode dots on the rim
    for (int v = 0; v < opt.n_virtual; ++v) {
        const double ang = 2.0 * std::numbers::pi * v / std::max(opt.n_virtual, 1);
        const Eigen::Vector2d c = px({1.12 * std::cos(ang), 1.12 * std::sin(ang)});
        svg << "<circle cx=\"" << c.x() << "\" cy=\"" << c.y()
            << "\" r=\"4\" fill=\"black\"/>\n";
    }
    svg << "</svg>\n";
    return svg.str();
}

// Bar chart of significant |R| per electrode, red bars in HA, blue in NHA.
inline std::string render_correlation_bars_svg(const Montage& montage,
                                               const std::vector<std::string>& electrodes,
                                               const Vector& significant_r,
                                               const std::string& title = "") {
    if (electrodes.size() != static_cast<std::size_t>(significant_r.size()))
        throw InvalidSpecError("bar chart inputs must have equal lengths");
    const int w = std::max(320, 40 + static_cast<int>(electrodes.size()) * 26);
    const int h = 300;
    const int x0 = 36, y0 = h - 50;
    const double yscale = (h - 90);

    std::ostringstream svg;
    detail::svg_open(svg, w, h);
    svg << "<rect width=\"" << w << "\" height=\"" << h << "\" fill=\"white\"/>\n";
    if (!title.empty())
        svg << "<text x=\"" << w / 2 << "\" y=\"16\" text-anchor=\"middle\" font-size=\"13\">"
            << title << "</text>\n";
    for (int tick = 0; tick <= 4; ++tick) {
        const double v = tick / 4.0;
        const double y = y0 - v * yscale;
        svg << "<line x1=\"" << x0 << "\" y1=\"" << y << "\" x2=\"" << w - 8 << "\" y2=\"" << y
            << "\" stroke=\"#dddddd\"/>\n"
            << "<text x=\"" << x0 - 6 << "\" y=\"" << y + 4
            << "\" text-anchor=\"end\" font-size=\"10\">" << v << "</text>\n";
    }
    for (std::size_t i = 0; i < electrodes.size(); ++i) {
        const double v = std::abs(significant_r[static_cast<Eigen::Index>(i)]);
        const double x = x0 + 6 + static_cast<double>(i) * 26;
        if (v > 0) {
            svg << "<rect x=\"" << x << "\" y=\"" << y0 - v * yscale << "\" width=\"16\" height=\""
                << v * yscale << "\" fill=\"" << (montage.in_ha(electrodes[i]) ? "red" : "blue")
                << "\"/>\n";
        }
        svg << "<text x=\"" << x + 8 << "\" y=\"" << y0 + 12
            << "\" text-anchor=\"middle\" font-size=\"8\" transform=\"rotate(45 " << x + 8 << ' '
            << y0 + 12 << ")\">" << electrodes[i] << "</text>\n";
    }
    svg << "<line x1=\"" << x0 << "\" y1=\"" << y0 << "\" x2=\"" << w - 8 << "\" y2=\"" << y0
        << "\" stroke=\"black\"/>\n";
    svg << "</svg>\n";
    return svg.str();
}

}  // namespace erase
