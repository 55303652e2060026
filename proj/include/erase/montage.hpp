#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cctype>
#include <set>
#include <string>
#include <vector>

#include "erase/types.hpp"

namespace erase {

enum class HaSide { left, right };

inline const std::vector<std::string>& hand_motor_left_ha() {
    static const std::vector<std::string> v = {"C3",    "C5",    "C1",   "FCC5h",
                                               "FCC3h", "CCP5h", "CCP3h"};
    return v;
}

inline const std::vector<std::string>& hand_motor_right_ha() {
    static const std::vector<std::string> v = {"C4",    "C2",    "C6",   "FCC6h",
                                               "FCC4h", "CCP4h", "CCP6h"};
    return v;
}

// Homologous mirror across the midline: odd lateral numbers pair with the next
// even number (C3<->C4, FCC5h<->FCC6h); midline labels map to themselves.
inline std::string mirror_label(const std::string& label) {
    std::size_t i = 0;
    while (i < label.size() && !std::isdigit(static_cast<unsigned char>(label[i]))) ++i;
    if (i == label.size()) return label;  // midline (z) or unnumbered
    std::size_t j = i;
    while (j < label.size() && std::isdigit(static_cast<unsigned char>(label[j]))) ++j;
    const int num = std::stoi(label.substr(i, j - i));
    const int mirrored = num % 2 == 1 ? num + 1 : num - 1;
    return label.substr(0, i) + std::to_string(mirrored) + label.substr(j);
}

// 2D electrode layout on the unit disk with the hemicraniectomy-area mask.
struct Montage {
    std::vector<std::string> labels;
    std::vector<Eigen::Vector2d> positions;
    std::set<std::string> ha;

    Eigen::Index index_of(const std::string& label) const {
        for (std::size_t i = 0; i < labels.size(); ++i)
            if (labels[i] == label) return static_cast<Eigen::Index>(i);
        throw Error("electrode '" + label + "' missing from montage");
    }

    bool contains(const std::string& label) const {
        return std::find(labels.begin(), labels.end(), label) != labels.end();
    }

    bool in_ha(const std::string& label) const { return ha.count(label) > 0; }

    HaSide ha_side() const {
        if (ha.empty()) throw InvalidSpecError("montage has no hemicraniectomy mask");
        double mean_x = 0.0;
        for (const auto& l : ha) mean_x += positions[static_cast<std::size_t>(index_of(l))].x();
        return mean_x / static_cast<double>(ha.size()) < 0 ? HaSide::left : HaSide::right;
    }

    // The seven electrodes over contralateral hand motor cortex for this HA side.
    const std::vector<std::string>& hand_motor_labels() const {
        return ha_side() == HaSide::left ? hand_motor_left_ha() : hand_motor_right_ha();
    }

    std::vector<std::string> contralesional_labels() const {
        std::vector<std::string> out;
        for (const auto& l : hand_motor_labels()) out.push_back(mirror_label(l));
        return out;
    }

    void validate() const {
        std::set<std::string> seen;
        for (const auto& l : labels)
            if (!seen.insert(l).second) throw InvalidSpecError("duplicate electrode label '" + l + "'");
        if (labels.size() != positions.size())
            throw InvalidSpecError("montage label/position count mismatch");
        for (const auto& l : ha)
            if (!contains(l)) throw Error("electrode '" + l + "' missing from montage");
        if (!ha.empty())
            for (const auto& l : hand_motor_labels())
                if (!contains(l)) throw Error("electrode '" + l + "' missing from montage");
    }

    // Subset montage restricted to the given labels (keeps their order).
    Montage subset(const std::vector<std::string>& keep) const {
        Montage out;
        for (const auto& l : keep) {
            out.labels.push_back(l);
            out.positions.push_back(positions[static_cast<std::size_t>(index_of(l))]);
            if (in_ha(l)) out.ha.insert(l);
        }
        return out;
    }
};

namespace detail {
struct MontageEntry {
    const char* label;
    double x, y;
};
inline const MontageEntry* builtin_montage_table(std::size_t& count) {
    static const MontageEntry table[] = {
#include "erase/detail/montage_table.inc"
    };
    count = sizeof(table) / sizeof(table[0]);
    return table;
}
}  // namespace detail

// Bundled 128-electrode layout; HA defaults to the left hemisphere (x < 0).
inline Montage default_montage(HaSide side = HaSide::left) {
    std::size_t count = 0;
    const auto* table = detail::builtin_montage_table(count);
    Montage m;
    for (std::size_t i = 0; i < count; ++i) {
        m.labels.emplace_back(table[i].label);
        m.positions.emplace_back(table[i].x, table[i].y);
        const bool left = table[i].x < 0;
        if ((side == HaSide::left && left) || (side == HaSide::right && table[i].x > 0))
            m.ha.insert(table[i].label);
    }
    m.validate();
    return m;
}

}  // namespace erase
