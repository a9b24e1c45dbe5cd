#pragma once

#include "slice.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace mtra::roi {

/// Pixel counts of FB, FC, TB, TC in one ground-truth mask.
struct TissueCounts {
    std::int64_t fb = 0, fc = 0, tb = 0, tc = 0;

    std::int64_t of(Tissue t) const;
    friend bool operator==(const TissueCounts&, const TissueCounts&) = default;
};

/// Minimum ground-truth pixel counts. A tissue without a threshold does not
/// take part in the rule.
struct ThresholdConfig {
    std::optional<std::int64_t> fb, fc, tb, tc;

    std::optional<std::int64_t> of(Tissue t) const;
    void set(Tissue t, std::optional<std::int64_t> value);
    void validate() const;

    static ThresholdConfig multiclass_defaults();  ///< FB=TB=300, FC=TC=100
    static ThresholdConfig binary_fc_defaults();   ///< FC=280
    static ThresholdConfig binary_tc_defaults();   ///< TC=100
};

TissueCounts tissue_pixel_counts(const LabelMask& mask);

/// True iff every configured tissue reaches its threshold.
bool is_critical_slice(const TissueCounts& counts, const ThresholdConfig& thr);

/// Ascending indices (positions in `masks`) of the critical slices.
std::vector<int> select_critical_slices(std::span<const LabelMask> masks, const ThresholdConfig& thr);

}  // namespace mtra::roi
