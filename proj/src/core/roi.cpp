#include "roi.hpp"

#include "errors.hpp"

namespace mtra::roi {

std::int64_t TissueCounts::of(Tissue t) const {
    switch (t) {
        case Tissue::FB: return fb;
        case Tissue::FC: return fc;
        case Tissue::TB: return tb;
        case Tissue::TC: return tc;
        case Tissue::Background: break;
    }
    return 0;
}

std::optional<std::int64_t> ThresholdConfig::of(Tissue t) const {
    switch (t) {
        case Tissue::FB: return fb;
        case Tissue::FC: return fc;
        case Tissue::TB: return tb;
        case Tissue::TC: return tc;
        case Tissue::Background: break;
    }
    return std::nullopt;
}

void ThresholdConfig::set(Tissue t, std::optional<std::int64_t> value) {
    switch (t) {
        case Tissue::FB: fb = value; break;
        case Tissue::FC: fc = value; break;
        case Tissue::TB: tb = value; break;
        case Tissue::TC: tc = value; break;
        case Tissue::Background: throw ValidationError("background has no ROI threshold");
    }
}

void ThresholdConfig::validate() const {
    for (Tissue t : kTissues) {
        if (auto v = of(t); v && *v < 0) {
            throw ValidationError("ROI threshold for " + std::string(tissue_name(t)) + " must be >= 0");
        }
    }
}

ThresholdConfig ThresholdConfig::multiclass_defaults() { return {300, 100, 300, 100}; }
ThresholdConfig ThresholdConfig::binary_fc_defaults() { return {std::nullopt, 280, std::nullopt, std::nullopt}; }
ThresholdConfig ThresholdConfig::binary_tc_defaults() { return {std::nullopt, std::nullopt, std::nullopt, 100}; }

TissueCounts tissue_pixel_counts(const LabelMask& mask) {
    TissueCounts c;
    for (std::uint8_t v : mask.labels) {
        switch (static_cast<Tissue>(v)) {
            case Tissue::FB: ++c.fb; break;
            case Tissue::FC: ++c.fc; break;
            case Tissue::TB: ++c.tb; break;
            case Tissue::TC: ++c.tc; break;
            default: break;
        }
    }
    return c;
}

bool is_critical_slice(const TissueCounts& counts, const ThresholdConfig& thr) {
    for (Tissue t : kTissues) {
        if (auto min = thr.of(t); min && counts.of(t) < *min) return false;
    }
    return true;
}

std::vector<int> select_critical_slices(std::span<const LabelMask> masks, const ThresholdConfig& thr) {
    thr.validate();
    std::vector<int> out;
    for (std::size_t i = 0; i < masks.size(); ++i) {
        if (is_critical_slice(tissue_pixel_counts(masks[i]), thr)) out.push_back(static_cast<int>(i));
    }
    return out;
}

}  // namespace mtra::roi
