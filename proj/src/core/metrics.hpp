#pragma once

#include "slice.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace mtra::metrics {

/// Non-owning 2D binary mask; any nonzero byte is foreground.
struct BinaryView {
    int height = 0;
    int width = 0;
    std::span<const std::uint8_t> data;
};

/// Dice similarity in percent, 100 * 2|K n Y| / (|K| + |Y|). Both empty -> 100.
double dsc(std::span<const std::uint8_t> k, std::span<const std::uint8_t> y);

/// Volumetric overlap error in percent from a DSC in percent.
double voe(double dsc_percent);

/// Symmetric Hausdorff distance in mm between foreground pixel centres.
/// Both empty -> 0; exactly one empty -> nullopt (undefined).
std::optional<double> hausdorff(const BinaryView& k, const BinaryView& y, Spacing spacing = {});

/// Squared Euclidean distance (mm^2) from every pixel to the nearest
/// foreground pixel of `mask`; +inf everywhere when the mask is empty.
std::vector<double> squared_distance_transform(const BinaryView& mask, Spacing spacing);

/// Percent of positions where the two label maps agree.
double pixel_accuracy(std::span<const std::uint8_t> k_labels, std::span<const std::uint8_t> y_labels);

struct Confusion {
    std::size_t tp = 0, tn = 0, fp = 0, fn = 0;
};
Confusion confusion(std::span<const std::uint8_t> k, std::span<const std::uint8_t> y);

struct MetricRecord {
    std::string slice_id;
    Tissue tissue = Tissue::FB;
    double dsc_percent = 0.0;
    double voe_percent = 0.0;
    std::optional<double> hd_mm;
    double pa_percent = 0.0;
};

/// DSC/VOE/HD/PA for one tissue of one slice.
/// PA here is the binary accuracy of that tissue's foreground map.
MetricRecord evaluate_tissue(const std::string& slice_id, Tissue tissue, const LabelMask& pred, const LabelMask& truth,
                             Spacing spacing);

/// Binary variant: `pred` and `truth` are already foreground/background.
MetricRecord evaluate_binary(const std::string& slice_id, Tissue tissue, const BinaryView& pred,
                             const BinaryView& truth, Spacing spacing);

/// Mean plus five-number summary (linear-interpolated quartiles).
struct Summary {
    std::size_t count = 0;
    double mean = 0.0;
    double min = 0.0, q1 = 0.0, median = 0.0, q3 = 0.0, max = 0.0;
};

/// Throws ValidationError on an empty input.
Summary summarize(std::vector<double> values);

struct TissueSummary {
    Summary dsc, voe, pa;
    std::optional<Summary> hd;  ///< nullopt when no slice had a defined HD
    std::size_t hd_undefined = 0;
};

/// Per-tissue aggregation in tissue-code order. Throws on an empty record set.
std::map<Tissue, TissueSummary> aggregate(std::span<const MetricRecord> records);

}  // namespace mtra::metrics
