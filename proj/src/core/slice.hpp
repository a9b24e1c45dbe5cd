#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace mtra {

/// Label codes used by the five-class masks.
enum class Tissue : std::uint8_t { Background = 0, FB = 1, FC = 2, TB = 3, TC = 4 };

inline constexpr int kMultiClassCount = 5;
inline constexpr std::array<Tissue, 4> kTissues{Tissue::FB, Tissue::FC, Tissue::TB, Tissue::TC};

std::string_view tissue_name(Tissue t);
/// Parses "FB", "FC", "TB", "TC" (case-insensitive). Throws ValidationError.
Tissue parse_tissue(std::string_view name);

struct Spacing {
    double row_mm = 1.0;
    double col_mm = 1.0;
};

/// One 2D slice, row-major, intensities in [0,1].
struct ImageSlice {
    int height = 0;
    int width = 0;
    Spacing spacing;
    std::vector<float> pixels;

    ImageSlice() = default;
    ImageSlice(int h, int w, Spacing s = {}, float fill = 0.0f);

    float& at(int r, int c) { return pixels[static_cast<std::size_t>(r) * width + c]; }
    float at(int r, int c) const { return pixels[static_cast<std::size_t>(r) * width + c]; }
    std::size_t size() const { return pixels.size(); }
};

/// Per-pixel tissue labels, row-major.
struct LabelMask {
    int height = 0;
    int width = 0;
    int class_count = kMultiClassCount;
    std::vector<std::uint8_t> labels;

    LabelMask() = default;
    LabelMask(int h, int w, int classes = kMultiClassCount, std::uint8_t fill = 0);

    std::uint8_t& at(int r, int c) { return labels[static_cast<std::size_t>(r) * width + c]; }
    std::uint8_t at(int r, int c) const { return labels[static_cast<std::size_t>(r) * width + c]; }
    std::size_t size() const { return labels.size(); }

    /// Throws ValidationError naming the first label outside {0..class_count-1}.
    void validate() const;
    /// Binary mask of one label value.
    std::vector<std::uint8_t> binary(std::uint8_t label) const;
};

/// "<subject>_<NNN>"; the subject is everything before the final underscore.
struct SliceId {
    std::string subject;
    int index = 0;

    std::string str() const;
    static SliceId parse(std::string_view text);
    friend bool operator==(const SliceId&, const SliceId&) = default;
};

struct VolumeMeta {
    std::string subject_id = "9000000";
    int slice_count = 160;
    int original_size = 384;
    int resized_size = 150;
    Spacing spacing{0.36, 0.36};

    void validate() const;
};

struct SlicePair {
    SliceId id;
    ImageSlice image;
    LabelMask mask;
};

/// Ordered by slice index; immutable once built.
struct Volume {
    VolumeMeta meta;
    std::vector<SlicePair> slices;

    std::size_t size() const { return slices.size(); }
};

}  // namespace mtra
