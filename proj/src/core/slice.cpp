#include "slice.hpp"

#include "errors.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdio>

namespace mtra {

std::string_view tissue_name(Tissue t) {
    switch (t) {
        case Tissue::Background: return "BG";
        case Tissue::FB: return "FB";
        case Tissue::FC: return "FC";
        case Tissue::TB: return "TB";
        case Tissue::TC: return "TC";
    }
    return "?";
}

Tissue parse_tissue(std::string_view name) {
    std::string up(name);
    std::transform(up.begin(), up.end(), up.begin(), [](unsigned char c) { return std::toupper(c); });
    for (Tissue t : kTissues) {
        if (tissue_name(t) == up) return t;
    }
    throw ValidationError("unknown tissue '" + std::string(name) + "'");
}

ImageSlice::ImageSlice(int h, int w, Spacing s, float fill)
    : height(h), width(w), spacing(s), pixels(static_cast<std::size_t>(h) * w, fill) {}

LabelMask::LabelMask(int h, int w, int classes, std::uint8_t fill)
    : height(h), width(w), class_count(classes), labels(static_cast<std::size_t>(h) * w, fill) {}

void LabelMask::validate() const {
    if (labels.size() != static_cast<std::size_t>(height) * width) {
        throw ValidationError("mask buffer does not match its declared shape");
    }
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] >= class_count) {
            throw ValidationError("label " + std::to_string(labels[i]) + " at pixel " + std::to_string(i) +
                                  " outside {0.." + std::to_string(class_count - 1) + "}");
        }
    }
}

std::vector<std::uint8_t> LabelMask::binary(std::uint8_t label) const {
    std::vector<std::uint8_t> out(labels.size());
    std::transform(labels.begin(), labels.end(), out.begin(),
                   [label](std::uint8_t v) { return static_cast<std::uint8_t>(v == label); });
    return out;
}

std::string SliceId::str() const {
    char buf[8];
    std::snprintf(buf, sizeof buf, "%03d", index);
    return subject + "_" + buf;
}

SliceId SliceId::parse(std::string_view text) {
    const auto us = text.rfind('_');
    if (us == std::string_view::npos || us == 0 || us + 1 >= text.size()) {
        throw ValidationError("malformed slice id '" + std::string(text) + "'");
    }
    SliceId id;
    id.subject = std::string(text.substr(0, us));
    const auto digits = text.substr(us + 1);
    auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), id.index);
    if (ec != std::errc{} || ptr != digits.data() + digits.size() || id.index < 0) {
        throw ValidationError("malformed slice index in '" + std::string(text) + "'");
    }
    return id;
}

void VolumeMeta::validate() const {
    if (slice_count < 1) throw ValidationError("slice_count must be >= 1");
    if (resized_size < 1 || original_size < 1) throw ValidationError("image sizes must be >= 1");
    if (resized_size > original_size) throw ValidationError("resized_size must not exceed original_size");
    if (!(spacing.row_mm > 0.0) || !(spacing.col_mm > 0.0)) throw ValidationError("spacing must be positive");
}

}  // namespace mtra
