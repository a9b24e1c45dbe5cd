#pragma once

#include "errors.hpp"
#include "slice.hpp"

#include <cstdint>
#include <filesystem>
#include <span>
#include <utility>
#include <vector>

namespace mtra {

/// Raised when a volume directory lacks the image or mask of one slice.
class MissingSliceError : public RuntimeError {
public:
    MissingSliceError(SliceId id, const std::string& what) : RuntimeError(what), id_(std::move(id)) {}
    const SliceId& slice_id() const noexcept { return id_; }

private:
    SliceId id_;
};

/// Per-slice min-max scaling to [0,1]; a constant slice becomes all zeros.
std::vector<float> normalize_minmax(std::span<const std::uint16_t> raw);
std::vector<float> normalize_minmax(std::span<const float> raw);

/// "<subject>_<NNN>.png" and "<subject>_<NNN>_mask.png".
std::string slice_file(const SliceId& id);
std::string mask_file(const SliceId& id);

/// One grayscale slice, min-max normalized.
ImageSlice load_image(const std::filesystem::path& path, Spacing spacing);
/// One label mask; labels outside 0..4 raise ValidationError.
LabelMask load_mask(const std::filesystem::path& path);

/// Reads "<subject>_<NNN>.png" / "<subject>_<NNN>_mask.png" pairs for slices
/// 0..meta.slice_count-1. Spacing and subject come from `meta`.
Volume load_volume(const std::filesystem::path& dir, const VolumeMeta& meta);

/// Metadata from the directory's meta.txt sidecar when present, or inferred
/// from the files (slices 0..max index, 1 mm spacing).
VolumeMeta read_volume_meta(const std::filesystem::path& dir);

/// Same, with the metadata taken from the directory's meta.txt sidecar when
/// present, or inferred from the files (slices 0..max index, 1 mm spacing).
Volume load_volume(const std::filesystem::path& dir);

/// A directory holding slice files is one volume; otherwise every
/// subdirectory (sorted by name) is one volume.
std::vector<Volume> load_dataset(const std::filesystem::path& dir);

/// Writes the volume's PNG pairs plus its meta.txt sidecar.
void save_volume(const Volume& volume, const std::filesystem::path& dir);

/// Bilinear for intensities, nearest neighbour for labels; spacing is scaled
/// by original/target so distances stay in millimetres.
ImageSlice resize_image(const ImageSlice& img, int target);
LabelMask resize_mask(const LabelMask& mask, int target);
std::pair<ImageSlice, LabelMask> resize_pair(const ImageSlice& img, const LabelMask& mask, int target);

Volume resize_volume(const Volume& volume, int target);

/// Keeps slices k..n-k-1.
Volume strip_edge_slices(const Volume& volume, int k);

/// Deterministic synthetic knee volume at meta.original_size: femoral bone
/// above a curved femoral cartilage band, a joint gap, then tibial cartilage
/// over the tibial bone. Tissues shrink towards both ends of the volume and
/// vanish entirely in the outer slices.
Volume make_phantom(std::uint64_t seed, const VolumeMeta& meta);

}  // namespace mtra
