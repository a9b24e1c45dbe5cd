#pragma once

#include "slice.hpp"

#include <torch/torch.h>

#include <optional>
#include <span>

namespace mtra {

/// How label masks become training targets: all classes one-hot, or a single
/// foreground channel for one tissue.
struct TargetEncoding {
    std::optional<Tissue> binary_tissue;

    int channels() const { return binary_tissue ? 1 : kMultiClassCount; }
    /// Label code of a decoded foreground pixel in binary mode.
    std::uint8_t foreground_label() const { return binary_tissue ? static_cast<std::uint8_t>(*binary_tissue) : 1; }
};

/// (1,H,W) float tensor of the normalized intensities.
torch::Tensor to_tensor(const ImageSlice& img);

/// (m,H,W) float tensor with exactly one 1 per pixel (m = class_count).
torch::Tensor one_hot(const LabelMask& mask);

/// Target tensor under `enc`: one_hot for multi-class, (1,H,W) foreground map
/// for binary.
torch::Tensor encode_target(const LabelMask& mask, const TargetEncoding& enc);

/// Stacks slices into (N,1,H,W) images and (N,m,H,W) targets.
torch::Tensor stack_images(std::span<const SlicePair* const> batch);
torch::Tensor stack_targets(std::span<const SlicePair* const> batch, const TargetEncoding& enc);

/// (H,W) uint8 labels back into a LabelMask. In binary mode foreground pixels
/// take the tissue's label code.
LabelMask to_mask(const torch::Tensor& labels, const TargetEncoding& enc);

}  // namespace mtra
