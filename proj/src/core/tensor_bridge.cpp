#include "tensor_bridge.hpp"

#include "errors.hpp"

namespace mtra {

torch::Tensor to_tensor(const ImageSlice& img) {
    return torch::from_blob(const_cast<float*>(img.pixels.data()), {1, img.height, img.width}, torch::kFloat32).clone();
}

torch::Tensor one_hot(const LabelMask& mask) {
    mask.validate();
    auto out = torch::zeros({mask.class_count, mask.height, mask.width}, torch::kFloat32);
    auto acc = out.accessor<float, 3>();
    for (int r = 0; r < mask.height; ++r) {
        for (int c = 0; c < mask.width; ++c) acc[mask.at(r, c)][r][c] = 1.0f;
    }
    return out;
}

torch::Tensor encode_target(const LabelMask& mask, const TargetEncoding& enc) {
    if (!enc.binary_tissue) return one_hot(mask);
    mask.validate();
    const auto fg = mask.binary(static_cast<std::uint8_t>(*enc.binary_tissue));
    return torch::from_blob(const_cast<std::uint8_t*>(fg.data()), {1, mask.height, mask.width}, torch::kUInt8)
        .to(torch::kFloat32);
}

torch::Tensor stack_images(std::span<const SlicePair* const> batch) {
    std::vector<torch::Tensor> items;
    items.reserve(batch.size());
    for (const SlicePair* p : batch) items.push_back(to_tensor(p->image));
    return torch::stack(items);
}

torch::Tensor stack_targets(std::span<const SlicePair* const> batch, const TargetEncoding& enc) {
    std::vector<torch::Tensor> items;
    items.reserve(batch.size());
    for (const SlicePair* p : batch) items.push_back(encode_target(p->mask, enc));
    return torch::stack(items);
}

LabelMask to_mask(const torch::Tensor& labels, const TargetEncoding& enc) {
    if (labels.dim() != 2) throw ValidationError("expected an (H,W) label tensor");
    const auto contiguous = labels.to(torch::kUInt8).contiguous();
    LabelMask mask(static_cast<int>(contiguous.size(0)), static_cast<int>(contiguous.size(1)), kMultiClassCount);
    const std::uint8_t* src = contiguous.data_ptr<std::uint8_t>();
    const std::uint8_t fg = enc.foreground_label();
    for (std::size_t i = 0; i < mask.labels.size(); ++i) {
        mask.labels[i] = enc.binary_tissue ? static_cast<std::uint8_t>(src[i] ? fg : 0) : src[i];
    }
    return mask;
}

}  // namespace mtra
