#include "losses.hpp"

#include "errors.hpp"
#include "net.hpp"

namespace F = torch::nn::functional;

namespace mtra::loss {

LossWeights LossWeights::multiclass() { return {}; }

LossWeights LossWeights::binary() {
    LossWeights w;
    w.alpha = {1.0};
    return w;
}

void LossWeights::validate(int class_count, int tap_count) const {
    if (static_cast<int>(alpha.size()) != class_count) {
        throw ValidationError("alpha has " + std::to_string(alpha.size()) + " entries, expected " +
                              std::to_string(class_count));
    }
    if (static_cast<int>(lambda.size()) != tap_count) {
        throw ValidationError("lambda has " + std::to_string(lambda.size()) + " entries, expected " +
                              std::to_string(tap_count));
    }
    for (double a : alpha) {
        if (!(a >= 0.0)) throw ValidationError("alpha weights must be >= 0");
    }
    for (double l : lambda) {
        if (!(l >= 0.0)) throw ValidationError("lambda weights must be >= 0");
    }
    if (!(gamma >= 0.0) || !(eta >= 0.0)) throw ValidationError("gamma and eta must be >= 0");
}

ShapeNetImpl::ShapeNetImpl(int in_channels, std::uint64_t seed) : in_channels_(in_channels) {
    struct Spec {
        int out, kernel, stride;
    };
    constexpr Spec specs[kTaps] = {{8, 16, 2}, {16, 16, 2}, {32, 16, 2}, {32, 5, 1}};
    int cin = in_channels;
    for (int i = 0; i < kTaps; ++i) {
        auto conv = register_module("conv" + std::to_string(i + 1),
                                    torch::nn::Conv2d(torch::nn::Conv2dOptions(cin, specs[i].out, specs[i].kernel)
                                                          .stride(specs[i].stride)));
        stages_.push_back({conv, specs[i].kernel, specs[i].stride});
        cin = specs[i].out;
    }
    net::initialize_uniform(*this, seed);
    for (auto& p : parameters()) p.set_requires_grad(false);
}

std::vector<torch::Tensor> ShapeNetImpl::features(const torch::Tensor& x) {
    if (x.dim() != 4 || x.size(1) != in_channels_) {
        throw ValidationError("shape network expects " + std::to_string(in_channels_) + " input channels");
    }
    // "same" padding: output size ceil(in / stride), split as evenly as possible.
    auto same_pad = [](int64_t in, int kernel, int stride) {
        const int64_t out = (in + stride - 1) / stride;
        const int64_t total = std::max<int64_t>((out - 1) * stride + kernel - in, 0);
        return std::pair<int64_t, int64_t>{total / 2, total - total / 2};
    };
    std::vector<torch::Tensor> taps;
    taps.reserve(stages_.size());
    auto h = x;
    for (Stage& s : stages_) {
        const auto [top, bottom] = same_pad(h.size(2), s.kernel, s.stride);
        const auto [left, right] = same_pad(h.size(3), s.kernel, s.stride);
        h = torch::relu(s.conv(F::pad(h, F::PadFuncOptions({left, right, top, bottom}))));
        taps.push_back(h);
    }
    return taps;
}

namespace {

void check_pair(const torch::Tensor& probs, const torch::Tensor& onehot) {
    if (probs.dim() != 4 || !probs.sizes().equals(onehot.sizes())) {
        throw ValidationError("prediction " + c10::str(probs.sizes()) + " and target " + c10::str(onehot.sizes()) +
                              " must share an (N,m,H,W) shape");
    }
}

torch::Tensor weight_tensor(const std::vector<double>& w, const torch::Tensor& like) {
    return torch::tensor(w, torch::TensorOptions().dtype(torch::kFloat64)).to(like.options());
}

}  // namespace

torch::Tensor weighted_pixel_loss(const torch::Tensor& probs, const torch::Tensor& onehot,
                                  const std::vector<double>& alpha) {
    check_pair(probs, onehot);
    if (static_cast<int64_t>(alpha.size()) != probs.size(1)) {
        throw ValidationError("alpha length " + std::to_string(alpha.size()) + " does not match " +
                              std::to_string(probs.size(1)) + " channels");
    }
    if (probs.min().item<double>() < 0.0) throw ValidationError("probabilities must be non-negative");

    const double pixels = static_cast<double>(probs.size(2) * probs.size(3));
    const auto ce = -(onehot * torch::log(probs + kEpsilon)).sum({2, 3}) / pixels;  // (N,m)
    const auto inter = (probs * onehot).sum({2, 3});
    const auto denom = probs.sum({2, 3}) + onehot.sum({2, 3});
    const auto dice = 1.0 - (2.0 * inter + kEpsilon) / (denom + kEpsilon);
    const auto per_channel = ce + dice;
    return (per_channel * weight_tensor(alpha, probs)).sum(1).mean();
}

torch::Tensor shape_loss(const torch::Tensor& probs, const torch::Tensor& onehot, const std::vector<double>& lambda,
                         ShapeNet& net) {
    check_pair(probs, onehot);
    if (static_cast<int>(lambda.size()) != ShapeNetImpl::kTaps) {
        throw ValidationError("lambda needs " + std::to_string(ShapeNetImpl::kTaps) + " entries");
    }
    const auto pred_taps = net->features(probs);
    const auto true_taps = net->features(onehot);
    auto total = torch::zeros({}, probs.options());
    for (std::size_t i = 0; i < pred_taps.size(); ++i) {
        total = total + lambda[i] * (pred_taps[i] - true_taps[i]).abs().mean();
    }
    return total;
}

torch::Tensor combined_loss(const torch::Tensor& probs, const torch::Tensor& onehot, const LossWeights& weights,
                            ShapeNet& net) {
    weights.validate(static_cast<int>(probs.size(1)), ShapeNetImpl::kTaps);
    auto total = weights.gamma * weighted_pixel_loss(probs, onehot, weights.alpha);
    if (weights.eta != 0.0) total = total + weights.eta * shape_loss(probs, onehot, weights.lambda, net);
    return total;
}

}  // namespace mtra::loss
