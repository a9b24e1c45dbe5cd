#include "net.hpp"

#include "errors.hpp"

#include <ATen/CPUGeneratorImpl.h>

#include <cmath>

namespace F = torch::nn::functional;

namespace mtra::net {

torch::Tensor gap(const torch::Tensor& f) { return f.mean({2, 3}); }

torch::Tensor hybrid_pool(const torch::Tensor& f) {
    if (f.size(2) % 2 != 0 || f.size(3) % 2 != 0) {
        throw ValidationError("hybrid pooling needs even spatial sizes, got " + std::to_string(f.size(2)) + "x" +
                              std::to_string(f.size(3)));
    }
    const auto mx = F::max_pool2d(f, F::MaxPool2dFuncOptions(2).stride(2));
    const auto avg = F::avg_pool2d(f, F::AvgPool2dFuncOptions(2).stride(2));
    return (mx + avg) * 0.5;
}

torch::Tensor pad_to_even(const torch::Tensor& f) {
    const int64_t pad_h = f.size(2) % 2;
    const int64_t pad_w = f.size(3) % 2;
    if (pad_h == 0 && pad_w == 0) return f;
    return F::pad(f, F::PadFuncOptions({0, pad_w, 0, pad_h}).mode(torch::kReplicate));
}

ConvBlockImpl::ConvBlockImpl(int in_channels, int out_channels, int kernel) {
    conv_ = register_module("conv", torch::nn::Conv2d(torch::nn::Conv2dOptions(in_channels, out_channels, kernel)
                                                          .padding(kernel / 2)
                                                          .bias(true)));
    norm_ = register_module("norm", torch::nn::BatchNorm2d(out_channels));
}

torch::Tensor ConvBlockImpl::forward(const torch::Tensor& x) { return torch::relu(norm_(conv_(x))); }

ChannelAttentionImpl::ChannelAttentionImpl(int channels, int reduction) : hidden_(std::max(1, channels / reduction)) {
    if (reduction < 1) throw ValidationError("channel attention reduction must be >= 1");
    squeeze_ = register_module("squeeze", torch::nn::Linear(channels, hidden_));
    expand_ = register_module("expand", torch::nn::Linear(hidden_, channels));
}

torch::Tensor ChannelAttentionImpl::forward(const torch::Tensor& f) {
    auto mlp = [this](const torch::Tensor& v) { return expand_(torch::relu(squeeze_(v))); };
    return torch::sigmoid(mlp(f.mean({2, 3})) + mlp(f.amax({2, 3})));
}

SpatialAttentionImpl::SpatialAttentionImpl(int kernel) {
    if (kernel < 3 || kernel % 2 == 0) {
        throw ValidationError("spatial attention kernel must be odd and >= 3, got " + std::to_string(kernel));
    }
    conv_ = register_module("conv", torch::nn::Conv2d(torch::nn::Conv2dOptions(2, 1, kernel).padding(kernel / 2)));
}

torch::Tensor SpatialAttentionImpl::forward(const torch::Tensor& f) {
    const auto pooled = torch::cat({f.mean(1, /*keepdim=*/true), f.amax(1, /*keepdim=*/true)}, 1);
    return torch::sigmoid(conv_(pooled));
}

CbamImpl::CbamImpl(int channels, int reduction, int spatial_kernel) {
    spatial_ = register_module("spatial", SpatialAttention(spatial_kernel));
    channel_ = register_module("channel", ChannelAttention(channels, reduction));
}

torch::Tensor CbamImpl::apply(const torch::Tensor& f, const Gate& spatial, const Gate& channel) {
    const auto f1 = spatial(f) * f;
    const auto mc = channel(f1);
    return mc.unsqueeze(-1).unsqueeze(-1) * f1;
}

torch::Tensor CbamImpl::forward(const torch::Tensor& f) {
    return apply(
        f, [this](const torch::Tensor& t) { return spatial_(t); }, [this](const torch::Tensor& t) { return channel_(t); });
}

MrffImpl::MrffImpl(int in_channels, int out_channels, MrffVariant variant) : variant_(variant) {
    if (variant == MrffVariant::Baseline) {
        plain1_ = register_module("plain1", ConvBlock(in_channels, out_channels, 3));
        plain2_ = register_module("plain2", ConvBlock(out_channels, out_channels, 3));
        return;
    }
    branch3_ = register_module("branch3", ConvBlock(in_channels, out_channels, 3));
    branch5_ = register_module("branch5", ConvBlock(in_channels, out_channels, 5));
    branch7_ = register_module("branch7", ConvBlock(in_channels, out_channels, 7));
    fuse_ = register_module("fuse", ConvBlock(3 * out_channels, out_channels, 3));
    enrich_ = register_module("enrich", ConvBlock(in_channels, out_channels, 3));
    if (variant == MrffVariant::Mrff) gate_ = register_module("gate", torch::nn::Linear(in_channels, out_channels));
    if (variant == MrffVariant::Mrff2) gate_ = register_module("gate", torch::nn::Linear(out_channels, out_channels));
}

MrffParts MrffImpl::parts(const torch::Tensor& a) {
    if (variant_ == MrffVariant::Baseline) throw ValidationError("baseline encoder blocks have no fusion parts");
    MrffParts p;
    p.fused = fuse_(torch::cat({branch3_(a), branch5_(a), branch7_(a)}, 1));
    p.enrich = enrich_(a);
    if (variant_ == MrffVariant::Mrff) p.gate = torch::sigmoid(gate_(gap(a)));
    if (variant_ == MrffVariant::Mrff2) p.gate = torch::sigmoid(gate_(gap(p.fused)));
    return p;
}

torch::Tensor MrffImpl::forward(const torch::Tensor& a) {
    if (variant_ == MrffVariant::Baseline) return plain2_(plain1_(a));
    const MrffParts p = parts(a);
    if (!p.gate.defined()) return p.fused + p.enrich;
    return p.fused * p.gate.unsqueeze(-1).unsqueeze(-1) + p.enrich;
}

DecoderStageImpl::DecoderStageImpl(int in_channels, int out_channels, int reduction, int spatial_kernel) {
    up_ = register_module("up", torch::nn::ConvTranspose2d(
                                    torch::nn::ConvTranspose2dOptions(in_channels, out_channels, 2).stride(2)));
    cbam_ = register_module("cbam", Cbam(out_channels, reduction, spatial_kernel));
    block1_ = register_module("block1", ConvBlock(2 * out_channels, out_channels, 3));
    block2_ = register_module("block2", ConvBlock(out_channels, out_channels, 3));
}

torch::Tensor DecoderStageImpl::forward(const torch::Tensor& x, const torch::Tensor& skip) {
    auto up = up_(x);
    // The skip may be one pixel smaller when it was padded before pooling.
    up = up.narrow(2, 0, skip.size(2)).narrow(3, 0, skip.size(3));
    return block2_(block1_(torch::cat({cbam_(skip), up}, 1)));
}

MtraUnetImpl::MtraUnetImpl(ModelConfig config) : config_(std::move(config)) {
    config_.validate();
    const auto& w = config_.encoder_widths;
    encoders_ = register_module("encoders", torch::nn::ModuleList());
    int cin = config_.in_channels;
    for (int width : w) {
        encoders_->push_back(Mrff(cin, width, config_.variant));
        cin = width;
    }
    decoders_ = register_module("decoders", torch::nn::ModuleList());
    for (int i = config_.depth() - 2; i >= 0; --i) {
        decoders_->push_back(DecoderStage(w[i + 1], w[i], config_.cbam_reduction, config_.cbam_spatial_kernel));
    }
    head_ = register_module("head", torch::nn::Conv2d(torch::nn::Conv2dOptions(w[0], config_.class_count, 1)));
    initialize(config_.seed);
}

torch::Tensor MtraUnetImpl::forward(const torch::Tensor& x) {
    if (x.dim() != 4 || x.size(1) != config_.in_channels || x.size(2) != config_.input_size ||
        x.size(3) != config_.input_size) {
        throw ValidationError("network expects input (N," + std::to_string(config_.in_channels) + "," +
                              std::to_string(config_.input_size) + "," + std::to_string(config_.input_size) +
                              "), got " + c10::str(x.sizes()));
    }
    std::vector<torch::Tensor> skips;
    auto h = x;
    for (std::size_t i = 0; i < encoders_->size(); ++i) {
        if (i > 0) h = hybrid_pool(pad_to_even(h));
        h = encoders_[i]->as<MrffImpl>()->forward(h);
        skips.push_back(h);
    }
    for (std::size_t j = 0; j < decoders_->size(); ++j) {
        const auto& skip = skips[skips.size() - 2 - j];
        h = decoders_[j]->as<DecoderStageImpl>()->forward(h, skip);
    }
    return head_(h);
}

void MtraUnetImpl::initialize(std::uint64_t seed) { initialize_uniform(*this, seed); }

std::int64_t MtraUnetImpl::parameter_count() const {
    std::int64_t n = 0;
    for (const auto& p : parameters()) n += p.numel();
    return n;
}

MtraUnet build_model(const ModelConfig& config) { return MtraUnet(config); }

torch::Tensor probabilities(const torch::Tensor& logits) {
    return logits.size(1) == 1 ? torch::sigmoid(logits) : torch::softmax(logits, 1);
}

torch::Tensor decode_labels(const torch::Tensor& logits) {
    if (logits.size(1) == 1) return (logits.squeeze(1) > 0.0).to(torch::kUInt8);
    return logits.argmax(1).to(torch::kUInt8);
}

void initialize_uniform(torch::nn::Module& module, std::uint64_t seed) {
    torch::NoGradGuard no_grad;
    auto gen = at::make_generator<at::CPUGeneratorImpl>(seed);
    auto fill = [&gen](torch::Tensor& weight, torch::Tensor& bias) {
        // Matches the usual fan-in convention: dim 1 times the receptive field.
        int64_t fan_in = weight.size(1);
        for (int64_t d = 2; d < weight.dim(); ++d) fan_in *= weight.size(d);
        const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
        weight.uniform_(-bound, bound, gen);
        if (bias.defined()) bias.uniform_(-bound, bound, gen);
    };
    for (const auto& m : module.modules(/*include_self=*/false)) {
        if (auto* conv = m->as<torch::nn::Conv2dImpl>()) {
            fill(conv->weight, conv->bias);
        } else if (auto* tconv = m->as<torch::nn::ConvTranspose2dImpl>()) {
            fill(tconv->weight, tconv->bias);
        } else if (auto* lin = m->as<torch::nn::LinearImpl>()) {
            fill(lin->weight, lin->bias);
        } else if (auto* bn = m->as<torch::nn::BatchNorm2dImpl>()) {
            bn->reset_parameters();
        }
    }
}

}  // namespace mtra::net
