#pragma once

#include "model_config.hpp"

#include <torch/torch.h>

#include <functional>

namespace mtra::net {

/// Per-channel spatial mean: (N,C,H,W) -> (N,C).
torch::Tensor gap(const torch::Tensor& f);

/// Mean of the 2x2/stride-2 max pool and average pool. Throws
/// ValidationError for odd spatial sizes.
torch::Tensor hybrid_pool(const torch::Tensor& f);

/// Replicate-pads the bottom/right edge so both spatial sizes are even.
torch::Tensor pad_to_even(const torch::Tensor& f);

/// Convolution -> batch normalization -> ReLU, "same" padding.
class ConvBlockImpl : public torch::nn::Module {
public:
    ConvBlockImpl(int in_channels, int out_channels, int kernel);
    torch::Tensor forward(const torch::Tensor& x);

private:
    torch::nn::Conv2d conv_{nullptr};
    torch::nn::BatchNorm2d norm_{nullptr};
};
TORCH_MODULE(ConvBlock);

/// Sigmoid of a shared bottleneck MLP applied to the average- and
/// max-pooled channel descriptors, summed. Returns (N,C) in (0,1).
class ChannelAttentionImpl : public torch::nn::Module {
public:
    ChannelAttentionImpl(int channels, int reduction);
    torch::Tensor forward(const torch::Tensor& f);
    int hidden() const { return hidden_; }

private:
    int hidden_;
    torch::nn::Linear squeeze_{nullptr};
    torch::nn::Linear expand_{nullptr};
};
TORCH_MODULE(ChannelAttention);

/// Sigmoid of a kernel x kernel convolution over [channel mean, channel max].
/// Returns (N,1,H,W) in (0,1). Throws ValidationError for even kernels.
class SpatialAttentionImpl : public torch::nn::Module {
public:
    explicit SpatialAttentionImpl(int kernel);
    torch::Tensor forward(const torch::Tensor& f);

private:
    torch::nn::Conv2d conv_{nullptr};
};
TORCH_MODULE(SpatialAttention);

/// Spatial attention followed by channel attention:
///   F1 = Ms(F) * F,  F2 = Mc(F1) * F1.
class CbamImpl : public torch::nn::Module {
public:
    using Gate = std::function<torch::Tensor(const torch::Tensor&)>;

    CbamImpl(int channels, int reduction, int spatial_kernel);
    torch::Tensor forward(const torch::Tensor& f);

    /// The gating arithmetic with caller-supplied attention functions
    /// (spatial: (N,C,H,W) -> (N,1,H,W), channel: (N,C,H,W) -> (N,C)).
    static torch::Tensor apply(const torch::Tensor& f, const Gate& spatial, const Gate& channel);

    SpatialAttention& spatial() { return spatial_; }
    ChannelAttention& channel() { return channel_; }

private:
    SpatialAttention spatial_{nullptr};
    ChannelAttention channel_{nullptr};
};
TORCH_MODULE(Cbam);

/// Intermediate maps of one multi-resolution fusion block.
struct MrffParts {
    torch::Tensor fused;   ///< B: 3x3 block over concat(T1, T2, T3)
    torch::Tensor gate;    ///< D: (N,c_out) in (0,1); undefined for MRFF1
    torch::Tensor enrich;  ///< E: 3x3 block over the input
};

/// Encoder block. For the Baseline variant it is two plain conv blocks and
/// `parts` is unavailable.
class MrffImpl : public torch::nn::Module {
public:
    MrffImpl(int in_channels, int out_channels, MrffVariant variant);
    torch::Tensor forward(const torch::Tensor& a);
    MrffParts parts(const torch::Tensor& a);
    MrffVariant variant() const { return variant_; }

private:
    MrffVariant variant_;
    ConvBlock branch3_{nullptr}, branch5_{nullptr}, branch7_{nullptr};
    ConvBlock fuse_{nullptr}, enrich_{nullptr};
    torch::nn::Linear gate_{nullptr};
    ConvBlock plain1_{nullptr}, plain2_{nullptr};
};
TORCH_MODULE(Mrff);

/// Upsample, gate the skip through CBAM, concatenate, two conv blocks.
class DecoderStageImpl : public torch::nn::Module {
public:
    DecoderStageImpl(int in_channels, int out_channels, int reduction, int spatial_kernel);
    torch::Tensor forward(const torch::Tensor& x, const torch::Tensor& skip);

private:
    torch::nn::ConvTranspose2d up_{nullptr};
    Cbam cbam_{nullptr};
    ConvBlock block1_{nullptr}, block2_{nullptr};
};
TORCH_MODULE(DecoderStage);

/// Encoder of MRFF blocks separated by hybrid pooling, CBAM-gated skips,
/// transposed-convolution decoder, 1x1 head to class logits.
class MtraUnetImpl : public torch::nn::Module {
public:
    explicit MtraUnetImpl(ModelConfig config);

    /// (N,in_channels,S,S) with S == input_size -> logits (N,m,S,S).
    torch::Tensor forward(const torch::Tensor& x);

    const ModelConfig& config() const { return config_; }

    /// Re-draws every weight and bias uniformly in +-1/sqrt(fan_in) from a
    /// generator seeded with `seed`; normalization layers reset to identity.
    void initialize(std::uint64_t seed);

    std::int64_t parameter_count() const;

private:
    ModelConfig config_;
    torch::nn::ModuleList encoders_{nullptr};
    torch::nn::ModuleList decoders_{nullptr};
    torch::nn::Conv2d head_{nullptr};
};
TORCH_MODULE(MtraUnet);

/// Builds and seeds a network from `config` (initialized with config.seed).
MtraUnet build_model(const ModelConfig& config);

/// Probability map fed to the losses: softmax over classes, or sigmoid when
/// there is a single output channel.
torch::Tensor probabilities(const torch::Tensor& logits);

/// Per-pixel labels: argmax for multi-class, sigmoid > 0.5 for binary.
torch::Tensor decode_labels(const torch::Tensor& logits);

/// Fan-in scaled uniform initialization of every Conv2d / ConvTranspose2d /
/// Linear inside `module`.
void initialize_uniform(torch::nn::Module& module, std::uint64_t seed);

}  // namespace mtra::net
