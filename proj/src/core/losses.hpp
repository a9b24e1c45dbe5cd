#pragma once

#include <torch/torch.h>

#include <cstdint>
#include <vector>

namespace mtra::loss {

inline constexpr double kEpsilon = 1e-6;
inline constexpr std::uint64_t kShapeNetSeed = 20240707;

struct LossWeights {
    std::vector<double> alpha{0.01, 0.1, 0.27, 0.12, 0.5};  ///< per class channel
    std::vector<double> lambda{0.1, 0.2, 0.3, 0.4};         ///< per feature tap, shallow first
    double gamma = 0.7;                                      ///< pixel-wise term
    double eta = 0.3;                                        ///< shape-reconstruction term

    static LossWeights multiclass();
    static LossWeights binary();

    /// Throws ValidationError on negative weights or a length mismatch.
    void validate(int class_count, int tap_count) const;
};

/// Frozen feature extractor for the shape-reconstruction loss: three 16x16
/// stride-2 blocks then one 5x5 stride-1 block (widths 8, 16, 32, 32), each
/// convolution followed by ReLU. Parameters never receive gradients.
class ShapeNetImpl : public torch::nn::Module {
public:
    static constexpr int kTaps = 4;

    explicit ShapeNetImpl(int in_channels, std::uint64_t seed = kShapeNetSeed);

    /// One output per block, shallowest first.
    std::vector<torch::Tensor> features(const torch::Tensor& x);

    int in_channels() const { return in_channels_; }

private:
    struct Stage {
        torch::nn::Conv2d conv{nullptr};
        int kernel;
        int stride;
    };
    int in_channels_;
    std::vector<Stage> stages_;
};
TORCH_MODULE(ShapeNet);

/// sum_j alpha_j * [ -sum_px Y_j log(K_j + eps) / (H W)
///                   + 1 - (2 sum K_j Y_j + eps) / (sum K_j + sum Y_j + eps) ]
/// averaged over the batch. `probs` and `onehot` are (N,m,H,W).
torch::Tensor weighted_pixel_loss(const torch::Tensor& probs, const torch::Tensor& onehot,
                                  const std::vector<double>& alpha);

/// sum_i lambda_i * mean |tap_i(K) - tap_i(Y)|.
torch::Tensor shape_loss(const torch::Tensor& probs, const torch::Tensor& onehot, const std::vector<double>& lambda,
                         ShapeNet& net);

/// gamma * pixel loss + eta * shape loss.
torch::Tensor combined_loss(const torch::Tensor& probs, const torch::Tensor& onehot, const LossWeights& weights,
                            ShapeNet& net);

}  // namespace mtra::loss
