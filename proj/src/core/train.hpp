#pragma once

#include "net.hpp"
#include "run_config.hpp"
#include "slice.hpp"

#include <functional>
#include <optional>
#include <span>
#include <vector>

namespace mtra {

struct EpochLog {
    int epoch = 0;
    double train_loss = 0.0;
    std::optional<double> val_loss;
    double seconds = 0.0;
};

struct TrainResult {
    net::MtraUnet model{nullptr};  ///< parameters of the best epoch
    std::vector<EpochLog> history;
    int best_epoch = 0;
    double best_loss = 0.0;  ///< validation loss, or training loss without a validation set
};

using EpochCallback = std::function<void(const EpochLog&)>;

/// Applies the process-wide threading policy of a run: deterministic runs use
/// one intra-op thread and deterministic kernels.
void apply_runtime_policy(const RunConfig& config);

/// Resizes every slice to the network input size and drops `edge_strip`
/// slices from both ends of each volume.
std::vector<SlicePair> prepare_training_slices(std::span<const Volume> volumes, const RunConfig& config);

/// Adam on the combined loss. Slices must already be at the input size.
/// Throws RuntimeError when a loss becomes non-finite.
TrainResult train(const RunConfig& config, std::span<const SlicePair> train_set, std::span<const SlicePair> val_set,
                  const EpochCallback& on_epoch = {});

/// Mean combined loss over `slices` in inference mode.
double evaluate_loss(net::MtraUnet& model, const RunConfig& config, std::span<const SlicePair> slices,
                     loss::ShapeNet& shape_net);

/// Per-slice predicted label masks (inference mode, batches of eval_batch).
std::vector<LabelMask> predict(net::MtraUnet& model, const RunConfig& config, std::span<const SlicePair> slices);

}  // namespace mtra
