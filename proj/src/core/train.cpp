#include "train.hpp"

#include "errors.hpp"
#include "knee_data.hpp"
#include "tensor_bridge.hpp"

#include <chrono>
#include <cmath>
#include <numeric>
#include <random>

namespace mtra {

namespace {

void check_sizes(std::span<const SlicePair> slices, int size, const char* what) {
    for (const SlicePair& p : slices) {
        if (p.image.height != size || p.image.width != size) {
            throw ValidationError(std::string(what) + " slice " + p.id.str() + " is " + std::to_string(p.image.height) +
                                  "x" + std::to_string(p.image.width) + ", network input is " + std::to_string(size));
        }
    }
}

template <typename Fn>
void for_each_batch(std::span<const SlicePair> slices, std::span<const std::size_t> order, int batch_size, Fn&& fn) {
    std::vector<const SlicePair*> batch;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(batch_size)) {
        const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(batch_size));
        batch.clear();
        for (std::size_t i = start; i < end; ++i) batch.push_back(&slices[order[i]]);
        fn(std::span<const SlicePair* const>(batch));
    }
}

std::vector<torch::Tensor> snapshot(net::MtraUnet& model) {
    std::vector<torch::Tensor> out;
    for (const auto& p : model->parameters()) out.push_back(p.detach().clone());
    for (const auto& b : model->buffers()) out.push_back(b.detach().clone());
    return out;
}

void restore(net::MtraUnet& model, const std::vector<torch::Tensor>& state) {
    torch::NoGradGuard no_grad;
    std::size_t i = 0;
    for (auto& p : model->parameters()) p.copy_(state[i++]);
    for (auto& b : model->buffers()) b.copy_(state[i++]);
}

}  // namespace

void apply_runtime_policy(const RunConfig& config) {
    if (config.deterministic) {
        torch::set_num_threads(1);
        at::globalContext().setDeterministicAlgorithms(true, /*warn_only=*/false);
    }
}

std::vector<SlicePair> prepare_training_slices(std::span<const Volume> volumes, const RunConfig& config) {
    std::vector<SlicePair> out;
    for (const Volume& v : volumes) {
        const Volume stripped = strip_edge_slices(v, config.edge_strip);
        const Volume sized = resize_volume(stripped, config.model.input_size);
        out.insert(out.end(), sized.slices.begin(), sized.slices.end());
    }
    return out;
}

double evaluate_loss(net::MtraUnet& model, const RunConfig& config, std::span<const SlicePair> slices,
                     loss::ShapeNet& shape_net) {
    if (slices.empty()) throw ValidationError("cannot evaluate a loss over zero slices");
    torch::NoGradGuard no_grad;
    model->eval();
    const TargetEncoding enc = config.encoding();
    std::vector<std::size_t> order(slices.size());
    std::iota(order.begin(), order.end(), 0);
    double total = 0.0;
    for_each_batch(slices, order, config.eval_batch, [&](std::span<const SlicePair* const> batch) {
        const auto probs = net::probabilities(model->forward(stack_images(batch)));
        const auto loss = loss::combined_loss(probs, stack_targets(batch, enc), config.weights, shape_net);
        total += loss.item<double>() * static_cast<double>(batch.size());
    });
    return total / static_cast<double>(slices.size());
}

std::vector<LabelMask> predict(net::MtraUnet& model, const RunConfig& config, std::span<const SlicePair> slices) {
    torch::NoGradGuard no_grad;
    model->eval();
    const TargetEncoding enc = config.encoding();
    std::vector<std::size_t> order(slices.size());
    std::iota(order.begin(), order.end(), 0);
    std::vector<LabelMask> out;
    out.reserve(slices.size());
    for_each_batch(slices, order, config.eval_batch, [&](std::span<const SlicePair* const> batch) {
        const auto labels = net::decode_labels(model->forward(stack_images(batch)));
        for (int64_t i = 0; i < labels.size(0); ++i) out.push_back(to_mask(labels[i], enc));
    });
    return out;
}

TrainResult train(const RunConfig& config, std::span<const SlicePair> train_set, std::span<const SlicePair> val_set,
                  const EpochCallback& on_epoch) {
    config.validate();
    if (train_set.empty()) throw ValidationError("training set is empty");
    check_sizes(train_set, config.model.input_size, "training");
    check_sizes(val_set, config.model.input_size, "validation");
    apply_runtime_policy(config);

    ModelConfig model_cfg = config.model;
    model_cfg.seed = config.seed;
    TrainResult result;
    result.model = net::build_model(model_cfg);
    auto& model = result.model;
    loss::ShapeNet shape_net(model_cfg.class_count);
    torch::optim::Adam optimizer(model->parameters(), torch::optim::AdamOptions(config.learning_rate));
    const TargetEncoding enc = config.encoding();

    std::mt19937_64 rng(config.seed ^ 0x7a11u);
    std::vector<std::size_t> order(train_set.size());
    std::iota(order.begin(), order.end(), 0);
    std::vector<torch::Tensor> best_state;
    result.best_loss = std::numeric_limits<double>::infinity();

    for (int epoch = 1; epoch <= config.epochs; ++epoch) {
        const auto t0 = std::chrono::steady_clock::now();
        for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng() % i]);

        model->train();
        double total = 0.0;
        int batch_index = 0;
        for_each_batch(train_set, order, config.batch_size, [&](std::span<const SlicePair* const> batch) {
            optimizer.zero_grad();
            const auto probs = net::probabilities(model->forward(stack_images(batch)));
            auto loss = loss::combined_loss(probs, stack_targets(batch, enc), config.weights, shape_net);
            const double value = loss.item<double>();
            if (!std::isfinite(value)) {
                throw RuntimeError("training diverged: non-finite loss at epoch " + std::to_string(epoch) +
                                   ", batch " + std::to_string(batch_index));
            }
            loss.backward();
            optimizer.step();
            total += value * static_cast<double>(batch.size());
            ++batch_index;
        });

        EpochLog log;
        log.epoch = epoch;
        log.train_loss = total / static_cast<double>(train_set.size());
        if (!val_set.empty()) log.val_loss = evaluate_loss(model, config, val_set, shape_net);
        log.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        result.history.push_back(log);

        const double score = log.val_loss.value_or(log.train_loss);
        if (score < result.best_loss) {
            result.best_loss = score;
            result.best_epoch = epoch;
            best_state = snapshot(model);
        }
        if (on_epoch) on_epoch(log);
    }
    if (!best_state.empty()) restore(model, best_state);
    model->eval();
    return result;
}

}  // namespace mtra
