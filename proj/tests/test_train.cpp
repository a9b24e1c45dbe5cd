#include "errors.hpp"
#include "pipeline.hpp"
#include "train.hpp"

// c10 logging defines its own CHECK.
#undef CHECK
#include <doctest.h>

#include <limits>

using namespace mtra;

namespace {

RunConfig toy_run(int epochs) {
    RunConfig cfg = preset("tiny");
    cfg.model.encoder_widths = {4, 8, 16};
    cfg.model.input_size = 32;
    cfg.epochs = epochs;
    cfg.batch_size = 2;
    cfg.deterministic = true;
    cfg.set("seed", "3");
    return cfg;
}

}  // namespace

TEST_CASE("deterministic runs reproduce the loss history exactly") {
    const RunConfig cfg = toy_run(4);
    apply_runtime_policy(cfg);
    const auto slices = pipeline::overfit_slices(cfg, 5, 6);
    const std::span<const SlicePair> all(slices);
    const auto a = train(cfg, all.first(4), all.subspan(4));
    const auto b = train(cfg, all.first(4), all.subspan(4));
    REQUIRE(a.history.size() == 4);
    for (std::size_t i = 0; i < a.history.size(); ++i) {
        CHECK(a.history[i].epoch == static_cast<int>(i) + 1);
        CHECK(a.history[i].train_loss == b.history[i].train_loss);
        REQUIRE(a.history[i].val_loss.has_value());
        CHECK(*a.history[i].val_loss == *b.history[i].val_loss);
    }
    CHECK(a.best_epoch == b.best_epoch);
}

TEST_CASE("the returned model is the best epoch") {
    const RunConfig cfg = toy_run(6);
    apply_runtime_policy(cfg);
    const auto slices = pipeline::overfit_slices(cfg, 8, 6);
    const std::span<const SlicePair> all(slices);
    std::vector<EpochLog> seen;
    auto r = train(cfg, all.first(4), all.subspan(4), [&](const EpochLog& e) { seen.push_back(e); });
    CHECK(seen.size() == 6);
    double best = std::numeric_limits<double>::infinity();
    int best_epoch = 0;
    for (const auto& e : r.history) {
        if (*e.val_loss < best) {
            best = *e.val_loss;
            best_epoch = e.epoch;
        }
    }
    CHECK(r.best_epoch == best_epoch);
    CHECK(r.best_loss == best);
    loss::ShapeNet shape_net(cfg.model.class_count);
    CHECK(evaluate_loss(r.model, cfg, all.subspan(4), shape_net) == doctest::Approx(best).epsilon(1e-5));
}

TEST_CASE("training reduces the loss on a fixed batch") {
    RunConfig cfg = toy_run(30);
    apply_runtime_policy(cfg);
    const auto slices = pipeline::overfit_slices(cfg, 2, 4);
    const auto r = train(cfg, slices, {});
    CHECK_FALSE(r.history.front().val_loss.has_value());
    CHECK(r.history.back().train_loss < r.history.front().train_loss);
    CHECK(r.best_loss < r.history.front().train_loss);
}

TEST_CASE("non-finite input aborts training") {
    const RunConfig cfg = toy_run(2);
    auto slices = pipeline::overfit_slices(cfg, 5, 2);
    slices[0].image.pixels[7] = std::numeric_limits<float>::quiet_NaN();
    CHECK_THROWS_AS(train(cfg, slices, {}), RuntimeError);
}

TEST_CASE("size mismatches and empty sets are rejected") {
    const RunConfig cfg = toy_run(1);
    auto slices = pipeline::overfit_slices(cfg, 5, 2);
    CHECK_THROWS_AS(train(cfg, {}, {}), ValidationError);
    RunConfig other = cfg;
    other.model.input_size = 16;
    CHECK_THROWS_AS(train(other, slices, {}), ValidationError);
}

TEST_CASE("prediction yields one mask per slice at the input size") {
    const RunConfig cfg = toy_run(1);
    const auto slices = pipeline::overfit_slices(cfg, 5, 5);
    auto model = net::build_model(cfg.model);
    RunConfig small_batches = cfg;
    small_batches.eval_batch = 2;
    const auto masks = predict(model, small_batches, slices);
    REQUIRE(masks.size() == 5);
    for (const auto& m : masks) {
        CHECK(m.height == 32);
        CHECK(m.width == 32);
        CHECK_NOTHROW(m.validate());
    }
    // batching does not change the result
    const auto whole = predict(model, cfg, slices);
    for (std::size_t i = 0; i < masks.size(); ++i) CHECK(masks[i].labels == whole[i].labels);
}

TEST_CASE("training slices drop the volume edges and are resized") {
    RunConfig cfg = toy_run(1);
    const auto data = pipeline::make_phantom_dataset(cfg, 4);
    const auto slices = prepare_training_slices(data.train, cfg);
    CHECK(slices.size() == data.train.size() * static_cast<std::size_t>(cfg.phantom_slices - 2 * cfg.edge_strip));
    CHECK(slices.front().id.index == cfg.edge_strip);
    for (const auto& s : slices) CHECK(s.image.height == 32);
}
