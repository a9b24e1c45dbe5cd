#include <mtra/mtra.h>

#include "oracles.hpp"

#include <doctest.h>

#include <cmath>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

namespace {

mtra_config* tiny(std::vector<const char*> keys = {}, std::vector<const char*> values = {}) {
    mtra_config* cfg = nullptr;
    REQUIRE(mtra_config_resolve("tiny", keys.data(), values.data(), keys.size(), &cfg) == MTRA_OK);
    return cfg;
}

std::string config_text(const mtra_config* cfg) {
    std::size_t needed = 0;
    REQUIRE(mtra_config_to_text(cfg, nullptr, 0, &needed) == MTRA_OK);
    std::string s(needed, '\0');
    REQUIRE(mtra_config_to_text(cfg, s.data(), s.size(), nullptr) == MTRA_OK);
    s.resize(needed - 1);
    return s;
}

}  // namespace

TEST_CASE("status codes and the last error") {
    CHECK(std::string(mtra_version()).size() > 0);
    mtra_config* cfg = nullptr;
    CHECK(mtra_config_resolve("huge", nullptr, nullptr, 0, &cfg) == MTRA_ERR_VALIDATION);
    CHECK(cfg == nullptr);
    CHECK(std::string(mtra_last_error()).find("huge") != std::string::npos);
    CHECK(mtra_config_resolve("/nonexistent/run.cfg", nullptr, nullptr, 0, &cfg) == MTRA_ERR_VALIDATION);
    cfg = tiny();
    CHECK(mtra_config_set(cfg, "epochs", "3") == MTRA_OK);
    CHECK(mtra_config_set(cfg, "no_such_key", "3") == MTRA_ERR_VALIDATION);
    CHECK(std::string(mtra_last_error()).find("no_such_key") != std::string::npos);
    CHECK(mtra_config_set(nullptr, "epochs", "3") == MTRA_ERR_VALIDATION);
    mtra_config_free(cfg);
    mtra_config_free(nullptr);
}

TEST_CASE("text buffers report the needed size and truncate safely") {
    const char* keys[] = {"epochs"};
    const char* values[] = {"4"};
    mtra_config* cfg = nullptr;
    REQUIRE(mtra_config_resolve("tiny", keys, values, 1, &cfg) == MTRA_OK);
    const std::string text = config_text(cfg);
    CHECK(text.find("epochs=4\n") != std::string::npos);
    char small[8];
    std::size_t needed = 0;
    CHECK(mtra_config_to_text(cfg, small, sizeof small, &needed) == MTRA_OK);
    CHECK(needed == text.size() + 1);
    CHECK(std::strlen(small) == 7);
    CHECK(std::string(small) == text.substr(0, 7));
    mtra_config_free(cfg);
}

TEST_CASE("models through the C interface") {
    mtra_config* cfg = tiny({"widths", "input_size"}, {"4,8", "16"});
    int64_t analytic = 0;
    REQUIRE(mtra_count_parameters(cfg, &analytic) == MTRA_OK);
    mtra_model* model = nullptr;
    REQUIRE(mtra_model_create(cfg, &model) == MTRA_OK);
    mtra_model_info info{};
    REQUIRE(mtra_model_info_get(model, &info) == MTRA_OK);
    CHECK(info.class_count == 5);
    CHECK(info.input_size == 16);
    CHECK(info.parameter_count == analytic);

    std::vector<float> images(2 * 16 * 16, 0.5f), logits(2 * 5 * 16 * 16, NAN);
    CHECK(mtra_model_forward(model, images.data(), 2, 16, logits.data(), logits.size()) == MTRA_OK);
    for (float v : logits) CHECK(std::isfinite(v));
    CHECK(mtra_model_forward(model, images.data(), 2, 16, logits.data(), 10) == MTRA_ERR_VALIDATION);
    CHECK(mtra_model_forward(model, images.data(), 1, 32, logits.data(), logits.size()) == MTRA_ERR_VALIDATION);

    oracle::TempDir tmp("capi");
    const std::string ck = (tmp / "m.ckpt").string();
    REQUIRE(mtra_model_save(model, ck.c_str()) == MTRA_OK);
    mtra_model* back = nullptr;
    REQUIRE(mtra_model_load(ck.c_str(), &back) == MTRA_OK);
    std::vector<float> again(logits.size());
    REQUIRE(mtra_model_forward(back, images.data(), 2, 16, again.data(), again.size()) == MTRA_OK);
    CHECK(again == logits);

    mtra_config* from = nullptr;
    REQUIRE(mtra_config_from_checkpoint(ck.c_str(), nullptr, nullptr, 0, &from) == MTRA_OK);
    CHECK(config_text(from) == config_text(cfg));
    CHECK(mtra_model_load((tmp / "missing.ckpt").string().c_str(), &back) == MTRA_ERR_RUNTIME);

    mtra_config_free(from);
    mtra_model_free(back);
    mtra_model_free(model);
    mtra_config_free(cfg);
}

TEST_CASE("metric functions") {
    const uint8_t a[] = {1, 1, 0, 0}, b[] = {0, 1, 1, 0}, z[] = {0, 0, 0, 0};
    double v = -1;
    CHECK(mtra_dsc(a, b, 4, &v) == MTRA_OK);
    CHECK(v == 50.0);
    CHECK(mtra_voe(50.0, &v) == MTRA_OK);
    CHECK(v == doctest::Approx(200.0 / 3.0));
    CHECK(mtra_voe(120.0, &v) == MTRA_ERR_VALIDATION);
    int defined = -1;
    CHECK(mtra_hausdorff(a, b, 2, 2, 1.0, 1.0, &v, &defined) == MTRA_OK);
    CHECK(defined == 1);
    CHECK(v == 1.0);
    CHECK(mtra_hausdorff(a, z, 2, 2, 1.0, 1.0, &v, &defined) == MTRA_OK);
    CHECK(defined == 0);
    CHECK(mtra_pixel_accuracy(a, b, 4, &v) == MTRA_OK);
    CHECK(v == 50.0);
    CHECK(mtra_dsc(nullptr, b, 4, &v) == MTRA_ERR_VALIDATION);
}

TEST_CASE("phantom, train, evaluate and report through the C interface") {
    oracle::TempDir tmp("capipipe");
    mtra_config* cfg = tiny({"epochs", "widths", "input_size", "deterministic"}, {"2", "4,8,16", "32", "1"});
    const std::string data = (tmp / "data").string(), run = (tmp / "run").string(), eval = (tmp / "eval").string();
    REQUIRE(mtra_phantom_write(cfg, 3, data.c_str()) == MTRA_OK);
    int calls = 0;
    auto cb = [](int, double, double val, double, void* user) {
        ++*static_cast<int*>(user);
        CHECK(std::isfinite(val));
    };
    mtra_train_summary ts{};
    REQUIRE(mtra_train(cfg, data.c_str(), run.c_str(), cb, &calls, &ts) == MTRA_OK);
    CHECK(calls == 2);
    CHECK(ts.epochs == 2);
    CHECK(ts.best_epoch >= 1);
    const std::string ck = (tmp / "run" / "model.ckpt").string();
    mtra_eval_summary es{};
    REQUIRE(mtra_evaluate(cfg, data.c_str(), ck.c_str(), nullptr, eval.c_str(), &es) == MTRA_OK);
    CHECK(es.slices_total == 72);
    CHECK(es.records == 4 * es.slices_selected);
    CHECK(mtra_evaluate(cfg, data.c_str(), nullptr, nullptr, eval.c_str(), &es) == MTRA_ERR_VALIDATION);
    std::size_t needed = 0;
    const std::string csv = (tmp / "eval" / "per_slice_metrics.csv").string();
    REQUIRE(mtra_report(csv.c_str(), (tmp / "rep").string().c_str(), nullptr, 0, &needed) == MTRA_OK);
    CHECK(needed > 1);
    mtra_config_free(cfg);
}
