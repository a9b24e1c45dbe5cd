#include "mtra/mtra.h"

#include "checkpoint.hpp"
#include "errors.hpp"
#include "metrics.hpp"
#include "model_config.hpp"
#include "net.hpp"
#include "pipeline.hpp"
#include "run_config.hpp"
#include "train.hpp"

#include <cmath>
#include <cstring>
#include <limits>
#include <string>

struct mtra_config {
    mtra::RunConfig value;
};

struct mtra_model {
    mtra::RunConfig config;
    mtra::net::MtraUnet net{nullptr};
};

namespace {

thread_local std::string g_last_error;

template <typename Fn>
mtra_status guarded(Fn&& fn) {
    try {
        fn();
        g_last_error.clear();
        return MTRA_OK;
    } catch (const mtra::ValidationError& e) {
        g_last_error = e.what();
        return MTRA_ERR_VALIDATION;
    } catch (const std::bad_alloc&) {
        g_last_error = "out of memory";
        return MTRA_ERR_RUNTIME;
    } catch (const std::exception& e) {
        g_last_error = e.what();
        return MTRA_ERR_RUNTIME;
    } catch (...) {
        g_last_error = "unknown error";
        return MTRA_ERR_RUNTIME;
    }
}

void require(const void* p, const char* what) {
    if (!p) throw mtra::ValidationError(std::string(what) + " must not be NULL");
}

mtra::KeyValues pairs(const char* const* keys, const char* const* values, std::size_t n) {
    mtra::KeyValues kv;
    if (n == 0) return kv;
    require(keys, "keys");
    require(values, "values");
    for (std::size_t i = 0; i < n; ++i) {
        require(keys[i], "override key");
        require(values[i], "override value");
        kv.emplace_back(keys[i], values[i]);
    }
    return kv;
}

void copy_text(const std::string& text, char* buf, std::size_t cap, std::size_t* needed) {
    if (needed) *needed = text.size() + 1;
    if (!buf || cap == 0) return;
    const std::size_t n = std::min(cap - 1, text.size());
    std::memcpy(buf, text.data(), n);
    buf[n] = '\0';
}

}  // namespace

extern "C" {

const char* mtra_last_error(void) { return g_last_error.c_str(); }

const char* mtra_version(void) { return "1.0.0"; }

mtra_status mtra_config_resolve(const char* source, const char* const* keys, const char* const* values, size_t n,
                                mtra_config** out) {
    return guarded([&] {
        require(source, "source");
        require(out, "out");
        auto cfg = std::make_unique<mtra_config>();
        cfg->value = mtra::resolve_config(source, pairs(keys, values, n));
        *out = cfg.release();
    });
}

mtra_status mtra_config_from_checkpoint(const char* checkpoint, const char* const* keys, const char* const* values,
                                        size_t n, mtra_config** out) {
    return guarded([&] {
        require(checkpoint, "checkpoint");
        require(out, "out");
        auto cfg = std::make_unique<mtra_config>();
        cfg->value = mtra::load_checkpoint(checkpoint).config;
        for (const auto& [k, v] : pairs(keys, values, n)) cfg->value.set(k, v);
        cfg->value.validate();
        *out = cfg.release();
    });
}

mtra_status mtra_config_set(mtra_config* config, const char* key, const char* value) {
    return guarded([&] {
        require(config, "config");
        require(key, "key");
        require(value, "value");
        mtra::RunConfig next = config->value;
        next.set(key, value);
        next.validate();
        config->value = std::move(next);
    });
}

mtra_status mtra_config_to_text(const mtra_config* config, char* buf, size_t cap, size_t* needed) {
    return guarded([&] {
        require(config, "config");
        copy_text(config->value.to_text(), buf, cap, needed);
    });
}

void mtra_config_free(mtra_config* config) { delete config; }

mtra_status mtra_count_parameters(const mtra_config* config, int64_t* out) {
    return guarded([&] {
        require(config, "config");
        require(out, "out");
        *out = mtra::count_parameters(config->value.model);
    });
}

mtra_status mtra_model_create(const mtra_config* config, mtra_model** out) {
    return guarded([&] {
        require(config, "config");
        require(out, "out");
        auto m = std::make_unique<mtra_model>();
        m->config = config->value;
        m->config.model.seed = m->config.seed;
        m->net = mtra::net::build_model(m->config.model);
        *out = m.release();
    });
}

mtra_status mtra_model_load(const char* checkpoint, mtra_model** out) {
    return guarded([&] {
        require(checkpoint, "checkpoint");
        require(out, "out");
        auto ck = mtra::load_checkpoint(checkpoint);
        auto m = std::make_unique<mtra_model>();
        m->config = std::move(ck.config);
        m->net = std::move(ck.model);
        *out = m.release();
    });
}

mtra_status mtra_model_save(mtra_model* model, const char* checkpoint) {
    return guarded([&] {
        require(model, "model");
        require(checkpoint, "checkpoint");
        mtra::save_checkpoint(checkpoint, model->config, model->net);
    });
}

mtra_status mtra_model_info_get(const mtra_model* model, mtra_model_info* out) {
    return guarded([&] {
        require(model, "model");
        require(out, "out");
        out->class_count = model->config.model.class_count;
        out->input_size = model->config.model.input_size;
        out->parameter_count = model->net->parameter_count();
    });
}

mtra_status mtra_model_forward(mtra_model* model, const float* images, int64_t n, int64_t size, float* logits,
                               size_t logits_cap) {
    return guarded([&] {
        require(model, "model");
        require(images, "images");
        require(logits, "logits");
        if (n < 1 || size < 1) throw mtra::ValidationError("batch and size must be >= 1");
        const int64_t m = model->config.model.class_count;
        const auto want = static_cast<std::size_t>(n * m * size * size);
        if (logits_cap < want) {
            throw mtra::ValidationError("logits buffer holds " + std::to_string(logits_cap) + " floats, " +
                                        std::to_string(want) + " needed");
        }
        torch::NoGradGuard no_grad;
        model->net->eval();
        const auto x = torch::from_blob(const_cast<float*>(images), {n, 1, size, size}, torch::kFloat32);
        const auto y = model->net->forward(x).contiguous();
        std::memcpy(logits, y.data_ptr<float>(), want * sizeof(float));
    });
}

void mtra_model_free(mtra_model* model) { delete model; }

mtra_status mtra_phantom_write(const mtra_config* config, uint64_t seed, const char* out_dir) {
    return guarded([&] {
        require(config, "config");
        require(out_dir, "out_dir");
        config->value.validate();
        mtra::pipeline::write_dataset(mtra::pipeline::make_phantom_dataset(config->value, seed), out_dir);
    });
}

mtra_status mtra_train(const mtra_config* config, const char* data_dir, const char* out_dir, mtra_epoch_fn on_epoch,
                       void* user, mtra_train_summary* out) {
    return guarded([&] {
        require(config, "config");
        require(out_dir, "out_dir");
        mtra::EpochCallback cb;
        if (on_epoch) {
            cb = [on_epoch, user](const mtra::EpochLog& e) {
                on_epoch(e.epoch, e.train_loss, e.val_loss.value_or(std::numeric_limits<double>::quiet_NaN()),
                         e.seconds, user);
            };
        }
        std::optional<std::filesystem::path> data;
        if (data_dir) data = data_dir;
        const auto run = mtra::pipeline::run_training(config->value, data, out_dir, cb);
        if (out) {
            const auto& h = run.result.history;
            out->epochs = static_cast<int>(h.size());
            out->best_epoch = run.result.best_epoch;
            out->best_loss = run.result.best_loss;
            out->first_train_loss = h.front().train_loss;
            out->final_train_loss = h.back().train_loss;
        }
    });
}

mtra_status mtra_evaluate(const mtra_config* config, const char* data_dir, const char* checkpoint,
                          const char* pred_dir, const char* out_dir, mtra_eval_summary* out) {
    return guarded([&] {
        require(config, "config");
        require(data_dir, "data_dir");
        require(out_dir, "out_dir");
        mtra::apply_runtime_policy(config->value);
        mtra::pipeline::EvalOptions opt;
        opt.data = data_dir;
        if (checkpoint) opt.checkpoint = checkpoint;
        if (pred_dir) opt.predictions = pred_dir;
        opt.out = out_dir;
        const auto report = mtra::pipeline::evaluate(config->value, opt);
        if (out) {
            out->slices_total = report.slices_total;
            out->slices_selected = report.slices_selected;
            out->records = report.records.size();
            out->empty_selection = report.empty_selection() ? 1 : 0;
            out->average_dsc = report.empty_selection() ? std::numeric_limits<double>::quiet_NaN()
                                                        : mtra::pipeline::average_dsc(report.summary);
        }
    });
}

mtra_status mtra_segment(const mtra_config* config, const char* checkpoint, const char* data_dir, const char* out_dir,
                         mtra_segment_summary* out) {
    return guarded([&] {
        require(config, "config");
        require(checkpoint, "checkpoint");
        require(data_dir, "data_dir");
        require(out_dir, "out_dir");
        mtra::apply_runtime_policy(config->value);
        auto ck = mtra::load_checkpoint(checkpoint);
        const auto reports = mtra::pipeline::segment(ck.model, config->value, data_dir, out_dir);
        if (out) {
            *out = {};
            out->volumes = reports.size();
            for (const auto& r : reports) {
                out->slices += r.slices.size();
                out->total_seconds += r.total_seconds;
                out->slice_sum_seconds += r.slice_sum_seconds();
                out->compute_seconds += r.compute_seconds();
                out->io_seconds += r.io_seconds();
            }
        }
    });
}

mtra_status mtra_report(const char* metrics_csv, const char* out_dir, char* buf, size_t cap, size_t* needed) {
    return guarded([&] {
        require(metrics_csv, "metrics_csv");
        require(out_dir, "out_dir");
        const auto summary = mtra::pipeline::report(metrics_csv, out_dir);
        copy_text(mtra::pipeline::format_summary(summary), buf, cap, needed);
    });
}

mtra_status mtra_loss_sweep(const mtra_config* config, const char* out_dir, size_t* rows) {
    return guarded([&] {
        require(config, "config");
        require(out_dir, "out_dir");
        const auto r = mtra::pipeline::loss_sweep(config->value, out_dir);
        if (rows) *rows = r.size();
    });
}

mtra_status mtra_dsc(const uint8_t* pred, const uint8_t* truth, size_t n, double* out) {
    return guarded([&] {
        require(pred, "pred");
        require(truth, "truth");
        require(out, "out");
        *out = mtra::metrics::dsc({pred, n}, {truth, n});
    });
}

mtra_status mtra_voe(double dsc_percent, double* out) {
    return guarded([&] {
        require(out, "out");
        *out = mtra::metrics::voe(dsc_percent);
    });
}

mtra_status mtra_hausdorff(const uint8_t* pred, const uint8_t* truth, int height, int width, double row_mm,
                           double col_mm, double* out, int* defined) {
    return guarded([&] {
        require(pred, "pred");
        require(truth, "truth");
        require(out, "out");
        if (height < 1 || width < 1) throw mtra::ValidationError("mask size must be >= 1");
        const auto n = static_cast<std::size_t>(height) * static_cast<std::size_t>(width);
        const mtra::metrics::BinaryView k{height, width, {pred, n}};
        const mtra::metrics::BinaryView y{height, width, {truth, n}};
        const auto hd = mtra::metrics::hausdorff(k, y, {row_mm, col_mm});
        *out = hd.value_or(std::numeric_limits<double>::quiet_NaN());
        if (defined) *defined = hd ? 1 : 0;
    });
}

mtra_status mtra_pixel_accuracy(const uint8_t* pred, const uint8_t* truth, size_t n, double* out) {
    return guarded([&] {
        require(pred, "pred");
        require(truth, "truth");
        require(out, "out");
        *out = mtra::metrics::pixel_accuracy({pred, n}, {truth, n});
    });
}

}  // extern "C"
