// Command-line front end. Talks to the library only through the C API.
#include "mtra/mtra.h"

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace {

struct ConfigDeleter {
    void operator()(mtra_config* c) const { mtra_config_free(c); }
};
using ConfigPtr = std::unique_ptr<mtra_config, ConfigDeleter>;

struct Failure {
    int code;
};

void check(mtra_status s) {
    if (s == MTRA_OK) return;
    std::cerr << "error: " << mtra_last_error() << "\n";
    throw Failure{static_cast<int>(s)};
}

struct Common {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string mode;
    std::vector<std::string> sets;
    bool deterministic = false;

    void add_to(CLI::App* cmd, const std::string& default_config) {
        config = default_config;
        cmd->add_option("--config", config, "preset (default, tiny) or key=value file")->capture_default_str();
        cmd->add_option("--seed", seed, "random seed");
        cmd->add_option("--mode", mode, "multiclass, binary-fc or binary-tc");
        cmd->add_option("--set", sets, "extra key=value override (repeatable)");
        cmd->add_flag("--deterministic", deterministic, "single-threaded deterministic kernels");
    }

    std::vector<std::pair<std::string, std::string>> overrides() const {
        std::vector<std::pair<std::string, std::string>> kv;
        for (const auto& s : sets) {
            const auto eq = s.find('=');
            if (eq == std::string::npos || eq == 0) {
                std::cerr << "error: --set expects key=value, got '" << s << "'\n";
                throw Failure{MTRA_ERR_VALIDATION};
            }
            kv.emplace_back(s.substr(0, eq), s.substr(eq + 1));
        }
        if (!mode.empty()) kv.emplace_back("mode", mode);
        if (seed) kv.emplace_back("seed", std::to_string(*seed));
        if (deterministic) kv.emplace_back("deterministic", "1");
        return kv;
    }

    // From --config, or from a checkpoint when one is given.
    ConfigPtr resolve(const std::string& checkpoint = {}) const {
        const auto kv = overrides();
        std::vector<const char*> keys, values;
        for (const auto& [k, v] : kv) {
            keys.push_back(k.c_str());
            values.push_back(v.c_str());
        }
        mtra_config* cfg = nullptr;
        if (checkpoint.empty()) {
            check(mtra_config_resolve(config.c_str(), keys.data(), values.data(), kv.size(), &cfg));
        } else {
            check(mtra_config_from_checkpoint(checkpoint.c_str(), keys.data(), values.data(), kv.size(), &cfg));
        }
        return ConfigPtr(cfg);
    }
};

std::string fmt(double v, int digits = 6) {
    if (std::isnan(v)) return "NA";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*g", digits, v);
    return buf;
}

void print_epoch(int epoch, double train_loss, double val_loss, double seconds, void*) {
    std::cout << "epoch " << epoch << "  train_loss " << fmt(train_loss) << "  val_loss " << fmt(val_loss) << "  ("
              << fmt(seconds, 3) << " s)\n"
              << std::flush;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Knee MRI bone and cartilage segmentation"};
    app.require_subcommand(1);
    app.set_help_all_flag("--help-all");

    Common phantom_opts, train_opts, eval_opts, seg_opts, params_opts, sweep_opts;
    std::string out, data, checkpoint, pred, metrics;

    auto* phantom = app.add_subcommand("phantom", "write a synthetic knee dataset");
    phantom_opts.add_to(phantom, "tiny");
    phantom->add_option("--out", out, "output directory")->required();

    auto* train = app.add_subcommand("train", "train a model and write a checkpoint");
    train_opts.add_to(train, "default");
    train->add_option("--data", data, "dataset directory (default: in-memory phantom)");
    train->add_option("--out", out, "run directory")->default_val("run");

    auto* evaluate = app.add_subcommand("evaluate", "score critical slices against ground truth");
    eval_opts.add_to(evaluate, "default");
    evaluate->add_option("--data", data, "dataset or test directory")->required();
    evaluate->add_option("--checkpoint", checkpoint, "trained checkpoint");
    evaluate->add_option("--pred", pred, "directory of predicted masks (instead of a checkpoint)");
    evaluate->add_option("--out", out, "report directory")->default_val("eval");

    auto* segment = app.add_subcommand("segment", "segment every slice of one or more volumes");
    seg_opts.add_to(segment, "default");
    segment->add_option("--checkpoint", checkpoint, "trained checkpoint")->required();
    segment->add_option("--data", data, "volume directory or directory of volumes")->required();
    segment->add_option("--out", out, "output directory")->default_val("segment");

    auto* report = app.add_subcommand("report", "recompute summaries from a per-slice metrics CSV");
    report->add_option("--metrics", metrics, "per_slice_metrics.csv")->required();
    report->add_option("--out", out, "output directory (default: next to the CSV)");

    auto* params = app.add_subcommand("params", "print the trainable parameter count");
    params_opts.add_to(params, "default");

    auto* sweep = app.add_subcommand("sweep", "loss-weight sweep on the overfit task");
    sweep_opts.add_to(sweep, "tiny");
    sweep->add_option("--out", out, "output directory")->default_val("sweep");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n\n" << app.help();
        return MTRA_ERR_VALIDATION;
    }

    try {
        if (*phantom) {
            auto cfg = phantom_opts.resolve();
            const std::uint64_t seed = phantom_opts.seed.value_or(0);
            check(mtra_phantom_write(cfg.get(), seed, out.c_str()));
            std::cout << "wrote phantom dataset to " << out << "\n";
        } else if (*train) {
            auto cfg = train_opts.resolve();
            mtra_train_summary s{};
            check(mtra_train(cfg.get(), data.empty() ? nullptr : data.c_str(), out.c_str(), print_epoch, nullptr, &s));
            std::cout << "best epoch " << s.best_epoch << " (loss " << fmt(s.best_loss) << "); checkpoint " << out
                      << "/model.ckpt\n";
        } else if (*evaluate) {
            if (checkpoint.empty() == pred.empty()) {
                std::cerr << "error: evaluate needs exactly one of --checkpoint and --pred\n";
                return MTRA_ERR_VALIDATION;
            }
            auto cfg = eval_opts.resolve(checkpoint);
            mtra_eval_summary s{};
            check(mtra_evaluate(cfg.get(), data.c_str(), checkpoint.empty() ? nullptr : checkpoint.c_str(),
                                pred.empty() ? nullptr : pred.c_str(), out.c_str(), &s));
            if (s.empty_selection) {
                std::cout << "empty selection: no critical slices among " << s.slices_total << " test slices\n";
            } else {
                std::cout << "scored " << s.slices_selected << " of " << s.slices_total
                          << " slices; average DSC " << fmt(s.average_dsc) << "%; reports in " << out << "\n";
            }
        } else if (*segment) {
            auto cfg = seg_opts.resolve(checkpoint);
            mtra_segment_summary s{};
            check(mtra_segment(cfg.get(), checkpoint.c_str(), data.c_str(), out.c_str(), &s));
            std::cout << "segmented " << s.slices << " slices in " << s.volumes << " volume(s): " << fmt(s.total_seconds, 4)
                      << " s total, " << fmt(s.compute_seconds, 4) << " s compute, " << fmt(s.io_seconds, 4)
                      << " s I/O\n";
        } else if (*report) {
            if (out.empty()) {
                const auto slash = metrics.find_last_of('/');
                out = slash == std::string::npos ? "." : metrics.substr(0, slash);
            }
            std::size_t needed = 0;
            check(mtra_report(metrics.c_str(), out.c_str(), nullptr, 0, &needed));
            std::string text(needed, '\0');
            check(mtra_report(metrics.c_str(), out.c_str(), text.data(), text.size(), &needed));
            text.resize(needed - 1);
            std::cout << text;
        } else if (*params) {
            auto cfg = params_opts.resolve();
            std::int64_t n = 0;
            check(mtra_count_parameters(cfg.get(), &n));
            std::cout << "total_parameters " << n << "\n";
        } else if (*sweep) {
            auto cfg = sweep_opts.resolve();
            std::size_t rows = 0;
            check(mtra_loss_sweep(cfg.get(), out.c_str(), &rows));
            std::cout << "wrote " << rows << " rows to " << out << "/loss_sweep.csv\n";
        }
    } catch (const Failure& f) {
        return f.code;
    }
    return 0;
}
