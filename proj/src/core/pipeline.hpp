#pragma once

#include "metrics.hpp"
#include "run_config.hpp"
#include "slice.hpp"
#include "train.hpp"

#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace mtra::pipeline {

// ---------------------------------------------------------------- error maps

/// Per-pixel disagreement codes: 0 where prediction and truth agree, 2t-1 for
/// a false positive of tissue t and 2t for a false negative. A pixel labelled
/// as one tissue but predicted as another counts as a false negative of the
/// true tissue.
struct ErrorMap {
    int height = 0;
    int width = 0;
    std::vector<std::uint8_t> codes;

    std::size_t nonzero() const;
};

inline constexpr std::uint8_t false_positive_code(Tissue t) { return static_cast<std::uint8_t>(2 * static_cast<int>(t) - 1); }
inline constexpr std::uint8_t false_negative_code(Tissue t) { return static_cast<std::uint8_t>(2 * static_cast<int>(t)); }

ErrorMap error_map(const LabelMask& pred, const LabelMask& truth);
void write_error_map(const std::filesystem::path& path, const ErrorMap& map);

// ------------------------------------------------------------------ datasets

struct Dataset {
    std::vector<Volume> train, val, test;
};

/// Synthetic subjects with distinct seeded 7-digit ids; split sizes, slice
/// count, slice size and spacing come from the config.
Dataset make_phantom_dataset(const RunConfig& config, std::uint64_t seed);

/// Writes <out>/{train,val,test}/<subject>/ volume directories.
void write_dataset(const Dataset& data, const std::filesystem::path& out);

/// <dir>/{train,val,test} when `dir/train` exists; otherwise every volume
/// under `dir` is a training volume.
Dataset load_dataset_splits(const std::filesystem::path& dir);

/// Test volumes: <dir>/test when present, otherwise `dir` itself.
std::vector<Volume> load_test_volumes(const std::filesystem::path& dir);

/// `count` central slices of one phantom volume at the network input size.
std::vector<SlicePair> overfit_slices(const RunConfig& config, std::uint64_t seed, int count = 10);

// ------------------------------------------------------------------ training

struct TrainRun {
    TrainResult result;
    std::filesystem::path checkpoint;
};

/// Trains on the dataset at `data` (or an in-memory phantom dataset when
/// absent) and writes model.ckpt, loss_history.csv and config.txt to `out`.
TrainRun run_training(const RunConfig& config, const std::optional<std::filesystem::path>& data,
                      const std::filesystem::path& out, const EpochCallback& on_epoch = {});

/// Tissues a run is scored on: all four, or the single binary target.
std::vector<Tissue> scored_tissues(const RunConfig& config);

// ---------------------------------------------------------------- evaluation

struct AgreementRow {
    Tissue tissue = Tissue::FB;
    std::size_t subjects = 0;
    std::optional<double> pearson, icc, kendall_w, t_p, anova_f, anova_p;
};

struct EvalReport {
    std::size_t slices_total = 0;
    std::size_t slices_selected = 0;
    std::vector<metrics::MetricRecord> records;
    std::map<Tissue, metrics::TissueSummary> summary;
    std::vector<AgreementRow> agreement;

    bool empty_selection() const { return slices_selected == 0; }
};

struct EvalOptions {
    std::filesystem::path data;
    std::optional<std::filesystem::path> checkpoint;
    /// Directory of "<subject>/<slice id>_mask.png" predictions; used instead
    /// of running a checkpoint.
    std::optional<std::filesystem::path> predictions;
    std::filesystem::path out;
    bool error_maps = true;
};

/// Scores the critical slices of the test volumes. Criticality is decided
/// from ground truth at the network input size only. Writes
/// per_slice_metrics.csv, summary.csv, boxplot.csv, agreement.csv,
/// status.txt and error_maps/ under `options.out`.
EvalReport evaluate(const RunConfig& config, const EvalOptions& options);

/// Model already in memory; predictions are computed at the input size.
EvalReport evaluate_model(net::MtraUnet& model, const RunConfig& config, std::span<const Volume> volumes,
                          const std::filesystem::path& out, bool error_maps = true);

// -------------------------------------------------------------------- report

void write_metrics_csv(const std::filesystem::path& path, std::span<const metrics::MetricRecord> records);
std::vector<metrics::MetricRecord> read_metrics_csv(const std::filesystem::path& path);

/// summary.csv: one row per tissue plus an "average" row holding the mean of
/// the tissue means.
void write_summary_csv(const std::filesystem::path& path, const std::map<Tissue, metrics::TissueSummary>& summary);
void write_boxplot_csv(const std::filesystem::path& path, const std::map<Tissue, metrics::TissueSummary>& summary);

/// Mean of the per-tissue mean DSCs.
double average_dsc(const std::map<Tissue, metrics::TissueSummary>& summary);

/// Recomputes the summaries from a per-slice metrics CSV and writes
/// summary.csv and boxplot.csv to `out`.
std::map<Tissue, metrics::TissueSummary> report(const std::filesystem::path& metrics_csv,
                                                const std::filesystem::path& out);

/// Fixed-width text table of a summary.
std::string format_summary(const std::map<Tissue, metrics::TissueSummary>& summary);

// ------------------------------------------------------------- segmentation

struct SliceTiming {
    std::string slice_id;
    double read_seconds = 0.0;
    double compute_seconds = 0.0;
    double write_seconds = 0.0;

    double seconds() const { return read_seconds + compute_seconds + write_seconds; }
};

struct TimingReport {
    std::string subject;
    std::vector<SliceTiming> slices;
    double total_seconds = 0.0;  ///< wall clock around the whole slice loop

    double compute_seconds() const;
    double io_seconds() const;
    double slice_sum_seconds() const;
    std::string to_json() const;
};

/// Segments every slice of the volume in `volume_dir` (images only; masks
/// are not needed) and writes <out>/<subject>/<slice id>_mask.png at the
/// network input size plus <out>/<subject>/timing.json.
TimingReport segment_volume(net::MtraUnet& model, const RunConfig& config, const std::filesystem::path& volume_dir,
                            const std::filesystem::path& out);

/// segment_volume for the volume at `data`, or for each volume directory
/// below it.
std::vector<TimingReport> segment(net::MtraUnet& model, const RunConfig& config, const std::filesystem::path& data,
                                  const std::filesystem::path& out);

// --------------------------------------------------------------- loss sweep

struct SweepRow {
    double gamma = 0.0, eta = 0.0;
    int epochs = 0;
    double initial_loss = 0.0, final_loss = 0.0;
    std::map<Tissue, double> dsc;  ///< mean training-set DSC per scored tissue
    double mean_dsc = 0.0;
    double seconds = 0.0;
};

inline constexpr std::array<std::pair<double, double>, 3> kSweepWeights{{{0.1, 0.9}, {0.5, 0.5}, {0.9, 0.1}}};

/// Trains the overfit task once per (gamma, eta) pair and writes
/// loss_sweep.csv to `out`.
std::vector<SweepRow> loss_sweep(const RunConfig& config, const std::filesystem::path& out,
                                 std::span<const std::pair<double, double>> weights = kSweepWeights);

/// Mean per-slice training-set DSC of each scored tissue.
std::map<Tissue, double> training_dsc(net::MtraUnet& model, const RunConfig& config,
                                      std::span<const SlicePair> slices);

}  // namespace mtra::pipeline
