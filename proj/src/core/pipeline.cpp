#include "pipeline.hpp"

#include "checkpoint.hpp"
#include "errors.hpp"
#include "knee_data.hpp"
#include "png_io.hpp"
#include "roi.hpp"
#include "stats.hpp"
#include "tensor_bridge.hpp"

#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <chrono>
#include <fstream>
#include <iomanip>
#include <random>
#include <set>
#include <sstream>

namespace fs = std::filesystem;

namespace mtra::pipeline {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

// Shortest text that parses back to the same double.
std::string num(double v) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

std::string num(const std::optional<double>& v) { return v ? num(*v) : std::string("NA"); }

double parse_double(const std::string& text, const fs::path& file, int line) {
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc{} || ptr != text.data() + text.size() || text.empty()) {
        throw ValidationError(file.string() + ":" + std::to_string(line) + ": bad number '" + text + "'");
    }
    return v;
}

std::ofstream open_out(const fs::path& path) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) throw RuntimeError("cannot write '" + path.string() + "'");
    return out;
}

std::string tissue_str(Tissue t) { return std::string(tissue_name(t)); }

bool has_slices(const fs::path& dir) {
    if (!fs::is_directory(dir)) return false;
    for (const auto& e : fs::directory_iterator(dir)) {
        const auto name = e.path().filename().string();
        if (e.is_regular_file() && name.ends_with(".png") && !name.ends_with("_mask.png")) return true;
    }
    return false;
}

// Volume directories at `dir`: itself when it holds slices, otherwise its
// sorted subdirectories that do.
std::vector<fs::path> volume_dirs(const fs::path& dir) {
    if (!fs::is_directory(dir)) throw RuntimeError("no slices found: '" + dir.string() + "' is not a directory");
    if (has_slices(dir)) return {dir};
    std::vector<fs::path> out;
    for (const auto& e : fs::directory_iterator(dir)) {
        if (e.is_directory() && has_slices(e.path())) out.push_back(e.path());
    }
    std::sort(out.begin(), out.end());
    if (out.empty()) throw RuntimeError("no slices found in '" + dir.string() + "'");
    return out;
}

struct ScoredSlice {
    std::string subject;
    SliceId id;
    LabelMask pred;
    LabelMask truth;
    Spacing spacing;
};

double tissue_area_mm2(const LabelMask& m, Tissue t, Spacing s) {
    const auto label = static_cast<std::uint8_t>(t);
    const auto n = std::count(m.labels.begin(), m.labels.end(), label);
    return static_cast<double>(n) * s.row_mm * s.col_mm;
}

std::vector<AgreementRow> agreement(const RunConfig& config, std::span<const ScoredSlice> slices) {
    std::vector<AgreementRow> rows;
    for (Tissue t : scored_tissues(config)) {
        std::vector<std::string> order;
        std::map<std::string, std::pair<double, double>> areas;
        for (const ScoredSlice& s : slices) {
            if (!areas.contains(s.subject)) order.push_back(s.subject);
            auto& a = areas[s.subject];
            a.first += tissue_area_mm2(s.truth, t, s.spacing);
            a.second += tissue_area_mm2(s.pred, t, s.spacing);
        }
        AgreementRow row;
        row.tissue = t;
        row.subjects = order.size();
        if (order.size() >= 3) {
            std::vector<double> manual, automatic;
            for (const auto& subject : order) {
                manual.push_back(areas[subject].first);
                automatic.push_back(areas[subject].second);
            }
            const auto assoc = stats::association_measures(manual, automatic);
            const auto sig = stats::significance_tests(manual, automatic);
            row.pearson = assoc.r;
            row.icc = assoc.icc;
            row.kendall_w = assoc.w;
            row.t_p = sig.t_p;
            row.anova_f = sig.anova_f;
            row.anova_p = sig.anova_p;
        }
        rows.push_back(row);
    }
    return rows;
}

void write_agreement_csv(const fs::path& path, std::span<const AgreementRow> rows) {
    auto out = open_out(path);
    out << "tissue,subjects,pearson_r,icc,kendall_w,welch_t_p,anova_f,anova_p\n";
    for (const AgreementRow& r : rows) {
        out << tissue_str(r.tissue) << ',' << r.subjects << ',' << num(r.pearson) << ',' << num(r.icc) << ','
            << num(r.kendall_w) << ',' << num(r.t_p) << ',' << num(r.anova_f) << ',' << num(r.anova_p) << '\n';
    }
}

EvalReport score(const RunConfig& config, std::vector<ScoredSlice> slices, std::size_t total, const fs::path& out,
                 bool error_maps) {
    fs::create_directories(out);
    EvalReport report;
    report.slices_total = total;
    report.slices_selected = slices.size();

    auto status = open_out(out / "status.txt");
    if (slices.empty()) {
        write_metrics_csv(out / "per_slice_metrics.csv", {});
        status << "empty selection: none of the " << total << " test slices meets the ROI thresholds\n";
        return report;
    }
    status << "selected " << slices.size() << " of " << total << " slices\n";

    for (const ScoredSlice& s : slices) {
        for (Tissue t : scored_tissues(config)) {
            report.records.push_back(metrics::evaluate_tissue(s.id.str(), t, s.pred, s.truth, s.spacing));
        }
        if (error_maps) {
            write_error_map(out / "error_maps" / s.subject / (s.id.str() + "_error.png"), error_map(s.pred, s.truth));
        }
    }
    write_metrics_csv(out / "per_slice_metrics.csv", report.records);
    report.summary = metrics::aggregate(report.records);
    write_summary_csv(out / "summary.csv", report.summary);
    write_boxplot_csv(out / "boxplot.csv", report.summary);
    report.agreement = agreement(config, slices);
    write_agreement_csv(out / "agreement.csv", report.agreement);
    return report;
}

std::vector<int> critical_indices(const RunConfig& config, const Volume& sized) {
    std::vector<LabelMask> masks;
    masks.reserve(sized.size());
    for (const SlicePair& p : sized.slices) masks.push_back(p.mask);
    return roi::select_critical_slices(masks, config.roi);
}

std::uint64_t mix(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

}  // namespace

// ---------------------------------------------------------------- error maps

std::size_t ErrorMap::nonzero() const {
    return static_cast<std::size_t>(std::count_if(codes.begin(), codes.end(), [](std::uint8_t c) { return c != 0; }));
}

ErrorMap error_map(const LabelMask& pred, const LabelMask& truth) {
    if (pred.height != truth.height || pred.width != truth.width) {
        throw ValidationError("error map: prediction is " + std::to_string(pred.height) + "x" +
                              std::to_string(pred.width) + ", ground truth is " + std::to_string(truth.height) + "x" +
                              std::to_string(truth.width));
    }
    ErrorMap map{pred.height, pred.width, std::vector<std::uint8_t>(pred.size(), 0)};
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const std::uint8_t p = pred.labels[i];
        const std::uint8_t g = truth.labels[i];
        if (p == g) continue;
        map.codes[i] = g != 0 ? false_negative_code(static_cast<Tissue>(g)) : false_positive_code(static_cast<Tissue>(p));
    }
    return map;
}

void write_error_map(const fs::path& path, const ErrorMap& map) {
    static constexpr std::array<std::array<std::uint8_t, 3>, 9> palette{{
        {0, 0, 0},
        {255, 160, 160}, {160, 0, 0},    // FB
        {255, 230, 120}, {190, 140, 0},  // FC
        {160, 200, 255}, {0, 60, 170},   // TB
        {170, 255, 170}, {0, 130, 0},    // TC
    }};
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    png::write_indexed(path, map.height, map.width, map.codes, palette);
}

// ------------------------------------------------------------------ datasets

Dataset make_phantom_dataset(const RunConfig& config, std::uint64_t seed) {
    std::mt19937_64 rng(mix(seed));
    std::set<std::string> used;
    auto next_volume = [&] {
        std::string id;
        do {
            id = std::to_string(1000000 + rng() % 9000000);
        } while (!used.insert(id).second);
        VolumeMeta meta;
        meta.subject_id = id;
        meta.slice_count = config.phantom_slices;
        meta.original_size = config.phantom_size;
        meta.resized_size = std::min(config.model.input_size, config.phantom_size);
        meta.spacing = {config.phantom_spacing_mm, config.phantom_spacing_mm};
        return make_phantom(rng(), meta);
    };
    Dataset d;
    for (int i = 0; i < config.split_train; ++i) d.train.push_back(next_volume());
    for (int i = 0; i < config.split_val; ++i) d.val.push_back(next_volume());
    for (int i = 0; i < config.split_test; ++i) d.test.push_back(next_volume());
    return d;
}

void write_dataset(const Dataset& data, const fs::path& out) {
    const std::pair<const char*, const std::vector<Volume>*> parts[] = {
        {"train", &data.train}, {"val", &data.val}, {"test", &data.test}};
    for (const auto& [name, vols] : parts) {
        fs::create_directories(out / name);
        for (const Volume& v : *vols) save_volume(v, out / name / v.meta.subject_id);
    }
}

Dataset load_dataset_splits(const fs::path& dir) {
    Dataset d;
    if (!fs::is_directory(dir / "train")) {
        d.train = load_dataset(dir);
        return d;
    }
    d.train = load_dataset(dir / "train");
    if (fs::is_directory(dir / "val") && !fs::is_empty(dir / "val")) d.val = load_dataset(dir / "val");
    if (fs::is_directory(dir / "test") && !fs::is_empty(dir / "test")) d.test = load_dataset(dir / "test");
    return d;
}

std::vector<Volume> load_test_volumes(const fs::path& dir) {
    return load_dataset(fs::is_directory(dir / "test") ? dir / "test" : dir);
}

std::vector<SlicePair> overfit_slices(const RunConfig& config, std::uint64_t seed, int count) {
    if (count < 1) throw ValidationError("overfit slice count must be >= 1");
    VolumeMeta meta;
    meta.slice_count = std::max(config.phantom_slices, count + 2);
    meta.original_size = config.phantom_size;
    meta.resized_size = std::min(config.model.input_size, config.phantom_size);
    meta.spacing = {config.phantom_spacing_mm, config.phantom_spacing_mm};
    const Volume vol = resize_volume(make_phantom(seed, meta), config.model.input_size);
    const auto start = vol.slices.begin() + (meta.slice_count - count) / 2;
    return {start, start + count};
}

// ------------------------------------------------------------------ training

std::vector<Tissue> scored_tissues(const RunConfig& config) {
    const TargetEncoding enc = config.encoding();
    if (enc.binary_tissue) return {*enc.binary_tissue};
    return {kTissues.begin(), kTissues.end()};
}

TrainRun run_training(const RunConfig& config, const std::optional<fs::path>& data, const fs::path& out,
                      const EpochCallback& on_epoch) {
    config.validate();
    const Dataset ds = data ? load_dataset_splits(*data) : make_phantom_dataset(config, config.seed);
    if (ds.train.empty()) throw ValidationError("no training volumes");
    const auto train_slices = prepare_training_slices(ds.train, config);
    const auto val_slices = prepare_training_slices(ds.val, config);

    TrainRun run;
    run.result = train(config, train_slices, val_slices, on_epoch);
    fs::create_directories(out);
    run.checkpoint = out / "model.ckpt";
    save_checkpoint(run.checkpoint, config, run.result.model);

    auto hist = open_out(out / "loss_history.csv");
    hist << "epoch,train_loss,val_loss\n";
    for (const EpochLog& e : run.result.history) {
        hist << e.epoch << ',' << num(e.train_loss) << ',' << num(e.val_loss) << '\n';
    }
    open_out(out / "config.txt") << config.to_text();
    return run;
}

// ---------------------------------------------------------------- evaluation

EvalReport evaluate_model(net::MtraUnet& model, const RunConfig& config, std::span<const Volume> volumes,
                          const fs::path& out, bool error_maps) {
    std::vector<ScoredSlice> scored;
    std::size_t total = 0;
    for (const Volume& v : volumes) {
        const Volume sized = resize_volume(v, config.model.input_size);
        total += sized.size();
        std::vector<SlicePair> selected;
        for (int i : critical_indices(config, sized)) selected.push_back(sized.slices[static_cast<std::size_t>(i)]);
        if (selected.empty()) continue;
        auto preds = predict(model, config, selected);
        for (std::size_t i = 0; i < selected.size(); ++i) {
            scored.push_back({v.meta.subject_id, selected[i].id, std::move(preds[i]), selected[i].mask,
                              selected[i].image.spacing});
        }
    }
    return score(config, std::move(scored), total, out, error_maps);
}

EvalReport evaluate(const RunConfig& config, const EvalOptions& options) {
    config.validate();
    if (!options.checkpoint && !options.predictions) {
        throw ValidationError("evaluate needs a checkpoint or a prediction directory");
    }
    if (options.checkpoint && options.predictions) {
        throw ValidationError("evaluate takes either a checkpoint or a prediction directory, not both");
    }
    const auto volumes = load_test_volumes(options.data);

    if (options.checkpoint) {
        Checkpoint ck = load_checkpoint(*options.checkpoint);
        const ModelConfig& a = ck.config.model;
        const ModelConfig& b = config.model;
        if (a.class_count != b.class_count || a.input_size != b.input_size || a.encoder_widths != b.encoder_widths ||
            a.variant != b.variant) {
            throw ValidationError("checkpoint model does not match the evaluation config");
        }
        return evaluate_model(ck.model, config, volumes, options.out, options.error_maps);
    }

    const fs::path& pred_dir = *options.predictions;
    std::vector<ScoredSlice> scored;
    std::size_t total = 0;
    for (const Volume& v : volumes) {
        const Volume sized = resize_volume(v, config.model.input_size);
        total += sized.size();
        for (int i : critical_indices(config, sized)) {
            const SlicePair& orig = v.slices[static_cast<std::size_t>(i)];
            fs::path file = pred_dir / v.meta.subject_id / mask_file(orig.id);
            if (!fs::exists(file)) file = pred_dir / mask_file(orig.id);
            if (!fs::exists(file)) throw MissingSliceError(orig.id, "missing prediction for slice " + orig.id.str());
            LabelMask pred = load_mask(file);
            if (pred.height != pred.width) {
                throw ValidationError("prediction " + file.filename().string() + " is not square");
            }
            // Score at the prediction's resolution.
            LabelMask truth = resize_mask(orig.mask, pred.height);
            const Spacing sp{orig.image.spacing.row_mm * orig.mask.height / pred.height,
                             orig.image.spacing.col_mm * orig.mask.width / pred.width};
            scored.push_back({v.meta.subject_id, orig.id, std::move(pred), std::move(truth), sp});
        }
    }
    return score(config, std::move(scored), total, options.out, options.error_maps);
}

// -------------------------------------------------------------------- report

void write_metrics_csv(const fs::path& path, std::span<const metrics::MetricRecord> records) {
    auto out = open_out(path);
    out << "slice_id,tissue,dsc,voe,hd_mm,pa\n";
    for (const auto& r : records) {
        out << r.slice_id << ',' << tissue_str(r.tissue) << ',' << num(r.dsc_percent) << ',' << num(r.voe_percent)
            << ',' << num(r.hd_mm) << ',' << num(r.pa_percent) << '\n';
    }
}

std::vector<metrics::MetricRecord> read_metrics_csv(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw RuntimeError("cannot open metrics file '" + path.string() + "'");
    std::string line;
    if (!std::getline(in, line) || line != "slice_id,tissue,dsc,voe,hd_mm,pa") {
        throw ValidationError("'" + path.string() + "' is not a per-slice metrics CSV");
    }
    std::vector<metrics::MetricRecord> out;
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::vector<std::string> f;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) f.push_back(cell);
        if (f.size() != 6) {
            throw ValidationError(path.string() + ":" + std::to_string(lineno) + ": expected 6 fields");
        }
        metrics::MetricRecord r;
        r.slice_id = f[0];
        r.tissue = parse_tissue(f[1]);
        r.dsc_percent = parse_double(f[2], path, lineno);
        r.voe_percent = parse_double(f[3], path, lineno);
        if (f[4] != "NA") r.hd_mm = parse_double(f[4], path, lineno);
        r.pa_percent = parse_double(f[5], path, lineno);
        out.push_back(std::move(r));
    }
    return out;
}

double average_dsc(const std::map<Tissue, metrics::TissueSummary>& summary) {
    if (summary.empty()) throw ValidationError("no tissues to average");
    double sum = 0.0;
    for (const auto& [t, s] : summary) sum += s.dsc.mean;
    return sum / static_cast<double>(summary.size());
}

void write_summary_csv(const fs::path& path, const std::map<Tissue, metrics::TissueSummary>& summary) {
    auto out = open_out(path);
    out << "tissue,n,dsc_mean,voe_mean,hd_mm_mean,hd_undefined,pa_mean\n";
    double voe = 0.0, pa = 0.0, hd = 0.0;
    std::size_t n = 0, hd_tissues = 0, hd_undefined = 0;
    for (const auto& [t, s] : summary) {
        out << tissue_str(t) << ',' << s.dsc.count << ',' << num(s.dsc.mean) << ',' << num(s.voe.mean) << ','
            << (s.hd ? num(s.hd->mean) : std::string("NA")) << ',' << s.hd_undefined << ',' << num(s.pa.mean) << '\n';
        n += s.dsc.count;
        voe += s.voe.mean;
        pa += s.pa.mean;
        hd_undefined += s.hd_undefined;
        if (s.hd) {
            hd += s.hd->mean;
            ++hd_tissues;
        }
    }
    if (summary.empty()) return;
    const auto k = static_cast<double>(summary.size());
    out << "average," << n << ',' << num(average_dsc(summary)) << ',' << num(voe / k) << ','
        << (hd_tissues ? num(hd / static_cast<double>(hd_tissues)) : std::string("NA")) << ',' << hd_undefined << ','
        << num(pa / k) << '\n';
}

void write_boxplot_csv(const fs::path& path, const std::map<Tissue, metrics::TissueSummary>& summary) {
    auto out = open_out(path);
    out << "tissue,metric,n,min,q1,median,q3,max\n";
    auto row = [&](Tissue t, const char* metric, const metrics::Summary& s) {
        out << tissue_str(t) << ',' << metric << ',' << s.count << ',' << num(s.min) << ',' << num(s.q1) << ','
            << num(s.median) << ',' << num(s.q3) << ',' << num(s.max) << '\n';
    };
    for (const auto& [t, s] : summary) {
        row(t, "dsc", s.dsc);
        row(t, "voe", s.voe);
        if (s.hd) row(t, "hd_mm", *s.hd);
        row(t, "pa", s.pa);
    }
}

std::map<Tissue, metrics::TissueSummary> report(const fs::path& metrics_csv, const fs::path& out) {
    const auto records = read_metrics_csv(metrics_csv);
    if (records.empty()) throw ValidationError("'" + metrics_csv.string() + "' holds no metric rows");
    auto summary = metrics::aggregate(records);
    write_summary_csv(out / "summary.csv", summary);
    write_boxplot_csv(out / "boxplot.csv", summary);
    return summary;
}

std::string format_summary(const std::map<Tissue, metrics::TissueSummary>& summary) {
    std::ostringstream out;
    out << std::fixed << std::setprecision(2);
    out << std::left << std::setw(9) << "tissue" << std::right << std::setw(6) << "n" << std::setw(9) << "DSC%"
        << std::setw(9) << "VOE%" << std::setw(10) << "HD(mm)" << std::setw(9) << "PA%" << '\n';
    for (const auto& [t, s] : summary) {
        out << std::left << std::setw(9) << tissue_name(t) << std::right << std::setw(6) << s.dsc.count << std::setw(9)
            << s.dsc.mean << std::setw(9) << s.voe.mean << std::setw(10);
        if (s.hd) out << s.hd->mean;
        else out << "NA";
        out << std::setw(9) << s.pa.mean << '\n';
    }
    if (!summary.empty()) out << std::left << std::setw(9) << "average" << std::right << std::setw(15) << average_dsc(summary) << '\n';
    return out.str();
}

// ------------------------------------------------------------- segmentation

double TimingReport::compute_seconds() const {
    double s = 0.0;
    for (const auto& t : slices) s += t.compute_seconds;
    return s;
}

double TimingReport::io_seconds() const {
    double s = 0.0;
    for (const auto& t : slices) s += t.read_seconds + t.write_seconds;
    return s;
}

double TimingReport::slice_sum_seconds() const {
    double s = 0.0;
    for (const auto& t : slices) s += t.seconds();
    return s;
}

std::string TimingReport::to_json() const {
    nlohmann::ordered_json j;
    j["subject"] = subject;
    j["slice_count"] = slices.size();
    j["total_seconds"] = total_seconds;
    j["slice_sum_seconds"] = slice_sum_seconds();
    j["compute_seconds"] = compute_seconds();
    j["io_seconds"] = io_seconds();
    auto& arr = j["slices"] = nlohmann::ordered_json::array();
    for (const auto& t : slices) {
        arr.push_back({{"slice_id", t.slice_id},
                       {"read_seconds", t.read_seconds},
                       {"compute_seconds", t.compute_seconds},
                       {"write_seconds", t.write_seconds},
                       {"seconds", t.seconds()}});
    }
    return j.dump(2) + "\n";
}

TimingReport segment_volume(net::MtraUnet& model, const RunConfig& config, const fs::path& volume_dir,
                            const fs::path& out) {
    const VolumeMeta meta = read_volume_meta(volume_dir);
    const TargetEncoding enc = config.encoding();
    const int size = config.model.input_size;
    const fs::path dest = out / meta.subject_id;
    fs::create_directories(dest);

    torch::NoGradGuard no_grad;
    model->eval();
    TimingReport report;
    report.subject = meta.subject_id;
    report.slices.reserve(static_cast<std::size_t>(meta.slice_count));
    const auto start = Clock::now();
    for (int s = 0; s < meta.slice_count; ++s) {
        const SliceId id{meta.subject_id, s};
        SliceTiming timing;
        timing.slice_id = id.str();

        auto t0 = Clock::now();
        const fs::path file = volume_dir / slice_file(id);
        if (!fs::exists(file)) throw MissingSliceError(id, "missing image for slice " + id.str());
        const ImageSlice raw = load_image(file, meta.spacing);
        timing.read_seconds = seconds_since(t0);

        t0 = Clock::now();
        if (raw.height != raw.width) {
            throw ValidationError("slice " + id.str() + " is " + std::to_string(raw.height) + "x" +
                                  std::to_string(raw.width) + "; the network takes square slices");
        }
        const ImageSlice img = resize_image(raw, size);
        const auto labels = net::decode_labels(model->forward(to_tensor(img).unsqueeze(0)));
        const LabelMask mask = to_mask(labels[0], enc);
        timing.compute_seconds = seconds_since(t0);

        t0 = Clock::now();
        png::write_gray8(dest / mask_file(id), mask.height, mask.width, mask.labels);
        timing.write_seconds = seconds_since(t0);
        report.slices.push_back(std::move(timing));
    }
    report.total_seconds = seconds_since(start);
    open_out(dest / "timing.json") << report.to_json();
    return report;
}

std::vector<TimingReport> segment(net::MtraUnet& model, const RunConfig& config, const fs::path& data,
                                  const fs::path& out) {
    std::vector<TimingReport> reports;
    for (const fs::path& dir : volume_dirs(data)) reports.push_back(segment_volume(model, config, dir, out));
    return reports;
}

// --------------------------------------------------------------- loss sweep

std::map<Tissue, double> training_dsc(net::MtraUnet& model, const RunConfig& config,
                                      std::span<const SlicePair> slices) {
    const auto preds = predict(model, config, slices);
    std::map<Tissue, double> out;
    for (Tissue t : scored_tissues(config)) {
        double sum = 0.0;
        for (std::size_t i = 0; i < slices.size(); ++i) {
            sum += metrics::evaluate_tissue(slices[i].id.str(), t, preds[i], slices[i].mask, slices[i].image.spacing)
                       .dsc_percent;
        }
        out[t] = sum / static_cast<double>(slices.size());
    }
    return out;
}

std::vector<SweepRow> loss_sweep(const RunConfig& config, const fs::path& out,
                                 std::span<const std::pair<double, double>> weights) {
    const auto slices = overfit_slices(config, config.seed);
    std::vector<SweepRow> rows;
    for (const auto& [gamma, eta] : weights) {
        RunConfig cfg = config;
        cfg.weights.gamma = gamma;
        cfg.weights.eta = eta;
        const auto t0 = Clock::now();
        TrainResult r = train(cfg, slices, {});
        SweepRow row;
        row.gamma = gamma;
        row.eta = eta;
        row.epochs = cfg.epochs;
        row.initial_loss = r.history.front().train_loss;
        row.final_loss = r.history.back().train_loss;
        row.dsc = training_dsc(r.model, cfg, slices);
        for (const auto& [t, d] : row.dsc) row.mean_dsc += d;
        row.mean_dsc /= static_cast<double>(row.dsc.size());
        row.seconds = seconds_since(t0);
        rows.push_back(std::move(row));
    }

    auto csv = open_out(out / "loss_sweep.csv");
    csv << "gamma,eta,epochs,initial_loss,final_loss,loss_ratio";
    for (Tissue t : scored_tissues(config)) csv << ",dsc_" << tissue_str(t);
    csv << ",dsc_mean\n";
    for (const SweepRow& r : rows) {
        csv << num(r.gamma) << ',' << num(r.eta) << ',' << r.epochs << ',' << num(r.initial_loss) << ','
            << num(r.final_loss) << ',' << num(r.final_loss / r.initial_loss);
        for (const auto& [t, d] : r.dsc) csv << ',' << num(d);
        csv << ',' << num(r.mean_dsc) << '\n';
    }
    return rows;
}

}  // namespace mtra::pipeline
