#include "errors.hpp"
#include "knee_data.hpp"
#include "pipeline.hpp"
#include "png_io.hpp"

#include "oracles.hpp"

// c10 logging defines its own CHECK.
#undef CHECK
#include <doctest.h>
#include <json.hpp>

#include <fstream>
#include <set>

using namespace mtra;
using namespace mtra::pipeline;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    return {std::istreambuf_iterator<char>(in), {}};
}

std::size_t count_files(const fs::path& dir) {
    std::size_t n = 0;
    for (const auto& e : fs::recursive_directory_iterator(dir)) n += e.is_regular_file();
    return n;
}

RunConfig tiny_run() {
    RunConfig cfg = preset("tiny");
    cfg.set("seed", "5");
    return cfg;
}

LabelMask mask_of(std::vector<std::uint8_t> labels, int h, int w) {
    LabelMask m(h, w);
    m.labels = std::move(labels);
    return m;
}

}  // namespace

TEST_CASE("error map codes") {
    const auto pred = mask_of({0, 1, 2, 3, 4, 0, 1}, 1, 7);
    const auto truth = mask_of({0, 1, 0, 0, 2, 3, 4}, 1, 7);
    const ErrorMap e = error_map(pred, truth);
    const std::vector<std::uint8_t> expected{0, 0, false_positive_code(Tissue::FC), false_positive_code(Tissue::TB),
                                             false_negative_code(Tissue::FC), false_negative_code(Tissue::TB),
                                             false_negative_code(Tissue::TC)};
    CHECK(e.codes == expected);
    CHECK(e.nonzero() == 5);
    CHECK(false_positive_code(Tissue::FB) == 1);
    CHECK(false_negative_code(Tissue::TC) == 8);
    CHECK_THROWS_AS(error_map(pred, LabelMask(7, 1)), ValidationError);
}

TEST_CASE("error maps mark exactly the mismatched pixels") {
    std::mt19937_64 rng(17);
    for (int trial = 0; trial < 50; ++trial) {
        const auto p = mask_of(oracle::random_mask(rng, 100, 0.5, 5), 10, 10);
        const auto t = mask_of(oracle::random_mask(rng, 100, 0.5, 5), 10, 10);
        const ErrorMap e = error_map(p, t);
        std::size_t mismatched = 0;
        for (std::size_t i = 0; i < 100; ++i) {
            mismatched += p.labels[i] != t.labels[i];
            CHECK((e.codes[i] == 0) == (p.labels[i] == t.labels[i]));
            CHECK(e.codes[i] <= 8);
        }
        CHECK(e.nonzero() == mismatched);
        CHECK(error_map(t, t).nonzero() == 0);
    }
}

TEST_CASE("error maps are written as palette images") {
    oracle::TempDir tmp("emap");
    const ErrorMap e = error_map(mask_of({0, 1, 2, 0}, 2, 2), mask_of({0, 1, 0, 3}, 2, 2));
    write_error_map(tmp / "e.png", e);
    const auto img = png::read_gray(tmp / "e.png");
    CHECK(img.height == 2);
    CHECK(img.width == 2);
}

TEST_CASE("phantom datasets have distinct 7-digit subject ids") {
    RunConfig cfg = tiny_run();
    cfg.split_train = 10;
    cfg.split_val = 5;
    cfg.split_test = 5;
    cfg.phantom_slices = 6;
    cfg.edge_strip = 0;
    const Dataset d = make_phantom_dataset(cfg, 99);
    CHECK(d.train.size() == 10);
    CHECK(d.val.size() == 5);
    CHECK(d.test.size() == 5);
    std::set<std::string> ids;
    for (const auto* split : {&d.train, &d.val, &d.test}) {
        for (const Volume& v : *split) {
            CHECK(v.meta.subject_id.size() == 7);
            CHECK(v.meta.subject_id.find_first_not_of("0123456789") == std::string::npos);
            CHECK(v.meta.subject_id[0] != '0');
            CHECK(v.size() == 6);
            ids.insert(v.meta.subject_id);
        }
    }
    CHECK(ids.size() == 20);
    const Dataset again = make_phantom_dataset(cfg, 99);
    CHECK(again.test[2].meta.subject_id == d.test[2].meta.subject_id);
    CHECK(again.test[2].slices[3].mask.labels == d.test[2].slices[3].mask.labels);
}

TEST_CASE("datasets round-trip through disk") {
    oracle::TempDir tmp("ds");
    const RunConfig cfg = tiny_run();
    const Dataset d = make_phantom_dataset(cfg, 1);
    write_dataset(d, tmp.path());
    const Dataset back = load_dataset_splits(tmp.path());
    REQUIRE(back.train.size() == d.train.size());
    REQUIRE(back.test.size() == d.test.size());
    CHECK(back.val.size() == d.val.size());
    std::set<std::string> want, got;
    for (const auto& v : d.test) want.insert(v.meta.subject_id);
    for (const auto& v : back.test) got.insert(v.meta.subject_id);
    CHECK(want == got);
    CHECK(load_test_volumes(tmp.path()).size() == d.test.size());
    CHECK(load_test_volumes(tmp / "test" / d.test[0].meta.subject_id).size() == 1);
}

TEST_CASE("ground truth as the prediction scores perfectly") {
    oracle::TempDir tmp("evalgt");
    const RunConfig cfg = tiny_run();
    write_dataset(make_phantom_dataset(cfg, 2), tmp / "data");
    EvalOptions opt;
    opt.data = tmp / "data";
    opt.predictions = tmp / "data" / "test";
    opt.out = tmp / "eval";
    const EvalReport r = evaluate(cfg, opt);
    REQUIRE_FALSE(r.empty_selection());
    CHECK(r.slices_total == 3 * 24);
    CHECK(r.records.size() == 4 * r.slices_selected);
    for (const auto& rec : r.records) {
        CHECK(rec.dsc_percent == 100.0);
        CHECK(rec.voe_percent == 0.0);
        REQUIRE(rec.hd_mm.has_value());
        CHECK(*rec.hd_mm == 0.0);
        CHECK(rec.pa_percent == 100.0);
    }
    CHECK(average_dsc(r.summary) == 100.0);
    REQUIRE(r.agreement.size() == 4);
    for (const auto& a : r.agreement) {
        CHECK(a.subjects == 3);
        REQUIRE(a.pearson.has_value());
        CHECK(*a.pearson == doctest::Approx(1.0));
        CHECK(*a.icc == doctest::Approx(1.0));
        CHECK(*a.t_p == doctest::Approx(1.0));
    }
    for (const char* f : {"per_slice_metrics.csv", "summary.csv", "boxplot.csv", "agreement.csv", "status.txt"}) {
        CHECK(fs::exists(opt.out / f));
    }
    CHECK(count_files(opt.out / "error_maps") == r.slices_selected);
    CHECK(slurp(opt.out / "status.txt").starts_with("selected " + std::to_string(r.slices_selected) + " of 72"));
}

TEST_CASE("all-background predictions score zero overlap") {
    oracle::TempDir tmp("evalbg");
    const RunConfig cfg = tiny_run();
    const Dataset d = make_phantom_dataset(cfg, 3);
    write_dataset(d, tmp / "data");
    for (const Volume& v : d.test) {
        for (const SlicePair& p : v.slices) {
            const fs::path dir = tmp / "pred" / v.meta.subject_id;
            fs::create_directories(dir);
            png::write_gray8(dir / mask_file(p.id), 32, 32, std::vector<std::uint8_t>(32 * 32, 0));
        }
    }
    EvalOptions opt{tmp / "data", std::nullopt, tmp / "pred", tmp / "eval", false};
    const EvalReport r = evaluate(cfg, opt);
    REQUIRE_FALSE(r.records.empty());
    for (const auto& rec : r.records) {
        CHECK(rec.dsc_percent == 0.0);
        CHECK(rec.voe_percent == 100.0);
        CHECK_FALSE(rec.hd_mm.has_value());
    }
    CHECK(r.summary.at(Tissue::FB).hd_undefined == r.slices_selected);
    CHECK_FALSE(fs::exists(opt.out / "error_maps"));
    CHECK(slurp(opt.out / "per_slice_metrics.csv").find(",NA,") != std::string::npos);
}

TEST_CASE("a missing prediction names the slice") {
    oracle::TempDir tmp("evalmiss");
    const RunConfig cfg = tiny_run();
    write_dataset(make_phantom_dataset(cfg, 3), tmp / "data");
    fs::create_directories(tmp / "pred");
    EvalOptions opt{tmp / "data", std::nullopt, tmp / "pred", tmp / "eval", false};
    CHECK_THROWS_AS(evaluate(cfg, opt), MissingSliceError);
    opt.predictions.reset();
    CHECK_THROWS_AS(evaluate(cfg, opt), ValidationError);
}

TEST_CASE("an empty selection is reported, not an error") {
    oracle::TempDir tmp("evalempty");
    RunConfig cfg = tiny_run();
    write_dataset(make_phantom_dataset(cfg, 4), tmp / "data");
    cfg.set("roi.fb", "100000");
    EvalOptions opt{tmp / "data", std::nullopt, tmp / "data" / "test", tmp / "eval", true};
    const EvalReport r = evaluate(cfg, opt);
    CHECK(r.empty_selection());
    CHECK(r.records.empty());
    CHECK(slurp(opt.out / "status.txt").starts_with("empty selection"));
    CHECK(slurp(opt.out / "per_slice_metrics.csv") == "slice_id,tissue,dsc,voe,hd_mm,pa\n");
}

TEST_CASE("report recomputes the evaluation summary") {
    oracle::TempDir tmp("report");
    const RunConfig cfg = tiny_run();
    const Dataset d = make_phantom_dataset(cfg, 6);
    auto model = net::build_model(cfg.model);
    const EvalReport r = evaluate_model(model, cfg, d.test, tmp / "eval", false);
    REQUIRE_FALSE(r.records.empty());
    const auto back = read_metrics_csv(tmp / "eval" / "per_slice_metrics.csv");
    REQUIRE(back.size() == r.records.size());
    for (std::size_t i = 0; i < back.size(); ++i) {
        CHECK(back[i].slice_id == r.records[i].slice_id);
        CHECK(back[i].dsc_percent == r.records[i].dsc_percent);
        CHECK(back[i].hd_mm == r.records[i].hd_mm);
    }
    const auto s = report(tmp / "eval" / "per_slice_metrics.csv", tmp / "rep");
    REQUIRE(s.size() == r.summary.size());
    for (const auto& [t, sum] : r.summary) {
        CHECK(std::abs(s.at(t).dsc.mean - sum.dsc.mean) <= 1e-9);
        CHECK(std::abs(s.at(t).voe.median - sum.voe.median) <= 1e-9);
        CHECK(std::abs(s.at(t).pa.q3 - sum.pa.q3) <= 1e-9);
        CHECK(s.at(t).hd_undefined == sum.hd_undefined);
    }
    CHECK(slurp(tmp / "rep" / "summary.csv") == slurp(tmp / "eval" / "summary.csv"));
    CHECK(slurp(tmp / "rep" / "boxplot.csv") == slurp(tmp / "eval" / "boxplot.csv"));
    CHECK(format_summary(s).find("average") != std::string::npos);
}

TEST_CASE("segmenting a 160-slice volume accounts for its time") {
    oracle::TempDir tmp("seg");
    const RunConfig cfg = tiny_run();
    VolumeMeta meta;
    meta.subject_id = "4455667";
    meta.slice_count = 160;
    meta.original_size = 64;
    meta.resized_size = 64;
    Volume v = make_phantom(1, meta);
    for (auto& s : v.slices) std::fill(s.image.pixels.begin(), s.image.pixels.end(), 0.0f);
    save_volume(v, tmp / "vol");
    auto model = net::build_model(cfg.model);
    const TimingReport t = segment_volume(model, cfg, tmp / "vol", tmp / "out");
    CHECK(t.subject == "4455667");
    REQUIRE(t.slices.size() == 160);
    CHECK(t.slice_sum_seconds() <= t.total_seconds);
    CHECK(t.slice_sum_seconds() >= 0.95 * t.total_seconds);
    CHECK(t.compute_seconds() + t.io_seconds() == doctest::Approx(t.slice_sum_seconds()));
    const auto j = nlohmann::json::parse(slurp(tmp / "out" / "4455667" / "timing.json"));
    CHECK(j.at("slice_count").get<int>() == 160);
    CHECK(j.at("slices").size() == 160);
    const auto mask = load_mask(tmp / "out" / "4455667" / "4455667_159_mask.png");
    CHECK(mask.height == 64);
}

TEST_CASE("scored tissues follow the mode") {
    CHECK(scored_tissues(preset("tiny")).size() == 4);
    const auto tc = scored_tissues(preset("tiny", Mode::BinaryTC));
    REQUIRE(tc.size() == 1);
    CHECK(tc[0] == Tissue::TC);
}
