#include "errors.hpp"
#include "knee_data.hpp"
#include "png_io.hpp"
#include "roi.hpp"
#include "tensor_bridge.hpp"

#include "oracles.hpp"

// c10 logging defines its own CHECK.
#undef CHECK
#include <doctest.h>

#include <fstream>
#include <set>

using namespace mtra;

namespace {

VolumeMeta small_meta(int slices = 12, int size = 48) {
    VolumeMeta m;
    m.subject_id = "9988421";
    m.slice_count = slices;
    m.original_size = size;
    m.resized_size = size;
    m.spacing = {0.5, 0.5};
    return m;
}

std::set<std::uint8_t> vocabulary(const LabelMask& m) { return {m.labels.begin(), m.labels.end()}; }

}  // namespace

TEST_CASE("slice ids render zero-padded and parse back") {
    const SliceId id{"9988421", 89};
    CHECK(id.str() == "9988421_089");
    CHECK(SliceId::parse("9988421_089") == id);
    CHECK(SliceId::parse("a_b_007") == SliceId{"a_b", 7});
    CHECK_THROWS_AS(SliceId::parse("nounderscore"), ValidationError);
    CHECK_THROWS_AS(SliceId::parse("9988421_x1"), ValidationError);
}

TEST_CASE("tissue names round-trip case-insensitively") {
    for (Tissue t : kTissues) CHECK(parse_tissue(tissue_name(t)) == t);
    CHECK(parse_tissue("fc") == Tissue::FC);
    CHECK_THROWS_AS(parse_tissue("XX"), ValidationError);
}

TEST_CASE("min-max normalization") {
    const std::vector<std::uint16_t> raw{10, 20, 30, 50};
    const auto n = normalize_minmax(raw);
    CHECK(n.front() == 0.0f);
    CHECK(n.back() == 1.0f);
    CHECK(n[1] == doctest::Approx(0.25));
    const std::vector<std::uint16_t> flat(9, 77);
    for (float v : normalize_minmax(flat)) CHECK(v == 0.0f);
}

TEST_CASE("label masks validate their vocabulary") {
    LabelMask m(2, 2);
    m.labels = {0, 1, 4, 2};
    CHECK_NOTHROW(m.validate());
    m.labels[3] = 7;
    CHECK_THROWS_AS(m.validate(), ValidationError);
    VolumeMeta bad = small_meta();
    bad.resized_size = bad.original_size + 1;
    CHECK_THROWS_AS(bad.validate(), ValidationError);
}

TEST_CASE("save and load round-trip a phantom volume") {
    oracle::TempDir tmp("kd");
    const Volume v = make_phantom(3, small_meta());
    save_volume(v, tmp.path());
    const Volume back = load_volume(tmp.path());
    REQUIRE(back.size() == v.size());
    CHECK(back.meta.subject_id == "9988421");
    CHECK(back.meta.spacing.row_mm == 0.5);
    for (std::size_t i = 0; i < v.size(); ++i) {
        CHECK(back.slices[i].id == v.slices[i].id);
        CHECK(back.slices[i].mask.labels == v.slices[i].mask.labels);
        // The generator already quantizes to 8-bit levels.
        CHECK(back.slices[i].image.pixels == v.slices[i].image.pixels);
    }
}

TEST_CASE("a 160-slice directory loads 160 ordered pairs") {
    oracle::TempDir tmp("kd160");
    VolumeMeta m = small_meta(160, 16);
    save_volume(make_phantom(1, m), tmp.path());
    const Volume v = load_volume(tmp.path(), m);
    REQUIRE(v.size() == 160);
    for (int i = 0; i < 160; ++i) CHECK(v.slices[static_cast<std::size_t>(i)].id.index == i);
}

TEST_CASE("load errors") {
    oracle::TempDir tmp("kderr");
    SUBCASE("empty directory") {
        try {
            load_volume(tmp.path(), small_meta());
            FAIL("expected an error");
        } catch (const RuntimeError& e) {
            CHECK(std::string(e.what()).find("no slices found") != std::string::npos);
        }
    }
    SUBCASE("missing mask names the slice") {
        save_volume(make_phantom(2, small_meta(4, 8)), tmp.path());
        std::filesystem::remove(tmp / "9988421_002_mask.png");
        try {
            load_volume(tmp.path(), small_meta(4, 8));
            FAIL("expected an error");
        } catch (const MissingSliceError& e) {
            CHECK(e.slice_id() == SliceId{"9988421", 2});
        }
    }
    SUBCASE("label 7 in a five-class mask") {
        save_volume(make_phantom(2, small_meta(2, 8)), tmp.path());
        std::vector<std::uint8_t> bad(64, 0);
        bad[5] = 7;
        png::write_gray8(tmp / "9988421_001_mask.png", 8, 8, bad);
        CHECK_THROWS_AS(load_volume(tmp.path(), small_meta(2, 8)), ValidationError);
    }
}

TEST_CASE("16-bit images are read and rescaled") {
    oracle::TempDir tmp("kd16");
    std::vector<std::uint16_t> img(16);
    for (std::size_t i = 0; i < img.size(); ++i) img[i] = static_cast<std::uint16_t>(1000 + 3000 * i);
    png::write_gray16(tmp / "1234567_000.png", 4, 4, img);
    png::write_gray8(tmp / "1234567_000_mask.png", 4, 4, std::vector<std::uint8_t>(16, 1));
    const Volume v = load_volume(tmp.path());
    const auto& px = v.slices[0].image.pixels;
    CHECK(px.front() == 0.0f);
    CHECK(px.back() == 1.0f);
    CHECK(px[5] == doctest::Approx(5.0 / 15.0).epsilon(1e-6));
}

TEST_CASE("resize scales spacing and keeps the label vocabulary") {
    VolumeMeta m = small_meta(3, 384);
    m.spacing = {0.36, 0.36};
    const Volume v = make_phantom(5, m);
    const SlicePair& p = v.slices[1];
    auto [img, mask] = resize_pair(p.image, p.mask, 150);
    CHECK(img.height == 150);
    CHECK(mask.width == 150);
    CHECK(img.spacing.row_mm == doctest::Approx(0.9216).epsilon(1e-12));
    CHECK(img.spacing.col_mm == doctest::Approx(0.9216).epsilon(1e-12));
    for (float x : img.pixels) CHECK((x >= 0.0f && x <= 1.0f));

    LabelMask sparse(40, 40);
    for (std::size_t i = 0; i < sparse.size(); ++i) sparse.labels[i] = static_cast<std::uint8_t>((i * 7) % 5 == 0 ? 3 : (i % 3 == 0 ? 1 : 0));
    const ImageSlice blank(40, 40);
    auto [_, small] = resize_pair(blank, sparse, 17);
    const auto before = vocabulary(sparse);
    for (auto l : vocabulary(small)) CHECK(before.contains(l));
    auto [__, back] = resize_pair(ImageSlice(17, 17), small, 40);
    for (auto l : vocabulary(back)) CHECK(before.contains(l));
}

TEST_CASE("identity resize is pixel-identical") {
    const Volume v = make_phantom(8, small_meta(3, 32));
    auto [img, mask] = resize_pair(v.slices[1].image, v.slices[1].mask, 32);
    CHECK(img.pixels == v.slices[1].image.pixels);
    CHECK(mask.labels == v.slices[1].mask.labels);
    CHECK_THROWS_AS(resize_pair(img, mask, 0), ValidationError);
}

TEST_CASE("edge stripping") {
    VolumeMeta m = small_meta(160, 8);
    const Volume v = make_phantom(1, m);
    const Volume s = strip_edge_slices(v, 20);
    REQUIRE(s.size() == 120);
    CHECK(s.slices.front().id.index == 20);
    CHECK(s.slices.back().id.index == 139);
    CHECK(strip_edge_slices(v, 0).size() == 160);
    CHECK_THROWS_AS(strip_edge_slices(make_phantom(1, small_meta(10, 8)), 5), ValidationError);
}

TEST_CASE("one-hot encoding") {
    LabelMask one(1, 1);
    one.labels = {2};
    const auto t = one_hot(one);
    CHECK(t.sizes() == torch::IntArrayRef{5, 1, 1});
    CHECK(t.flatten().equal(torch::tensor({0.0f, 0.0f, 1.0f, 0.0f, 0.0f})));

    const LabelMask bg(3, 4);
    const auto b = one_hot(bg);
    CHECK(b[0].eq(1).all().item<bool>());
    CHECK(b.slice(0, 1).eq(0).all().item<bool>());

    const Volume v = make_phantom(4, small_meta(5, 24));
    const auto oh = one_hot(v.slices[2].mask);
    CHECK(oh.sum(0).eq(1).all().item<bool>());
    // argmax of a one-hot map gives the labels back
    const LabelMask back = to_mask(oh.argmax(0).to(torch::kUInt8), {});
    CHECK(back.labels == v.slices[2].mask.labels);
}

TEST_CASE("phantom generator") {
    VolumeMeta m;  // 160 slices at 384
    SUBCASE("deterministic in the seed") {
        VolumeMeta s = small_meta(6, 64);
        const Volume a = make_phantom(11, s), b = make_phantom(11, s), c = make_phantom(12, s);
        for (std::size_t i = 0; i < a.size(); ++i) {
            CHECK(a.slices[i].image.pixels == b.slices[i].image.pixels);
            CHECK(a.slices[i].mask.labels == b.slices[i].mask.labels);
        }
        CHECK(a.slices[3].image.pixels != c.slices[3].image.pixels);
    }
    SUBCASE("edge slice is background, mid-volume passes the thresholds at 150") {
        const Volume v = resize_volume(make_phantom(7, m), 150);
        CHECK(roi::tissue_pixel_counts(v.slices[0].mask) == roi::TissueCounts{});
        const auto mid = roi::tissue_pixel_counts(v.slices[80].mask);
        CHECK(mid.fb >= 300);
        CHECK(mid.tb >= 300);
        CHECK(mid.fc >= 100);
        CHECK(mid.tc >= 100);
        for (float x : v.slices[80].image.pixels) CHECK((x >= 0.0f && x <= 1.0f));
    }
}
