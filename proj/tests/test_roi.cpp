#include "errors.hpp"
#include "knee_data.hpp"
#include "roi.hpp"

#include <doctest.h>

using namespace mtra;
using namespace mtra::roi;

namespace {

std::vector<LabelMask> masks_of(const Volume& v) {
    std::vector<LabelMask> out;
    for (const auto& p : v.slices) out.push_back(p.mask);
    return out;
}

Volume phantom150(std::uint64_t seed) { return resize_volume(make_phantom(seed, VolumeMeta{}), 150); }

}  // namespace

TEST_CASE("pixel counts") {
    CHECK(tissue_pixel_counts(LabelMask(150, 150)) == TissueCounts{});
    CHECK(tissue_pixel_counts(LabelMask(150, 150, 5, 1)).fb == 22500);
    LabelMask m(10, 10);
    for (int i = 0; i < 40; ++i) m.labels[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(1 + i / 10);
    CHECK(tissue_pixel_counts(m) == TissueCounts{10, 10, 10, 10});
}

TEST_CASE("all-of rule with the multi-class defaults") {
    const auto thr = ThresholdConfig::multiclass_defaults();
    CHECK(is_critical_slice({300, 100, 300, 100}, thr));
    CHECK_FALSE(is_critical_slice({0, 0, 0, 0}, thr));
    CHECK_FALSE(is_critical_slice({299, 100, 300, 100}, thr));
    CHECK_FALSE(is_critical_slice({300, 100, 300, 99}, thr));
}

TEST_CASE("binary thresholds consider one tissue") {
    const auto fc = ThresholdConfig::binary_fc_defaults();
    CHECK(*fc.fc == 280);
    CHECK_FALSE(fc.fb.has_value());
    CHECK(is_critical_slice({0, 280, 0, 0}, fc));
    CHECK_FALSE(is_critical_slice({1000, 279, 1000, 1000}, fc));
    const auto tc = ThresholdConfig::binary_tc_defaults();
    CHECK(is_critical_slice({0, 0, 0, 100}, tc));
    ThresholdConfig neg;
    neg.fb = -1;
    CHECK_THROWS_AS(neg.validate(), ValidationError);
}

TEST_CASE("phantom selection is strictly interior") {
    const Volume v = phantom150(7);
    const auto sel = select_critical_slices(masks_of(v), ThresholdConfig::multiclass_defaults());
    REQUIRE_FALSE(sel.empty());
    CHECK(sel.front() > 0);
    CHECK(sel.back() < 159);
    CHECK(std::is_sorted(sel.begin(), sel.end()));
}

TEST_CASE("degenerate selections") {
    const std::vector<LabelMask> blank(6, LabelMask(20, 20));
    CHECK(select_critical_slices(blank, ThresholdConfig::multiclass_defaults()).empty());
    const ThresholdConfig zero{0, 0, 0, 0};
    CHECK(select_critical_slices(blank, zero) == std::vector<int>{0, 1, 2, 3, 4, 5});
}

TEST_CASE("raising a threshold never adds a slice") {
    const auto masks = masks_of(phantom150(21));
    for (Tissue t : kTissues) {
        ThresholdConfig thr = ThresholdConfig::multiclass_defaults();
        auto prev = select_critical_slices(masks, thr);
        for (int step = 0; step < 12; ++step) {
            thr.set(t, *thr.of(t) + 150);
            const auto next = select_critical_slices(masks, thr);
            CHECK(std::includes(prev.begin(), prev.end(), next.begin(), next.end()));
            prev = next;
        }
    }
}
