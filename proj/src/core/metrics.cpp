#include "metrics.hpp"

#include "errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace mtra::metrics {

namespace {

void require_same_size(std::size_t a, std::size_t b) {
    if (a != b) {
        throw ValidationError("mask sizes differ (" + std::to_string(a) + " vs " + std::to_string(b) + ")");
    }
}

void require_shape(const BinaryView& m) {
    if (m.height < 0 || m.width < 0 || m.data.size() != static_cast<std::size_t>(m.height) * m.width) {
        throw ValidationError("mask buffer does not match its declared shape");
    }
}

constexpr double kInf = std::numeric_limits<double>::infinity();

// Exact 1D squared-distance transform (lower envelope of parabolas) along a
// strided line. Sites with infinite cost are skipped.
void edt_1d(double* line, int n, std::ptrdiff_t stride, double step, std::vector<double>& f, std::vector<int>& v,
            std::vector<double>& z) {
    f.resize(n);
    for (int i = 0; i < n; ++i) f[i] = line[i * stride];
    v.resize(n);
    z.resize(n + 1);
    const double w = step * step;
    int k = -1;
    for (int q = 0; q < n; ++q) {
        if (f[q] == kInf) continue;
        if (k < 0) {
            k = 0;
            v[0] = q;
            z[0] = -kInf;
            z[1] = kInf;
            continue;
        }
        auto intersect = [&](int p) { return ((f[q] + w * q * q) - (f[p] + w * p * p)) / (2.0 * w * (q - p)); };
        // z[0] is -inf, so the loop stops at k == 0 at the latest.
        double s = intersect(v[k]);
        while (s <= z[k]) {
            --k;
            s = intersect(v[k]);
        }
        ++k;
        v[k] = q;
        z[k] = s;
        z[k + 1] = kInf;
    }
    if (k < 0) {
        for (int i = 0; i < n; ++i) line[i * stride] = kInf;
        return;
    }
    int j = 0;
    for (int p = 0; p < n; ++p) {
        while (z[j + 1] < p) ++j;
        const double d = (p - v[j]) * step;
        line[p * stride] = f[v[j]] + d * d;
    }
}

}  // namespace

double dsc(std::span<const std::uint8_t> k, std::span<const std::uint8_t> y) {
    require_same_size(k.size(), y.size());
    std::size_t nk = 0, ny = 0, both = 0;
    for (std::size_t i = 0; i < k.size(); ++i) {
        const bool a = k[i] != 0, b = y[i] != 0;
        nk += a;
        ny += b;
        both += a && b;
    }
    if (nk + ny == 0) return 100.0;
    return 100.0 * (2.0 * static_cast<double>(both)) / static_cast<double>(nk + ny);
}

double voe(double dsc_percent) {
    if (!(dsc_percent >= 0.0 && dsc_percent <= 100.0)) {
        throw ValidationError("DSC must lie in [0,100], got " + std::to_string(dsc_percent));
    }
    return 100.0 * (1.0 - dsc_percent / (200.0 - dsc_percent));
}

std::vector<double> squared_distance_transform(const BinaryView& mask, Spacing spacing) {
    require_shape(mask);
    const int h = mask.height, w = mask.width;
    std::vector<double> grid(mask.data.size());
    for (std::size_t i = 0; i < grid.size(); ++i) grid[i] = mask.data[i] ? 0.0 : kInf;
    std::vector<double> f, z;
    std::vector<int> v;
    for (int c = 0; c < w; ++c) edt_1d(grid.data() + c, h, w, spacing.row_mm, f, v, z);
    for (int r = 0; r < h; ++r) edt_1d(grid.data() + static_cast<std::ptrdiff_t>(r) * w, w, 1, spacing.col_mm, f, v, z);
    return grid;
}

std::optional<double> hausdorff(const BinaryView& k, const BinaryView& y, Spacing spacing) {
    require_shape(k);
    require_shape(y);
    if (k.height != y.height || k.width != y.width) throw ValidationError("mask shapes differ");
    const bool k_empty = std::none_of(k.data.begin(), k.data.end(), [](std::uint8_t v) { return v != 0; });
    const bool y_empty = std::none_of(y.data.begin(), y.data.end(), [](std::uint8_t v) { return v != 0; });
    if (k_empty && y_empty) return 0.0;
    if (k_empty || y_empty) return std::nullopt;

    const auto dist_to_y = squared_distance_transform(y, spacing);
    const auto dist_to_k = squared_distance_transform(k, spacing);
    double worst = 0.0;
    for (std::size_t i = 0; i < k.data.size(); ++i) {
        if (k.data[i]) worst = std::max(worst, dist_to_y[i]);
        if (y.data[i]) worst = std::max(worst, dist_to_k[i]);
    }
    return std::sqrt(worst);
}

double pixel_accuracy(std::span<const std::uint8_t> k_labels, std::span<const std::uint8_t> y_labels) {
    require_same_size(k_labels.size(), y_labels.size());
    if (k_labels.empty()) throw ValidationError("pixel accuracy of an empty map");
    std::size_t match = 0;
    for (std::size_t i = 0; i < k_labels.size(); ++i) match += k_labels[i] == y_labels[i];
    return 100.0 * static_cast<double>(match) / static_cast<double>(k_labels.size());
}

Confusion confusion(std::span<const std::uint8_t> k, std::span<const std::uint8_t> y) {
    require_same_size(k.size(), y.size());
    Confusion c;
    for (std::size_t i = 0; i < k.size(); ++i) {
        const bool p = k[i] != 0, t = y[i] != 0;
        if (p && t) ++c.tp;
        else if (!p && !t) ++c.tn;
        else if (p) ++c.fp;
        else ++c.fn;
    }
    return c;
}

MetricRecord evaluate_binary(const std::string& slice_id, Tissue tissue, const BinaryView& pred,
                             const BinaryView& truth, Spacing spacing) {
    MetricRecord rec;
    rec.slice_id = slice_id;
    rec.tissue = tissue;
    rec.dsc_percent = dsc(pred.data, truth.data);
    rec.voe_percent = voe(rec.dsc_percent);
    rec.hd_mm = hausdorff(pred, truth, spacing);
    const Confusion c = confusion(pred.data, truth.data);
    rec.pa_percent = 100.0 * static_cast<double>(c.tp + c.tn) / static_cast<double>(pred.data.size());
    return rec;
}

MetricRecord evaluate_tissue(const std::string& slice_id, Tissue tissue, const LabelMask& pred, const LabelMask& truth,
                             Spacing spacing) {
    if (pred.height != truth.height || pred.width != truth.width) throw ValidationError("mask shapes differ");
    const auto label = static_cast<std::uint8_t>(tissue);
    const auto p = pred.binary(label);
    const auto t = truth.binary(label);
    return evaluate_binary(slice_id, tissue, {pred.height, pred.width, p}, {truth.height, truth.width, t}, spacing);
}

Summary summarize(std::vector<double> values) {
    if (values.empty()) throw ValidationError("cannot summarize an empty set");
    std::sort(values.begin(), values.end());
    Summary s;
    s.count = values.size();
    s.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
    auto quantile = [&values](double q) {
        const double pos = q * static_cast<double>(values.size() - 1);
        const auto lo = static_cast<std::size_t>(std::floor(pos));
        const std::size_t hi = std::min(lo + 1, values.size() - 1);
        const double frac = pos - static_cast<double>(lo);
        return values[lo] + (values[hi] - values[lo]) * frac;
    };
    s.min = values.front();
    s.q1 = quantile(0.25);
    s.median = quantile(0.5);
    s.q3 = quantile(0.75);
    s.max = values.back();
    return s;
}

std::map<Tissue, TissueSummary> aggregate(std::span<const MetricRecord> records) {
    if (records.empty()) throw ValidationError("cannot aggregate an empty record set");
    struct Columns {
        std::vector<double> dsc, voe, hd, pa;
        std::size_t hd_undefined = 0;
    };
    std::map<Tissue, Columns> cols;
    for (const MetricRecord& r : records) {
        Columns& c = cols[r.tissue];
        c.dsc.push_back(r.dsc_percent);
        c.voe.push_back(r.voe_percent);
        c.pa.push_back(r.pa_percent);
        if (r.hd_mm) c.hd.push_back(*r.hd_mm);
        else ++c.hd_undefined;
    }
    std::map<Tissue, TissueSummary> out;
    for (auto& [tissue, c] : cols) {
        TissueSummary ts;
        ts.dsc = summarize(std::move(c.dsc));
        ts.voe = summarize(std::move(c.voe));
        ts.pa = summarize(std::move(c.pa));
        if (!c.hd.empty()) ts.hd = summarize(std::move(c.hd));
        ts.hd_undefined = c.hd_undefined;
        out.emplace(tissue, ts);
    }
    return out;
}

}  // namespace mtra::metrics
