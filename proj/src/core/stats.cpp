#include "stats.hpp"

#include "errors.hpp"

#include <boost/math/distributions/fisher_f.hpp>
#include <boost/math/distributions/students_t.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace mtra::stats {

namespace {

double mean(std::span<const double> v) { return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size()); }

// Sum of squared deviations from the mean.
double sum_sq_dev(std::span<const double> v, double m) {
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return s;
}

void require_paired(std::span<const double> x, std::span<const double> y, std::size_t min_len) {
    if (x.size() != y.size()) throw ValidationError("paired samples must have equal length");
    if (x.size() < min_len) {
        throw ValidationError("need at least " + std::to_string(min_len) + " paired samples, got " +
                              std::to_string(x.size()));
    }
}

double two_sided_t_p(double t, double df) {
    if (std::isnan(t)) return 1.0;
    if (std::isinf(t)) return 0.0;
    boost::math::students_t dist(df);
    return std::min(1.0, 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t))));
}

}  // namespace

std::optional<double> pearson(std::span<const double> x, std::span<const double> y) {
    require_paired(x, y, 2);
    const double mx = mean(x), my = mean(y);
    double sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) sxy += (x[i] - mx) * (y[i] - my);
    const double sxx = sum_sq_dev(x, mx), syy = sum_sq_dev(y, my);
    if (sxx == 0.0 || syy == 0.0) return std::nullopt;
    return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

std::optional<double> icc_absolute_single(std::span<const double> x, std::span<const double> y) {
    require_paired(x, y, 2);
    const double n = static_cast<double>(x.size());
    constexpr double k = 2.0;
    const double grand = (mean(x) + mean(y)) / 2.0;

    double ss_rows = 0.0, ss_total = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double row = (x[i] + y[i]) / 2.0;
        ss_rows += k * (row - grand) * (row - grand);
        ss_total += (x[i] - grand) * (x[i] - grand) + (y[i] - grand) * (y[i] - grand);
    }
    const double ss_cols = n * ((mean(x) - grand) * (mean(x) - grand) + (mean(y) - grand) * (mean(y) - grand));
    const double ss_err = std::max(0.0, ss_total - ss_rows - ss_cols);

    const double ms_rows = ss_rows / (n - 1.0);
    const double ms_cols = ss_cols / (k - 1.0);
    const double ms_err = ss_err / ((n - 1.0) * (k - 1.0));
    const double denom = ms_rows + (k - 1.0) * ms_err + k * (ms_cols - ms_err) / n;
    if (denom == 0.0) return std::nullopt;
    return (ms_rows - ms_err) / denom;
}

std::vector<double> average_ranks(std::span<const double> values) {
    std::vector<std::size_t> order(values.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    std::vector<double> ranks(values.size());
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        while (j + 1 < order.size() && values[order[j + 1]] == values[order[i]]) ++j;
        const double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
        for (std::size_t t = i; t <= j; ++t) ranks[order[t]] = avg;
        i = j + 1;
    }
    return ranks;
}

std::optional<double> kendall_w(std::span<const double> x, std::span<const double> y) {
    require_paired(x, y, 2);
    const double n = static_cast<double>(x.size());
    constexpr double m = 2.0;  // raters
    const auto rx = average_ranks(x);
    const auto ry = average_ranks(y);

    double s = 0.0;
    const double mean_total = m * (n + 1.0) / 2.0;
    for (std::size_t i = 0; i < rx.size(); ++i) {
        const double total = rx[i] + ry[i];
        s += (total - mean_total) * (total - mean_total);
    }
    auto tie_term = [](std::span<const double> v) {
        std::vector<double> sorted(v.begin(), v.end());
        std::sort(sorted.begin(), sorted.end());
        double t = 0.0;
        std::size_t i = 0;
        while (i < sorted.size()) {
            std::size_t j = i;
            while (j + 1 < sorted.size() && sorted[j + 1] == sorted[i]) ++j;
            const double g = static_cast<double>(j - i + 1);
            t += g * g * g - g;
            i = j + 1;
        }
        return t;
    };
    const double denom = m * m * (n * n * n - n) - m * (tie_term(x) + tie_term(y));
    if (denom <= 0.0) return std::nullopt;
    return std::clamp(12.0 * s / denom, 0.0, 1.0);
}

TTest welch_t_test(std::span<const double> a, std::span<const double> b) {
    if (a.size() < 2 || b.size() < 2) throw ValidationError("t-test needs at least two values per group");
    const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
    const double ma = mean(a), mb = mean(b);
    const double va = sum_sq_dev(a, ma) / (na - 1.0), vb = sum_sq_dev(b, mb) / (nb - 1.0);
    const double se2 = va / na + vb / nb;
    TTest out;
    if (se2 == 0.0) {
        out.df = na + nb - 2.0;
        out.t = ma == mb ? 0.0 : std::copysign(std::numeric_limits<double>::infinity(), ma - mb);
        out.p = ma == mb ? 1.0 : 0.0;
        return out;
    }
    out.t = (ma - mb) / std::sqrt(se2);
    out.df = se2 * se2 / ((va / na) * (va / na) / (na - 1.0) + (vb / nb) * (vb / nb) / (nb - 1.0));
    out.p = two_sided_t_p(out.t, out.df);
    return out;
}

TTest pooled_t_test(std::span<const double> a, std::span<const double> b) {
    if (a.size() < 2 || b.size() < 2) throw ValidationError("t-test needs at least two values per group");
    const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
    const double ma = mean(a), mb = mean(b);
    TTest out;
    out.df = na + nb - 2.0;
    const double pooled = (sum_sq_dev(a, ma) + sum_sq_dev(b, mb)) / out.df;
    const double se = std::sqrt(pooled * (1.0 / na + 1.0 / nb));
    if (se == 0.0) {
        out.t = ma == mb ? 0.0 : std::copysign(std::numeric_limits<double>::infinity(), ma - mb);
        out.p = ma == mb ? 1.0 : 0.0;
        return out;
    }
    out.t = (ma - mb) / se;
    out.p = two_sided_t_p(out.t, out.df);
    return out;
}

Anova one_way_anova(std::span<const std::vector<double>> groups) {
    if (groups.size() < 2) throw ValidationError("ANOVA needs at least two groups");
    double total = 0.0;
    std::size_t n = 0;
    for (const auto& g : groups) {
        if (g.size() < 2) throw ValidationError("ANOVA groups need at least two values");
        total += std::accumulate(g.begin(), g.end(), 0.0);
        n += g.size();
    }
    const double grand = total / static_cast<double>(n);
    double ss_between = 0.0, ss_within = 0.0;
    for (const auto& g : groups) {
        const double m = mean(g);
        ss_between += static_cast<double>(g.size()) * (m - grand) * (m - grand);
        ss_within += sum_sq_dev(g, m);
    }
    Anova out;
    out.df_between = static_cast<double>(groups.size() - 1);
    out.df_within = static_cast<double>(n - groups.size());
    const double ms_between = ss_between / out.df_between;
    const double ms_within = ss_within / out.df_within;
    if (ms_within == 0.0) {
        out.f = ms_between == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
        out.p = ms_between == 0.0 ? 1.0 : 0.0;
        return out;
    }
    out.f = ms_between / ms_within;
    boost::math::fisher_f dist(out.df_between, out.df_within);
    out.p = boost::math::cdf(boost::math::complement(dist, out.f));
    return out;
}

Association association_measures(std::span<const double> manual, std::span<const double> automatic) {
    require_paired(manual, automatic, 3);
    return {pearson(manual, automatic), icc_absolute_single(manual, automatic), kendall_w(manual, automatic)};
}

Significance significance_tests(std::span<const double> a, std::span<const double> b) {
    const TTest t = welch_t_test(a, b);
    const std::vector<std::vector<double>> groups{{a.begin(), a.end()}, {b.begin(), b.end()}};
    const Anova anova = one_way_anova(groups);
    return {t.p, anova.f, anova.p};
}

}  // namespace mtra::stats
