#pragma once

#include <optional>
#include <span>
#include <vector>

namespace mtra::stats {

/// Pearson correlation; nullopt when either series has zero variance.
std::optional<double> pearson(std::span<const double> x, std::span<const double> y);

/// ICC(A,1): two-way random effects, absolute agreement, single measures.
/// nullopt when the mean squares vanish (all values identical).
std::optional<double> icc_absolute_single(std::span<const double> x, std::span<const double> y);

/// Kendall's coefficient of concordance for two raters ranking the same
/// subjects, with the tie correction. nullopt when every rater ties everything.
std::optional<double> kendall_w(std::span<const double> x, std::span<const double> y);

/// Average ranks (1-based); ties share the mean of their positions.
std::vector<double> average_ranks(std::span<const double> values);

struct TTest {
    double t = 0.0;
    double df = 0.0;
    double p = 1.0;  ///< two-sided
};

/// Unpaired Welch t-test. Zero variance in both groups gives p = 1 when the
/// means agree and p = 0 otherwise.
TTest welch_t_test(std::span<const double> a, std::span<const double> b);

/// Unpaired Student t-test with pooled variance.
TTest pooled_t_test(std::span<const double> a, std::span<const double> b);

struct Anova {
    double f = 0.0;
    double df_between = 0.0;
    double df_within = 0.0;
    double p = 1.0;
};

/// One-way ANOVA across groups (each of size >= 2).
Anova one_way_anova(std::span<const std::vector<double>> groups);

struct Association {
    std::optional<double> r, icc, w;
};

/// Pearson r, ICC(A,1) and Kendall's W between paired manual and automatic
/// measurements (length >= 3).
Association association_measures(std::span<const double> manual, std::span<const double> automatic);

struct Significance {
    double t_p = 1.0;
    double anova_f = 0.0;
    double anova_p = 1.0;
};

/// Welch t-test p-value plus the one-way ANOVA of the two groups.
Significance significance_tests(std::span<const double> a, std::span<const double> b);

}  // namespace mtra::stats
