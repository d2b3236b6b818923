#pragma once

#include <cstddef>
#include <vector>

namespace stainpipe {

// Regularized incomplete beta function I_x(a, b), evaluated through the
// continued-fraction expansion (modified Lentz) to relative error <= 1e-12.
double incomplete_beta(double a, double b, double x);

// Survival function of the F distribution: P(F_{d1, d2} > f).
double f_survival(double f, double d1, double d2);

// Two-sided Student t critical value: the t with P(|T_df| > t) = alpha.
double t_critical_two_sided(double alpha, double df);

struct LsdPair {
  std::size_t group_a = 0;
  std::size_t group_b = 0;
  double mean_diff = 0.0;      // mean(group_a) - mean(group_b)
  double lsd_threshold = 0.0;  // t * sqrt(ms_within * (1/n_a + 1/n_b))
  bool significant = false;    // |mean_diff| > lsd_threshold
};

struct StatTestResult {
  double f_stat = 0.0;
  double p_value = 1.0;
  double alpha = 0.05;
  std::size_t df_between = 0;
  std::size_t df_within = 0;
  double ms_within = 0.0;
  std::vector<LsdPair> pairwise;  // filled by fisher_lsd only
};

// One-way ANOVA: F = MS_between / MS_within, p from the F survival function.
// Zero variance both between and within groups leaves F undefined (error);
// zero within-group variance alone yields an infinite F with p = 0.
StatTestResult anova_oneway(const std::vector<std::vector<double>>& groups);

// ANOVA followed by Fisher's least-significant-difference test on every
// group pair at the given alpha.
StatTestResult fisher_lsd(const std::vector<std::vector<double>>& groups,
                          double alpha = 0.05);

}  // namespace stainpipe
