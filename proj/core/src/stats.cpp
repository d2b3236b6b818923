#include "stainpipe/stats.hpp"

#include <cmath>
#include <limits>

#include "stainpipe/error.hpp"

namespace stainpipe {

namespace {

// Continued fraction for the incomplete beta, modified Lentz iteration.
double beta_cf(double a, double b, double x) {
  constexpr double kEps = 1e-14;
  constexpr double kTiny = 1e-300;
  constexpr int kMaxIter = 500;

  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < kEps) return h;
  }
  raise(errc::undefined_statistic, "incomplete beta continued fraction stalled");
}

}  // namespace

double incomplete_beta(double a, double b, double x) {
  if (!(a > 0.0) || !(b > 0.0)) {
    raise(errc::range_error, "incomplete beta needs positive shape parameters");
  }
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double log_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                           a * std::log(x) + b * std::log1p(-x);
  const double front = std::exp(log_front);
  // The continued fraction converges fast on the side where x is small
  // relative to a / (a + b); use the symmetry for the other side.
  if (x < (a + 1.0) / (a + b + 2.0)) {
    return front * beta_cf(a, b, x) / a;
  }
  return 1.0 - front * beta_cf(b, a, 1.0 - x) / b;
}

double f_survival(double f, double d1, double d2) {
  if (!(d1 > 0.0) || !(d2 > 0.0)) {
    raise(errc::range_error, "f distribution needs positive degrees of freedom");
  }
  if (f <= 0.0) return 1.0;
  if (std::isinf(f)) return 0.0;
  return incomplete_beta(d2 / 2.0, d1 / 2.0, d2 / (d2 + d1 * f));
}

double t_critical_two_sided(double alpha, double df) {
  if (!(alpha > 0.0) || !(alpha < 1.0)) {
    raise(errc::range_error, "alpha must lie in (0, 1)");
  }
  if (!(df > 0.0)) {
    raise(errc::range_error, "t distribution needs positive degrees of freedom");
  }
  // P(|T| > t) = I_{df/(df + t^2)}(df/2, 1/2), strictly decreasing in t.
  const auto tail = [df](double t) {
    return incomplete_beta(df / 2.0, 0.5, df / (df + t * t));
  };
  double lo = 0.0;
  double hi = 1.0;
  while (tail(hi) > alpha) {
    hi *= 2.0;
    if (hi > 1e12) break;
  }
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (tail(mid) > alpha) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

namespace {

struct GroupSums {
  std::vector<double> means;
  std::vector<std::size_t> sizes;
  double ss_between = 0.0;
  double ss_within = 0.0;
  std::size_t total = 0;
};

GroupSums group_sums(const std::vector<std::vector<double>>& groups) {
  if (groups.size() < 2) {
    raise(errc::range_error, "anova needs at least two groups");
  }
  GroupSums gs;
  double grand_sum = 0.0;
  for (const auto& g : groups) {
    if (g.size() < 2) {
      raise(errc::range_error, "anova needs at least two samples per group");
    }
    double s = 0.0;
    for (double v : g) s += v;
    gs.means.push_back(s / static_cast<double>(g.size()));
    gs.sizes.push_back(g.size());
    gs.total += g.size();
    grand_sum += s;
  }
  const double grand_mean = grand_sum / static_cast<double>(gs.total);
  for (std::size_t i = 0; i < groups.size(); ++i) {
    const double d = gs.means[i] - grand_mean;
    gs.ss_between += static_cast<double>(gs.sizes[i]) * d * d;
    for (double v : groups[i]) {
      gs.ss_within += (v - gs.means[i]) * (v - gs.means[i]);
    }
  }
  return gs;
}

}  // namespace

StatTestResult anova_oneway(const std::vector<std::vector<double>>& groups) {
  const GroupSums gs = group_sums(groups);
  StatTestResult r;
  r.df_between = groups.size() - 1;
  r.df_within = gs.total - groups.size();
  const double ms_between = gs.ss_between / static_cast<double>(r.df_between);
  r.ms_within = gs.ss_within / static_cast<double>(r.df_within);
  if (r.ms_within <= 0.0) {
    if (ms_between <= 0.0) {
      raise(errc::undefined_statistic,
            "anova F undefined: zero variance within and between groups");
    }
    r.f_stat = std::numeric_limits<double>::infinity();
    r.p_value = 0.0;
    return r;
  }
  r.f_stat = ms_between / r.ms_within;
  r.p_value = f_survival(r.f_stat, static_cast<double>(r.df_between),
                         static_cast<double>(r.df_within));
  return r;
}

StatTestResult fisher_lsd(const std::vector<std::vector<double>>& groups,
                          double alpha) {
  StatTestResult r = anova_oneway(groups);
  r.alpha = alpha;
  const GroupSums gs = group_sums(groups);
  const double t = t_critical_two_sided(alpha, static_cast<double>(r.df_within));
  for (std::size_t i = 0; i < gs.means.size(); ++i) {
    for (std::size_t j = i + 1; j < gs.means.size(); ++j) {
      LsdPair pair;
      pair.group_a = i;
      pair.group_b = j;
      pair.mean_diff = gs.means[i] - gs.means[j];
      pair.lsd_threshold =
          t * std::sqrt(r.ms_within * (1.0 / static_cast<double>(gs.sizes[i]) +
                                       1.0 / static_cast<double>(gs.sizes[j])));
      pair.significant = std::abs(pair.mean_diff) > pair.lsd_threshold;
      r.pairwise.push_back(pair);
    }
  }
  return r;
}

}  // namespace stainpipe
