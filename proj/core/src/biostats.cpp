#include "spectrasep/biostats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "spectrasep/error.hpp"

namespace spectrasep {

namespace {

// Modified Lentz evaluation of the incomplete beta continued fraction.
double beta_continued_fraction(double a, double b, double x) {
  constexpr int kMaxIter = 10000;
  constexpr double kEps = 1e-15;
  constexpr double kTiny = 1e-300;
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const double m2 = 2.0 * m;
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
  throw ComputationError("incomplete beta: continued fraction did not converge");
}

}  // namespace

double incomplete_beta(double a, double b, double x) {
  if (!(a > 0.0) || !(b > 0.0)) throw ComputationError("incomplete beta: a and b must be positive");
  if (!(x >= 0.0 && x <= 1.0)) throw ComputationError("incomplete beta: x must lie in [0, 1]");
  if (x == 0.0) return 0.0;
  if (x == 1.0) return 1.0;
  const double log_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) +
                           b * std::log1p(-x);
  const double front = std::exp(log_front);
  if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_continued_fraction(a, b, x) / a;
  return 1.0 - front * beta_continued_fraction(b, a, 1.0 - x) / b;
}

double student_t_two_sided_p(double t, double dof) {
  if (!(dof > 0.0)) throw ComputationError("student t: degrees of freedom must be positive");
  if (std::isnan(t)) return std::numeric_limits<double>::quiet_NaN();
  if (std::isinf(t)) return 0.0;
  const double t2 = t * t;
  // Near zero dof / (dof + t^2) rounds to 1; use the complementary form instead.
  if (t2 < dof) return 1.0 - incomplete_beta(0.5, dof / 2.0, t2 / (dof + t2));
  return incomplete_beta(dof / 2.0, 0.5, dof / (dof + t2));
}

double student_t_cdf(double t, double dof) {
  const double tail = 0.5 * student_t_two_sided_p(t, dof);
  return t > 0.0 ? 1.0 - tail : tail;
}

double student_t_quantile(double p, double dof) {
  if (!(p > 0.0 && p < 1.0)) throw ComputationError("student t quantile: p must lie in (0, 1)");
  if (p == 0.5) return 0.0;
  if (p < 0.5) return -student_t_quantile(1.0 - p, dof);
  double lo = -1.0;
  double hi = 1.0;
  while (student_t_cdf(lo, dof) > p) lo *= 2.0;
  while (student_t_cdf(hi, dof) < p) hi *= 2.0;
  for (int i = 0; i < 200 && hi - lo > 1e-13 * std::max(1.0, std::abs(hi)); ++i) {
    const double mid = lo + (hi - lo) / 2.0;
    (student_t_cdf(mid, dof) < p ? lo : hi) = mid;
  }
  return lo + (hi - lo) / 2.0;
}

double mean(std::span<const double> values) {
  if (values.empty()) throw ComputationError("mean of an empty sample");
  return std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
}

double sample_sd(std::span<const double> values) {
  if (values.size() < 2) throw ComputationError("standard deviation needs at least 2 values");
  const double m = mean(values);
  double ss = 0.0;
  for (double v : values) ss += (v - m) * (v - m);
  return std::sqrt(ss / static_cast<double>(values.size() - 1));
}

double quantile_sorted(std::span<const double> sorted, double q) {
  if (sorted.empty()) throw ComputationError("quantile of an empty sample");
  const double h = (static_cast<double>(sorted.size()) - 1.0) * q;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

double quantile(std::span<const double> values, double q) {
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  return quantile_sorted(sorted, q);
}

double median(std::span<const double> values) { return quantile(values, 0.5); }

WelchResult welch_t_test(std::span<const double> a, std::span<const double> b) {
  if (a.size() < 2 || b.size() < 2) throw ComputationError("Welch test: each group needs at least 2 values");
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  const double sa = sample_sd(a);
  const double sb = sample_sd(b);
  const double va = sa * sa / na;
  const double vb = sb * sb / nb;
  if (va + vb <= 0.0) throw ComputationError("Welch test: both groups have zero variance");
  WelchResult r;
  r.mean_difference = mean(a) - mean(b);
  const double se = std::sqrt(va + vb);
  r.t_statistic = r.mean_difference / se;
  r.dof = (va + vb) * (va + vb) / (va * va / (na - 1.0) + vb * vb / (nb - 1.0));
  r.p_two_sided = student_t_two_sided_p(r.t_statistic, r.dof);
  const double q = student_t_quantile(0.975, r.dof);
  r.ci95_low = r.mean_difference - q * se;
  r.ci95_high = r.mean_difference + q * se;
  return r;
}

double bonferroni(double alpha_family, int m) {
  if (m < 1) throw ComputationError("Bonferroni: number of tests must be positive");
  return alpha_family / static_cast<double>(m);
}

BoxplotStats boxplot_stats(std::span<const double> values) {
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  BoxplotStats s;
  s.q1 = quantile_sorted(sorted, 0.25);
  s.median = quantile_sorted(sorted, 0.5);
  s.q3 = quantile_sorted(sorted, 0.75);
  s.mean = mean(sorted);
  const double iqr = s.q3 - s.q1;
  const double lo_fence = s.q1 - 1.5 * iqr;
  const double hi_fence = s.q3 + 1.5 * iqr;
  s.whisker_low = s.q1;
  s.whisker_high = s.q3;
  bool low_set = false;
  for (double v : sorted) {
    if (v < lo_fence || v > hi_fence) {
      s.outliers.push_back(v);
      continue;
    }
    if (!low_set) {
      s.whisker_low = v;
      low_set = true;
    }
    s.whisker_high = v;
  }
  return s;
}

namespace {

nlohmann::json box_json(const BoxplotStats& b) {
  return {{"q1", b.q1},
          {"median", b.median},
          {"q3", b.q3},
          {"whisker_low", b.whisker_low},
          {"whisker_high", b.whisker_high},
          {"mean", b.mean},
          {"outliers", b.outliers}};
}

}  // namespace

nlohmann::json GroupTestReport::to_json() const {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& t : tests) {
    rows.push_back({{"index", t.index_name},
                    {"t_statistic", t.welch.t_statistic},
                    {"dof", t.welch.dof},
                    {"p_value", t.welch.p_two_sided},
                    {"mean_difference", t.welch.mean_difference},
                    {"ci95", {t.welch.ci95_low, t.welch.ci95_high}},
                    {"significant", t.significant},
                    {"mean_positive", t.mean_positive},
                    {"mean_negative", t.mean_negative},
                    {"box_positive", box_json(t.positive_box)},
                    {"box_negative", box_json(t.negative_box)}});
  }
  return {{"grouping", grouping}, {"alpha_per_test", alpha_per_test}, {"tests", std::move(rows)}};
}

GroupTestReport group_tests(const std::vector<std::string>& index_names,
                            const std::vector<std::vector<double>>& index_values, std::span<const int> labels,
                            std::string grouping) {
  if (index_names.size() != index_values.size()) {
    throw ComputationError("group tests: index names and value columns differ in count");
  }
  GroupTestReport report;
  report.grouping = std::move(grouping);
  report.alpha_per_test = bonferroni(kFamilyAlpha, static_cast<int>(index_names.size()));
  for (std::size_t i = 0; i < index_names.size(); ++i) {
    const auto& values = index_values[i];
    if (values.size() != labels.size()) throw ComputationError("group tests: value count does not match labels");
    std::vector<double> pos;
    std::vector<double> neg;
    for (std::size_t k = 0; k < values.size(); ++k) {
      if (!std::isfinite(values[k])) continue;
      (labels[k] == 1 ? pos : neg).push_back(values[k]);
    }
    GroupTest t;
    t.index_name = index_names[i];
    t.welch = welch_t_test(pos, neg);
    t.significant = t.welch.p_two_sided < report.alpha_per_test;
    t.mean_positive = mean(pos);
    t.mean_negative = mean(neg);
    t.positive_box = boxplot_stats(pos);
    t.negative_box = boxplot_stats(neg);
    report.tests.push_back(std::move(t));
  }
  return report;
}

}  // namespace spectrasep
