#pragma once

#include <array>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace spectrasep {

// Regularized incomplete beta I_x(a, b), continued-fraction evaluation.
double incomplete_beta(double a, double b, double x);

// Student t with `dof` degrees of freedom.
double student_t_cdf(double t, double dof);
double student_t_two_sided_p(double t, double dof);
double student_t_quantile(double p, double dof);

struct WelchResult {
  double t_statistic = 0.0;
  double dof = 0.0;
  double p_two_sided = 1.0;
  double mean_difference = 0.0;  // mean(a) - mean(b)
  double ci95_low = 0.0;
  double ci95_high = 0.0;
};

// Two-sided Welch t-test with Welch-Satterthwaite degrees of freedom.
// Throws ComputationError when a sample has fewer than 2 values or both
// samples have zero variance.
WelchResult welch_t_test(std::span<const double> a, std::span<const double> b);

// Per-test significance level alpha / m.
double bonferroni(double alpha_family, int m);

inline constexpr double kFamilyAlpha = 0.05;

struct BoxplotStats {
  double q1 = 0.0;
  double median = 0.0;
  double q3 = 0.0;
  double whisker_low = 0.0;
  double whisker_high = 0.0;
  double mean = 0.0;
  std::vector<double> outliers;
};

// Linear-interpolation (type 7) quantile of a sorted sample.
double quantile_sorted(std::span<const double> sorted, double q);
double quantile(std::span<const double> values, double q);
double median(std::span<const double> values);
double mean(std::span<const double> values);
double sample_sd(std::span<const double> values);

// Quartiles by linear interpolation; whiskers at the most extreme values
// within 1.5 IQR of the box; values beyond are outliers.
BoxplotStats boxplot_stats(std::span<const double> values);

struct GroupTest {
  std::string index_name;
  WelchResult welch;
  bool significant = false;
  double mean_positive = 0.0;
  double mean_negative = 0.0;
  BoxplotStats positive_box;
  BoxplotStats negative_box;
};

struct GroupTestReport {
  std::string grouping;
  double alpha_per_test = 0.0;
  std::vector<GroupTest> tests;

  nlohmann::json to_json() const;
};

// Welch test per functional index between the positive and negative group
// (`index_values[i]` holds one value per patient for index i, `labels` 0/1),
// flagged significant when p < 0.05 / number of indices.
GroupTestReport group_tests(const std::vector<std::string>& index_names,
                            const std::vector<std::vector<double>>& index_values,
                            std::span<const int> labels, std::string grouping);

}  // namespace spectrasep
