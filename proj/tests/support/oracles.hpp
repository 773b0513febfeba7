#pragma once

// Reference implementations used to check the library. Each one is written
// from the defining formula, not from the library code.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <span>
#include <vector>

namespace oracle {

// P(pos > neg) + P(pos == neg) / 2 over all positive/negative pairs.
inline double pair_count_auroc(std::span<const double> values, std::span<const int> labels) {
  long double wins = 0.0L;
  std::uint64_t pairs = 0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (labels[i] != 1) continue;
    for (std::size_t j = 0; j < values.size(); ++j) {
      if (labels[j] != 0) continue;
      ++pairs;
      if (values[i] > values[j]) wins += 1.0L;
      else if (values[i] == values[j]) wins += 0.5L;
    }
  }
  return static_cast<double>(wins / static_cast<long double>(pairs));
}

inline std::uint64_t isqrt(std::uint64_t n) {
  auto r = static_cast<std::uint64_t>(std::sqrt(static_cast<long double>(n)));
  while (r * r > n) --r;
  while ((r + 1) * (r + 1) <= n) ++r;
  return r;
}

// Pixels of a 2r x 2r grid whose centers lie in the closed disk of radius r
// centered on the grid. With odd integers a = 2y + 1 - 2r and b = 2x + 1 - 2r
// the condition is a^2 + b^2 <= 4 r^2; each row contributes the odd b in
// [-m, m], m = isqrt(4 r^2 - a^2).
inline std::uint64_t disk_area(std::int64_t r) {
  std::uint64_t total = 0;
  for (std::int64_t y = 0; y < 2 * r; ++y) {
    const std::int64_t a = 2 * y + 1 - 2 * r;
    const std::int64_t rest = 4 * r * r - a * a;
    if (rest < 1) continue;
    const std::uint64_t m = isqrt(static_cast<std::uint64_t>(rest));
    total += 2 * ((m + 1) / 2);
  }
  return total;
}

// Adaptive Simpson integration in long double.
inline long double simpson(const std::function<long double(long double)>& f, long double a, long double b,
                           long double fa, long double fm, long double fb, long double whole, long double eps,
                           int depth) {
  const long double m = (a + b) / 2, lm = (a + m) / 2, rm = (m + b) / 2;
  const long double flm = f(lm), frm = f(rm);
  const long double left = (m - a) / 6 * (fa + 4 * flm + fm);
  const long double right = (b - m) / 6 * (fm + 4 * frm + fb);
  if (depth <= 0 || std::fabs(left + right - whole) <= 15 * eps) {
    return left + right + (left + right - whole) / 15;
  }
  return simpson(f, a, m, fa, flm, fm, left, eps / 2, depth - 1) +
         simpson(f, m, b, fm, frm, fb, right, eps / 2, depth - 1);
}

inline long double integrate(const std::function<long double(long double)>& f, long double a, long double b,
                             long double eps = 1e-16L) {
  // Split into panels first so narrow features are not missed.
  constexpr int kPanels = 64;
  long double total = 0.0L;
  for (int k = 0; k < kPanels; ++k) {
    const long double lo = a + (b - a) * k / kPanels;
    const long double hi = a + (b - a) * (k + 1) / kPanels;
    const long double fa = f(lo), fb = f(hi), fm = f((lo + hi) / 2);
    total += simpson(f, lo, hi, fa, fm, fb, (hi - lo) / 6 * (fa + 4 * fm + fb), eps / kPanels, 40);
  }
  return total;
}

inline long double student_t_density(long double x, long double nu) {
  const long double log_c = std::lgamma((nu + 1) / 2) - std::lgamma(nu / 2) - 0.5L * std::log(nu * 3.14159265358979323846L);
  return std::exp(log_c - (nu + 1) / 2 * std::log1p(x * x / nu));
}

// Two-sided p = 2 * integral of the t density over [|t|, inf), computed with
// the substitution x = |t| / s on s in (0, 1] (or directly when t = 0).
inline double student_t_two_sided_p(double t, double dof) {
  const long double nu = dof;
  const long double at = std::fabs(static_cast<long double>(t));
  if (at == 0.0L) return 1.0;
  auto g = [&](long double s) -> long double {
    if (s <= 0.0L) {
      // Limit of f(at / s) * at / s^2 as s -> 0.
      if (dof == 1.0) return 1.0L / (3.14159265358979323846L * at);
      return 0.0L;
    }
    return student_t_density(at / s, nu) * at / (s * s);
  };
  return static_cast<double>(2.0L * integrate(g, 0.0L, 1.0L));
}

struct Moments {
  double mean = 0.0;
  double var = 0.0;  // n - 1 denominator
};

inline Moments moments(std::span<const double> x) {
  long double s = 0.0L;
  for (double v : x) s += v;
  const long double m = s / x.size();
  long double ss = 0.0L;
  for (double v : x) ss += (v - m) * (v - m);
  return {static_cast<double>(m), static_cast<double>(ss / (x.size() - 1))};
}

struct Welch {
  double t = 0.0;
  double dof = 0.0;
};

inline Welch welch(std::span<const double> a, std::span<const double> b) {
  const auto ma = moments(a), mb = moments(b);
  const double qa = ma.var / a.size(), qb = mb.var / b.size();
  const double t = (ma.mean - mb.mean) / std::sqrt(qa + qb);
  const double dof = (qa + qb) * (qa + qb) / (qa * qa / (a.size() - 1.0) + qb * qb / (b.size() - 1.0));
  return {t, dof};
}

// Type-7 sample quantile.
inline double quantile7(std::vector<double> x, double q) {
  std::sort(x.begin(), x.end());
  const double h = (x.size() - 1) * q;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, x.size() - 1);
  return x[lo] + (h - lo) * (x[hi] - x[lo]);
}

}  // namespace oracle
