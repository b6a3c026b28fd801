// Copyright 2026 The namegauge Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include "namegauge/error.hpp"

namespace namegauge::stats {

enum class Method {
  kFriedman,
  kMannWhitneyExact,
  kMannWhitneyNormal,
  kShapiroWilk,
  kStudentT,
  kFisherExact,
  kChiSquare,
};

inline std::string_view to_string(Method m) {
  switch (m) {
    case Method::kFriedman: return "friedman";
    case Method::kMannWhitneyExact: return "mann_whitney_u_exact";
    case Method::kMannWhitneyNormal: return "mann_whitney_u_normal";
    case Method::kShapiroWilk: return "shapiro_wilk";
    case Method::kStudentT: return "student_t";
    case Method::kFisherExact: return "fisher_exact";
    case Method::kChiSquare: return "chi_square";
  }
  return "";
}

struct TestResult {
  double statistic = 0.0;
  std::optional<double> df;
  double p_value = 1.0;
  /// p_value after any multiple-comparison correction (equal when none).
  double p_adjusted = 1.0;
  Method method = Method::kFriedman;
  std::vector<std::size_t> n;
};

inline double clamp_p(double p) { return std::clamp(p, 0.0, 1.0); }

/// Upper tail of the chi-square distribution.
inline double chi_square_sf(double x, double df) {
  if (x <= 0.0) return 1.0;
  return clamp_p(boost::math::gamma_q(df / 2.0, x / 2.0));
}

inline double normal_sf(double z) {
  return clamp_p(boost::math::cdf(boost::math::complement(boost::math::normal(), z)));
}

/// Average ranks (1-based) with ties sharing the mean rank. `tie_term`
/// receives sum(t^3 - t) over tie groups.
inline std::vector<double> average_ranks(std::span<const double> values, double* tie_term = nullptr) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(values.size());
  double ties = 0.0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && values[order[j + 1]] == values[order[i]]) ++j;
    const double rank = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = rank;
    const double t = static_cast<double>(j - i + 1);
    ties += t * t * t - t;
    i = j + 1;
  }
  if (tie_term) *tie_term = ties;
  return ranks;
}

/// Friedman rank test over n blocks (rows) x k treatments (columns), with
/// the tie-corrected statistic. Fully tied input gives statistic 0, p 1.
inline TestResult friedman(const std::vector<std::vector<double>>& blocks) {
  const std::size_t n = blocks.size();
  if (n < 2) fail(ErrorKind::kDomain, "friedman needs at least 2 blocks");
  const std::size_t k = blocks.front().size();
  if (k < 2) fail(ErrorKind::kDomain, "friedman needs at least 2 treatments");
  std::vector<double> rank_sums(k, 0.0);
  double ties = 0.0;
  for (std::size_t b = 0; b < n; ++b) {
    if (blocks[b].size() != k) {
      fail(ErrorKind::kInvalidData, "friedman block " + std::to_string(b) + " has a missing cell");
    }
    for (double v : blocks[b]) {
      if (!std::isfinite(v)) fail(ErrorKind::kInvalidData, "friedman cell is not finite");
    }
    double t = 0.0;
    const auto ranks = average_ranks(blocks[b], &t);
    ties += t;
    for (std::size_t j = 0; j < k; ++j) rank_sums[j] += ranks[j];
  }
  const double dn = static_cast<double>(n), dk = static_cast<double>(k);
  double ss = 0.0;
  for (double r : rank_sums) ss += r * r;
  const double raw = 12.0 / (dn * dk * (dk + 1.0)) * ss - 3.0 * dn * (dk + 1.0);
  const double denom = 1.0 - ties / (dn * dk * (dk * dk - 1.0));
  TestResult r;
  r.method = Method::kFriedman;
  r.df = dk - 1.0;
  r.n = {n, k};
  if (denom <= 1e-12) {
    r.statistic = 0.0;
    r.p_value = r.p_adjusted = 1.0;
    return r;
  }
  r.statistic = std::max(0.0, raw / denom);
  r.p_value = r.p_adjusted = chi_square_sf(r.statistic, *r.df);
  return r;
}

/// Two-sided Mann-Whitney U. U is reported for x. Exact enumeration when
/// |x| + |y| <= 12 without ties, otherwise the tie-corrected normal
/// approximation with continuity correction. p_adjusted = min(1, p * factor).
inline TestResult mann_whitney_u(std::span<const double> x, std::span<const double> y,
                                 double bonferroni_factor = 1.0) {
  if (x.empty() || y.empty()) fail(ErrorKind::kDomain, "mann_whitney_u needs non-empty samples");
  if (!(bonferroni_factor >= 1.0)) fail(ErrorKind::kDomain, "Bonferroni factor must be >= 1");
  const std::size_t n1 = x.size(), n2 = y.size(), total = n1 + n2;
  std::vector<double> pooled(x.begin(), x.end());
  pooled.insert(pooled.end(), y.begin(), y.end());
  double ties = 0.0;
  const auto ranks = average_ranks(pooled, &ties);
  const double r1 = std::accumulate(ranks.begin(), ranks.begin() + static_cast<std::ptrdiff_t>(n1), 0.0);
  const double d1 = static_cast<double>(n1), d2 = static_cast<double>(n2);
  const double u = r1 - d1 * (d1 + 1.0) / 2.0;

  TestResult r;
  r.statistic = u;
  r.n = {n1, n2};
  if (total <= 12 && ties == 0.0) {
    r.method = Method::kMannWhitneyExact;
    // Distribution of U over all placements of x's ranks among 1..total.
    std::uint64_t le = 0, ge = 0, count = 0;
    const std::uint32_t limit = 1u << total;
    for (std::uint32_t mask = 0; mask < limit; ++mask) {
      if (static_cast<std::size_t>(std::popcount(mask)) != n1) continue;
      double rank_sum = 0.0;
      for (std::size_t b = 0; b < total; ++b) {
        if (mask & (1u << b)) rank_sum += static_cast<double>(b + 1);
      }
      const double uu = rank_sum - d1 * (d1 + 1.0) / 2.0;
      ++count;
      if (uu <= u + 1e-9) ++le;
      if (uu >= u - 1e-9) ++ge;
    }
    const double p_le = static_cast<double>(le) / static_cast<double>(count);
    const double p_ge = static_cast<double>(ge) / static_cast<double>(count);
    r.p_value = clamp_p(2.0 * std::min(p_le, p_ge));
  } else {
    r.method = Method::kMannWhitneyNormal;
    const double dn = static_cast<double>(total);
    const double mu = d1 * d2 / 2.0;
    const double var = d1 * d2 / 12.0 * ((dn + 1.0) - ties / (dn * (dn - 1.0)));
    if (var <= 0.0) {
      r.p_value = 1.0;
    } else {
      const double z = (std::abs(u - mu) - 0.5) / std::sqrt(var);
      r.p_value = z <= 0.0 ? 1.0 : clamp_p(2.0 * normal_sf(z));
    }
  }
  r.p_adjusted = std::min(1.0, r.p_value * bonferroni_factor);
  return r;
}

namespace detail {

inline double poly(std::span<const double> c, double x) {
  double result = c[0];
  if (c.size() > 1) {
    double p = x * c[c.size() - 1];
    for (std::size_t j = c.size() - 2; j > 0; --j) p = (p + c[j]) * x;
    result += p;
  }
  return result;
}

}  // namespace detail

/// Shapiro-Wilk W and p by Royston's AS R94 approximation (3 <= n <= 5000).
inline TestResult shapiro_wilk(std::span<const double> sample) {
  const std::size_t n = sample.size();
  if (n < 3) fail(ErrorKind::kDomain, "shapiro_wilk needs at least 3 values");
  if (n > 5000) fail(ErrorKind::kDomain, "shapiro_wilk supports at most 5000 values");
  std::vector<double> x(sample.begin(), sample.end());
  std::sort(x.begin(), x.end());
  const double range = x.back() - x.front();
  if (!(range > 1e-19)) fail(ErrorKind::kDomain, "shapiro_wilk: sample has zero variance");

  static constexpr double g[] = {-2.273, 0.459};
  static constexpr double c1[] = {0.0, 0.221157, -0.147981, -2.07119, 4.434685, -2.706056};
  static constexpr double c2[] = {0.0, 0.042981, -0.293762, -1.752461, 5.682633, -3.582633};
  static constexpr double c3[] = {0.544, -0.39978, 0.025054, -6.714e-4};
  static constexpr double c4[] = {1.3822, -0.77857, 0.062767, -0.0020322};
  static constexpr double c5[] = {-1.5861, -0.31082, -0.083751, 0.0038915};
  static constexpr double c6[] = {-0.4803, -0.082676, 0.0030302};

  const double an = static_cast<double>(n);
  const std::size_t half = n / 2;
  // a[1..half], 1-based to follow the published algorithm.
  std::vector<double> a(half + 1, 0.0);
  if (n == 3) {
    a[1] = std::sqrt(0.5);
  } else {
    const boost::math::normal standard;
    std::vector<double> m(half + 1, 0.0);
    double summ2 = 0.0;
    for (std::size_t i = 1; i <= half; ++i) {
      m[i] = boost::math::quantile(standard, (static_cast<double>(i) - 0.375) / (an + 0.25));
      summ2 += m[i] * m[i];
    }
    summ2 *= 2.0;
    const double ssumm2 = std::sqrt(summ2);
    const double rsn = 1.0 / std::sqrt(an);
    const double a1 = detail::poly(c1, rsn) - m[1] / ssumm2;
    std::size_t first;
    double fac;
    if (n > 5) {
      first = 3;
      const double a2 = -m[2] / ssumm2 + detail::poly(c2, rsn);
      fac = std::sqrt((summ2 - 2.0 * m[1] * m[1] - 2.0 * m[2] * m[2]) /
                      (1.0 - 2.0 * a1 * a1 - 2.0 * a2 * a2));
      a[2] = a2;
    } else {
      first = 2;
      fac = std::sqrt((summ2 - 2.0 * m[1] * m[1]) / (1.0 - 2.0 * a1 * a1));
    }
    a[1] = a1;
    for (std::size_t i = first; i <= half; ++i) a[i] = -m[i] / fac;
  }

  // Squared correlation between the scaled order statistics and the
  // antisymmetric coefficient vector.
  auto coef = [&](std::size_t i) {  // 0-based position in the sorted sample
    const std::size_t j = n - 1 - i;
    if (i == j) return 0.0;
    return i < j ? -a[i + 1] : a[j + 1];
  };
  double sa = 0.0, sx = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sa += coef(i);
    sx += x[i] / range;
  }
  sa /= an;
  sx /= an;
  double ssa = 0.0, ssx = 0.0, sax = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double asa = coef(i) - sa;
    const double xsx = x[i] / range - sx;
    ssa += asa * asa;
    ssx += xsx * xsx;
    sax += asa * xsx;
  }
  const double ssassx = std::sqrt(ssa * ssx);
  const double w1 = (ssassx - sax) * (ssassx + sax) / (ssa * ssx);
  const double w = 1.0 - w1;

  TestResult r;
  r.method = Method::kShapiroWilk;
  r.statistic = w;
  r.n = {n};
  if (n == 3) {
    constexpr double six_over_pi = 1.90985931710274;
    constexpr double pi_over_three = 1.04719755119660;
    r.p_value = r.p_adjusted =
        clamp_p(six_over_pi * (std::asin(std::sqrt(w)) - pi_over_three));
    return r;
  }
  double y = std::log(w1);
  const double log_n = std::log(an);
  double mean, sd;
  if (n <= 11) {
    const double gamma = detail::poly(g, an);
    if (y >= gamma) {
      r.p_value = r.p_adjusted = 1e-99;
      return r;
    }
    y = -std::log(gamma - y);
    mean = detail::poly(c3, an);
    sd = std::exp(detail::poly(c4, an));
  } else {
    mean = detail::poly(c5, log_n);
    sd = std::exp(detail::poly(c6, log_n));
  }
  r.p_value = r.p_adjusted = normal_sf((y - mean) / sd);
  return r;
}

inline double mean(std::span<const double> v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

/// Sample variance (n - 1 denominator).
inline double variance(std::span<const double> v) {
  const double m = mean(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return ss / static_cast<double>(v.size() - 1);
}

/// Pooled-variance two-sample Student's t, two-sided, df = n1 + n2 - 2.
inline TestResult t_test_two_sample(std::span<const double> x, std::span<const double> y) {
  if (x.size() < 2 || y.size() < 2) fail(ErrorKind::kDomain, "t-test needs at least 2 values per group");
  const double n1 = static_cast<double>(x.size()), n2 = static_cast<double>(y.size());
  const double df = n1 + n2 - 2.0;
  const double pooled = ((n1 - 1.0) * variance(x) + (n2 - 1.0) * variance(y)) / df;
  if (!(pooled > 0.0)) fail(ErrorKind::kDomain, "t-test: pooled variance is zero");
  TestResult r;
  r.method = Method::kStudentT;
  r.df = df;
  r.n = {x.size(), y.size()};
  r.statistic = (mean(x) - mean(y)) / std::sqrt(pooled * (1.0 / n1 + 1.0 / n2));
  const boost::math::students_t dist(df);
  r.p_value = r.p_adjusted =
      clamp_p(2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(r.statistic))));
  return r;
}

namespace detail {

inline double log_choose(double n, double k) {
  return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
}

}  // namespace detail

/// Two-sided Fisher exact test on [[a, b], [c, d]]: the summed probability
/// of every fixed-margin table no more likely than the observed one.
inline TestResult fisher_exact_2x2(std::uint64_t a, std::uint64_t b, std::uint64_t c,
                                   std::uint64_t d) {
  const std::uint64_t row1 = a + b, row2 = c + d, col1 = a + c, col2 = b + d;
  if (row1 == 0 || row2 == 0 || col1 == 0 || col2 == 0) {
    fail(ErrorKind::kDomain, "fisher_exact_2x2: a row or column margin is zero");
  }
  const double total = static_cast<double>(row1 + row2);
  auto log_pmf = [&](std::uint64_t k) {
    return detail::log_choose(static_cast<double>(row1), static_cast<double>(k)) +
           detail::log_choose(static_cast<double>(row2), static_cast<double>(col1 - k)) -
           detail::log_choose(total, static_cast<double>(col1));
  };
  const std::uint64_t lo = col1 > row2 ? col1 - row2 : 0;
  const std::uint64_t hi = std::min(row1, col1);
  const double observed = std::exp(log_pmf(a));
  double p = 0.0;
  for (std::uint64_t k = lo; k <= hi; ++k) {
    const double pk = std::exp(log_pmf(k));
    if (pk <= observed * (1.0 + 1e-7)) p += pk;
  }
  TestResult r;
  r.method = Method::kFisherExact;
  r.n = {static_cast<std::size_t>(row1), static_cast<std::size_t>(row2)};
  const double ad = static_cast<double>(a) * static_cast<double>(d);
  const double bc = static_cast<double>(b) * static_cast<double>(c);
  // Sample odds ratio as the statistic (infinite when b*c == 0 < a*d).
  r.statistic = bc == 0.0 ? (ad == 0.0 ? 1.0 : std::numeric_limits<double>::infinity()) : ad / bc;
  r.p_value = r.p_adjusted = clamp_p(p);
  return r;
}

/// Pearson chi-square test of independence on an r x c count table.
inline TestResult chi_square_independence(const std::vector<std::vector<double>>& table) {
  const std::size_t rows = table.size();
  if (rows < 2) fail(ErrorKind::kDomain, "chi-square needs at least 2 rows");
  const std::size_t cols = table.front().size();
  if (cols < 2) fail(ErrorKind::kDomain, "chi-square needs at least 2 columns");
  std::vector<double> row_sum(rows, 0.0), col_sum(cols, 0.0);
  double total = 0.0;
  for (std::size_t i = 0; i < rows; ++i) {
    if (table[i].size() != cols) fail(ErrorKind::kInvalidData, "ragged contingency table");
    for (std::size_t j = 0; j < cols; ++j) {
      if (!(table[i][j] >= 0.0)) fail(ErrorKind::kDomain, "negative count in contingency table");
      row_sum[i] += table[i][j];
      col_sum[j] += table[i][j];
      total += table[i][j];
    }
  }
  double stat = 0.0;
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < cols; ++j) {
      const double e = row_sum[i] * col_sum[j] / total;
      if (!(e > 0.0)) {
        fail(ErrorKind::kDomain, "chi-square: expected count is zero in cell (" +
                                     std::to_string(i) + "," + std::to_string(j) + ")");
      }
      stat += (table[i][j] - e) * (table[i][j] - e) / e;
    }
  }
  TestResult r;
  r.method = Method::kChiSquare;
  r.statistic = stat;
  r.df = static_cast<double>((rows - 1) * (cols - 1));
  r.n = {static_cast<std::size_t>(total)};
  r.p_value = r.p_adjusted = chi_square_sf(stat, *r.df);
  return r;
}

}  // namespace namegauge::stats
