#include "decoylab/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "decoylab/errors.hpp"

namespace decoylab {

namespace special {

namespace {

constexpr int kMaxIterations = 10000;
constexpr double kEpsilon = 1e-16;
constexpr double kTiny = 1e-300;

double gamma_series(double a, double x) {
  double ap = a;
  double term = 1.0 / a;
  double sum = term;
  for (int n = 0; n < kMaxIterations; ++n) {
    ap += 1.0;
    term *= x / ap;
    sum += term;
    if (std::abs(term) < std::abs(sum) * kEpsilon) break;
  }
  return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// Continued fraction for Q(a, x), modified Lentz.
double gamma_continued_fraction(double a, double x) {
  double b = x + 1.0 - a;
  double c = 1.0 / kTiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i <= kMaxIterations; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < kTiny) d = kTiny;
    c = b + an / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::abs(delta - 1.0) < kEpsilon) break;
  }
  return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
}

double beta_continued_fraction(double a, double b, double x) {
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIterations; ++m) {
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
    const double delta = d * c;
    h *= delta;
    if (std::abs(delta - 1.0) < kEpsilon) break;
  }
  return h;
}

void require(bool ok, const char* what) {
  if (!ok) throw DomainError(what);
}

}  // namespace

double gamma_p(double a, double x) {
  require(a > 0.0 && x >= 0.0 && std::isfinite(a), "gamma_p needs a > 0 and x >= 0");
  if (x == 0.0) return 0.0;
  if (std::isinf(x)) return 1.0;
  if (x < a + 1.0) return gamma_series(a, x);
  return 1.0 - gamma_continued_fraction(a, x);
}

double gamma_q(double a, double x) {
  require(a > 0.0 && x >= 0.0 && std::isfinite(a), "gamma_q needs a > 0 and x >= 0");
  if (x == 0.0) return 1.0;
  if (std::isinf(x)) return 0.0;
  if (x < a + 1.0) return 1.0 - gamma_series(a, x);
  return gamma_continued_fraction(a, x);
}

double beta_inc(double a, double b, double x) {
  require(a > 0.0 && b > 0.0, "beta_inc needs a, b > 0");
  require(x >= 0.0 && x <= 1.0, "beta_inc needs 0 <= x <= 1");
  if (x == 0.0) return 0.0;
  if (x == 1.0) return 1.0;
  const double front =
      std::exp(std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) + b * std::log1p(-x));
  if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_continued_fraction(a, b, x) / a;
  return 1.0 - front * beta_continued_fraction(b, a, 1.0 - x) / b;
}

double chi_square_sf(double statistic, double df) {
  require(df > 0.0, "chi-square needs df > 0");
  if (statistic <= 0.0) return 1.0;
  return gamma_q(0.5 * df, 0.5 * statistic);
}

double student_t_two_sided(double t, double df) {
  require(df > 0.0, "t needs df > 0");
  if (std::isinf(t)) return 0.0;
  if (t == 0.0) return 1.0;
  return beta_inc(0.5 * df, 0.5, df / (df + t * t));
}

double f_sf(double f, double df1, double df2) {
  require(df1 > 0.0 && df2 > 0.0, "F needs positive degrees of freedom");
  if (f <= 0.0) return 1.0;
  if (std::isinf(f)) return 0.0;
  return beta_inc(0.5 * df2, 0.5 * df1, df2 / (df2 + df1 * f));
}

}  // namespace special

std::string_view to_string(TestKind kind) {
  switch (kind) {
    case TestKind::ChiSquare: return "chi_square";
    case TestKind::PairedT: return "paired_t";
    case TestKind::RmAnova: return "rm_anova";
  }
  return "?";
}

namespace {

TestOutcome outcome(TestKind kind, double statistic, std::vector<int> df, double p) {
  p = std::clamp(p, 0.0, 1.0);
  return {kind, statistic, std::move(df), p, p < kSignificanceLevel};
}

}  // namespace

TestOutcome chi_square_target(TargetCounts control, TargetCounts treatment) {
  for (double v : {control.target, control.other, treatment.target, treatment.other}) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw UsageError("chi-square counts must be finite and non-negative");
  }
  const double a = control.target, b = control.other, c = treatment.target, d = treatment.other;
  const double row1 = a + b, row2 = c + d, col1 = a + c, col2 = b + d;
  if (row1 == 0.0 || row2 == 0.0 || col1 == 0.0 || col2 == 0.0) {
    throw DegenerateError("2x2 table has a zero marginal");
  }
  const double n = row1 + row2;
  const double cross = a * d - b * c;
  const double statistic = n * cross * cross / (row1 * row2 * col1 * col2);
  return outcome(TestKind::ChiSquare, statistic, {1}, special::chi_square_sf(statistic, 1.0));
}

TestOutcome paired_t_test(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw UsageError("paired t-test needs samples of equal length");
  if (x.size() < 2) throw UsageError("paired t-test needs at least two pairs");
  const std::size_t n = x.size();
  std::vector<double> d(n);
  double mean = 0.0, largest = 0.0, scale = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    d[i] = x[i] - y[i];
    if (!std::isfinite(d[i])) throw UsageError("paired t-test needs finite values");
    mean += d[i];
    largest = std::max(largest, std::abs(d[i]));
    scale = std::max({scale, std::abs(x[i]), std::abs(y[i])});
  }
  // Differences at rounding level are no differences at all.
  const int df = static_cast<int>(n) - 1;
  if (largest <= 1e-13 * scale) return outcome(TestKind::PairedT, 0.0, {df}, 1.0);
  mean /= static_cast<double>(n);
  double ss = 0.0;
  for (double v : d) ss += (v - mean) * (v - mean);
  if (ss <= 1e-24 * largest * largest * static_cast<double>(n)) {
    throw InfiniteStatisticError("differences have zero variance and a nonzero mean");
  }
  const double sd = std::sqrt(ss / df);
  const double t = mean / (sd / std::sqrt(static_cast<double>(n)));
  return outcome(TestKind::PairedT, t, {df}, special::student_t_two_sided(t, df));
}

TestOutcome rm_anova(const std::vector<std::vector<double>>& data) {
  const std::size_t n = data.size();
  if (n < 2) throw UsageError("repeated-measures ANOVA needs at least two subjects");
  const std::size_t k = data.front().size();
  if (k < 2) throw UsageError("repeated-measures ANOVA needs at least two conditions");
  for (const auto& row : data) {
    if (row.size() != k) throw UsageError("repeated-measures ANOVA needs a complete subjects x conditions table");
    for (double v : row) {
      if (!std::isfinite(v)) throw UsageError("repeated-measures ANOVA needs finite values");
    }
  }

  std::vector<double> row_mean(n, 0.0), col_mean(k, 0.0);
  double grand = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < k; ++j) {
      row_mean[i] += data[i][j];
      col_mean[j] += data[i][j];
      grand += data[i][j];
    }
  }
  for (auto& m : row_mean) m /= static_cast<double>(k);
  for (auto& m : col_mean) m /= static_cast<double>(n);
  grand /= static_cast<double>(n * k);

  double ss_total = 0.0, ss_condition = 0.0, ss_error = 0.0;
  for (std::size_t j = 0; j < k; ++j) ss_condition += (col_mean[j] - grand) * (col_mean[j] - grand);
  ss_condition *= static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < k; ++j) {
      const double dev = data[i][j] - grand;
      const double residual = data[i][j] - row_mean[i] - col_mean[j] + grand;
      ss_total += dev * dev;
      ss_error += residual * residual;
    }
  }

  const int df1 = static_cast<int>(k) - 1;
  const int df2 = df1 * (static_cast<int>(n) - 1);
  // Rounding in the inputs leaves residual sums near eps^2 * scale^2; treat those as zero.
  double scale = 0.0;
  for (const auto& row : data)
    for (double v : row) scale = std::max(scale, std::abs(v));
  const double zero = std::max(1e-20 * ss_total, 1e-26 * scale * scale * static_cast<double>(n * k));
  if (ss_error <= zero) {
    if (ss_condition <= zero) return outcome(TestKind::RmAnova, 0.0, {df1, df2}, 1.0);
    throw DegenerateError("repeated-measures ANOVA has zero error variance");
  }
  const double f = (ss_condition / df1) / (ss_error / df2);
  return outcome(TestKind::RmAnova, f, {df1, df2}, special::f_sf(f, df1, df2));
}

}  // namespace decoylab
