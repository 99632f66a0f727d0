#pragma once

// Classical hypothesis tests used to judge attraction-effect biases.

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

namespace decoylab {

namespace special {

// Regularized lower / upper incomplete gamma functions P(a, x), Q(a, x).
double gamma_p(double a, double x);
double gamma_q(double a, double x);

// Regularized incomplete beta function I_x(a, b).
double beta_inc(double a, double b, double x);

double chi_square_sf(double statistic, double df);
// P(|T| >= |t|) for Student's t with `df` degrees of freedom.
double student_t_two_sided(double t, double df);
double f_sf(double f, double df1, double df2);

}  // namespace special

inline constexpr double kSignificanceLevel = 0.01;

enum class TestKind { ChiSquare, PairedT, RmAnova };
std::string_view to_string(TestKind kind);

struct TestOutcome {
  TestKind kind = TestKind::ChiSquare;
  double statistic = 0.0;
  std::vector<int> df;  // one entry, or (numerator, denominator) for F
  double p_value = 1.0;
  bool significant = false;  // p < kSignificanceLevel
};

// (chose target, chose something else) for one condition.
struct TargetCounts {
  double target = 0;
  double other = 0;
  double total() const { return target + other; }
};

// Pearson 2x2 chi-square without continuity correction, df = 1.
TestOutcome chi_square_target(TargetCounts control, TargetCounts treatment);

// Two-sided paired t-test on x - y, df = n - 1.
TestOutcome paired_t_test(std::span<const double> x, std::span<const double> y);

// One-way repeated-measures ANOVA; rows are subjects, columns conditions.
// No sphericity correction.
TestOutcome rm_anova(const std::vector<std::vector<double>>& data);

}  // namespace decoylab
