#pragma once

// Generated by tests/oracles/stats_reference.py (scipy / statsmodels).

#include <vector>

namespace ref {

struct ChiCase {
  double t_c, o_c, t_t, o_t, statistic, p;
};
inline const std::vector<ChiCase> kChiSquare = {
    {300, 300, 300, 300, 0.0, 1.0},
    {300, 300, 420, 180, 50.0, 1.537459794428033e-12},
    {312, 288, 371, 229, 11.829707938863416, 0.0005829313700794161},
    {250, 350, 330, 270, 21.35706340378198, 3.8121364199705875e-06},
    {10, 5, 3, 12, 6.651583710407239, 0.00990677301136375},
    {1, 99, 7, 93, 4.6875, 0.030382821976577483},
    {598, 2, 580, 20, 15.002315172094459, 0.00010737935985643107},
    {45, 55, 55, 45, 2.0, 0.15729920705028105},
    {0, 600, 12, 588, 12.121212121212121, 0.0004985148935752056},
};

struct PairedCase {
  std::vector<double> x, y;
  double t;
  int df;
  double p;
};
inline const std::vector<PairedCase> kPairedT = {
    {{0.1, 0.3, -0.2, 0.4, 0.0, 0.2}, {0.0, 0.0, 0.0, 0.0, 0.0, 0.0}, 1.5118578920369088, 5, 0.19097230337749005},
    {{0.21, 0.15, 0.33, 0.08, 0.27, 0.19}, {0.05, 0.02, 0.11, 0.04, 0.09, 0.01}, 5.98218328488292, 5, 0.001870864294688243},
    {{0.12, -0.05, 0.3, 0.22, 0.01, 0.09}, {0.18, 0.02, 0.25, 0.31, 0.03, 0.15}, -2.0264350214574423, 5, 0.09855812071987201},
    {{1.5, 2.0, 2.5}, {1.0, 2.2, 1.9}, 1.1920791213585389, 2, 0.35549661336451055},
    {{0.4, 0.38, 0.52, 0.61, 0.47, 0.55, 0.49, 0.5}, {0.41, 0.36, 0.4, 0.58, 0.33, 0.51, 0.47, 0.39}, 2.9716920669409204, 7, 0.02075787820471651},
    {{0.05, 0.07}, {0.01, 0.02}, 8.999999999999998, 1, 0.07044657495455456},
    {{-0.3, -0.1, 0.2, 0.0, -0.25, -0.15}, {0.1, 0.05, 0.3, 0.12, 0.0, 0.02}, -4.352817056028652, 5, 0.00733970505468744},
};

struct AnovaCase {
  std::vector<std::vector<double>> rows;
  double f;
  int df1, df2;
  double p;
};
inline const std::vector<AnovaCase> kRmAnova = {
    {{{0.12, 0.15, 0.1, 0.14}, {0.2, 0.18, 0.22, 0.19}, {0.05, 0.09, 0.07, 0.02}, {0.31, 0.25, 0.28, 0.3}, {0.11, 0.13, 0.12, 0.18}, {0.22, 0.19, 0.25, 0.21}}, 0.12931034482758622, 3, 15, 0.941191912345819},
    {{{0.02, 0.3, 0.11, 0.05}, {0.4, 0.12, 0.08, 0.33}, {-0.1, 0.05, 0.2, 0.0}, {0.15, 0.45, -0.05, 0.22}, {0.09, 0.01, 0.12, 0.3}, {0.27, 0.18, 0.35, 0.02}}, 0.11989347536617834, 3, 15, 0.946983565244992},
    {{{1.0, 2.0, 3.0}, {2.0, 2.5, 4.0}, {1.5, 3.5, 3.0}, {0.5, 1.0, 2.5}}, 14.485714285714286, 2, 6, 0.005050258761713064},
    {{{5.1, 4.9}, {6.2, 6.0}, {4.4, 4.9}, {5.5, 5.0}, {6.1, 6.6}}, 0.009661835748792818, 1, 4, 0.9264270382011747},
    {{{0.3, 0.2, 0.4, 0.35, 0.1}, {0.25, 0.3, 0.5, 0.3, 0.2}, {0.1, 0.15, 0.2, 0.3, 0.05}}, 6.9090909090909065, 4, 8, 0.010418049051794987},
    {{{0.5, 0.52, 0.49, 0.51}, {0.3, 0.33, 0.29, 0.35}, {0.7, 0.69, 0.74, 0.71}, {0.45, 0.47, 0.44, 0.49}, {0.6, 0.58, 0.61, 0.66}, {0.55, 0.56, 0.52, 0.57}}, 3.3808891838088835, 3, 15, 0.04626010810220411},
};

// kind 0: chi-square, 1: two-sided t, 2: F
struct SfCase {
  int kind;
  double x;
  int df1, df2;
  double p;
};
inline const std::vector<SfCase> kSurvival = {
    {0, 0.5, 1, 0, 0.47950012218695337},
    {0, 3.841458820694124, 1, 0, 0.04999999999999989},
    {0, 6.634896601021214, 1, 0, 0.010000000000000005},
    {0, 10.0, 1, 0, 0.001565402258002549},
    {0, 2.0, 2, 0, 0.36787944117144245},
    {0, 7.5, 3, 0, 0.0575584519726364},
    {0, 25.0, 10, 0, 0.005345505487134069},
    {0, 0.01, 4, 0, 0.9999875415886458},
    {0, 40.0, 1, 0, 2.5396285894708634e-10},
    {1, 0.5, 5, 0, 0.638298871640929},
    {1, 2.570581835636314, 5, 0, 0.05000000000000006},
    {1, 4.89, 5, 0, 0.0045135325414798625},
    {1, 4.69, 5, 0, 0.0053850956346831475},
    {1, 1.42, 5, 0, 0.21484183544342544},
    {1, 0.17, 5, 0, 0.8716745896153648},
    {1, 12.0, 2, 0, 0.00687293367715846},
    {1, 2.0, 30, 0, 0.0546250449629831},
    {1, 0.0, 5, 0, 1.0},
    {2, 0.39, 3, 15, 0.7619101252475822},
    {2, 1.4, 3, 15, 0.28151251195879096},
    {2, 5.417, 3, 15, 0.009999759481852614},
    {2, 3.2874, 3, 15, 0.049999252650889454},
    {2, 0.05, 2, 8, 0.9515242752171532},
    {2, 9.0, 1, 4, 0.039941968071718834},
    {2, 2.5, 4, 20, 0.07514662963527462},
    {2, 100.0, 3, 15, 3.8442735250819817e-10},
};

// n=600, p=0.5: P(|X/n - 0.5| > 0.06)
inline constexpr double kBinomialTail = 0.0028497939352516983;

}  // namespace ref
