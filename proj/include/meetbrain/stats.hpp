#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

namespace meetbrain::stats {

// Special functions and distribution tails.
double regularized_incomplete_beta(double a, double b, double x);
double normal_cdf(double z);
double f_sf(double f, double df1, double df2);           // P(F > f)
double t_two_sided_p(double t, double df);               // P(|T| > |t|)
double studentized_range_cdf(double q, int k, double df);
double studentized_range_sf(double q, int k, double df);  // P(Q > q)

struct AnovaResult {
  double f = 0.0;
  double p = 1.0;
  double df_between = 0.0;
  double df_within = 0.0;
  double ms_between = 0.0;
  double ms_within = 0.0;
};

// Requires at least two groups with at least two observations each.
AnovaResult one_way_anova(const std::vector<std::vector<double>>& groups);

struct TukeyPair {
  std::size_t i = 0, j = 0;
  double diff = 0.0;  // mean(i) - mean(j)
  double q = 0.0;
  double p = 1.0;
  bool significant = false;
};

// Tukey-Kramer HSD over all pairs i < j, pooled within-group variance.
std::vector<TukeyPair> tukey_hsd(const std::vector<std::vector<double>>& groups, double alpha = 0.05);

struct PearsonResult {
  double r = 0.0;
  double p = 1.0;
  std::size_t n = 0;
};
// Throws Error(Statistics) for n < 3, unequal lengths, or zero variance.
PearsonResult pearson(std::span<const double> x, std::span<const double> y);

// Quartiles (0, 25, 50, 75, 100 %) with linear interpolation between ranks.
std::array<double, 5> quartiles(std::vector<double> values);

double sample_mean(std::span<const double> x);
double population_sd(std::span<const double> x);

}  // namespace meetbrain::stats
