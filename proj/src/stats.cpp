#include "meetbrain/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "meetbrain/error.hpp"

namespace meetbrain::stats {
namespace {

// Continued fraction for I_x(a, b), modified Lentz.
double beta_cf(double a, double b, double x) {
  constexpr double kTiny = 1e-300;
  constexpr double kEps = 1e-16;
  const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= 10000; ++m) {
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
    if (std::abs(del - 1.0) < kEps) break;
  }
  return h;
}

// 64-point Gauss-Legendre nodes/weights on [-1, 1], by Newton iteration.
struct GaussLegendre {
  static constexpr int kN = 64;
  std::array<double, kN> x{}, w{};
  GaussLegendre() {
    for (int i = 0; i < kN / 2; ++i) {
      double z = std::cos(std::numbers::pi * (i + 0.75) / (kN + 0.5));
      double dp = 0.0;
      for (int it = 0; it < 100; ++it) {
        double p0 = 1.0, p1 = 0.0;
        for (int j = 0; j < kN; ++j) {
          const double p2 = p1;
          p1 = p0;
          p0 = ((2.0 * j + 1.0) * z * p1 - j * p2) / (j + 1.0);
        }
        dp = kN * (z * p0 - p1) / (z * z - 1.0);
        const double dz = p0 / dp;
        z -= dz;
        if (std::abs(dz) < 1e-16) break;
      }
      x[i] = -z;
      x[kN - 1 - i] = z;
      w[i] = w[kN - 1 - i] = 2.0 / ((1.0 - z * z) * dp * dp);
    }
  }
  template <typename Fn>
  double integrate(Fn&& f, double lo, double hi, int panels) const {
    const double width = (hi - lo) / panels;
    double total = 0.0;
    for (int p = 0; p < panels; ++p) {
      const double a = lo + p * width, half = width / 2.0, mid = a + half;
      double s = 0.0;
      for (int i = 0; i < kN; ++i) s += w[i] * f(mid + half * x[i]);
      total += s * half;
    }
    return total;
  }
};

const GaussLegendre& gauss_legendre() {
  static const GaussLegendre gl;
  return gl;
}

double normal_pdf(double z) { return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi); }

// P(range of k iid standard normals <= w).
double normal_range_cdf(double w, int k) {
  if (w <= 0.0) return 0.0;
  const auto& gl = gauss_legendre();
  auto integrand = [&](double z) {
    const double inner = normal_cdf(z) - normal_cdf(z - w);
    return inner <= 0.0 ? 0.0 : normal_pdf(z) * std::pow(inner, k - 1);
  };
  const double v = k * gl.integrate(integrand, -8.5, 8.5, 16);
  return std::clamp(v, 0.0, 1.0);
}

}  // namespace

double regularized_incomplete_beta(double a, double b, double x) {
  if (a <= 0.0 || b <= 0.0) throw Error(ErrorKind::Statistics, "incomplete beta needs a, b > 0");
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double ln_front =
      std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) + b * std::log1p(-x);
  const double front = std::exp(ln_front);
  if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_cf(a, b, x) / a;
  return 1.0 - front * beta_cf(b, a, 1.0 - x) / b;
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

double f_sf(double f, double df1, double df2) {
  if (std::isinf(f)) return 0.0;
  if (f <= 0.0) return 1.0;
  return regularized_incomplete_beta(df2 / 2.0, df1 / 2.0, df2 / (df2 + df1 * f));
}

double t_two_sided_p(double t, double df) {
  if (std::isinf(t)) return 0.0;
  return regularized_incomplete_beta(df / 2.0, 0.5, df / (df + t * t));
}

double studentized_range_cdf(double q, int k, double df) {
  if (k < 2) throw Error(ErrorKind::Statistics, "studentized range needs k >= 2");
  if (!(df >= 1.0)) throw Error(ErrorKind::Statistics, "studentized range needs df >= 1");
  if (q <= 0.0) return 0.0;
  if (std::isinf(q)) return 1.0;
  if (df > 1e5) return normal_range_cdf(q, k);

  // Mix the normal-range cdf over s = sqrt(chi2_df / df).
  const double half = df / 2.0;
  const double log_norm = half * std::log(df) - std::lgamma(half) - (half - 1.0) * std::log(2.0);
  auto density = [&](double s) {
    if (s <= 0.0) return 0.0;
    return std::exp(log_norm + (df - 1.0) * std::log(s) - half * s * s);
  };
  const double mode = df > 1.0 ? std::sqrt((df - 1.0) / df) : 0.0;
  const double spread = 1.0 / std::sqrt(2.0 * df);
  const double lo = std::max(0.0, mode - 14.0 * spread);
  const double hi = mode + 14.0 * spread;
  const double v = gauss_legendre().integrate(
      [&](double s) { return density(s) * normal_range_cdf(q * s, k); }, lo, hi, 8);
  return std::clamp(v, 0.0, 1.0);
}

double studentized_range_sf(double q, int k, double df) { return 1.0 - studentized_range_cdf(q, k, df); }

double sample_mean(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v;
  return x.empty() ? 0.0 : s / static_cast<double>(x.size());
}

double population_sd(std::span<const double> x) {
  if (x.empty()) return 0.0;
  const double m = sample_mean(x);
  double s = 0.0;
  for (double v : x) s += (v - m) * (v - m);
  return std::sqrt(s / static_cast<double>(x.size()));
}

AnovaResult one_way_anova(const std::vector<std::vector<double>>& groups) {
  if (groups.size() < 2) throw Error(ErrorKind::Statistics, "ANOVA needs at least two groups");
  std::size_t total_n = 0;
  double grand = 0.0;
  for (std::size_t g = 0; g < groups.size(); ++g) {
    if (groups[g].size() < 2)
      throw Error(ErrorKind::Statistics, "ANOVA group " + std::to_string(g) + " has fewer than two values");
    total_n += groups[g].size();
    for (double v : groups[g]) grand += v;
  }
  grand /= static_cast<double>(total_n);

  double ss_between = 0.0, ss_within = 0.0;
  for (const auto& g : groups) {
    const double m = sample_mean(g);
    ss_between += static_cast<double>(g.size()) * (m - grand) * (m - grand);
    for (double v : g) ss_within += (v - m) * (v - m);
  }
  AnovaResult r;
  r.df_between = static_cast<double>(groups.size() - 1);
  r.df_within = static_cast<double>(total_n - groups.size());
  r.ms_between = ss_between / r.df_between;
  r.ms_within = ss_within / r.df_within;
  if (r.ms_within == 0.0) {
    // All groups constant: identical means give no evidence, distinct means
    // are infinitely separated.
    r.f = r.ms_between == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
    r.p = r.ms_between == 0.0 ? 1.0 : 0.0;
    return r;
  }
  r.f = r.ms_between / r.ms_within;
  r.p = f_sf(r.f, r.df_between, r.df_within);
  return r;
}

std::vector<TukeyPair> tukey_hsd(const std::vector<std::vector<double>>& groups, double alpha) {
  const auto anova = one_way_anova(groups);
  const int k = static_cast<int>(groups.size());
  std::vector<double> means;
  for (const auto& g : groups) means.push_back(sample_mean(g));

  std::vector<TukeyPair> out;
  for (std::size_t i = 0; i < groups.size(); ++i) {
    for (std::size_t j = i + 1; j < groups.size(); ++j) {
      TukeyPair tp;
      tp.i = i;
      tp.j = j;
      tp.diff = means[i] - means[j];
      const double se = std::sqrt(anova.ms_within / 2.0 *
                                  (1.0 / static_cast<double>(groups[i].size()) +
                                   1.0 / static_cast<double>(groups[j].size())));
      if (se == 0.0) {
        tp.q = tp.diff == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
        tp.p = tp.diff == 0.0 ? 1.0 : 0.0;
      } else {
        tp.q = std::abs(tp.diff) / se;
        tp.p = std::clamp(studentized_range_sf(tp.q, k, anova.df_within), 0.0, 1.0);
      }
      tp.significant = tp.p < alpha;
      out.push_back(tp);
    }
  }
  return out;
}

PearsonResult pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw Error(ErrorKind::Statistics, "pearson: length mismatch");
  if (x.size() < 3) throw Error(ErrorKind::Statistics, "pearson: need at least 3 observations");
  const double mx = sample_mean(x), my = sample_mean(y);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx, dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) throw Error(ErrorKind::Statistics, "pearson: undefined correlation (zero variance)");
  PearsonResult res;
  res.n = x.size();
  res.r = std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
  const double df = static_cast<double>(x.size()) - 2.0;
  if (std::abs(res.r) == 1.0) {
    res.p = 0.0;
  } else {
    const double t = res.r * std::sqrt(df / (1.0 - res.r * res.r));
    res.p = t_two_sided_p(t, df);
  }
  return res;
}

std::array<double, 5> quartiles(std::vector<double> values) {
  if (values.empty()) throw Error(ErrorKind::Statistics, "quartiles of an empty sample");
  std::sort(values.begin(), values.end());
  auto at = [&](double prob) {
    const double pos = prob * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, values.size() - 1);
    return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
  };
  return {at(0.0), at(0.25), at(0.5), at(0.75), at(1.0)};
}

}  // namespace meetbrain::stats
