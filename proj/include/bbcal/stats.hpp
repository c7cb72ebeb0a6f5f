#pragma once

#include <algorithm>
#include <cstddef>
#include <vector>

namespace bbcal {

// Standard normal distribution.
double normal_cdf(double x);
double normal_quantile(double p);  // AS241, |error| ~ 1e-15

// Regularized incomplete gamma P(a, x) and its complement Q(a, x).
double gamma_p(double a, double x);
double gamma_q(double a, double x);

// Chi-squared CDF and quantile. chi2_quantile returns z with
// P(chi2_dof <= z) = prob, |CDF(z) - prob| <= 1e-12.
double chi2_cdf(double x, double dof);
double chi2_quantile(int dof, double prob);

// Regularized incomplete beta I_x(a, b) and its inverse in x.
double beta_inc(double a, double b, double x);
double beta_inc_inv(double a, double b, double p);

// One-sample Kolmogorov-Smirnov test against a CDF evaluated on sorted data.
// Returns {statistic, p_value} using the asymptotic Kolmogorov distribution.
struct KsResult {
  double statistic;
  double p_value;
};
KsResult ks_test_sorted(const std::vector<double>& sorted, double (*cdf)(double, double), double cdf_param);

template <typename F>
KsResult ks_test(std::vector<double> data, F&& cdf);

double ks_p_value(double statistic, std::size_t n);

// --- inline template ---
template <typename F>
KsResult ks_test(std::vector<double> data, F&& cdf) {
  std::sort(data.begin(), data.end());
  const std::size_t n = data.size();
  double d = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double f = cdf(data[i]);
    const double hi = static_cast<double>(i + 1) / n - f;
    const double lo = f - static_cast<double>(i) / n;
    if (hi > d) d = hi;
    if (lo > d) d = lo;
  }
  return {d, ks_p_value(d, n)};
}

}  // namespace bbcal
