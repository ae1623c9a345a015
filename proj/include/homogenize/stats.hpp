#pragma once

// Sample moments and Kolmogorov-Smirnov statistics.

#include <functional>
#include <vector>

namespace homog::stats {

double mean(const std::vector<double>& x);
/// Unbiased sample variance.
double variance(const std::vector<double>& x);
double standard_error(const std::vector<double>& x);

double normal_cdf(double x);

/// sup_x |F_n(x) - F(x)|.
double ks_one_sample(std::vector<double> x, const std::function<double(double)>& cdf);
/// sup_x |F_n(x) - G_m(x)|.
double ks_two_sample(std::vector<double> a, std::vector<double> b);

/// Asymptotic critical values: c(alpha)/sqrt(n) and c(alpha) sqrt((n+m)/(nm)),
/// with c(alpha) = sqrt(-ln(alpha/2)/2).
double ks_critical_one_sample(double alpha, std::size_t n);
double ks_critical_two_sample(double alpha, std::size_t n, std::size_t m);

}  // namespace homog::stats
