#include "homogenize/stats.hpp"

#include "homogenize/error.hpp"

#include <algorithm>
#include <cmath>

namespace homog::stats {

double mean(const std::vector<double>& x) {
    if (x.empty()) throw Error(ErrorKind::InvalidArgument, "mean of an empty sample");
    double s = 0.0;
    for (double v : x) s += v;
    return s / static_cast<double>(x.size());
}

double variance(const std::vector<double>& x) {
    if (x.size() < 2) return 0.0;
    const double m = mean(x);
    double s = 0.0;
    for (double v : x) s += (v - m) * (v - m);
    return s / static_cast<double>(x.size() - 1);
}

double standard_error(const std::vector<double>& x) {
    if (x.empty()) return 0.0;
    return std::sqrt(variance(x) / static_cast<double>(x.size()));
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double ks_one_sample(std::vector<double> x, const std::function<double(double)>& cdf) {
    if (x.empty()) throw Error(ErrorKind::InvalidArgument, "KS statistic of an empty sample");
    std::sort(x.begin(), x.end());
    const double n = static_cast<double>(x.size());
    double d = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double f = cdf(x[i]);
        d = std::max({d, (static_cast<double>(i) + 1.0) / n - f, f - static_cast<double>(i) / n});
    }
    return d;
}

double ks_two_sample(std::vector<double> a, std::vector<double> b) {
    if (a.empty() || b.empty()) throw Error(ErrorKind::InvalidArgument, "KS statistic of an empty sample");
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    const double n = static_cast<double>(a.size());
    const double m = static_cast<double>(b.size());
    std::size_t i = 0, j = 0;
    double d = 0.0;
    while (i < a.size() && j < b.size()) {
        const double v = std::min(a[i], b[j]);
        while (i < a.size() && a[i] == v) ++i;
        while (j < b.size() && b[j] == v) ++j;
        d = std::max(d, std::abs(static_cast<double>(i) / n - static_cast<double>(j) / m));
    }
    return d;
}

namespace {
double c_alpha(double alpha) {
    if (!(alpha > 0 && alpha < 1)) throw Error(ErrorKind::InvalidArgument, "alpha must be in (0, 1)");
    return std::sqrt(-0.5 * std::log(alpha / 2.0));
}
}  // namespace

double ks_critical_one_sample(double alpha, std::size_t n) { return c_alpha(alpha) / std::sqrt(static_cast<double>(n)); }

double ks_critical_two_sample(double alpha, std::size_t n, std::size_t m) {
    const double nn = static_cast<double>(n), mm = static_cast<double>(m);
    return c_alpha(alpha) * std::sqrt((nn + mm) / (nn * mm));
}

}  // namespace homog::stats
