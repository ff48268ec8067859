#pragma once

// Small statistics helpers shared by the unit and acceptance tests.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

namespace testutil {

/// Two-sample Kolmogorov-Smirnov statistic.
inline double ks_distance(std::vector<double> a, std::vector<double> b)
{
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
    std::size_t i = 0, j = 0;
    double d = 0.0;
    while (i < a.size() && j < b.size()) {
        const double x = std::min(a[i], b[j]);
        while (i < a.size() && a[i] <= x)
            ++i;
        while (j < b.size() && b[j] <= x)
            ++j;
        d = std::max(d, std::fabs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
    }
    return d;
}

/// Critical value of the two-sample KS statistic at level ~0.001.
inline double ks_critical(std::size_t n, std::size_t m)
{
    const double nd = static_cast<double>(n), md = static_cast<double>(m);
    return 1.95 * std::sqrt((nd + md) / (nd * md));
}

struct Moments
{
    double mean = 0, var = 0, mean_se = 0, var_se = 0;
};

/// Sample mean and variance with their standard errors (iid draws).
inline Moments moments(const std::vector<double>& x)
{
    const double n = static_cast<double>(x.size());
    double m = 0.0;
    for (double v : x)
        m += v;
    m /= n;
    double m2 = 0.0, m4 = 0.0;
    for (double v : x) {
        const double d2 = (v - m) * (v - m);
        m2 += d2;
        m4 += d2 * d2;
    }
    m2 /= n;
    m4 /= n;
    Moments r;
    r.mean = m;
    r.var = m2 * n / (n - 1.0);
    r.mean_se = std::sqrt(m2 / n);
    r.var_se = std::sqrt(std::max(m4 - m2 * m2, 0.0) / n);
    return r;
}

/// Mean and batch-means standard error of a correlated series.
inline std::pair<double, double> batch_mean(const std::vector<double>& x, std::size_t batches = 50)
{
    const std::size_t len = x.size() / batches;
    std::vector<double> bm(batches, 0.0);
    double total = 0.0;
    for (std::size_t b = 0; b < batches; ++b) {
        for (std::size_t i = 0; i < len; ++i)
            bm[b] += x[b * len + i];
        bm[b] /= static_cast<double>(len);
        total += bm[b];
    }
    const double mean = total / static_cast<double>(batches);
    double ss = 0.0;
    for (double v : bm)
        ss += (v - mean) * (v - mean);
    const double se = std::sqrt(ss / static_cast<double>(batches - 1) / static_cast<double>(batches));
    return {mean, se};
}

/// Standard normal CDF and quantile.
inline double norm_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

inline double norm_quantile(double p)
{
    double lo = -40.0, hi = 40.0;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        (norm_cdf(mid) < p ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

} // namespace testutil
