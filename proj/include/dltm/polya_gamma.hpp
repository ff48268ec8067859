#pragma once

// Polya-Gamma PG(b, c) variates for integer b.
//
// Exact draws sum b independent PG(1, c) variates, each produced by Devroye's
// alternating-series accept/reject scheme (as in BayesLogit).  The Gaussian
// route replaces the sum by one normal draw with the matching mean and
// variance, which is accurate once b is around 20 or more.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <ostream>
#include <string>
#include <vector>

#include "dltm/rng.hpp"

namespace dltm {

inline constexpr std::int64_t kDefaultPgThreshold = 20;
inline constexpr double kPgPositivityFloor = 1e-12;

/// E[omega] = b/(2c) tanh(c/2); b/4 at c = 0.
inline double pg_mean(double b, double c) noexcept
{
    c = std::fabs(c);
    if (c < 1e-6) {
        const double c2 = c * c;
        return b * (0.25 - c2 / 48.0 + c2 * c2 / 480.0);
    }
    return b / (2.0 * c) * std::tanh(0.5 * c);
}

/// Var[omega] = b/(4c^3) sech^2(c/2) (sinh c - c); b/24 at c = 0.
///
/// Evaluated as b/(4c^3) (2 tanh(c/2) - c sech^2(c/2)), which is the same
/// quantity without overflow, and by the series of (sinh c - c)/c^3 below
/// c = 0.5 where the difference cancels.
inline double pg_variance(double b, double c) noexcept
{
    c = std::fabs(c);
    const double sech = 1.0 / std::cosh(0.5 * c);
    if (c < 0.5) {
        // (sinh c - c)/c^3 = sum_n c^{2n} / (2n+3)!
        const double c2 = c * c;
        double term = 1.0 / 6.0, ratio = 0.0;
        for (int n = 0; n < 12; ++n) {
            ratio += term;
            term *= c2 / ((2.0 * n + 4.0) * (2.0 * n + 5.0));
        }
        return 0.25 * b * sech * sech * ratio;
    }
    return 0.25 * b * (2.0 * std::tanh(0.5 * c) - c * sech * sech) / (c * c * c);
}

namespace detail {

inline constexpr double kPi = 3.141592653589793238462643;
inline constexpr double kPgTrunc = 0.64;

inline double norm_cdf(double x) noexcept { return 0.5 * std::erfc(-x * 0.70710678118654752440); }

// n-th term of the alternating series for the J*(1, z) density.
inline double pg_series_coef(int n, double x) noexcept
{
    const double k = (n + 0.5) * kPi;
    if (x > kPgTrunc)
        return k * std::exp(-0.5 * k * k * x);
    if (x > 0.0) {
        const double expnt =
            -1.5 * (std::log(0.5 * kPi) + std::log(x)) + std::log(k) - 2.0 * (n + 0.5) * (n + 0.5) / x;
        return std::exp(expnt);
    }
    return 0.0;
}

// Probability of proposing from the truncated exponential piece.
inline double pg_mass_texpon(double z) noexcept
{
    const double t = kPgTrunc;
    const double fz = 0.125 * kPi * kPi + 0.5 * z * z;
    const double b = std::sqrt(1.0 / t) * (t * z - 1.0);
    const double a = -std::sqrt(1.0 / t) * (t * z + 1.0);
    const double x0 = std::log(fz) + fz * t;
    const double xb = x0 - z + std::log(norm_cdf(b));
    const double xa = x0 + z + std::log(norm_cdf(a));
    const double qdivp = 4.0 / kPi * (std::exp(xb) + std::exp(xa));
    return 1.0 / (1.0 + qdivp);
}

// Inverse Gaussian IG(1/z, 1) truncated to (0, 0.64).
inline double pg_truncated_inv_gauss(double z, Stream& rng) noexcept
{
    const double t = kPgTrunc;
    double x = t + 1.0;
    if (1.0 / t > z) {
        double alpha = 0.0;
        while (rng.uniform() > alpha) {
            double e1 = rng.exponential();
            double e2 = rng.exponential();
            while (e1 * e1 > 2.0 * e2 / t) {
                e1 = rng.exponential();
                e2 = rng.exponential();
            }
            x = 1.0 + e1 * t;
            x = t / (x * x);
            alpha = std::exp(-0.5 * z * z * x);
        }
    } else {
        const double mu = 1.0 / z;
        while (x > t) {
            double y = rng.normal();
            y *= y;
            const double half_mu = 0.5 * mu;
            const double mu_y = mu * y;
            x = mu + half_mu * mu_y - half_mu * std::sqrt(4.0 * mu_y + mu_y * mu_y);
            if (rng.uniform() > mu / (mu + x))
                x = mu * mu / x;
        }
    }
    return x;
}

} // namespace detail

/// One exact PG(1, c) draw.
inline double pg_sample_one(double c, Stream& rng) noexcept
{
    using namespace detail;
    const double z = 0.5 * std::fabs(c);
    const double fz = 0.125 * kPi * kPi + 0.5 * z * z;
    const double p_texpon = pg_mass_texpon(z);

    for (;;) {
        double x;
        if (rng.uniform() < p_texpon)
            x = kPgTrunc + rng.exponential() / fz;
        else
            x = pg_truncated_inv_gauss(z, rng);

        double s = pg_series_coef(0, x);
        const double y = rng.uniform() * s;
        for (int n = 1;; ++n) {
            if (n % 2 == 1) {
                s -= pg_series_coef(n, x);
                if (y <= s)
                    return 0.25 * x;
            } else {
                s += pg_series_coef(n, x);
                if (y > s)
                    break;
            }
        }
    }
}

/// Exact PG(b, c): sum of b independent PG(1, c) draws.
inline double pg_sample_exact(std::int64_t b, double c, Stream& rng) noexcept
{
    double sum = 0.0;
    for (std::int64_t i = 0; i < b; ++i)
        sum += pg_sample_one(c, rng);
    return sum;
}

/// Approximate PG(b, c): N(pg_mean, pg_variance), floored at 1e-12.
inline double pg_sample_gaussian(std::int64_t b, double c, Stream& rng) noexcept
{
    const auto bd = static_cast<double>(b);
    const double draw = rng.normal(pg_mean(bd, c), std::sqrt(pg_variance(bd, c)));
    return std::max(draw, kPgPositivityFloor);
}

/// Exact below `threshold`, Gaussian at or above it.
inline double pg_sample(std::int64_t b, double c, std::int64_t threshold, Stream& rng) noexcept
{
    return b < threshold ? pg_sample_exact(b, c, rng) : pg_sample_gaussian(b, c, rng);
}

/// True when pg_sample would take the Gaussian route.
inline bool pg_uses_gaussian(std::int64_t b, std::int64_t threshold) noexcept { return b >= threshold; }

/// Polya-Gamma draws needed per sweep: one per (topic, term, slice) and one
/// per (topic, document).
inline std::int64_t pg_draws_per_sweep(std::int64_t K, std::int64_t V, std::int64_t T, std::int64_t total_docs) noexcept
{
    return K * (V * T + total_docs);
}

struct PgBenchRow
{
    std::string method;
    int replications = 0;
    double elapsed = 0.0; // seconds, summed over replications
    double relative = 0.0;
};

struct PgBenchReport
{
    std::size_t n = 0;
    std::vector<PgBenchRow> rows;
    double checksum = 0.0; // keeps the draws observable to the optimiser

    double speedup(const std::string& slow, const std::string& fast) const
    {
        double s = 0.0, f = 0.0;
        for (const auto& r : rows) {
            if (r.method == slow)
                s = r.elapsed;
            if (r.method == fast)
                f = r.elapsed;
        }
        return s / f;
    }
};

/// Time n draws PG(b_i, c_i), b_i ~ Pois(b_rate) (at least 1) and
/// c_i ~ N(0, c_sd^2), under each sampling method.
inline PgBenchReport pg_bench(std::size_t n, double b_rate = 150.0, double c_sd = 1.0, int replications = 100,
                              std::int64_t threshold = kDefaultPgThreshold, std::uint64_t seed = 1)
{
    PgBenchReport report;
    report.n = n;
    Stream param_rng = Stream::at(seed, {0xBE9C4ULL});
    std::vector<std::int64_t> b(n);
    std::vector<double> c(n);
    for (std::size_t i = 0; i < n; ++i) {
        b[i] = std::max<long>(1, poisson(b_rate, param_rng));
        c[i] = param_rng.normal(0.0, c_sd);
    }

    auto time_method = [&](const std::string& name, auto&& draw) {
        Stream rng = Stream::at(seed, {0xBE9C5ULL, report.rows.size()});
        const auto start = std::chrono::steady_clock::now();
        double acc = 0.0;
        for (int r = 0; r < replications; ++r)
            for (std::size_t i = 0; i < n; ++i)
                acc += draw(b[i], c[i], rng);
        const std::chrono::duration<double> dt = std::chrono::steady_clock::now() - start;
        report.checksum += acc;
        report.rows.push_back({name, replications, dt.count(), 0.0});
    };

    time_method("Gaussian", [](std::int64_t bi, double ci, Stream& g) { return pg_sample_gaussian(bi, ci, g); });
    time_method("Exact", [](std::int64_t bi, double ci, Stream& g) { return pg_sample_exact(bi, ci, g); });
    time_method("Dispatch(threshold=" + std::to_string(threshold) + ")",
                [threshold](std::int64_t bi, double ci, Stream& g) { return pg_sample(bi, ci, threshold, g); });

    double fastest = std::numeric_limits<double>::infinity();
    for (const auto& r : report.rows)
        fastest = std::min(fastest, r.elapsed);
    for (auto& r : report.rows)
        r.relative = fastest > 0.0 ? r.elapsed / fastest : 1.0;
    return report;
}

/// CSV with the columns method,replications,elapsed,relative.
inline void write_bench_csv(const PgBenchReport& report, std::ostream& out)
{
    out << "method,replications,elapsed,relative\n";
    for (const auto& r : report.rows)
        out << r.method << ',' << r.replications << ',' << r.elapsed << ',' << r.relative << '\n';
}

} // namespace dltm
