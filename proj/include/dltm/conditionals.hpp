#pragma once

// Closed-form pieces of the Polya-Gamma Gibbs sampler.
//
// The multinomial likelihood of one coordinate of a softmax, given the
// others, is binomial in
//
//     gamma_v = beta_v - log sum_{j != v} exp(beta_j)
//
// so after augmenting with zeta ~ PG(n, gamma) the coordinate is Gaussian.
// The same trick on the document side gives psi_k for eta.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "dltm/rng.hpp"

namespace dltm {

/// log sum_j exp(x_j), max-shifted.
inline double log_sum_exp(std::span<const double> x) noexcept
{
    double m = -std::numeric_limits<double>::infinity();
    for (double v : x)
        m = std::max(m, v);
    if (!std::isfinite(m))
        return m;
    double s = 0.0;
    for (double v : x)
        s += std::exp(v - m);
    return m + std::log(s);
}

/// log sum_{j != skip} exp(x_j).
inline double log_sum_exp_excluding(std::span<const double> x, std::size_t skip) noexcept
{
    double m = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < x.size(); ++j)
        if (j != skip)
            m = std::max(m, x[j]);
    if (!std::isfinite(m))
        return m;
    double s = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j)
        if (j != skip)
            s += std::exp(x[j] - m);
    return m + std::log(s);
}

inline std::vector<double> softmax(std::span<const double> x)
{
    std::vector<double> p(x.size());
    const double lse = log_sum_exp(x);
    for (std::size_t i = 0; i < x.size(); ++i)
        p[i] = std::exp(x[i] - lse);
    return p;
}

inline double logistic(double x) noexcept
{
    return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
}

/// gamma = beta_v - log sum_{j != v} exp(beta_j).
inline double gamma_transform(std::span<const double> beta_slice, std::size_t v)
{
    if (beta_slice.size() < 2 || v >= beta_slice.size())
        throw std::invalid_argument("gamma_transform needs V >= 2 and v < V");
    return beta_slice[v] - log_sum_exp_excluding(beta_slice, v);
}

/// psi = eta_k - log sum_{j != k} exp(eta_j).
inline double psi_transform(std::span<const double> eta_row, std::size_t k)
{
    if (eta_row.size() < 2 || k >= eta_row.size())
        throw std::invalid_argument("psi_transform needs K >= 2 and k < K");
    return eta_row[k] - log_sum_exp_excluding(eta_row, k);
}

/// kappa = successes - trials / 2.
inline double kappa(std::int64_t successes, std::int64_t trials) noexcept
{
    return static_cast<double>(successes) - 0.5 * static_cast<double>(trials);
}

struct GaussianMoments
{
    double mean = 0.0;
    double var = 0.0;
};

/// Filtered moments of beta_{k,v,t} from the predictive N(m_prev, rho2) and
/// the augmented likelihood.  zeta = 0 means no words at (k,t).
inline GaussianMoments beta_filter_update(double kappa_beta, double zeta, double log_sum_excl, double m_prev,
                                          double rho2)
{
    if (!(rho2 > 0.0))
        throw std::invalid_argument("beta_filter_update: rho^2 must be positive");
    const double var = 1.0 / (zeta + 1.0 / rho2);
    return {var * (kappa_beta + zeta * log_sum_excl + m_prev / rho2), var};
}

/// Moments of beta_t given beta_{t+1} and the filtered N(m_t, var_t).
inline GaussianMoments beta_backward_moments(double beta_next, double m_t, double var_t, double var_innov) noexcept
{
    if (!(var_t > 0.0))
        return {m_t, 0.0};
    const double var = 1.0 / (1.0 / var_innov + 1.0 / var_t);
    return {var * (beta_next / var_innov + m_t / var_t), var};
}

inline double beta_backward_step(double beta_next, double m_t, double var_t, double var_innov, Stream& rng) noexcept
{
    const auto g = beta_backward_moments(beta_next, m_t, var_t, var_innov);
    return rng.normal(g.mean, std::sqrt(g.var));
}

/// Full conditional of eta_{d,k,t}; prior_mean is F' alpha_{k,t}.
inline GaussianMoments eta_conditional(double kappa_eta, double omega, double log_sum_excl, double prior_mean,
                                       double a2)
{
    if (!(a2 > 0.0))
        throw std::invalid_argument("eta_conditional: a^2 must be positive");
    const double var = 1.0 / (omega + 1.0 / a2);
    return {var * (kappa_eta + omega * log_sum_excl + prior_mean / a2), var};
}

/// One FFBS draw of beta_{k,v,1:T} for a single (k, v).
///
/// kappa[t], zeta[t] and log_sum_excl[t] describe the augmented observation
/// at slice t; beta_0 ~ N(m0, var0) and the random walk has variance
/// var_innov.
inline void sample_beta_path(std::span<const double> kappa_beta, std::span<const double> zeta,
                             std::span<const double> log_sum_excl, double m0, double var0, double var_innov,
                             Stream& rng, std::span<double> out)
{
    const std::size_t T = out.size();
    double mbuf[64], vbuf[64];
    std::vector<double> mheap, vheap;
    double* m = mbuf;
    double* var = vbuf;
    if (T > 64) {
        mheap.resize(T);
        vheap.resize(T);
        m = mheap.data();
        var = vheap.data();
    }

    double m_prev = m0, v_prev = var0;
    for (std::size_t t = 0; t < T; ++t) {
        const auto g = beta_filter_update(kappa_beta[t], zeta[t], log_sum_excl[t], m_prev, v_prev + var_innov);
        m[t] = g.mean;
        var[t] = g.var;
        m_prev = g.mean;
        v_prev = g.var;
    }
    out[T - 1] = rng.normal(m[T - 1], std::sqrt(var[T - 1]));
    for (std::size_t t = T - 1; t-- > 0;)
        out[t] = beta_backward_step(out[t + 1], m[t], var[t], var_innov, rng);
}

/// Pr(z = k | w, beta_t, eta_row) for a word w in slice t.  beta_t is K x V
/// (row k = topic k at slice t).
inline std::vector<double> z_conditional(std::size_t w, const Eigen::MatrixXd& beta_t,
                                         std::span<const double> eta_row)
{
    const auto K = static_cast<std::size_t>(beta_t.rows());
    if (eta_row.size() != K)
        throw std::invalid_argument("z_conditional: eta row length differs from K");
    if (w >= static_cast<std::size_t>(beta_t.cols()))
        throw std::invalid_argument("z_conditional: word id out of range");
    std::vector<double> logits(K);
    for (std::size_t k = 0; k < K; ++k) {
        const Eigen::RowVectorXd row = beta_t.row(static_cast<Eigen::Index>(k));
        logits[k] = row(static_cast<Eigen::Index>(w)) -
                    log_sum_exp(std::span<const double>(row.data(), static_cast<std::size_t>(row.size()))) +
                    eta_row[k];
    }
    return softmax(logits);
}

/// Categorical draw from unnormalised log weights.
inline std::size_t sample_log_categorical(std::span<const double> logits, Stream& rng) noexcept
{
    double m = -std::numeric_limits<double>::infinity();
    for (double l : logits)
        m = std::max(m, l);
    double total = 0.0;
    double w[64];
    std::vector<double> heap;
    double* p = w;
    if (logits.size() > 64) {
        heap.resize(logits.size());
        p = heap.data();
    }
    for (std::size_t k = 0; k < logits.size(); ++k) {
        p[k] = std::exp(logits[k] - m);
        total += p[k];
    }
    double u = rng.uniform() * total;
    for (std::size_t k = 0; k + 1 < logits.size(); ++k) {
        if (u < p[k])
            return k;
        u -= p[k];
    }
    return logits.size() - 1;
}

} // namespace dltm
