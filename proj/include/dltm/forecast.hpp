#pragma once

// Marginal topic-probability curves and state forecasts.
//
// The marginal probability of topic k at time t is read as the topic
// proportion of a new document written at t: for each posterior draw of
// alpha_{.,t}, draw eta_k ~ N(F alpha_{k,t}, a^2) (eta_{K-1} = 0), map
// through softmax and pool.  Bands are quantiles of the pooled draws.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <ostream>
#include <span>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "dltm/conditionals.hpp"
#include "dltm/diagnostics.hpp"
#include "dltm/dlm.hpp"
#include "dltm/gibbs.hpp"
#include "dltm/rng.hpp"

namespace dltm {

struct CurveOptions
{
    std::size_t n_mc = 200;
    double lower = 0.025;
    double upper = 0.975;
    /// false: bands reflect alpha uncertainty only (softmax at F alpha).
    bool include_obs_noise = true;
    std::uint64_t seed = 1;
};

struct CurvePoint
{
    std::vector<double> mean, lo, hi; // per topic
};

/// curve[t] over topics.
struct TopicTrendCurve
{
    std::vector<CurvePoint> points;
};

inline double quantile(std::vector<double>& x, double q)
{
    if (x.empty())
        return 0.0;
    // linear interpolation between order statistics (type 7)
    std::sort(x.begin(), x.end());
    const double h = q * static_cast<double>(x.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const auto hi = std::min(lo + 1, x.size() - 1);
    return x[lo] + (h - static_cast<double>(lo)) * (x[hi] - x[lo]);
}

/// Curve point from per-sample state means F alpha_k (means[s][k], K-1
/// entries each).  Inner draws use streams keyed by (sample, draw) only, so
/// identical inputs give identical outputs at every t.
inline CurvePoint curve_point(const std::vector<std::vector<double>>& means, double a2, const CurveOptions& opt)
{
    if (means.empty())
        throw std::invalid_argument("curve_point: no posterior samples");
    const std::size_t K = means[0].size() + 1;
    const std::size_t inner = opt.include_obs_noise ? opt.n_mc : 1;
    const double sd = opt.include_obs_noise ? std::sqrt(a2) : 0.0;
    std::vector<std::vector<double>> pooled(K);
    for (auto& p : pooled)
        p.reserve(means.size() * inner);
    std::vector<double> acc(K, 0.0), eta(K, 0.0);
    for (std::size_t s = 0; s < means.size(); ++s)
        for (std::size_t j = 0; j < inner; ++j) {
            Stream rng = Stream::at(opt.seed, {0xC0E, s, j});
            for (std::size_t k = 0; k + 1 < K; ++k)
                eta[k] = means[s][k] + sd * rng.normal();
            eta[K - 1] = 0.0;
            const auto p = softmax(eta);
            for (std::size_t k = 0; k < K; ++k) {
                acc[k] += p[k];
                pooled[k].push_back(p[k]);
            }
        }
    CurvePoint pt;
    const double n = static_cast<double>(means.size() * inner);
    for (std::size_t k = 0; k < K; ++k) {
        pt.mean.push_back(acc[k] / n);
        pt.lo.push_back(quantile(pooled[k], opt.lower));
        pt.hi.push_back(quantile(pooled[k], opt.upper));
    }
    return pt;
}

/// Marginal topic curve at every fitted slice.
inline TopicTrendCurve marginal_topic_curve(const PosteriorArchive& a, const CurveOptions& opt = {})
{
    if (a.samples.empty())
        throw std::invalid_argument("marginal_topic_curve: empty archive");
    const auto& F = a.hp.spec.F_row;
    TopicTrendCurve curve;
    for (std::size_t t = 0; t < a.T; ++t) {
        std::vector<std::vector<double>> means(a.samples.size());
        for (std::size_t s = 0; s < a.samples.size(); ++s)
            for (const auto& path : a.samples[s].alpha)
                means[s].push_back(F.dot(path[t]));
        curve.points.push_back(curve_point(means, a.hp.a2(), opt));
    }
    return curve;
}

/// Curves at T+1..T+horizon.  Each posterior alpha_T is pushed forward to
/// alpha_{T+h} ~ N(G^h alpha_T, sum_{j<h} G^j W G^j').
inline TopicTrendCurve forecast_topic_curve(const PosteriorArchive& a, int horizon, const CurveOptions& opt = {})
{
    if (a.samples.empty())
        throw std::invalid_argument("forecast_topic_curve: empty archive");
    if (horizon < 1)
        throw std::invalid_argument("forecast_topic_curve: horizon must be at least 1");
    const auto& spec = a.hp.spec;
    const auto p = spec.dim();
    const std::size_t S = a.samples.size();
    const std::size_t free_topics = a.K() - 1;
    const auto steps = forecast_state(spec, Eigen::VectorXd::Zero(p), Eigen::MatrixXd::Zero(p, p), horizon);

    // draws[s][k] advanced one step at a time so that every horizon shares
    // the same path
    std::vector<std::vector<Eigen::VectorXd>> state(S, std::vector<Eigen::VectorXd>(free_topics));
    for (std::size_t s = 0; s < S; ++s)
        for (std::size_t k = 0; k < free_topics; ++k)
            state[s][k] = a.samples[s].alpha[k][a.T - 1];

    const Eigen::MatrixXd step_cov = steps[0].cov; // G 0 G' + W, or 0 under discounting from C = 0
    TopicTrendCurve curve;
    for (int h = 1; h <= horizon; ++h) {
        std::vector<std::vector<double>> means(S);
        for (std::size_t s = 0; s < S; ++s)
            for (std::size_t k = 0; k < free_topics; ++k) {
                Stream rng = Stream::at(opt.seed, {0xF0C, s, k, static_cast<std::uint64_t>(h)});
                state[s][k] = sample_mvn(spec.G * state[s][k], step_cov, rng);
                means[s].push_back(spec.F_row.dot(state[s][k]));
            }
        curve.points.push_back(curve_point(means, a.hp.a2(), opt));
    }
    return curve;
}

/// One-step-ahead predictive simplex (mean and band) at T+1.
inline CurvePoint one_step_ahead(const PosteriorArchive& a, const CurveOptions& opt = {})
{
    return forecast_topic_curve(a, 1, opt).points[0];
}

/// TV between a predicted and a realised K-simplex.
inline double prediction_error(std::span<const double> predicted, std::span<const double> realized)
{
    return total_variation(predicted, realized);
}

/// CSV rows t,k,mean,lo,hi; t is 1-based starting at first_t.
inline void write_curve_csv(const TopicTrendCurve& c, std::ostream& out, std::size_t first_t = 1)
{
    out << "t,k,mean,lo,hi\n";
    for (std::size_t t = 0; t < c.points.size(); ++t)
        for (std::size_t k = 0; k < c.points[t].mean.size(); ++k)
            out << (first_t + t) << ',' << k << ',' << c.points[t].mean[k] << ',' << c.points[t].lo[k] << ','
                << c.points[t].hi[k] << '\n';
}

} // namespace dltm
