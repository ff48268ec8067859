#pragma once

// Synthetic corpora with known latent truth.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "dltm/conditionals.hpp"
#include "dltm/corpus.hpp"
#include "dltm/dlm.hpp"
#include "dltm/model.hpp"
#include "dltm/rng.hpp"

namespace dltm {

struct SynthDesign
{
    std::size_t K = 3, V = 1000, T = 5;
    double doc_rate = 1000.0;
    double word_rate = 150.0;
    double high = 3.0;
    double sigma2 = 0.01;
    StateSpaceSpec spec = trend_spec(TrendKind::random_walk, 0.001, 0.5, 0.0, 0.025);
    /// Optional alpha_{k,0} means for the K-1 free topics; spec.m0 otherwise.
    std::vector<Eigen::VectorXd> topic_m0;
    std::uint64_t seed = 1;

    void validate() const
    {
        if (K < 1 || T < 1)
            throw std::invalid_argument("design needs K >= 1 and T >= 1");
        if (V < K)
            throw std::invalid_argument("block topics need V >= K");
        if (V < 2)
            throw std::invalid_argument("design needs V >= 2");
        if (!(doc_rate > 0.0) || !(word_rate > 0.0))
            throw std::invalid_argument("document and word rates must be positive");
        if (!(sigma2 >= 0.0))
            throw std::invalid_argument("sigma^2 must be nonnegative");
        if (!topic_m0.empty() && topic_m0.size() != K - 1)
            throw std::invalid_argument("topic_m0 needs one vector per free topic (K-1)");
        for (const auto& m : topic_m0)
            if (m.size() != spec.dim())
                throw std::invalid_argument("topic_m0 entries must match the state dimension");
        spec.validate();
    }
};

struct GroundTruth
{
    BetaPanel beta;
    AlphaPaths alpha;
    EtaPanel eta;
    Assignments z;
    double high = 0.0;
    /// Expected topic proportions of a new document, curve[t][k].
    std::vector<std::vector<double>> topic_curve;
    /// Mean of softmax(eta) over the documents of each slice, [t][k].
    std::vector<std::vector<double>> slice_proportions;
};

/// Block boundaries round(k V / K): V = 1000, K = 3 gives [0,333), [333,667),
/// [667,1000).
inline std::vector<std::size_t> block_boundaries(std::size_t V, std::size_t K)
{
    std::vector<std::size_t> b(K + 1);
    for (std::size_t k = 0; k <= K; ++k)
        b[k] = (2 * k * V + K) / (2 * K);
    return b;
}

/// K x V natural parameters: `high` on topic k's block, 0 elsewhere, and the
/// pinned coordinate V-1 at 0.
inline Eigen::MatrixXd make_block_topics(std::size_t V, std::size_t K, double high)
{
    if (V < K || K < 1)
        throw std::invalid_argument("make_block_topics: need V >= K >= 1");
    Eigen::MatrixXd beta = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(K), static_cast<Eigen::Index>(V));
    const auto b = block_boundaries(V, K);
    for (std::size_t k = 0; k < K; ++k)
        for (std::size_t v = b[k]; v < b[k + 1]; ++v)
            beta(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(v)) = high;
    beta.col(static_cast<Eigen::Index>(V - 1)).setZero();
    return beta;
}

/// E[softmax(eta)] for eta_k ~ N(mean_k, a2) (k < K-1), eta_{K-1} = 0, by
/// Monte Carlo with n draws.
inline std::vector<double> expected_proportions(const std::vector<double>& mean, double a2, std::size_t n,
                                                Stream& rng)
{
    const std::size_t K = mean.size() + 1;
    std::vector<double> acc(K, 0.0), eta(K, 0.0);
    const double sd = std::sqrt(a2);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t k = 0; k + 1 < K; ++k)
            eta[k] = mean[k] + sd * rng.normal();
        eta[K - 1] = 0.0;
        const auto p = softmax(eta);
        for (std::size_t k = 0; k < K; ++k)
            acc[k] += p[k];
    }
    for (auto& a : acc)
        a /= static_cast<double>(n);
    return acc;
}

inline std::vector<double> cumulative(const std::vector<double>& p)
{
    std::vector<double> c(p.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i)
        c[i] = (acc += p[i]);
    return c;
}

inline std::size_t draw_from_cdf(const std::vector<double>& cdf, Stream& rng)
{
    const double u = rng.uniform() * cdf.back();
    const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
    return std::min(static_cast<std::size_t>(it - cdf.begin()), cdf.size() - 1);
}

struct SynthResult
{
    Corpus corpus;
    GroundTruth truth;
};

/// Forward-simulate the generative model under `design`.
inline SynthResult simulate_corpus(const SynthDesign& design)
{
    design.validate();
    const std::size_t K = design.K, V = design.V, T = design.T;
    SynthResult out;
    auto& truth = out.truth;
    truth.high = design.high;

    // topics
    const Eigen::MatrixXd beta0 = make_block_topics(V, K, design.high);
    truth.beta = BetaPanel(K, V, T);
    const double beta_sd = std::sqrt(design.sigma2);
    for (std::size_t k = 0; k < K; ++k)
        for (std::size_t v = 0; v + 1 < V; ++v) {
            Stream rng = Stream::at(design.seed, {1, k, v});
            double b = beta0(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(v));
            for (std::size_t t = 0; t < T; ++t) {
                b += beta_sd * rng.normal();
                truth.beta(k, v, t) = b;
            }
        }

    // states
    truth.alpha.resize(K - 1);
    for (std::size_t k = 0; k + 1 < K; ++k) {
        StateSpaceSpec s = design.spec;
        if (!design.topic_m0.empty())
            s.m0 = design.topic_m0[k];
        Stream rng = Stream::at(design.seed, {2, k});
        truth.alpha[k] = simulate_states(s, T, rng);
    }

    // documents
    out.corpus.vocab_size = V;
    out.corpus.slices.resize(T);
    std::vector<std::size_t> docs(T);
    for (std::size_t t = 0; t < T; ++t) {
        Stream rng = Stream::at(design.seed, {3, t});
        docs[t] = static_cast<std::size_t>(poisson(design.doc_rate, rng));
    }
    truth.eta = EtaPanel(K, docs);
    truth.z.resize(T);
    truth.slice_proportions.assign(T, std::vector<double>(K, 0.0));
    const double eta_sd = std::sqrt(design.spec.obs_var);

    for (std::size_t t = 0; t < T; ++t) {
        std::vector<std::vector<double>> word_cdf(K);
        for (std::size_t k = 0; k < K; ++k)
            word_cdf[k] = cumulative(softmax(truth.beta.slice(k, t)));
        out.corpus.slices[t].resize(docs[t]);
        truth.z[t].resize(docs[t]);
        for (std::size_t d = 0; d < docs[t]; ++d) {
            Stream rng = Stream::at(design.seed, {4, t, d});
            auto row = truth.eta.row(t, d);
            for (std::size_t k = 0; k + 1 < K; ++k)
                row[k] = rng.normal(design.spec.F_row.dot(truth.alpha[k][t]), eta_sd);
            const auto theta = softmax(row);
            for (std::size_t k = 0; k < K; ++k)
                truth.slice_proportions[t][k] += theta[k];

            long n = 0;
            while (n == 0)
                n = poisson(design.word_rate, rng);
            const auto topic_cdf = cumulative(theta);
            auto& doc = out.corpus.slices[t][d];
            auto& zd = truth.z[t][d];
            doc.resize(static_cast<std::size_t>(n));
            zd.resize(static_cast<std::size_t>(n));
            for (long i = 0; i < n; ++i) {
                const std::size_t k = draw_from_cdf(topic_cdf, rng);
                zd[static_cast<std::size_t>(i)] = static_cast<TopicId>(k);
                doc[static_cast<std::size_t>(i)] = static_cast<WordId>(draw_from_cdf(word_cdf[k], rng));
            }
        }
        if (docs[t] > 0)
            for (auto& p : truth.slice_proportions[t])
                p /= static_cast<double>(docs[t]);
    }

    truth.topic_curve.resize(T);
    for (std::size_t t = 0; t < T; ++t) {
        std::vector<double> mean(K - 1);
        for (std::size_t k = 0; k + 1 < K; ++k)
            mean[k] = design.spec.F_row.dot(truth.alpha[k][t]);
        Stream rng = Stream::at(design.seed, {5, t});
        truth.topic_curve[t] = expected_proportions(mean, design.spec.obs_var, 20000, rng);
    }
    return out;
}

} // namespace dltm
