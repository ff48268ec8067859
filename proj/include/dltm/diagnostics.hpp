#pragma once

// Total-variation diagnostics: topic overlap, prior-predictive overlap
// curves, label matching across chains and the multi-chain convergence
// report.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include <json.hpp>

#include "dltm/conditionals.hpp"
#include "dltm/gibbs.hpp"
#include "dltm/rng.hpp"
#include "dltm/synth.hpp"

namespace dltm {

inline double total_variation(std::span<const double> p, std::span<const double> q)
{
    if (p.size() != q.size())
        throw std::invalid_argument("total_variation: length mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i)
        s += std::fabs(p[i] - q[i]);
    return std::min(1.0, 0.5 * s);
}

inline double topic_overlap(std::span<const double> p, std::span<const double> q)
{
    return 1.0 - total_variation(p, q);
}

/// Monte Carlo E[1 - TV] between two independent prior topics,
/// beta_v ~ N(0, s2) for v < V-1 and beta_{V-1} = 0, at each s2 in the grid.
/// Every grid point reuses the same standard-normal draws.
inline std::vector<double> prior_overlap_curve(std::size_t V, const std::vector<double>& sigma2_grid,
                                               std::size_t n_mc, std::uint64_t seed)
{
    if (n_mc < 1 || V < 2)
        throw std::invalid_argument("prior_overlap_curve: need n_mc >= 1 and V >= 2");
    std::vector<double> acc(sigma2_grid.size(), 0.0);
    std::vector<double> z1(V), z2(V), b1(V), b2(V);
    for (std::size_t j = 0; j < n_mc; ++j) {
        Stream rng = Stream::at(seed, {0x0E7, j});
        for (std::size_t v = 0; v + 1 < V; ++v) {
            z1[v] = rng.normal();
            z2[v] = rng.normal();
        }
        z1[V - 1] = z2[V - 1] = 0.0;
        for (std::size_t g = 0; g < sigma2_grid.size(); ++g) {
            const double sd = std::sqrt(sigma2_grid[g]);
            for (std::size_t v = 0; v < V; ++v) {
                b1[v] = sd * z1[v];
                b2[v] = sd * z2[v];
            }
            acc[g] += topic_overlap(softmax(b1), softmax(b2));
        }
    }
    for (auto& a : acc)
        a /= static_cast<double>(n_mc);
    return acc;
}

// ---- assignment ----

using CostMatrix = std::vector<std::vector<double>>;

/// Minimum-cost assignment of every row to a distinct column (rows <= cols),
/// by enumeration.  Returns col[row].
inline std::vector<std::size_t> assignment_exhaustive(const CostMatrix& cost)
{
    const std::size_t n = cost.size();
    const std::size_t m = n ? cost[0].size() : 0;
    if (n > m)
        throw std::invalid_argument("assignment: more rows than columns");
    std::vector<std::size_t> cols(m);
    std::iota(cols.begin(), cols.end(), 0);
    std::vector<std::size_t> best(cols.begin(), cols.begin() + static_cast<std::ptrdiff_t>(n));
    double best_cost = std::numeric_limits<double>::infinity();
    // Permutations of all m columns visit each injection (m-n)! times; fine
    // for the small m this is used with.
    do {
        double c = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            c += cost[i][cols[i]];
        if (c < best_cost - 1e-15) {
            best_cost = c;
            best.assign(cols.begin(), cols.begin() + static_cast<std::ptrdiff_t>(n));
        }
    } while (std::next_permutation(cols.begin(), cols.end()));
    return best;
}

/// Hungarian algorithm with potentials, O(n^2 m).  Returns col[row].
inline std::vector<std::size_t> assignment_hungarian(const CostMatrix& cost)
{
    const std::size_t n = cost.size();
    const std::size_t m = n ? cost[0].size() : 0;
    if (n > m)
        throw std::invalid_argument("assignment: more rows than columns");
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> u(n + 1, 0.0), v(m + 1, 0.0);
    std::vector<std::size_t> p(m + 1, 0), way(m + 1, 0);
    for (std::size_t i = 1; i <= n; ++i) {
        p[0] = i;
        std::size_t j0 = 0;
        std::vector<double> minv(m + 1, inf);
        std::vector<bool> used(m + 1, false);
        do {
            used[j0] = true;
            const std::size_t i0 = p[j0];
            double delta = inf;
            std::size_t j1 = 0;
            for (std::size_t j = 1; j <= m; ++j) {
                if (used[j])
                    continue;
                const double cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (std::size_t j = 0; j <= m; ++j) {
                if (used[j]) {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (p[j0] != 0);
        do {
            const std::size_t j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
        } while (j0);
    }
    std::vector<std::size_t> col(n);
    for (std::size_t j = 1; j <= m; ++j)
        if (p[j])
            col[p[j] - 1] = j - 1;
    return col;
}

inline std::vector<std::size_t> optimal_assignment(const CostMatrix& cost)
{
    const std::size_t m = cost.empty() ? 0 : cost[0].size();
    return m <= 8 ? assignment_exhaustive(cost) : assignment_hungarian(cost);
}

/// topics[k][t] is a V-simplex.
using TopicSeries = std::vector<std::vector<std::vector<double>>>;

/// Mean over t of TV(reference[i][t], other[j][t]).
inline CostMatrix topic_cost_matrix(const TopicSeries& reference, const TopicSeries& other)
{
    CostMatrix cost(reference.size(), std::vector<double>(other.size(), 0.0));
    for (std::size_t i = 0; i < reference.size(); ++i)
        for (std::size_t j = 0; j < other.size(); ++j) {
            if (reference[i].size() != other[j].size())
                throw std::invalid_argument("relabel: topic series have different lengths");
            double s = 0.0;
            for (std::size_t t = 0; t < reference[i].size(); ++t)
                s += total_variation(reference[i][t], other[j][t]);
            cost[i][j] = reference[i].empty() ? 0.0 : s / static_cast<double>(reference[i].size());
        }
    return cost;
}

/// perm[i] = label in `other` matched to reference topic i, chosen to
/// minimise total TV with no label used twice.  `other` may have more
/// topics than `reference`; unmatched labels are left out.
inline std::vector<std::size_t> relabel(const TopicSeries& reference, const TopicSeries& other)
{
    if (reference.size() > other.size())
        throw std::invalid_argument("relabel: reference has more topics than the other chain");
    return optimal_assignment(topic_cost_matrix(reference, other));
}

// ---- posterior summaries ----

/// Posterior mean of softmax(beta_{k,.,t}) over the samples.
inline TopicSeries posterior_mean_topics(const PosteriorArchive& a)
{
    const std::size_t K = a.K(), T = a.T, V = a.V;
    TopicSeries out(K, std::vector<std::vector<double>>(T, std::vector<double>(V, 0.0)));
    if (a.samples.empty())
        return out;
    for (const auto& s : a.samples)
        for (std::size_t k = 0; k < K; ++k)
            for (std::size_t t = 0; t < T; ++t) {
                const auto p = softmax(s.beta.slice(k, t));
                for (std::size_t v = 0; v < V; ++v)
                    out[k][t][v] += p[v];
            }
    const double n = static_cast<double>(a.samples.size());
    for (auto& k : out)
        for (auto& t : k)
            for (auto& x : t)
                x /= n;
    return out;
}

/// [t][d] -> posterior mean of softmax(eta_{d,.,t}).
using ProportionTable = std::vector<std::vector<std::vector<double>>>;

inline ProportionTable posterior_mean_proportions(const PosteriorArchive& a)
{
    const std::size_t K = a.K();
    ProportionTable out(a.T);
    for (std::size_t t = 0; t < a.T; ++t)
        out[t].assign(a.docs[t], std::vector<double>(K, 0.0));
    if (a.samples.empty())
        return out;
    for (const auto& s : a.samples)
        for (std::size_t t = 0; t < a.T; ++t)
            for (std::size_t d = 0; d < a.docs[t]; ++d) {
                const auto p = softmax(s.eta.row(t, d));
                for (std::size_t k = 0; k < K; ++k)
                    out[t][d][k] += p[k];
            }
    const double n = static_cast<double>(a.samples.size());
    for (auto& t : out)
        for (auto& d : t)
            for (auto& x : d)
                x /= n;
    return out;
}

inline TopicSeries truth_topics(const GroundTruth& g)
{
    const auto& b = g.beta;
    TopicSeries out(b.K, std::vector<std::vector<double>>(b.T));
    for (std::size_t k = 0; k < b.K; ++k)
        for (std::size_t t = 0; t < b.T; ++t)
            out[k][t] = softmax(b.slice(k, t));
    return out;
}

inline ProportionTable truth_proportions(const GroundTruth& g)
{
    ProportionTable out(g.eta.num_slices());
    for (std::size_t t = 0; t < out.size(); ++t) {
        out[t].resize(g.eta.num_docs(t));
        for (std::size_t d = 0; d < out[t].size(); ++d)
            out[t][d] = softmax(g.eta.row(t, d));
    }
    return out;
}

/// Reorder simplex coordinates: out[i] = p[perm[i]].
inline std::vector<double> permute(std::span<const double> p, const std::vector<std::size_t>& perm)
{
    std::vector<double> out(perm.size());
    for (std::size_t i = 0; i < perm.size(); ++i)
        out[i] = p[perm[i]];
    return out;
}

struct TruthComparison
{
    std::vector<std::size_t> permutation; // fitted label matched to true topic k
    std::vector<double> topic_max_tv;     // per true topic, max over t
    std::vector<double> topic_mean_tv;    // per true topic, mean over t
    std::vector<double> doc_tv;           // per document, TV of posterior-mean proportions
    double doc_tv_median = 0.0;
};

inline double median(std::vector<double> x)
{
    if (x.empty())
        return 0.0;
    const auto mid = x.begin() + static_cast<std::ptrdiff_t>(x.size() / 2);
    std::nth_element(x.begin(), mid, x.end());
    if (x.size() % 2 == 1)
        return *mid;
    const double hi = *mid;
    return 0.5 * (hi + *std::max_element(x.begin(), mid));
}

/// Compare a fitted chain against the generating truth.  Document
/// proportions are compared only when the topic counts agree.
inline TruthComparison compare_to_truth(const PosteriorArchive& a, const GroundTruth& g)
{
    TruthComparison c;
    const auto fitted = posterior_mean_topics(a);
    const auto truth = truth_topics(g);
    c.permutation = relabel(truth, fitted);
    for (std::size_t k = 0; k < truth.size(); ++k) {
        double mx = 0.0, sum = 0.0;
        for (std::size_t t = 0; t < truth[k].size(); ++t) {
            const double tv = total_variation(truth[k][t], fitted[c.permutation[k]][t]);
            mx = std::max(mx, tv);
            sum += tv;
        }
        c.topic_max_tv.push_back(mx);
        c.topic_mean_tv.push_back(sum / static_cast<double>(truth[k].size()));
    }
    if (a.K() == g.beta.K) {
        const auto props = posterior_mean_proportions(a);
        const auto true_props = truth_proportions(g);
        for (std::size_t t = 0; t < props.size(); ++t)
            for (std::size_t d = 0; d < props[t].size(); ++d)
                c.doc_tv.push_back(total_variation(true_props[t][d], permute(props[t][d], c.permutation)));
        c.doc_tv_median = median(c.doc_tv);
    }
    return c;
}

struct ConvergenceReport
{
    std::size_t chains = 0;
    std::vector<std::vector<std::size_t>> permutations; // per chain, relative to chain 0
    std::vector<double> topic_max_tv;                   // per topic, max over chains and t
    std::vector<double> doc_max_tv;                     // per document (slice-major), max over chains
    std::vector<std::vector<double>> across_chain_tv;   // [k][s]
    std::vector<std::vector<double>> within_chain_tv;   // [k][pair]
    double mean_posterior_tv = 0.0;
    double mean_within_tv = 0.0;
    double mean_across_tv = 0.0;
    double posterior_to_within_ratio = 0.0;
    std::optional<TruthComparison> truth;
};

namespace detail {

/// Mean over t of TV between softmax(beta^a_{ka,.,t}) and softmax(beta^b_{kb,.,t}).
inline double sample_topic_tv(const BetaPanel& a, std::size_t ka, const BetaPanel& b, std::size_t kb)
{
    double s = 0.0;
    for (std::size_t t = 0; t < a.T; ++t)
        s += total_variation(softmax(a.slice(ka, t)), softmax(b.slice(kb, t)));
    return s / static_cast<double>(a.T);
}

inline double mean_of(const std::vector<std::vector<double>>& x)
{
    double s = 0.0;
    std::size_t n = 0;
    for (const auto& r : x)
        for (double v : r) {
            s += v;
            ++n;
        }
    return n ? s / static_cast<double>(n) : 0.0;
}

} // namespace detail

/// Cross-chain and within-chain TV summaries after relabeling every chain to
/// chain 0.  With a single archive the cross-chain parts are empty.
inline ConvergenceReport convergence_report(const std::vector<PosteriorArchive>& archives,
                                            const GroundTruth* truth = nullptr, std::size_t within_pairs = 1000,
                                            std::uint64_t seed = 1)
{
    if (archives.empty())
        throw std::invalid_argument("convergence_report: no archives");
    const auto& ref = archives[0];
    for (const auto& a : archives)
        if (a.K() != ref.K() || a.V != ref.V || a.T != ref.T || a.docs != ref.docs)
            throw std::invalid_argument("convergence_report: archives have different dimensions");
    const std::size_t K = ref.K();

    ConvergenceReport r;
    r.chains = archives.size();
    std::vector<TopicSeries> means;
    std::vector<ProportionTable> props;
    for (const auto& a : archives) {
        means.push_back(posterior_mean_topics(a));
        props.push_back(posterior_mean_proportions(a));
    }
    for (std::size_t c = 0; c < archives.size(); ++c)
        r.permutations.push_back(relabel(means[0], means[c]));

    r.topic_max_tv.assign(K, 0.0);
    for (std::size_t c = 1; c < archives.size(); ++c)
        for (std::size_t k = 0; k < K; ++k)
            for (std::size_t t = 0; t < ref.T; ++t)
                r.topic_max_tv[k] = std::max(
                    r.topic_max_tv[k], total_variation(means[0][k][t], means[c][r.permutations[c][k]][t]));

    for (std::size_t t = 0; t < ref.T; ++t)
        for (std::size_t d = 0; d < ref.docs[t]; ++d) {
            double mx = 0.0;
            for (std::size_t c = 1; c < archives.size(); ++c)
                mx = std::max(mx, total_variation(props[0][t][d], permute(props[c][t][d], r.permutations[c])));
            r.doc_max_tv.push_back(mx);
        }

    // across-chain traces: sample s of chain 0 against sample s of the others
    r.across_chain_tv.assign(K, {});
    if (archives.size() > 1) {
        std::size_t S = ref.samples.size();
        for (const auto& a : archives)
            S = std::min(S, a.samples.size());
        for (std::size_t k = 0; k < K; ++k)
            for (std::size_t s = 0; s < S; ++s) {
                double acc = 0.0;
                for (std::size_t c = 1; c < archives.size(); ++c)
                    acc += detail::sample_topic_tv(ref.samples[s].beta, k, archives[c].samples[s].beta,
                                                   r.permutations[c][k]);
                r.across_chain_tv[k].push_back(acc / static_cast<double>(archives.size() - 1));
            }
    }

    // within-chain: random pairs of samples, pooled over chains
    r.within_chain_tv.assign(K, {});
    for (std::size_t c = 0; c < archives.size(); ++c) {
        const auto& a = archives[c];
        if (a.samples.size() < 2)
            continue;
        Stream rng = Stream::at(seed, {0x3C1, c});
        const std::size_t pairs = within_pairs / archives.size() + (c < within_pairs % archives.size());
        for (std::size_t i = 0; i < pairs; ++i) {
            const auto s1 = rng.below(a.samples.size());
            auto s2 = rng.below(a.samples.size() - 1);
            if (s2 >= s1)
                ++s2;
            for (std::size_t k = 0; k < K; ++k)
                r.within_chain_tv[k].push_back(
                    detail::sample_topic_tv(a.samples[s1].beta, r.permutations[c][k], a.samples[s2].beta,
                                            r.permutations[c][k]));
        }
    }

    r.mean_posterior_tv =
        K ? std::accumulate(r.topic_max_tv.begin(), r.topic_max_tv.end(), 0.0) / static_cast<double>(K) : 0.0;
    r.mean_within_tv = detail::mean_of(r.within_chain_tv);
    r.mean_across_tv = detail::mean_of(r.across_chain_tv);
    r.posterior_to_within_ratio = r.mean_within_tv > 0.0 ? r.mean_posterior_tv / r.mean_within_tv : 0.0;
    if (truth)
        r.truth = compare_to_truth(ref, *truth);
    return r;
}

inline nlohmann::json to_json(const TruthComparison& c)
{
    return {{"permutation", c.permutation},
            {"topic_max_tv", c.topic_max_tv},
            {"topic_mean_tv", c.topic_mean_tv},
            {"doc_tv_median", c.doc_tv_median}};
}

inline nlohmann::json to_json(const ConvergenceReport& r)
{
    nlohmann::json j = {{"chains", r.chains},
                        {"permutations", r.permutations},
                        {"topic_max_tv", r.topic_max_tv},
                        {"doc_max_tv", r.doc_max_tv},
                        {"mean_posterior_tv", r.mean_posterior_tv},
                        {"mean_within_chain_tv", r.mean_within_tv},
                        {"mean_across_chain_tv", r.mean_across_tv},
                        {"posterior_to_within_ratio", r.posterior_to_within_ratio}};
    if (r.truth)
        j["truth"] = to_json(*r.truth);
    return j;
}

} // namespace dltm
