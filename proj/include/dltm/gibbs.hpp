#pragma once

// The Polya-Gamma Gibbs sampler.
//
// One sweep:
//   1. beta_{k,v,1:T} by FFBS, v in a fresh random order within each topic
//   2. zeta_{k,v,t} ~ PG(n^y_{k,t}, gamma_{k,v,t})
//   3. eta_{d,k,t}, k in a fresh random order within each document
//   4. omega_{d,k,t} ~ PG(N_{d,t}, psi_{d,k,t})
//   5. alpha_{k,1:T} by FFBS
//   6. z_{n,d,t} from its discrete full conditional, then counts are rebuilt
//
// Under AuxSchedule::fused steps 2 and 4 happen inside 1 and 3, one
// coordinate at a time.  Randomness comes from keyed streams (seed; sweep,
// step, unit), so results do not depend on the thread count.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "dltm/conditionals.hpp"
#include "dltm/corpus.hpp"
#include "dltm/dlm.hpp"
#include "dltm/model.hpp"
#include "dltm/polya_gamma.hpp"
#include "dltm/rng.hpp"

namespace dltm {

namespace step {
inline constexpr std::uint64_t init = 0;
inline constexpr std::uint64_t beta = 1;
inline constexpr std::uint64_t zeta = 2;
inline constexpr std::uint64_t eta = 3;
inline constexpr std::uint64_t omega = 4;
inline constexpr std::uint64_t alpha = 5;
inline constexpr std::uint64_t z = 6;
inline constexpr std::uint64_t permutation = 7;
} // namespace step

namespace detail {

inline std::int64_t as_signed(std::size_t n) { return static_cast<std::int64_t>(n); }

/// eta_{d,k,t} ~ N(F alpha_{k,t}, a^2) for free k.
inline double eta_prior_mean(const Hyperparams& hp, const AlphaPaths& alpha, std::size_t k, std::size_t t)
{
    return hp.spec.F_row.dot(alpha[k][t]);
}

/// z for one document given beta log-probabilities logp[(k*T+t)*V+v].
inline void draw_document_z(const Document& doc, std::span<const double> eta_row, const std::vector<double>& logp,
                            std::size_t V, std::size_t T, std::size_t t, std::vector<TopicId>& z, Stream& rng)
{
    const std::size_t K = eta_row.size();
    std::vector<double> logits(K);
    z.resize(doc.size());
    for (std::size_t n = 0; n < doc.size(); ++n) {
        for (std::size_t k = 0; k < K; ++k)
            logits[k] = logp[(k * T + t) * V + doc[n]] + eta_row[k];
        z[n] = static_cast<TopicId>(sample_log_categorical(logits, rng));
    }
}

inline std::vector<double> beta_log_probabilities(const BetaPanel& beta, bool parallel)
{
    std::vector<double> logp(beta.data.size());
    const auto KT = as_signed(beta.K * beta.T);
#pragma omp parallel for schedule(static) if (parallel)
    for (std::int64_t kt = 0; kt < KT; ++kt) {
        const auto k = static_cast<std::size_t>(kt) / beta.T;
        const auto t = static_cast<std::size_t>(kt) % beta.T;
        const auto s = beta.slice(k, t);
        const double lse = log_sum_exp(s);
        for (std::size_t v = 0; v < beta.V; ++v)
            logp[(k * beta.T + t) * beta.V + v] = s[v] - lse;
    }
    return logp;
}

inline void draw_all_z(ModelState& state, const Corpus& corpus, std::uint64_t seed, std::uint64_t sweep,
                       bool parallel)
{
    const auto logp = beta_log_probabilities(state.beta, parallel);
    const std::size_t T = corpus.num_slices();
    state.z.resize(T);
    for (std::size_t t = 0; t < T; ++t) {
        state.z[t].resize(corpus.num_docs(t));
        const auto D = as_signed(corpus.num_docs(t));
#pragma omp parallel for schedule(dynamic, 8) if (parallel)
        for (std::int64_t di = 0; di < D; ++di) {
            const auto d = static_cast<std::size_t>(di);
            Stream rng = Stream::at(seed, {sweep, step::z, t, d});
            draw_document_z(corpus.slices[t][d], state.eta.row(t, d), logp, state.beta.V, T, t, state.z[t][d], rng);
        }
    }
}

/// log sum_{j != v} exp(beta_{k,j,t}) for every t, maintained incrementally
/// across single-coordinate updates within one topic.
class ExclusionSums
{
public:
    ExclusionSums(const BetaPanel& beta, std::size_t k, bool cached) : beta_(beta), k_(k), cached_(cached)
    {
        if (cached_) {
            shift_.resize(beta.T);
            sum_.resize(beta.T);
            updates_.resize(beta.T);
            for (std::size_t t = 0; t < beta.T; ++t)
                rebuild(t);
        }
    }

    double excluding(std::size_t v, std::size_t t)
    {
        const auto s = beta_.slice(k_, t);
        if (!cached_)
            return log_sum_exp_excluding(s, v);
        const double rest = sum_[t] - std::exp(s[v] - shift_[t]);
        // the difference loses digits when beta_v dominates the slice
        if (rest < 1e-4 * sum_[t])
            return log_sum_exp_excluding(s, v);
        return std::log(rest) + shift_[t];
    }

    /// beta_{k,v,t} changed from old_value to its current value.
    void update(std::size_t v, std::size_t t, double old_value)
    {
        if (!cached_)
            return;
        const double now = beta_.slice(k_, t)[v];
        if (now > shift_[t]) {
            rebuild(t);
            return;
        }
        sum_[t] += std::exp(now - shift_[t]) - std::exp(old_value - shift_[t]);
        // re-anchor when the maximum has moved down and at least once per pass
        // over the vocabulary, so rounding does not accumulate
        if (sum_[t] < 0.5 || ++updates_[t] >= beta_.V)
            rebuild(t);
    }

private:
    void rebuild(std::size_t t)
    {
        const auto s = beta_.slice(k_, t);
        double m = -std::numeric_limits<double>::infinity();
        for (double x : s)
            m = std::max(m, x);
        double acc = 0.0;
        for (double x : s)
            acc += std::exp(x - m);
        shift_[t] = m;
        sum_[t] = acc;
        updates_[t] = 0;
    }

    const BetaPanel& beta_;
    std::size_t k_;
    bool cached_;
    std::vector<double> shift_, sum_;
    std::vector<std::size_t> updates_;
};

inline void update_beta_topic(ModelState& state, const Hyperparams& hp, const ChainConfig& cfg,
                              std::uint64_t sweep, std::size_t k)
{
    auto& beta = state.beta;
    const auto& cs = state.counts;
    const std::size_t V = beta.V, T = beta.T;
    if (V < 2)
        return;
    ExclusionSums sums(beta, k, cfg.cached_log_sums);
    Stream perm_rng = Stream::at(cfg.seed, {sweep, step::permutation, step::beta, k});
    const auto order = random_permutation(V - 1, perm_rng);

    std::vector<double> kap(T), zeta(T), lse(T), path(T);
    for (std::size_t v : order) {
        Stream rng = Stream::at(cfg.seed, {sweep, step::beta, k, v});
        for (std::size_t t = 0; t < T; ++t) {
            lse[t] = sums.excluding(v, t);
            const std::int64_t n = cs.ny(k, t);
            kap[t] = kappa(cs.y(k, v, t), n);
            if (cfg.aux == AuxSchedule::fused) {
                state.zeta(k, v, t) = n > 0 ? pg_sample(n, beta(k, v, t) - lse[t], cfg.pg_threshold, rng) : 0.0;
            }
            zeta[t] = state.zeta(k, v, t);
        }
        sample_beta_path(kap, zeta, lse, hp.beta0_mean, hp.beta0_var, hp.sigma2, rng, path);
        for (std::size_t t = 0; t < T; ++t) {
            const double old = beta(k, v, t);
            beta(k, v, t) = path[t];
            sums.update(v, t, old);
        }
    }
}

inline void draw_zeta_topic(ModelState& state, const ChainConfig& cfg, std::uint64_t sweep, std::size_t k)
{
    const auto& beta = state.beta;
    for (std::size_t v = 0; v + 1 < beta.V; ++v) {
        Stream rng = Stream::at(cfg.seed, {sweep, step::zeta, k, v});
        for (std::size_t t = 0; t < beta.T; ++t) {
            const std::int64_t n = state.counts.ny(k, t);
            state.zeta(k, v, t) = n > 0 ? pg_sample(n, gamma_transform(beta.slice(k, t), v), cfg.pg_threshold, rng)
                                        : 0.0;
        }
    }
}

inline void update_eta_document(ModelState& state, const Hyperparams& hp, const ChainConfig& cfg,
                                std::uint64_t sweep, std::size_t t, std::size_t d)
{
    const std::size_t K = state.eta.K;
    if (K < 2)
        return;
    Stream rng = Stream::at(cfg.seed, {sweep, step::eta, t, d});
    const auto order = random_permutation(K - 1, rng);
    auto row = state.eta.row(t, d);
    const std::int64_t N = state.counts.N[t][d];
    for (std::size_t k : order) {
        const double lse = log_sum_exp_excluding(row, k);
        if (cfg.aux == AuxSchedule::fused)
            state.omega(t, d, k) = N > 0 ? pg_sample(N, row[k] - lse, cfg.pg_threshold, rng) : 0.0;
        const auto g = eta_conditional(kappa(state.counts.x(t, d, k), N), state.omega(t, d, k), lse,
                                       eta_prior_mean(hp, state.alpha, k, t), hp.a2());
        row[k] = rng.normal(g.mean, std::sqrt(g.var));
    }
}

inline void draw_omega_document(ModelState& state, const ChainConfig& cfg, std::uint64_t sweep, std::size_t t,
                                std::size_t d)
{
    const std::size_t K = state.eta.K;
    Stream rng = Stream::at(cfg.seed, {sweep, step::omega, t, d});
    const auto row = state.eta.row(t, d);
    const std::int64_t N = state.counts.N[t][d];
    for (std::size_t k = 0; k + 1 < K; ++k)
        state.omega(t, d, k) = N > 0 ? pg_sample(N, psi_transform(row, k), cfg.pg_threshold, rng) : 0.0;
}

inline void update_alpha_topic(ModelState& state, const Hyperparams& hp, const ChainConfig& cfg,
                               std::uint64_t sweep, std::size_t k)
{
    const std::size_t T = state.eta.num_slices();
    std::vector<Eigen::VectorXd> obs(T);
    for (std::size_t t = 0; t < T; ++t) {
        const std::size_t D = state.eta.num_docs(t);
        obs[t].resize(static_cast<Eigen::Index>(D));
        for (std::size_t d = 0; d < D; ++d)
            obs[t](static_cast<Eigen::Index>(d)) = state.eta(t, d, k);
    }
    Stream rng = Stream::at(cfg.seed, {sweep, step::alpha, k});
    state.alpha[k] = ffbs(hp.spec, obs, rng);
}

} // namespace detail

/// Overdispersed start: beta, alpha and eta from the generative model with
/// prior variances multiplied by hp.init_inflation, then z from its full
/// conditional, then the auxiliaries from theirs.
inline ModelState init_chain(const Corpus& corpus, const ChainConfig& cfg, const Hyperparams& hp)
{
    validate(corpus);
    cfg.validate();
    hp.validate();
    const std::size_t K = cfg.K, V = corpus.vocab_size, T = corpus.num_slices();
    const double f = hp.init_inflation;
    const auto docs = docs_per_slice(corpus);

    ModelState s;
    s.beta = BetaPanel(K, V, T);
    s.zeta = BetaPanel(K, V, T);
    s.eta = EtaPanel(K, docs);
    s.omega = EtaPanel(K, docs);

    for (std::size_t k = 0; k < K; ++k)
        for (std::size_t v = 0; v + 1 < V; ++v) {
            Stream rng = Stream::at(cfg.seed, {0, step::init, step::beta, k, v});
            double b = rng.normal(hp.beta0_mean, std::sqrt(f * hp.beta0_var));
            for (std::size_t t = 0; t < T; ++t) {
                b = rng.normal(b, std::sqrt(f * hp.sigma2));
                s.beta(k, v, t) = b;
            }
        }

    s.alpha.resize(K > 0 ? K - 1 : 0);
    for (std::size_t k = 0; k + 1 < K; ++k) {
        Stream rng = Stream::at(cfg.seed, {0, step::init, step::alpha, k});
        s.alpha[k] = simulate_states(hp.spec, T, rng, f);
    }

    const double eta_sd = std::sqrt(f * hp.a2());
    for (std::size_t t = 0; t < T; ++t)
        for (std::size_t d = 0; d < docs[t]; ++d) {
            Stream rng = Stream::at(cfg.seed, {0, step::init, step::eta, t, d});
            for (std::size_t k = 0; k + 1 < K; ++k)
                s.eta(t, d, k) = rng.normal(detail::eta_prior_mean(hp, s.alpha, k, t), eta_sd);
        }

    detail::draw_all_z(s, corpus, cfg.seed, 0, cfg.parallel);
    refresh_counts(s, corpus);
    for (std::size_t k = 0; k < K; ++k)
        detail::draw_zeta_topic(s, cfg, 0, k);
    for (std::size_t t = 0; t < T; ++t)
        for (std::size_t d = 0; d < docs[t]; ++d)
            detail::draw_omega_document(s, cfg, 0, t, d);
    return s;
}

/// One full sweep.  `sweep_index` (>= 1) keys every random stream used.
inline void sweep(ModelState& state, const Corpus& corpus, const Hyperparams& hp, const ChainConfig& cfg,
                  std::uint64_t sweep_index)
{
    const std::size_t K = state.beta.K, T = state.beta.T;
    const bool par = cfg.parallel;
    const auto Ks = detail::as_signed(K);

    // 1-2
#pragma omp parallel for schedule(dynamic, 1) if (par)
    for (std::int64_t k = 0; k < Ks; ++k)
        detail::update_beta_topic(state, hp, cfg, sweep_index, static_cast<std::size_t>(k));
    if (cfg.aux == AuxSchedule::separate) {
#pragma omp parallel for schedule(dynamic, 1) if (par)
        for (std::int64_t k = 0; k < Ks; ++k)
            detail::draw_zeta_topic(state, cfg, sweep_index, static_cast<std::size_t>(k));
    }

    // 3-4
    for (std::size_t t = 0; t < T; ++t) {
        const auto D = detail::as_signed(state.eta.num_docs(t));
#pragma omp parallel for schedule(dynamic, 8) if (par)
        for (std::int64_t d = 0; d < D; ++d)
            detail::update_eta_document(state, hp, cfg, sweep_index, t, static_cast<std::size_t>(d));
        if (cfg.aux == AuxSchedule::separate) {
#pragma omp parallel for schedule(dynamic, 8) if (par)
            for (std::int64_t d = 0; d < D; ++d)
                detail::draw_omega_document(state, cfg, sweep_index, t, static_cast<std::size_t>(d));
        }
    }

    // 5
    const auto free_topics = detail::as_signed(state.alpha.size());
#pragma omp parallel for schedule(dynamic, 1) if (par)
    for (std::int64_t k = 0; k < free_topics; ++k)
        detail::update_alpha_topic(state, hp, cfg, sweep_index, static_cast<std::size_t>(k));

    // 6
    detail::draw_all_z(state, corpus, cfg.seed, sweep_index, par);
    refresh_counts(state, corpus);
}

struct PosteriorSample
{
    std::int64_t sweep = 0;
    BetaPanel beta;
    EtaPanel eta;
    AlphaPaths alpha;

    friend bool operator==(const PosteriorSample& a, const PosteriorSample& b)
    {
        return a.sweep == b.sweep && a.beta == b.beta && a.eta == b.eta && alpha_equal(a.alpha, b.alpha);
    }
};

struct PosteriorArchive
{
    ChainConfig config;
    Hyperparams hp;
    std::size_t V = 0, T = 0;
    std::vector<std::size_t> docs;
    std::vector<PosteriorSample> samples;

    std::size_t K() const noexcept { return config.K; }
};

/// Called after every sweep with (sweep index, state).
using SweepObserver = std::function<void(std::int64_t, const ModelState&)>;

/// n_iter sweeps; every thin-th state is recorded and the first burn_in
/// records are dropped.
inline PosteriorArchive run_chain(const Corpus& corpus, const ChainConfig& cfg, const Hyperparams& hp,
                                  const SweepObserver& observer = {})
{
    ModelState state = init_chain(corpus, cfg, hp);
    PosteriorArchive archive;
    archive.config = cfg;
    archive.hp = hp;
    archive.V = corpus.vocab_size;
    archive.T = corpus.num_slices();
    archive.docs = docs_per_slice(corpus);
    archive.samples.reserve(static_cast<std::size_t>(cfg.num_records() - cfg.burn_in));

    std::int64_t recorded = 0;
    for (std::int64_t s = 1; s <= cfg.n_iter; ++s) {
        sweep(state, corpus, hp, cfg, static_cast<std::uint64_t>(s));
        if (observer)
            observer(s, state);
        if (s % cfg.thin == 0) {
            if (recorded >= cfg.burn_in)
                archive.samples.push_back({s, state.beta, state.eta, state.alpha});
            ++recorded;
        }
    }
    return archive;
}

/// Seed of chain c in a multi-chain run.
inline std::uint64_t chain_seed(std::uint64_t seed, std::size_t c) noexcept { return stream_id({seed, c}); }

/// Independent chains with seeds chain_seed(cfg.seed, c).  Chains run
/// concurrently when cfg.parallel is set; each chain is then single-threaded.
inline std::vector<PosteriorArchive> run_multi_chain(const Corpus& corpus, const ChainConfig& cfg,
                                                     const Hyperparams& hp, std::size_t n_chains)
{
    if (n_chains < 1)
        throw std::invalid_argument("run_multi_chain: need at least one chain");
    std::vector<PosteriorArchive> out(n_chains);
    const auto n = detail::as_signed(n_chains);
#pragma omp parallel for schedule(dynamic, 1) if (cfg.parallel)
    for (std::int64_t c = 0; c < n; ++c) {
        ChainConfig cc = cfg;
        cc.seed = chain_seed(cfg.seed, static_cast<std::size_t>(c));
        out[static_cast<std::size_t>(c)] = run_chain(corpus, cc, hp);
    }
    return out;
}

} // namespace dltm
