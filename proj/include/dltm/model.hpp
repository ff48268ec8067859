#pragma once

// Parameter panels, hyperparameters and chain settings.

#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "dltm/corpus.hpp"
#include "dltm/dlm.hpp"
#include "dltm/polya_gamma.hpp"

namespace dltm {

/// beta_{k,v,t}, stored so that each (k, t) slice over v is contiguous.
/// Column v = V-1 is pinned to zero.
struct BetaPanel
{
    std::size_t K = 0, V = 0, T = 0;
    std::vector<double> data;

    BetaPanel() = default;
    BetaPanel(std::size_t K_, std::size_t V_, std::size_t T_) : K(K_), V(V_), T(T_), data(K_ * V_ * T_, 0.0) {}

    double operator()(std::size_t k, std::size_t v, std::size_t t) const { return data[(k * T + t) * V + v]; }
    double& operator()(std::size_t k, std::size_t v, std::size_t t) { return data[(k * T + t) * V + v]; }

    std::span<const double> slice(std::size_t k, std::size_t t) const { return {data.data() + (k * T + t) * V, V}; }
    std::span<double> slice(std::size_t k, std::size_t t) { return {data.data() + (k * T + t) * V, V}; }

    /// K x V matrix of slice t.
    Eigen::MatrixXd at_time(std::size_t t) const
    {
        Eigen::MatrixXd m(static_cast<Eigen::Index>(K), static_cast<Eigen::Index>(V));
        for (std::size_t k = 0; k < K; ++k)
            for (std::size_t v = 0; v < V; ++v)
                m(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(v)) = (*this)(k, v, t);
        return m;
    }

    friend bool operator==(const BetaPanel&, const BetaPanel&) = default;
};

/// eta_{d,k,t}: rows[t][d * K + k].  Column k = K-1 is pinned to zero.
struct EtaPanel
{
    std::size_t K = 0;
    std::vector<std::vector<double>> rows;

    EtaPanel() = default;
    EtaPanel(std::size_t K_, const std::vector<std::size_t>& docs_per_slice) : K(K_), rows(docs_per_slice.size())
    {
        for (std::size_t t = 0; t < rows.size(); ++t)
            rows[t].assign(docs_per_slice[t] * K, 0.0);
    }

    std::size_t num_slices() const noexcept { return rows.size(); }
    std::size_t num_docs(std::size_t t) const noexcept { return K ? rows[t].size() / K : 0; }

    double operator()(std::size_t t, std::size_t d, std::size_t k) const { return rows[t][d * K + k]; }
    double& operator()(std::size_t t, std::size_t d, std::size_t k) { return rows[t][d * K + k]; }

    std::span<const double> row(std::size_t t, std::size_t d) const { return {rows[t].data() + d * K, K}; }
    std::span<double> row(std::size_t t, std::size_t d) { return {rows[t].data() + d * K, K}; }

    friend bool operator==(const EtaPanel&, const EtaPanel&) = default;
};

/// alpha[k][t] for the K-1 free topics.
using AlphaPaths = std::vector<std::vector<Eigen::VectorXd>>;

inline bool alpha_equal(const AlphaPaths& a, const AlphaPaths& b)
{
    if (a.size() != b.size())
        return false;
    for (std::size_t k = 0; k < a.size(); ++k) {
        if (a[k].size() != b[k].size())
            return false;
        for (std::size_t t = 0; t < a[k].size(); ++t)
            if (a[k][t].size() != b[k][t].size() || a[k][t] != b[k][t])
                return false;
    }
    return true;
}

inline std::vector<std::size_t> docs_per_slice(const Corpus& corpus)
{
    std::vector<std::size_t> n(corpus.num_slices());
    for (std::size_t t = 0; t < n.size(); ++t)
        n[t] = corpus.num_docs(t);
    return n;
}

struct Hyperparams
{
    double sigma2 = 0.01; // beta random-walk innovation
    double beta0_mean = 0.0;
    double beta0_var = 1.0;
    StateSpaceSpec spec = trend_spec(TrendKind::random_walk, 0.025, 0.25, 0.0, 0.1);
    double init_inflation = 4.0; // prior variances are multiplied by this at initialisation

    double a2() const noexcept { return spec.obs_var; }

    void validate() const
    {
        if (!(sigma2 > 0.0) || !(beta0_var > 0.0))
            throw std::invalid_argument("sigma^2 and the beta_0 variance must be positive");
        if (!(init_inflation > 0.0))
            throw std::invalid_argument("initialisation inflation must be positive");
        spec.validate();
    }
};

/// When the Polya-Gamma auxiliaries are refreshed.
enum class AuxSchedule {
    /// Each zeta_{k,v,.} (omega_{d,k,t}) is drawn right before the update of
    /// its coordinate, from the current state.
    fused,
    /// All beta (eta) coordinates are updated first using the auxiliaries
    /// held over from the previous sweep; then all auxiliaries are redrawn.
    /// The density of each held-over auxiliary depends on the other
    /// coordinates through the excluded log-sum, so this order does not leave
    /// the posterior exactly invariant.  A joint-distribution test on a tiny
    /// corpus shows the bias; kept for comparison only.
    separate
};

inline std::string to_string(AuxSchedule s) { return s == AuxSchedule::fused ? "fused" : "separate"; }

inline AuxSchedule parse_aux_schedule(const std::string& s)
{
    if (s == "fused")
        return AuxSchedule::fused;
    if (s == "separate")
        return AuxSchedule::separate;
    throw std::invalid_argument("unknown auxiliary schedule '" + s + "'");
}

struct ChainConfig
{
    std::size_t K = 3;
    std::int64_t n_iter = 1000;
    std::int64_t thin = 100;
    std::int64_t burn_in = 0; // in recorded samples
    std::uint64_t seed = 1;
    std::int64_t pg_threshold = kDefaultPgThreshold;
    bool parallel = true;
    AuxSchedule aux = AuxSchedule::fused;
    bool cached_log_sums = true;

    std::int64_t num_records() const noexcept { return thin > 0 ? n_iter / thin : 0; }

    void validate() const
    {
        if (K < 1)
            throw std::invalid_argument("K must be at least 1");
        if (thin < 1 || n_iter < thin)
            throw std::invalid_argument("need n_iter >= thin >= 1");
        if (burn_in < 0 || burn_in >= num_records())
            throw std::invalid_argument("burn_in must be below n_iter / thin");
        if (pg_threshold < 1)
            throw std::invalid_argument("pg_threshold must be at least 1");
    }
};

/// Everything the sampler carries between sweeps.
struct ModelState
{
    BetaPanel beta;
    EtaPanel eta;
    AlphaPaths alpha;
    Assignments z;
    BetaPanel zeta;  // auxiliaries for beta
    EtaPanel omega;  // auxiliaries for eta
    CountStatistics counts;
};

inline void refresh_counts(ModelState& state, const Corpus& corpus)
{
    state.counts = count_statistics(corpus, state.z, state.beta.K);
}

} // namespace dltm
