#pragma once

// Dynamic linear models for the topic-level states alpha_{k,1:T}:
//
//     eta_{.,k,t} = F_t alpha_{k,t} + eps,   eps ~ N(0, a^2 I_{D_t})
//     alpha_{k,t} = G alpha_{k,t-1} + xi,    xi  ~ N(0, W)
//     alpha_{k,0} ~ N(m0, C0)
//
// with trend builders for the random walk (the DTM special case), local
// linear, local quadratic and single-harmonic components, a Kalman forward
// filter and a backward sampler.

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "dltm/rng.hpp"

namespace dltm {

using Eigen::MatrixXd;
using Eigen::RowVectorXd;
using Eigen::VectorXd;

enum class TrendKind { random_walk, linear, quadratic, harmonic };

inline std::string to_string(TrendKind kind)
{
    switch (kind) {
    case TrendKind::random_walk: return "random_walk";
    case TrendKind::linear: return "linear";
    case TrendKind::quadratic: return "quadratic";
    case TrendKind::harmonic: return "harmonic";
    }
    return "?";
}

inline TrendKind parse_trend_kind(const std::string& s)
{
    if (s == "random_walk" || s == "rw" || s == "dtm")
        return TrendKind::random_walk;
    if (s == "linear")
        return TrendKind::linear;
    if (s == "quadratic")
        return TrendKind::quadratic;
    if (s == "harmonic")
        return TrendKind::harmonic;
    throw std::invalid_argument("unknown trend kind '" + s + "'");
}

/// How R_t is formed from C_{t-1}.
enum class Evolution {
    additive, // R_t = G C_{t-1} G' + W
    discount  // R_t = G C_{t-1} G' / discount
};

struct StateSpaceSpec
{
    TrendKind kind = TrendKind::random_walk;
    double frequency = 0.0; // harmonic only, radians per slice
    RowVectorXd F_row;      // design row shared by every document
    MatrixXd G;
    MatrixXd W;
    VectorXd m0;
    MatrixXd C0;
    double obs_var = 0.25; // a^2
    Evolution evolution = Evolution::additive;
    double discount = 1.0;

    Eigen::Index dim() const noexcept { return G.rows(); }

    void validate() const
    {
        const auto p = dim();
        if (p < 1 || G.cols() != p || W.rows() != p || W.cols() != p || C0.rows() != p || C0.cols() != p ||
            m0.size() != p || F_row.size() != p)
            throw std::invalid_argument("state-space dimensions are inconsistent");
        if (!(obs_var > 0.0))
            throw std::invalid_argument("observation variance a^2 must be positive");
        if (evolution == Evolution::discount && !(discount > 0.0 && discount <= 1.0))
            throw std::invalid_argument("discount factor must lie in (0, 1]");
        auto psd = [](const MatrixXd& m) {
            if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-12)
                return false;
            Eigen::SelfAdjointEigenSolver<MatrixXd> es(m, Eigen::EigenvaluesOnly);
            return es.eigenvalues().minCoeff() >= -1e-10;
        };
        if (!psd(W) || !psd(C0))
            throw std::invalid_argument("W and C0 must be symmetric positive semidefinite");
    }
};

/// Build the system for one trend component.  W = delta2 I, C0 = c0_var I
/// and m0 = m0_value * 1 unless overridden afterwards.
inline StateSpaceSpec trend_spec(TrendKind kind, double delta2, double obs_var, double m0_value = 0.0,
                                 double c0_var = 0.1, double frequency = std::numbers::pi / 2)
{
    if (!(delta2 >= 0.0))
        throw std::invalid_argument("trend_spec: delta^2 must be nonnegative");
    if (!(obs_var > 0.0))
        throw std::invalid_argument("trend_spec: a^2 must be positive");
    if (!(c0_var >= 0.0))
        throw std::invalid_argument("trend_spec: C0 variance must be nonnegative");
    StateSpaceSpec s;
    s.kind = kind;
    s.obs_var = obs_var;
    Eigen::Index p = 1;
    switch (kind) {
    case TrendKind::random_walk:
        p = 1;
        s.G = MatrixXd::Ones(1, 1);
        break;
    case TrendKind::linear:
        p = 2;
        s.G.resize(2, 2);
        s.G << 1, 1, 0, 1;
        break;
    case TrendKind::quadratic:
        p = 3;
        s.G.resize(3, 3);
        s.G << 1, 1, 1, 0, 1, 1, 0, 0, 1;
        break;
    case TrendKind::harmonic:
        p = 2;
        s.frequency = frequency;
        s.G.resize(2, 2);
        s.G << std::cos(frequency), std::sin(frequency), -std::sin(frequency), std::cos(frequency);
        break;
    }
    s.F_row = RowVectorXd::Zero(p);
    s.F_row(0) = 1.0;
    s.W = delta2 * MatrixXd::Identity(p, p);
    s.m0 = VectorXd::Constant(p, m0_value);
    s.C0 = c0_var * MatrixXd::Identity(p, p);
    return s;
}

struct FilteredMoments
{
    std::vector<VectorXd> a, m; // prior / posterior means
    std::vector<MatrixXd> R, C; // prior / posterior covariances
    std::vector<VectorXd> f, e; // one-step forecasts of the observations and their errors
    std::vector<MatrixXd> Q;    // forecast covariances; only filled on request

    std::size_t size() const noexcept { return m.size(); }
};

namespace detail {

inline void symmetrize(MatrixXd& m) { m = 0.5 * (m + m.transpose()).eval(); }

inline MatrixXd evolve_cov(const StateSpaceSpec& spec, const MatrixXd& c)
{
    MatrixXd r = spec.G * c * spec.G.transpose();
    if (spec.evolution == Evolution::additive)
        r += spec.W;
    else
        r /= spec.discount;
    symmetrize(r);
    return r;
}

inline MatrixXd design_for(const StateSpaceSpec& spec, const std::vector<MatrixXd>& designs, std::size_t t,
                           Eigen::Index rows)
{
    if (!designs.empty()) {
        if (designs[t].rows() != rows || designs[t].cols() != spec.dim())
            throw std::invalid_argument("design matrix shape does not match the observations");
        return designs[t];
    }
    return spec.F_row.replicate(rows, 1);
}

/// Symmetric pseudo-inverse; eigenvalues below tol * max(1, |lambda_max|) are
/// treated as zero.
inline MatrixXd pinv_sym(const MatrixXd& m, double tol = 1e-10)
{
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(m);
    const VectorXd& ev = es.eigenvalues();
    const double cutoff = tol * std::max(1.0, ev.cwiseAbs().maxCoeff());
    VectorXd inv(ev.size());
    for (Eigen::Index i = 0; i < ev.size(); ++i)
        inv(i) = ev(i) > cutoff ? 1.0 / ev(i) : 0.0;
    return es.eigenvectors() * inv.asDiagonal() * es.eigenvectors().transpose();
}

} // namespace detail

/// Draw from N(mean, cov) for a PSD (possibly singular) covariance.  Always
/// consumes exactly dim normals.
inline VectorXd sample_mvn(const VectorXd& mean, const MatrixXd& cov, Stream& rng)
{
    const auto p = mean.size();
    VectorXd z(p);
    for (Eigen::Index i = 0; i < p; ++i)
        z(i) = rng.normal();
    if (p == 1)
        return mean + VectorXd::Constant(1, std::sqrt(std::max(cov(0, 0), 0.0)) * z(0));
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(cov);
    const VectorXd sd = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    return mean + es.eigenvectors() * sd.cwiseProduct(z);
}

/// Kalman filter for alpha_{1:T} given eta rows per slice.  obs[t] holds the
/// D_t observations of slice t (possibly none).  designs, when given, holds a
/// D_t x p matrix per slice; otherwise every row equals spec.F_row.
///
/// Observations within a slice are absorbed one at a time.  Their noise is
/// independent, so this gives the same m_t and C_t as the joint update with
/// Q_t = F R F' + a^2 I while only ever inverting scalars.
inline FilteredMoments forward_filter(const StateSpaceSpec& spec, const std::vector<VectorXd>& obs,
                                      const std::vector<MatrixXd>& designs = {}, bool keep_forecast_cov = false)
{
    const std::size_t T = obs.size();
    if (!designs.empty() && designs.size() != T)
        throw std::invalid_argument("forward_filter: one design matrix per slice is required");
    FilteredMoments fm;
    fm.a.resize(T);
    fm.m.resize(T);
    fm.R.resize(T);
    fm.C.resize(T);
    fm.f.resize(T);
    fm.e.resize(T);
    if (keep_forecast_cov)
        fm.Q.resize(T);

    VectorXd m = spec.m0;
    MatrixXd C = spec.C0;
    for (std::size_t t = 0; t < T; ++t) {
        const VectorXd a = spec.G * m;
        const MatrixXd R = detail::evolve_cov(spec, C);
        const MatrixXd F = detail::design_for(spec, designs, t, obs[t].size());

        fm.a[t] = a;
        fm.R[t] = R;
        fm.f[t] = F * a;
        fm.e[t] = obs[t] - fm.f[t];
        if (keep_forecast_cov) {
            fm.Q[t] = F * R * F.transpose();
            fm.Q[t].diagonal().array() += spec.obs_var;
        }

        m = a;
        C = R;
        for (Eigen::Index i = 0; i < obs[t].size(); ++i) {
            const RowVectorXd Fi = F.row(i);
            const VectorXd CF = C * Fi.transpose();
            const double q = Fi.dot(CF) + spec.obs_var;
            if (!(q > 0.0))
                throw std::runtime_error("forward_filter: singular forecast variance");
            const VectorXd A = CF / q;
            m += A * (obs[t](i) - Fi.dot(m));
            C -= A * CF.transpose();
        }
        detail::symmetrize(C);
        fm.m[t] = m;
        fm.C[t] = C;
    }
    return fm;
}

/// Draw alpha_{1:T} from its joint posterior given the filtered moments.
inline std::vector<VectorXd> backward_sample(const FilteredMoments& fm, const StateSpaceSpec& spec, Stream& rng)
{
    const std::size_t T = fm.size();
    std::vector<VectorXd> path(T);
    if (T == 0)
        return path;
    path[T - 1] = sample_mvn(fm.m[T - 1], fm.C[T - 1], rng);
    for (std::size_t t = T - 1; t-- > 0;) {
        const MatrixXd B = fm.C[t] * spec.G.transpose() * detail::pinv_sym(fm.R[t + 1]);
        const VectorXd h = fm.m[t] + B * (path[t + 1] - fm.a[t + 1]);
        MatrixXd H = fm.C[t] - B * fm.R[t + 1] * B.transpose();
        detail::symmetrize(H);
        path[t] = sample_mvn(h, H, rng);
    }
    return path;
}

/// Convenience: filter then sample.
inline std::vector<VectorXd> ffbs(const StateSpaceSpec& spec, const std::vector<VectorXd>& obs, Stream& rng,
                                  const std::vector<MatrixXd>& designs = {})
{
    return backward_sample(forward_filter(spec, obs, designs), spec, rng);
}

struct StateForecast
{
    VectorXd mean;
    MatrixXd cov;
};

/// Moments of alpha_{T+1..T+h} given alpha_T ~ N(m_T, C_T).
inline std::vector<StateForecast> forecast_state(const StateSpaceSpec& spec, const VectorXd& m_T,
                                                 const MatrixXd& C_T, int horizon)
{
    if (horizon < 1)
        throw std::invalid_argument("forecast_state: horizon must be at least 1");
    std::vector<StateForecast> out;
    out.reserve(static_cast<std::size_t>(horizon));
    VectorXd mean = m_T;
    MatrixXd cov = C_T;
    for (int j = 0; j < horizon; ++j) {
        mean = spec.G * mean;
        cov = detail::evolve_cov(spec, cov);
        out.push_back({mean, cov});
    }
    return out;
}

/// Forward-simulate alpha_{0:T} from the prior; variances scaled by `inflate`.
/// Returns alpha_1..alpha_T.
inline std::vector<VectorXd> simulate_states(const StateSpaceSpec& spec, std::size_t T, Stream& rng,
                                             double inflate = 1.0)
{
    std::vector<VectorXd> path(T);
    VectorXd alpha = sample_mvn(spec.m0, inflate * spec.C0, rng);
    for (std::size_t t = 0; t < T; ++t) {
        alpha = sample_mvn(spec.G * alpha, inflate * spec.W, rng);
        path[t] = alpha;
    }
    return path;
}

} // namespace dltm
