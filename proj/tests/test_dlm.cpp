#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "dlm_oracle.hpp"
#include "dltm/dlm.hpp"

using namespace dltm;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

VectorXd vec(std::initializer_list<double> v)
{
    VectorXd x(static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (double d : v)
        x(i++) = d;
    return x;
}

void expect_psd_symmetric(const MatrixXd& m)
{
    EXPECT_LE((m - m.transpose()).cwiseAbs().maxCoeff(), 1e-12);
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(m);
    EXPECT_GE(es.eigenvalues().minCoeff(), -1e-10);
}

} // namespace

TEST(TrendSpec, Structures)
{
    const auto rw = trend_spec(TrendKind::random_walk, 0.025, 0.25);
    EXPECT_EQ(rw.dim(), 1);
    EXPECT_EQ(rw.G(0, 0), 1.0);
    EXPECT_EQ(rw.F_row(0), 1.0);
    EXPECT_EQ(rw.W(0, 0), 0.025);

    const auto lin = trend_spec(TrendKind::linear, 0.1, 0.25);
    EXPECT_EQ(lin.G, (MatrixXd(2, 2) << 1, 1, 0, 1).finished());
    EXPECT_EQ(lin.F_row, (Eigen::RowVectorXd(2) << 1, 0).finished());

    const auto quad = trend_spec(TrendKind::quadratic, 0.1, 0.25);
    EXPECT_EQ(quad.G, (MatrixXd(3, 3) << 1, 1, 1, 0, 1, 1, 0, 0, 1).finished());
    EXPECT_EQ(quad.F_row, (Eigen::RowVectorXd(3) << 1, 0, 0).finished());

    const auto harm = trend_spec(TrendKind::harmonic, 0.1, 0.25, 0.0, 0.1, std::numbers::pi / 2);
    EXPECT_LE((harm.G - (MatrixXd(2, 2) << 0, 1, -1, 0).finished()).cwiseAbs().maxCoeff(), 1e-15);
    EXPECT_EQ(harm.F_row, (Eigen::RowVectorXd(2) << 1, 0).finished());
}

TEST(TrendSpec, RejectsBadVariances)
{
    EXPECT_THROW(trend_spec(TrendKind::linear, -0.1, 0.25), std::invalid_argument);
    EXPECT_NO_THROW(trend_spec(TrendKind::linear, 0.0, 0.25));
    EXPECT_THROW(trend_spec(TrendKind::linear, 0.1, -1.0), std::invalid_argument);
    EXPECT_THROW(parse_trend_kind("cubic"), std::invalid_argument);
}

TEST(ForwardFilter, HandArithmetic)
{
    StateSpaceSpec s = trend_spec(TrendKind::random_walk, 1.0, 1.0, 0.0, 1.0);
    s.W.setZero();
    const auto fm = forward_filter(s, {vec({1.0})}, {}, true);
    EXPECT_DOUBLE_EQ(fm.R[0](0, 0), 1.0);
    EXPECT_DOUBLE_EQ(fm.Q[0](0, 0), 2.0);
    EXPECT_DOUBLE_EQ(fm.m[0](0), 0.5);
    EXPECT_DOUBLE_EQ(fm.C[0](0, 0), 0.5);
    EXPECT_DOUBLE_EQ(fm.f[0](0), 0.0);
    EXPECT_DOUBLE_EQ(fm.e[0](0), 1.0);
}

TEST(ForwardFilter, EmptySliceKeepsPrior)
{
    const auto s = trend_spec(TrendKind::linear, 0.1, 0.5, 1.0, 0.2);
    const auto fm = forward_filter(s, {vec({0.3, 0.1}), VectorXd(0), vec({2.0})});
    EXPECT_EQ(fm.m[1], fm.a[1]);
    EXPECT_EQ(fm.C[1], fm.R[1]);
}

TEST(ForwardFilter, MatchesJointGaussianOracle)
{
    Stream rng = Stream::at(101, {});
    for (Eigen::Index p = 1; p <= 3; ++p)
        for (std::size_t T = 1; T <= 4; ++T)
            for (int rep = 0; rep < 3; ++rep) {
                const auto inst = testutil::random_instance(p, T, rng);
                const auto fm = forward_filter(inst.spec, inst.obs, inst.designs, true);
                for (std::size_t t = 0; t < T; ++t) {
                    const auto post = testutil::condition(inst, t + 1);
                    const auto at = static_cast<Eigen::Index>(t) * p;
                    EXPECT_LE((fm.m[t] - post.mean.segment(at, p)).cwiseAbs().maxCoeff(), 1e-8);
                    EXPECT_LE((fm.C[t] - post.cov.block(at, at, p, p)).cwiseAbs().maxCoeff(), 1e-8);
                    const auto prior = testutil::condition(inst, t);
                    EXPECT_LE((fm.a[t] - prior.mean.segment(at, p)).cwiseAbs().maxCoeff(), 1e-8);
                    EXPECT_LE((fm.R[t] - prior.cov.block(at, at, p, p)).cwiseAbs().maxCoeff(), 1e-8);
                    expect_psd_symmetric(fm.C[t]);
                    expect_psd_symmetric(fm.R[t]);
                    // Q_t is the covariance of the slice's observations given
                    // the earlier ones
                    const MatrixXd Q =
                        inst.designs[t] * prior.cov.block(at, at, p, p) * inst.designs[t].transpose() +
                        inst.spec.obs_var * MatrixXd::Identity(inst.obs[t].size(), inst.obs[t].size());
                    if (Q.size() > 0)
                        EXPECT_LE((fm.Q[t] - Q).cwiseAbs().maxCoeff(), 1e-8);
                    else
                        EXPECT_EQ(fm.Q[t].size(), 0);
                }
            }
}

TEST(ForwardFilter, InvariantToObservationOrder)
{
    Stream rng = Stream::at(102, {});
    auto inst = testutil::random_instance(2, 3, rng);
    inst.obs[1] = vec({0.5, -1.0, 2.0});
    inst.designs[1] = (MatrixXd(3, 2) << 1, 0.2, -0.5, 1, 0.3, 0.3).finished();
    const auto a = forward_filter(inst.spec, inst.obs, inst.designs);
    auto swapped = inst;
    swapped.obs[1] = vec({2.0, 0.5, -1.0});
    swapped.designs[1] = (MatrixXd(3, 2) << 0.3, 0.3, 1, 0.2, -0.5, 1).finished();
    const auto b = forward_filter(swapped.spec, swapped.obs, swapped.designs);
    for (std::size_t t = 0; t < 3; ++t) {
        EXPECT_LE((a.m[t] - b.m[t]).cwiseAbs().maxCoeff(), 1e-12);
        EXPECT_LE((a.C[t] - b.C[t]).cwiseAbs().maxCoeff(), 1e-12);
    }
}

TEST(ForwardFilter, DiscountEvolution)
{
    auto s = trend_spec(TrendKind::linear, 0.1, 0.5, 0.0, 0.3);
    s.evolution = Evolution::discount;
    s.discount = 0.8;
    const auto fm = forward_filter(s, {VectorXd(0), VectorXd(0)});
    EXPECT_LE((fm.R[0] - s.G * s.C0 * s.G.transpose() / 0.8).cwiseAbs().maxCoeff(), 1e-14);
    EXPECT_LE((fm.R[1] - s.G * fm.C[0] * s.G.transpose() / 0.8).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(BackwardSample, DegenerateIsDeterministic)
{
    auto s = trend_spec(TrendKind::harmonic, 1.0, 0.5, 0.0, 1.0, std::numbers::pi / 3);
    s.W.setZero();
    s.C0.setZero();
    s.m0 = vec({1.0, -0.5});
    Stream rng = Stream::at(5, {});
    const auto path = ffbs(s, {vec({3.0}), vec({-2.0, 1.0}), VectorXd(0)}, rng);
    VectorXd expect = s.m0;
    for (const auto& a : path) {
        expect = s.G * expect;
        EXPECT_LE((a - expect).cwiseAbs().maxCoeff(), 1e-12);
    }
}

TEST(BackwardSample, MatchesSmoothedMoments)
{
    Stream rng = Stream::at(103, {});
    auto inst = testutil::random_instance(1, 3, rng);
    const auto post = testutil::condition(inst, 3);
    const auto fm = forward_filter(inst.spec, inst.obs, inst.designs);
    const int n = 10000;
    VectorXd sum = VectorXd::Zero(3);
    MatrixXd outer = MatrixXd::Zero(3, 3);
    for (int i = 0; i < n; ++i) {
        Stream r = Stream::at(104, {static_cast<std::uint64_t>(i)});
        const auto path = backward_sample(fm, inst.spec, r);
        const VectorXd x = vec({path[0](0), path[1](0), path[2](0)});
        sum += x;
        outer += x * x.transpose();
    }
    const VectorXd mean = sum / n;
    const MatrixXd cov = outer / n - mean * mean.transpose();
    for (Eigen::Index t = 0; t < 3; ++t) {
        const double sd = std::sqrt(post.cov(t, t));
        EXPECT_NEAR(mean(t), post.mean(t), 4 * sd / std::sqrt(double(n)));
        EXPECT_NEAR(cov(t, t), post.cov(t, t), 4 * post.cov(t, t) * std::sqrt(2.0 / n));
    }
    for (Eigen::Index t = 0; t < 2; ++t) {
        // se of a sample covariance: sqrt((s11 s22 + s12^2) / n)
        const double se = std::sqrt((post.cov(t, t) * post.cov(t + 1, t + 1) + std::pow(post.cov(t, t + 1), 2)) / n);
        EXPECT_NEAR(cov(t, t + 1), post.cov(t, t + 1), 4 * se);
    }
}

TEST(ForecastState, Examples)
{
    const auto rw = trend_spec(TrendKind::random_walk, 0.025, 0.25);
    const auto f1 = forecast_state(rw, vec({0.7}), MatrixXd::Constant(1, 1, 0.2), 1);
    EXPECT_DOUBLE_EQ(f1[0].mean(0), 0.7);
    EXPECT_DOUBLE_EQ(f1[0].cov(0, 0), 0.225);

    const auto harm = trend_spec(TrendKind::harmonic, 0.01, 0.25, 0.0, 0.1, std::numbers::pi / 2);
    const VectorXd m = vec({1.5, -0.3});
    const auto f4 = forecast_state(harm, m, MatrixXd::Zero(2, 2), 4);
    EXPECT_LE((f4[3].mean - m).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LE((f4[0].mean - vec({-0.3, -1.5})).cwiseAbs().maxCoeff(), 1e-12);

    const auto lin = trend_spec(TrendKind::linear, 0.01, 0.25);
    const auto f2 = forecast_state(lin, vec({1.0, 0.5}), MatrixXd::Zero(2, 2), 2);
    EXPECT_LE((f2[0].mean - vec({1.5, 0.5})).cwiseAbs().maxCoeff(), 1e-15);
    EXPECT_LE((f2[1].mean - vec({2.0, 0.5})).cwiseAbs().maxCoeff(), 1e-15);
    EXPECT_THROW(forecast_state(lin, vec({1.0, 0.5}), MatrixXd::Zero(2, 2), 0), std::invalid_argument);
}
