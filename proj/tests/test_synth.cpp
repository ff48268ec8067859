#include <gtest/gtest.h>

#include <cmath>

#include "dltm/synth.hpp"

using namespace dltm;

TEST(BlockTopics, Boundaries)
{
    EXPECT_EQ(block_boundaries(1000, 3), (std::vector<std::size_t>{0, 333, 667, 1000}));
    EXPECT_EQ(block_boundaries(10, 2), (std::vector<std::size_t>{0, 5, 10}));
    EXPECT_EQ(block_boundaries(3, 3), (std::vector<std::size_t>{0, 1, 2, 3}));
}

TEST(BlockTopics, Values)
{
    const auto b = make_block_topics(1000, 3, 3.0);
    EXPECT_EQ(b(0, 0), 3.0);
    EXPECT_EQ(b(0, 332), 3.0);
    EXPECT_EQ(b(0, 333), 0.0);
    EXPECT_EQ(b(1, 333), 3.0);
    EXPECT_EQ(b(1, 666), 3.0);
    EXPECT_EQ(b(2, 667), 3.0);
    EXPECT_EQ(b(2, 999), 0.0); // pinned coordinate
    EXPECT_EQ(b.sum(), 3.0 * (333 + 334 + 332));
    EXPECT_EQ(make_block_topics(10, 2, 0.0).cwiseAbs().maxCoeff(), 0.0);
    EXPECT_THROW(make_block_topics(2, 3, 3.0), std::invalid_argument);
}

TEST(BlockTopics, InBlockMass)
{
    // 333 e^3 / (333 e^3 + 667)
    const auto b = make_block_topics(1000, 3, 3.0);
    std::vector<double> row(b.cols());
    for (Eigen::Index v = 0; v < b.cols(); ++v)
        row[static_cast<std::size_t>(v)] = b(0, v);
    const auto p = softmax(row);
    double mass = 0;
    for (std::size_t v = 0; v < 333; ++v)
        mass += p[v];
    const double e3 = std::exp(3.0);
    EXPECT_NEAR(mass, 333 * e3 / (333 * e3 + 667), 1e-12);
    EXPECT_NEAR(mass, 0.909, 1e-3);
}

TEST(Simulate, DeterministicAndSeedSensitive)
{
    SynthDesign d;
    d.V = 50;
    d.doc_rate = 20;
    d.word_rate = 30;
    const auto a = simulate_corpus(d);
    const auto b = simulate_corpus(d);
    EXPECT_EQ(a.corpus, b.corpus);
    EXPECT_EQ(a.truth.beta, b.truth.beta);
    EXPECT_EQ(a.truth.z, b.truth.z);
    d.seed = 2;
    EXPECT_FALSE(simulate_corpus(d).corpus == a.corpus);
}

TEST(Simulate, ShapesAndRates)
{
    SynthDesign d;
    d.V = 60;
    d.T = 4;
    d.doc_rate = 400;
    d.word_rate = 40;
    const auto r = simulate_corpus(d);
    ASSERT_EQ(r.corpus.num_slices(), 4u);
    double docs = 0, words = 0;
    for (std::size_t t = 0; t < 4; ++t) {
        docs += static_cast<double>(r.corpus.num_docs(t));
        for (const auto& doc : r.corpus.slices[t]) {
            EXPECT_FALSE(doc.empty());
            words += static_cast<double>(doc.size());
        }
    }
    // D_t ~ Poisson(400): mean over 4 slices has sd 10
    EXPECT_NEAR(docs / 4, 400, 40);
    EXPECT_NEAR(words / docs, 40, 1.0);
    for (std::size_t k = 0; k < 3; ++k)
        for (std::size_t t = 0; t < 4; ++t)
            EXPECT_EQ(r.truth.beta(k, 59, t), 0.0);
    for (std::size_t t = 0; t < 4; ++t) {
        double s = 0, c = 0;
        for (std::size_t k = 0; k < 3; ++k) {
            s += r.truth.slice_proportions[t][k];
            c += r.truth.topic_curve[t][k];
        }
        EXPECT_NEAR(s, 1.0, 1e-12);
        EXPECT_NEAR(c, 1.0, 1e-12);
    }
}

TEST(Simulate, WordFrequenciesFollowTopic)
{
    // one long document, one topic
    SynthDesign d;
    d.K = 1;
    d.V = 20;
    d.T = 1;
    d.doc_rate = 5;
    d.word_rate = 400000;
    d.seed = 8;
    const auto r = simulate_corpus(d);
    ASSERT_GE(r.corpus.num_docs(0), 1u);
    const auto& doc = r.corpus.slices[0][0];
    std::vector<double> freq(20, 0.0);
    for (auto w : doc)
        freq[w] += 1.0 / static_cast<double>(doc.size());
    const auto p = softmax(r.truth.beta.slice(0, 0));
    for (std::size_t v = 0; v < 20; ++v)
        EXPECT_NEAR(freq[v], p[v], 4 * std::sqrt(p[v] * (1 - p[v]) / static_cast<double>(doc.size()))) << v;
}

TEST(Simulate, TopicAssignmentsFollowEta)
{
    SynthDesign d;
    d.K = 3;
    d.V = 30;
    d.T = 1;
    d.doc_rate = 3;
    d.word_rate = 100000;
    d.seed = 5;
    const auto r = simulate_corpus(d);
    for (std::size_t doc = 0; doc < r.corpus.num_docs(0); ++doc) {
        const auto theta = softmax(r.truth.eta.row(0, doc));
        const auto& z = r.truth.z[0][doc];
        std::vector<double> obs(3, 0.0);
        for (auto k : z)
            obs[k] += 1;
        double chi2 = 0;
        for (std::size_t k = 0; k < 3; ++k) {
            const double e = theta[k] * static_cast<double>(z.size());
            chi2 += (obs[k] - e) * (obs[k] - e) / e;
        }
        EXPECT_LT(chi2, 13.8) << doc; // chi^2_2 upper 0.001 point
    }
}

TEST(Simulate, HarmonicTruthHasPeriodFour)
{
    SynthDesign d;
    d.K = 2;
    d.V = 10;
    d.T = 12;
    d.doc_rate = 2;
    d.word_rate = 5;
    d.spec = trend_spec(TrendKind::harmonic, 0.0, 0.5, 0.0, 0.0);
    d.topic_m0 = {Eigen::Vector2d(1.5, 0.0)};
    const auto r = simulate_corpus(d);
    const auto& path = r.truth.alpha[0];
    for (std::size_t t = 0; t + 4 < 12; ++t)
        EXPECT_NEAR((path[t] - path[t + 4]).norm(), 0.0, 1e-12) << t;
    EXPECT_GT((path[0] - path[2]).norm(), 1.0);
}

TEST(Simulate, DesignValidation)
{
    SynthDesign d;
    d.V = 2;
    EXPECT_THROW(simulate_corpus(d), std::invalid_argument);
    d = SynthDesign{};
    d.word_rate = 0;
    EXPECT_THROW(simulate_corpus(d), std::invalid_argument);
    d = SynthDesign{};
    d.topic_m0 = {Eigen::VectorXd::Zero(1)};
    EXPECT_THROW(simulate_corpus(d), std::invalid_argument);
}
