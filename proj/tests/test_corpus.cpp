#include <gtest/gtest.h>

#include <sstream>

#include "dltm/corpus.hpp"
#include "dltm/rng.hpp"

using namespace dltm;

namespace {

Corpus parse(const std::string& text)
{
    std::istringstream in(text);
    return parse_corpus(in);
}

CorpusError::Kind error_kind(const std::string& text)
{
    try {
        parse(text);
    } catch (const CorpusError& e) {
        return e.kind();
    }
    ADD_FAILURE() << "no error for:\n" << text;
    return CorpusError::Kind::parse;
}

Corpus random_corpus(std::size_t V, std::size_t T, Stream& rng)
{
    Corpus c;
    c.vocab_size = V;
    c.slices.resize(T);
    for (auto& s : c.slices) {
        s.resize(rng.below(5));
        for (auto& d : s) {
            d.resize(rng.below(12));
            for (auto& w : d)
                w = static_cast<WordId>(rng.below(V));
        }
    }
    return c;
}

Assignments random_z(const Corpus& c, std::size_t K, Stream& rng)
{
    Assignments z(c.num_slices());
    for (std::size_t t = 0; t < z.size(); ++t) {
        z[t].resize(c.num_docs(t));
        for (std::size_t d = 0; d < z[t].size(); ++d) {
            z[t][d].resize(c.slices[t][d].size());
            for (auto& k : z[t][d])
                k = static_cast<TopicId>(rng.below(K));
        }
    }
    return z;
}

} // namespace

TEST(Corpus, ParsesSingleDocument)
{
    const Corpus c = parse("V=3 T=1\n1 0 1 1 2\n");
    EXPECT_EQ(c.vocab_size, 3u);
    ASSERT_EQ(c.num_slices(), 1u);
    ASSERT_EQ(c.num_docs(0), 1u);
    EXPECT_EQ(c.slices[0][0], (Document{0, 1, 1, 2}));
}

TEST(Corpus, SkipsCommentsAndBlankLines)
{
    const Corpus c = parse("# header follows\n\nV=4 T=2\n\n2 3\n# x\n1 0 0\n");
    EXPECT_EQ(c.num_docs(0), 1u);
    EXPECT_EQ(c.num_docs(1), 1u);
    EXPECT_EQ(c.total_words(), 3u);
}

TEST(Corpus, AllowsEmptySlicesAndDocuments)
{
    const Corpus c = parse("V=2 T=3\n3\n");
    EXPECT_EQ(c.num_docs(0), 0u);
    EXPECT_EQ(c.num_docs(2), 1u);
    EXPECT_TRUE(c.slices[2][0].empty());
}

TEST(Corpus, Errors)
{
    EXPECT_EQ(error_kind("V=3 T=1\n1 0 5\n"), CorpusError::Kind::bounds);
    EXPECT_EQ(error_kind("V=3 T=1\n2 0\n"), CorpusError::Kind::bounds);
    EXPECT_EQ(error_kind("V=3 T=1\n1 0 -1\n"), CorpusError::Kind::bounds);
    EXPECT_EQ(error_kind("V=3 T=1\n1 0 x\n"), CorpusError::Kind::parse);
    EXPECT_EQ(error_kind("V=3\n"), CorpusError::Kind::parse);
    EXPECT_EQ(error_kind("T=1 V=3\n"), CorpusError::Kind::parse);
    EXPECT_EQ(error_kind("V=3 T=0\n"), CorpusError::Kind::empty);
    EXPECT_EQ(error_kind(""), CorpusError::Kind::empty);
}

TEST(Corpus, RoundTripIsCanonical)
{
    const std::string messy = "# c\nV=5 T=2\n2   4 4\n\n1 0 1 2\n2 3\n";
    const Corpus c = parse(messy);
    std::ostringstream once;
    write_corpus(c, once);
    EXPECT_EQ(once.str(), "V=5 T=2\n1 0 1 2\n2 4 4\n2 3\n");
    std::ostringstream twice;
    write_corpus(parse(once.str()), twice);
    EXPECT_EQ(once.str(), twice.str());
}

TEST(Corpus, RandomRoundTrip)
{
    Stream rng = Stream::at(4, {});
    for (int i = 0; i < 20; ++i) {
        const Corpus c = random_corpus(1 + rng.below(30), 1 + rng.below(4), rng);
        std::ostringstream out;
        write_corpus(c, out);
        EXPECT_EQ(parse(out.str()), c);
    }
}

TEST(Corpus, ShortDocumentCount)
{
    Corpus c;
    c.vocab_size = 2;
    c.slices = {{Document(3, 0), Document(20, 1), Document(19, 1)}};
    EXPECT_EQ(count_short_documents(c, 20), 2u);
    EXPECT_EQ(count_short_documents(c, 1), 0u);
}

TEST(CountStatistics, TwoWordExample)
{
    Corpus c;
    c.vocab_size = 2;
    c.slices = {{{0, 1}}};
    const auto cs = count_statistics(c, {{{0, 0}}}, 2);
    EXPECT_EQ(cs.y(0, 0, 0), 1);
    EXPECT_EQ(cs.y(0, 1, 0), 1);
    EXPECT_EQ(cs.ny(0, 0), 2);
    EXPECT_EQ(cs.ny(1, 0), 0);
    EXPECT_EQ(cs.x(0, 0, 0), 2);
    EXPECT_EQ(cs.N[0][0], 2);
}

TEST(CountStatistics, AllOneTopic)
{
    Stream rng = Stream::at(5, {});
    const Corpus c = random_corpus(7, 3, rng);
    Assignments z = random_z(c, 4, rng);
    for (auto& s : z)
        for (auto& d : s)
            std::fill(d.begin(), d.end(), 2u);
    const auto cs = count_statistics(c, z, 4);
    for (std::size_t t = 0; t < 3; ++t) {
        std::int64_t words = 0;
        for (const auto& d : c.slices[t])
            words += static_cast<std::int64_t>(d.size());
        for (std::size_t k = 0; k < 4; ++k)
            EXPECT_EQ(cs.ny(k, t), k == 2 ? words : 0);
    }
}

TEST(CountStatistics, MatchesNaiveRecountAndIdentities)
{
    Stream rng = Stream::at(6, {});
    for (int trial = 0; trial < 30; ++trial) {
        const std::size_t K = 1 + rng.below(5);
        const Corpus c = random_corpus(1 + rng.below(10), 1 + rng.below(4), rng);
        const Assignments z = random_z(c, K, rng);
        const auto cs = count_statistics(c, z, K);
        EXPECT_EQ(cs, count_statistics(c, z, K));
        for (std::size_t t = 0; t < c.num_slices(); ++t) {
            for (std::size_t k = 0; k < K; ++k) {
                for (std::size_t v = 0; v < c.vocab_size; ++v) {
                    std::int64_t n = 0;
                    for (std::size_t d = 0; d < c.num_docs(t); ++d)
                        for (std::size_t i = 0; i < c.slices[t][d].size(); ++i)
                            n += z[t][d][i] == k && c.slices[t][d][i] == v;
                    EXPECT_EQ(cs.y(k, v, t), n);
                }
                std::int64_t row = 0;
                for (std::size_t v = 0; v < c.vocab_size; ++v)
                    row += cs.y(k, v, t);
                EXPECT_EQ(row, cs.ny(k, t));
            }
            std::int64_t total_ny = 0, total_n = 0;
            for (std::size_t k = 0; k < K; ++k)
                total_ny += cs.ny(k, t);
            for (std::size_t d = 0; d < c.num_docs(t); ++d) {
                std::int64_t row = 0;
                for (std::size_t k = 0; k < K; ++k)
                    row += cs.x(t, d, k);
                EXPECT_EQ(row, cs.N[t][d]);
                total_n += cs.N[t][d];
            }
            EXPECT_EQ(total_ny, total_n);
        }
    }
}

TEST(CountStatistics, ShapeErrors)
{
    Corpus c;
    c.vocab_size = 2;
    c.slices = {{{0, 1}}};
    EXPECT_THROW(count_statistics(c, {{{0}}}, 2), CorpusError);
    EXPECT_THROW(count_statistics(c, {{{0, 2}}}, 2), CorpusError);
    EXPECT_THROW(count_statistics(c, {}, 2), CorpusError);
}
