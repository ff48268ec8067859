#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "dltm/archive.hpp"
#include "dltm/config.hpp"
#include "dltm/synth.hpp"

using namespace dltm;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name)
{
    const fs::path p = fs::path(DLTM_TEST_TMP) / name;
    fs::remove_all(p);
    return p;
}

PosteriorArchive small_archive(TrendKind kind = TrendKind::random_walk)
{
    SynthDesign d;
    d.K = 3;
    d.V = 10;
    d.T = 3;
    d.doc_rate = 5;
    d.word_rate = 20;
    d.seed = 4;
    const auto data = simulate_corpus(d);
    ChainConfig cfg;
    cfg.K = 3;
    cfg.n_iter = 4;
    cfg.thin = 2;
    cfg.seed = 12;
    Hyperparams hp;
    hp.spec = trend_spec(kind, 0.02, 0.3);
    return run_chain(data.corpus, cfg, hp);
}

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

} // namespace

TEST(Numbers, ShortestRoundTrip)
{
    for (double x : {0.1, -1.0 / 3.0, 1e-300, 6.02214076e23, 0.0, -0.0, 123456789.125}) {
        std::string s;
        append_number(s, x);
        EXPECT_EQ(parse_number(s), x) << s;
    }
    std::string s;
    append_number(s, 0.1);
    EXPECT_EQ(s, "0.1");
    EXPECT_THROW(parse_number("1.5x"), std::runtime_error);
    EXPECT_THROW(parse_number(""), std::runtime_error);
}

TEST(Archive, RoundTripIsExact)
{
    const auto a = small_archive(TrendKind::linear);
    for (auto fmt : {MatrixFormat::csv, MatrixFormat::binary}) {
        const auto dir = fresh_dir("archive_" + to_string(fmt));
        save_archive(a, dir, fmt);
        const auto b = load_archive(dir);
        EXPECT_EQ(b.V, a.V);
        EXPECT_EQ(b.T, a.T);
        EXPECT_EQ(b.docs, a.docs);
        EXPECT_EQ(b.K(), a.K());
        EXPECT_EQ(b.config.seed, a.config.seed);
        EXPECT_EQ(b.config.aux, a.config.aux);
        EXPECT_EQ(b.hp.spec.kind, TrendKind::linear);
        EXPECT_EQ(b.hp.spec.G, a.hp.spec.G);
        EXPECT_EQ(b.hp.spec.W, a.hp.spec.W);
        EXPECT_EQ(b.hp.sigma2, a.hp.sigma2);
        ASSERT_EQ(b.samples.size(), a.samples.size());
        for (std::size_t i = 0; i < a.samples.size(); ++i)
            EXPECT_TRUE(a.samples[i] == b.samples[i]) << to_string(fmt) << " sample " << i;
    }
}

TEST(Archive, SavingTwiceIsByteIdentical)
{
    const auto a = small_archive();
    const auto d1 = fresh_dir("bytes_1"), d2 = fresh_dir("bytes_2");
    save_archive(a, d1);
    save_archive(load_archive(d1), d2);
    std::size_t files = 0;
    for (const auto& e : fs::directory_iterator(d1)) {
        ++files;
        EXPECT_EQ(slurp(e.path()), slurp(d2 / e.path().filename())) << e.path();
    }
    EXPECT_EQ(files, 1 + 3 * a.samples.size());
}

TEST(Archive, MissingMetaIsAnError)
{
    const auto dir = fresh_dir("missing");
    fs::create_directories(dir);
    EXPECT_ANY_THROW(load_archive(dir));
}

TEST(Config, ParsesSectionsQuotesAndComments)
{
    std::istringstream in("# header\n"
                          "corpus = \"data/with # hash.txt\"  # trailing\n"
                          "K = 3\n"
                          "\n"
                          "[prior]\n"
                          "sigma2 = 0.01\n"
                          "m0 = 1.5, 0\n"
                          "parallel = no\n");
    const auto c = Config::parse(in);
    EXPECT_EQ(c.require_string("corpus"), "data/with # hash.txt");
    EXPECT_EQ(c.get_int("K", 0), 3);
    EXPECT_DOUBLE_EQ(c.get_double("prior.sigma2", 0), 0.01);
    EXPECT_EQ(c.get_doubles("prior.m0"), (std::vector<double>{1.5, 0.0}));
    EXPECT_FALSE(c.get_bool("prior.parallel", true));
    EXPECT_EQ(c.get_int("missing", 7), 7);
    EXPECT_NO_THROW(c.require_known({"corpus", "K", "prior.sigma2", "prior.m0", "prior.parallel"}));
    EXPECT_THROW(c.require_known({"corpus", "K"}), ConfigError);
}

TEST(Config, Errors)
{
    auto parse = [](const std::string& s) {
        std::istringstream in(s);
        return Config::parse(in);
    };
    EXPECT_THROW(parse("K 3\n"), ConfigError);
    EXPECT_THROW(parse("[prior\n"), ConfigError);
    EXPECT_THROW(parse("K = 1\nK = 2\n"), ConfigError);
    EXPECT_THROW(parse(" = 2\n"), ConfigError);
    EXPECT_THROW(parse("K = three\n").get_int("K", 0), ConfigError);
    EXPECT_THROW(parse("x = 1.5.2\n").get_double("x", 0), ConfigError);
    EXPECT_THROW(parse("b = maybe\n").get_bool("b", false), ConfigError);
    EXPECT_THROW(parse("").require_string("corpus"), ConfigError);
    EXPECT_THROW(Config::load("/nonexistent/dir/cfg.txt"), ConfigError);
}
