#pragma once

// On-disk posterior archives.
//
//     <dir>/meta.json
//     <dir>/sample_<i>_beta.csv    rows "k,t,beta_{k,0,t},...,beta_{k,V-1,t}"
//     <dir>/sample_<i>_eta.csv     rows "t,d,eta_{d,0,t},...,eta_{d,K-1,t}"
//     <dir>/sample_<i>_alpha.csv   rows "k,t,alpha_{k,t,0},...,alpha_{k,t,p-1}"
//
// A ground-truth directory uses the same matrix files without the sample
// prefix, plus topic_curve.csv, slice_proportions.csv and z.txt.
//
// With the binary format the same values are written in the same order as
// raw little-endian doubles (.bin), without the index columns.  Numbers are
// printed in shortest round-trip form, so a reload is exact and the bytes
// depend only on the values.

#include <charconv>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "dltm/dlm.hpp"
#include "dltm/gibbs.hpp"
#include "dltm/model.hpp"
#include "dltm/synth.hpp"

namespace dltm {

using json = nlohmann::json;

enum class MatrixFormat { csv, binary };

inline std::string to_string(MatrixFormat f) { return f == MatrixFormat::csv ? "csv" : "binary"; }

inline MatrixFormat parse_matrix_format(const std::string& s)
{
    if (s == "csv")
        return MatrixFormat::csv;
    if (s == "binary" || s == "bin")
        return MatrixFormat::binary;
    throw std::invalid_argument("unknown matrix format '" + s + "'");
}

inline void append_number(std::string& out, double x)
{
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, x);
    out.append(buf, res.ptr);
}

inline double parse_number(std::string_view s)
{
    double x = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), x);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size())
        throw std::runtime_error("malformed number '" + std::string(s) + "'");
    return x;
}

// ---- JSON for the model description ----

namespace detail {

inline json matrix_to_json(const Eigen::MatrixXd& m)
{
    json rows = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        json r = json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j)
            r.push_back(m(i, j));
        rows.push_back(r);
    }
    return rows;
}

inline Eigen::MatrixXd matrix_from_json(const json& j)
{
    const auto r = static_cast<Eigen::Index>(j.size());
    const auto c = r ? static_cast<Eigen::Index>(j.at(0).size()) : 0;
    Eigen::MatrixXd m(r, c);
    for (Eigen::Index i = 0; i < r; ++i)
        for (Eigen::Index k = 0; k < c; ++k)
            m(i, k) = j.at(static_cast<std::size_t>(i)).at(static_cast<std::size_t>(k)).get<double>();
    return m;
}

inline json vector_to_json(const Eigen::VectorXd& v)
{
    json a = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i)
        a.push_back(v(i));
    return a;
}

inline Eigen::VectorXd vector_from_json(const json& j)
{
    Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i)
        v(static_cast<Eigen::Index>(i)) = j.at(i).get<double>();
    return v;
}

} // namespace detail

inline json to_json(const StateSpaceSpec& s)
{
    return {{"kind", to_string(s.kind)},
            {"frequency", s.frequency},
            {"F_row", detail::vector_to_json(s.F_row.transpose())},
            {"G", detail::matrix_to_json(s.G)},
            {"W", detail::matrix_to_json(s.W)},
            {"m0", detail::vector_to_json(s.m0)},
            {"C0", detail::matrix_to_json(s.C0)},
            {"obs_var", s.obs_var},
            {"evolution", s.evolution == Evolution::additive ? "additive" : "discount"},
            {"discount", s.discount}};
}

inline StateSpaceSpec spec_from_json(const json& j)
{
    StateSpaceSpec s;
    s.kind = parse_trend_kind(j.at("kind").get<std::string>());
    s.frequency = j.at("frequency").get<double>();
    s.F_row = detail::vector_from_json(j.at("F_row")).transpose();
    s.G = detail::matrix_from_json(j.at("G"));
    s.W = detail::matrix_from_json(j.at("W"));
    s.m0 = detail::vector_from_json(j.at("m0"));
    s.C0 = detail::matrix_from_json(j.at("C0"));
    s.obs_var = j.at("obs_var").get<double>();
    s.evolution = j.at("evolution").get<std::string>() == "discount" ? Evolution::discount : Evolution::additive;
    s.discount = j.at("discount").get<double>();
    s.validate();
    return s;
}

inline json to_json(const Hyperparams& hp)
{
    return {{"sigma2", hp.sigma2},
            {"beta0_mean", hp.beta0_mean},
            {"beta0_var", hp.beta0_var},
            {"init_inflation", hp.init_inflation},
            {"spec", to_json(hp.spec)}};
}

inline Hyperparams hyperparams_from_json(const json& j)
{
    Hyperparams hp;
    hp.sigma2 = j.at("sigma2").get<double>();
    hp.beta0_mean = j.at("beta0_mean").get<double>();
    hp.beta0_var = j.at("beta0_var").get<double>();
    hp.init_inflation = j.at("init_inflation").get<double>();
    hp.spec = spec_from_json(j.at("spec"));
    return hp;
}

inline json to_json(const ChainConfig& c)
{
    return {{"K", c.K},
            {"n_iter", c.n_iter},
            {"thin", c.thin},
            {"burn_in", c.burn_in},
            {"seed", c.seed},
            {"pg_threshold", c.pg_threshold},
            {"parallel", c.parallel},
            {"aux_schedule", to_string(c.aux)},
            {"cached_log_sums", c.cached_log_sums}};
}

inline ChainConfig chain_config_from_json(const json& j)
{
    ChainConfig c;
    c.K = j.at("K").get<std::size_t>();
    c.n_iter = j.at("n_iter").get<std::int64_t>();
    c.thin = j.at("thin").get<std::int64_t>();
    c.burn_in = j.at("burn_in").get<std::int64_t>();
    c.seed = j.at("seed").get<std::uint64_t>();
    c.pg_threshold = j.at("pg_threshold").get<std::int64_t>();
    c.parallel = j.at("parallel").get<bool>();
    c.aux = parse_aux_schedule(j.at("aux_schedule").get<std::string>());
    c.cached_log_sums = j.value("cached_log_sums", true);
    return c;
}

// ---- matrix files ----

namespace detail {

inline void write_text(const std::filesystem::path& path, const std::string& content)
{
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw std::runtime_error("cannot write '" + path.string() + "'");
    out << content;
    if (!out)
        throw std::runtime_error("write failed for '" + path.string() + "'");
}

inline std::string read_text(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw std::runtime_error("cannot read '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// rows of (two integer indices, values...)
inline void write_matrix(const std::filesystem::path& stem, MatrixFormat fmt,
                         const std::vector<std::pair<std::pair<std::size_t, std::size_t>, std::span<const double>>>& rows)
{
    if (fmt == MatrixFormat::csv) {
        std::string out;
        for (const auto& [idx, vals] : rows) {
            out += std::to_string(idx.first);
            out += ',';
            out += std::to_string(idx.second);
            for (double x : vals) {
                out += ',';
                append_number(out, x);
            }
            out += '\n';
        }
        write_text(stem.string() + ".csv", out);
    } else {
        std::string out;
        for (const auto& row : rows)
            for (double x : row.second) {
                char b[sizeof(double)];
                std::memcpy(b, &x, sizeof x);
                out.append(b, sizeof b);
            }
        write_text(stem.string() + ".bin", out);
    }
}

/// Values in file order, dropping index columns for CSV.
inline std::vector<double> read_matrix(const std::filesystem::path& stem, MatrixFormat fmt)
{
    std::vector<double> vals;
    if (fmt == MatrixFormat::binary) {
        const std::string raw = read_text(stem.string() + ".bin");
        if (raw.size() % sizeof(double) != 0)
            throw std::runtime_error("truncated binary matrix '" + stem.string() + ".bin'");
        vals.resize(raw.size() / sizeof(double));
        std::memcpy(vals.data(), raw.data(), raw.size());
        return vals;
    }
    const std::string text = read_text(stem.string() + ".csv");
    std::size_t pos = 0;
    while (pos < text.size()) {
        std::size_t end = text.find('\n', pos);
        if (end == std::string::npos)
            end = text.size();
        std::string_view line(text.data() + pos, end - pos);
        std::size_t field = 0, start = 0;
        while (start <= line.size()) {
            std::size_t comma = line.find(',', start);
            if (comma == std::string_view::npos)
                comma = line.size();
            if (field >= 2)
                vals.push_back(parse_number(line.substr(start, comma - start)));
            ++field;
            start = comma + 1;
        }
        pos = end + 1;
    }
    return vals;
}

} // namespace detail

inline std::string sample_stem(std::size_t i, const char* what)
{
    return "sample_" + std::to_string(i) + "_" + what;
}

inline void save_beta(const BetaPanel& beta, const std::filesystem::path& stem, MatrixFormat fmt)
{
    std::vector<std::pair<std::pair<std::size_t, std::size_t>, std::span<const double>>> rows;
    for (std::size_t k = 0; k < beta.K; ++k)
        for (std::size_t t = 0; t < beta.T; ++t)
            rows.push_back({{k, t}, beta.slice(k, t)});
    detail::write_matrix(stem, fmt, rows);
}

inline void save_eta(const EtaPanel& eta, const std::filesystem::path& stem, MatrixFormat fmt)
{
    std::vector<std::pair<std::pair<std::size_t, std::size_t>, std::span<const double>>> rows;
    for (std::size_t t = 0; t < eta.num_slices(); ++t)
        for (std::size_t d = 0; d < eta.num_docs(t); ++d)
            rows.push_back({{t, d}, eta.row(t, d)});
    detail::write_matrix(stem, fmt, rows);
}

inline void save_alpha(const AlphaPaths& alpha, const std::filesystem::path& stem, MatrixFormat fmt)
{
    std::vector<std::pair<std::pair<std::size_t, std::size_t>, std::span<const double>>> rows;
    for (std::size_t k = 0; k < alpha.size(); ++k)
        for (std::size_t t = 0; t < alpha[k].size(); ++t)
            rows.push_back({{k, t}, {alpha[k][t].data(), static_cast<std::size_t>(alpha[k][t].size())}});
    detail::write_matrix(stem, fmt, rows);
}

inline BetaPanel load_beta(const std::filesystem::path& stem, MatrixFormat fmt, std::size_t K, std::size_t V,
                           std::size_t T)
{
    BetaPanel b(K, V, T);
    auto vals = detail::read_matrix(stem, fmt);
    if (vals.size() != b.data.size())
        throw std::runtime_error("beta matrix '" + stem.string() + "' has the wrong size");
    b.data = std::move(vals);
    return b;
}

inline EtaPanel load_eta(const std::filesystem::path& stem, MatrixFormat fmt, std::size_t K,
                         const std::vector<std::size_t>& docs)
{
    EtaPanel e(K, docs);
    const auto vals = detail::read_matrix(stem, fmt);
    std::size_t i = 0;
    for (auto& r : e.rows) {
        if (i + r.size() > vals.size())
            throw std::runtime_error("eta matrix '" + stem.string() + "' is too short");
        std::copy(vals.begin() + static_cast<std::ptrdiff_t>(i), vals.begin() + static_cast<std::ptrdiff_t>(i + r.size()),
                  r.begin());
        i += r.size();
    }
    if (i != vals.size())
        throw std::runtime_error("eta matrix '" + stem.string() + "' is too long");
    return e;
}

inline AlphaPaths load_alpha(const std::filesystem::path& stem, MatrixFormat fmt, std::size_t free_topics,
                             std::size_t T, std::size_t p)
{
    const auto vals = detail::read_matrix(stem, fmt);
    if (vals.size() != free_topics * T * p)
        throw std::runtime_error("alpha matrix '" + stem.string() + "' has the wrong size");
    AlphaPaths a(free_topics, std::vector<Eigen::VectorXd>(T));
    std::size_t i = 0;
    for (auto& path : a)
        for (auto& v : path) {
            v = Eigen::Map<const Eigen::VectorXd>(vals.data() + i, static_cast<Eigen::Index>(p));
            i += p;
        }
    return a;
}

inline json archive_meta(const PosteriorArchive& a, MatrixFormat fmt)
{
    json sweeps = json::array();
    for (const auto& s : a.samples)
        sweeps.push_back(s.sweep);
    return {{"format", to_string(fmt)},
            {"dims", {{"K", a.K()}, {"V", a.V}, {"T", a.T}, {"p", a.hp.spec.dim()}, {"docs", a.docs}}},
            {"config", to_json(a.config)},
            {"seed", a.config.seed},
            {"hyperparams", to_json(a.hp)},
            {"num_samples", a.samples.size()},
            {"sweeps", sweeps}};
}

inline void save_archive(const PosteriorArchive& a, const std::filesystem::path& dir,
                         MatrixFormat fmt = MatrixFormat::csv)
{
    std::filesystem::create_directories(dir);
    detail::write_text(dir / "meta.json", archive_meta(a, fmt).dump(2) + "\n");
    for (std::size_t i = 0; i < a.samples.size(); ++i) {
        save_beta(a.samples[i].beta, dir / sample_stem(i, "beta"), fmt);
        save_eta(a.samples[i].eta, dir / sample_stem(i, "eta"), fmt);
        save_alpha(a.samples[i].alpha, dir / sample_stem(i, "alpha"), fmt);
    }
}

inline PosteriorArchive load_archive(const std::filesystem::path& dir)
{
    const json meta = json::parse(detail::read_text(dir / "meta.json"));
    PosteriorArchive a;
    const MatrixFormat fmt = parse_matrix_format(meta.at("format").get<std::string>());
    a.config = chain_config_from_json(meta.at("config"));
    a.hp = hyperparams_from_json(meta.at("hyperparams"));
    const auto& dims = meta.at("dims");
    a.V = dims.at("V").get<std::size_t>();
    a.T = dims.at("T").get<std::size_t>();
    a.docs = dims.at("docs").get<std::vector<std::size_t>>();
    const auto p = dims.at("p").get<std::size_t>();
    const std::size_t K = a.K();
    const auto sweeps = meta.at("sweeps").get<std::vector<std::int64_t>>();
    a.samples.resize(sweeps.size());
    for (std::size_t i = 0; i < sweeps.size(); ++i) {
        auto& s = a.samples[i];
        s.sweep = sweeps[i];
        s.beta = load_beta(dir / sample_stem(i, "beta"), fmt, K, a.V, a.T);
        s.eta = load_eta(dir / sample_stem(i, "eta"), fmt, K, a.docs);
        s.alpha = load_alpha(dir / sample_stem(i, "alpha"), fmt, K > 0 ? K - 1 : 0, a.T, p);
    }
    return a;
}

// ---- ground truth ----

inline void save_truth(const GroundTruth& g, const std::filesystem::path& dir, MatrixFormat fmt = MatrixFormat::csv)
{
    std::filesystem::create_directories(dir);
    std::vector<std::size_t> docs;
    for (std::size_t t = 0; t < g.eta.num_slices(); ++t)
        docs.push_back(g.eta.num_docs(t));
    const std::size_t p = g.alpha.empty() || g.alpha[0].empty() ? 0 : static_cast<std::size_t>(g.alpha[0][0].size());
    const json meta = {{"format", to_string(fmt)},
                       {"dims", {{"K", g.beta.K}, {"V", g.beta.V}, {"T", g.beta.T}, {"p", p}, {"docs", docs}}},
                       {"high", g.high}};
    detail::write_text(dir / "meta.json", meta.dump(2) + "\n");
    save_beta(g.beta, dir / "beta", fmt);
    save_eta(g.eta, dir / "eta", fmt);
    save_alpha(g.alpha, dir / "alpha", fmt);

    auto table = [](const std::vector<std::vector<double>>& rows) {
        std::string out;
        for (std::size_t t = 0; t < rows.size(); ++t)
            for (std::size_t k = 0; k < rows[t].size(); ++k) {
                out += std::to_string(t) + ',' + std::to_string(k) + ',';
                append_number(out, rows[t][k]);
                out += '\n';
            }
        return out;
    };
    detail::write_text(dir / "topic_curve.csv", "t,k,value\n" + table(g.topic_curve));
    detail::write_text(dir / "slice_proportions.csv", "t,k,value\n" + table(g.slice_proportions));

    // one document per line: t d z_1 ... z_N
    std::string z;
    for (std::size_t t = 0; t < g.z.size(); ++t)
        for (std::size_t d = 0; d < g.z[t].size(); ++d) {
            z += std::to_string(t) + ' ' + std::to_string(d);
            for (auto k : g.z[t][d])
                z += ' ' + std::to_string(k);
            z += '\n';
        }
    detail::write_text(dir / "z.txt", z);
}

inline GroundTruth load_truth(const std::filesystem::path& dir)
{
    const json meta = json::parse(detail::read_text(dir / "meta.json"));
    const MatrixFormat fmt = parse_matrix_format(meta.at("format").get<std::string>());
    const auto& dims = meta.at("dims");
    const auto K = dims.at("K").get<std::size_t>(), V = dims.at("V").get<std::size_t>(),
               T = dims.at("T").get<std::size_t>(), p = dims.at("p").get<std::size_t>();
    const auto docs = dims.at("docs").get<std::vector<std::size_t>>();
    GroundTruth g;
    g.high = meta.at("high").get<double>();
    g.beta = load_beta(dir / "beta", fmt, K, V, T);
    g.eta = load_eta(dir / "eta", fmt, K, docs);
    g.alpha = load_alpha(dir / "alpha", fmt, K > 0 ? K - 1 : 0, T, p);

    auto table = [&](const char* name) {
        std::vector<std::vector<double>> rows(T, std::vector<double>(K, 0.0));
        std::istringstream in(detail::read_text(dir / name));
        std::string line;
        std::getline(in, line); // header
        while (std::getline(in, line)) {
            const auto c1 = line.find(','), c2 = line.find(',', c1 + 1);
            if (c1 == std::string::npos || c2 == std::string::npos)
                throw std::runtime_error(std::string("malformed row in ") + name);
            const auto t = std::stoul(line.substr(0, c1)), k = std::stoul(line.substr(c1 + 1, c2 - c1 - 1));
            if (t >= T || k >= K)
                throw std::runtime_error(std::string("index out of range in ") + name);
            rows[t][k] = parse_number(std::string_view(line).substr(c2 + 1));
        }
        return rows;
    };
    g.topic_curve = table("topic_curve.csv");
    g.slice_proportions = table("slice_proportions.csv");

    g.z.resize(T);
    for (std::size_t t = 0; t < T; ++t)
        g.z[t].resize(docs[t]);
    std::istringstream zin(detail::read_text(dir / "z.txt"));
    std::string line;
    while (std::getline(zin, line)) {
        std::istringstream ls(line);
        std::size_t t = 0, d = 0;
        ls >> t >> d;
        if (!ls || t >= T || d >= docs[t])
            throw std::runtime_error("malformed row in z.txt");
        unsigned k = 0;
        while (ls >> k)
            g.z[t][d].push_back(static_cast<TopicId>(k));
    }
    return g;
}

} // namespace dltm
