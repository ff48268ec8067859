#pragma once

// Time-sliced bag-of-words corpora and their sufficient statistics.
//
// File format (UTF-8 text):
//
//     V=<int> T=<int>
//     <t> <w_1> <w_2> ... <w_N>      one line per document, t in [1, T]
//
// Word ids are 0-based and < V.  Blank lines and lines starting with '#' are
// skipped.  Slice indices are 1-based in the file and 0-based in memory.

#include <cstddef>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace dltm {

using WordId = std::uint32_t;
using TopicId = std::uint32_t;
using Document = std::vector<WordId>;

class CorpusError : public std::runtime_error
{
public:
    enum class Kind { parse, bounds, empty, shape };

    CorpusError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    Kind kind() const noexcept { return kind_; }

private:
    Kind kind_;
};

struct Corpus
{
    std::size_t vocab_size = 0;
    /// slices[t][d] is document d of time slice t.
    std::vector<std::vector<Document>> slices;

    std::size_t num_slices() const noexcept { return slices.size(); }
    std::size_t num_docs(std::size_t t) const noexcept { return slices[t].size(); }

    std::size_t total_docs() const noexcept
    {
        std::size_t n = 0;
        for (const auto& s : slices)
            n += s.size();
        return n;
    }

    std::size_t total_words() const noexcept
    {
        std::size_t n = 0;
        for (const auto& s : slices)
            for (const auto& d : s)
                n += d.size();
        return n;
    }

    friend bool operator==(const Corpus&, const Corpus&) = default;
};

/// Word-level topic assignments; z[t][d][n] mirrors Corpus::slices.
using Assignments = std::vector<std::vector<std::vector<TopicId>>>;

inline void validate(const Corpus& corpus)
{
    if (corpus.slices.empty())
        throw CorpusError(CorpusError::Kind::empty, "corpus has no time slices (T = 0)");
    if (corpus.vocab_size == 0)
        throw CorpusError(CorpusError::Kind::empty, "corpus has an empty vocabulary (V = 0)");
    for (std::size_t t = 0; t < corpus.slices.size(); ++t)
        for (std::size_t d = 0; d < corpus.slices[t].size(); ++d)
            for (WordId w : corpus.slices[t][d])
                if (w >= corpus.vocab_size)
                    throw CorpusError(CorpusError::Kind::bounds,
                                      "word id " + std::to_string(w) + " >= V=" +
                                          std::to_string(corpus.vocab_size) + " (slice " +
                                          std::to_string(t + 1) + ", document " +
                                          std::to_string(d) + ")");
}

namespace detail {

inline long parse_header_field(const std::string& token, const char* name, std::size_t line_no)
{
    const std::string prefix = std::string(name) + "=";
    if (token.rfind(prefix, 0) != 0)
        throw CorpusError(CorpusError::Kind::parse,
                          "line " + std::to_string(line_no) + ": expected '" + prefix + "<int>'");
    try {
        std::size_t used = 0;
        const long v = std::stol(token.substr(prefix.size()), &used);
        if (used != token.size() - prefix.size())
            throw std::invalid_argument(token);
        return v;
    } catch (const std::logic_error&) {
        throw CorpusError(CorpusError::Kind::parse,
                          "line " + std::to_string(line_no) + ": malformed '" + token + "'");
    }
}

inline bool skippable(const std::string& line)
{
    const auto first = line.find_first_not_of(" \t\r");
    return first == std::string::npos || line[first] == '#';
}

} // namespace detail

inline Corpus parse_corpus(std::istream& in)
{
    Corpus corpus;
    std::string line;
    std::size_t line_no = 0;
    bool have_header = false;
    long num_slices = 0;

    while (std::getline(in, line)) {
        ++line_no;
        if (detail::skippable(line))
            continue;
        std::istringstream fields(line);
        if (!have_header) {
            std::string v_tok, t_tok, extra;
            if (!(fields >> v_tok >> t_tok) || (fields >> extra))
                throw CorpusError(CorpusError::Kind::parse,
                                  "line " + std::to_string(line_no) + ": expected 'V=<int> T=<int>'");
            const long v = detail::parse_header_field(v_tok, "V", line_no);
            num_slices = detail::parse_header_field(t_tok, "T", line_no);
            if (num_slices <= 0)
                throw CorpusError(CorpusError::Kind::empty, "corpus header declares T <= 0");
            if (v <= 0)
                throw CorpusError(CorpusError::Kind::empty, "corpus header declares V <= 0");
            corpus.vocab_size = static_cast<std::size_t>(v);
            corpus.slices.resize(static_cast<std::size_t>(num_slices));
            have_header = true;
            continue;
        }

        std::string tok;
        std::vector<long> values;
        while (fields >> tok) {
            try {
                std::size_t used = 0;
                const long v = std::stol(tok, &used);
                if (used != tok.size())
                    throw std::invalid_argument(tok);
                values.push_back(v);
            } catch (const std::logic_error&) {
                throw CorpusError(CorpusError::Kind::parse,
                                  "line " + std::to_string(line_no) + ": non-integer token '" + tok + "'");
            }
        }
        const long t = values.front();
        if (t < 1 || t > num_slices)
            throw CorpusError(CorpusError::Kind::bounds,
                              "line " + std::to_string(line_no) + ": slice " + std::to_string(t) +
                                  " outside [1, " + std::to_string(num_slices) + "]");
        Document doc;
        doc.reserve(values.size() - 1);
        for (std::size_t i = 1; i < values.size(); ++i) {
            if (values[i] < 0 || static_cast<std::size_t>(values[i]) >= corpus.vocab_size)
                throw CorpusError(CorpusError::Kind::bounds,
                                  "line " + std::to_string(line_no) + ": word id " +
                                      std::to_string(values[i]) + " outside [0, " +
                                      std::to_string(corpus.vocab_size) + ")");
            doc.push_back(static_cast<WordId>(values[i]));
        }
        corpus.slices[static_cast<std::size_t>(t - 1)].push_back(std::move(doc));
    }
    if (!have_header)
        throw CorpusError(CorpusError::Kind::empty, "corpus file has no header line");
    return corpus;
}

inline Corpus load_corpus(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("cannot open corpus file '" + path + "'");
    return parse_corpus(in);
}

/// Canonical form: header, then documents grouped by slice in stored order.
inline void write_corpus(const Corpus& corpus, std::ostream& out)
{
    out << "V=" << corpus.vocab_size << " T=" << corpus.num_slices() << '\n';
    for (std::size_t t = 0; t < corpus.num_slices(); ++t) {
        for (const auto& doc : corpus.slices[t]) {
            out << (t + 1);
            for (WordId w : doc)
                out << ' ' << w;
            out << '\n';
        }
    }
}

inline void save_corpus(const Corpus& corpus, const std::string& path)
{
    std::ofstream out(path);
    if (!out)
        throw std::runtime_error("cannot write corpus file '" + path + "'");
    write_corpus(corpus, out);
    if (!out)
        throw std::runtime_error("write failed for '" + path + "'");
}

/// Number of documents shorter than `min_length`.  The Gaussian Polya-Gamma
/// approximation is unreliable below about 20 words, so callers warn on these.
inline std::size_t count_short_documents(const Corpus& corpus, std::size_t min_length = 20)
{
    std::size_t n = 0;
    for (const auto& s : corpus.slices)
        for (const auto& d : s)
            n += d.size() < min_length;
    return n;
}

/// Sufficient statistics of (corpus, z).
///
///   y(k,v,t)  words of term v assigned to topic k in slice t
///   ny(k,t)   words assigned to topic k in slice t
///   x[t](d,k) words of document d assigned to topic k
///   N[t][d]   length of document d
struct CountStatistics
{
    std::size_t K = 0, V = 0, T = 0;
    std::vector<std::int64_t> y_data;
    std::vector<std::int64_t> ny_data;
    std::vector<std::vector<std::int64_t>> x_data;
    std::vector<std::vector<std::int64_t>> N;

    std::int64_t y(std::size_t k, std::size_t v, std::size_t t) const { return y_data[(k * T + t) * V + v]; }
    std::int64_t& y(std::size_t k, std::size_t v, std::size_t t) { return y_data[(k * T + t) * V + v]; }
    std::int64_t ny(std::size_t k, std::size_t t) const { return ny_data[k * T + t]; }
    std::int64_t& ny(std::size_t k, std::size_t t) { return ny_data[k * T + t]; }
    std::int64_t x(std::size_t t, std::size_t d, std::size_t k) const { return x_data[t][d * K + k]; }
    std::int64_t& x(std::size_t t, std::size_t d, std::size_t k) { return x_data[t][d * K + k]; }

    friend bool operator==(const CountStatistics&, const CountStatistics&) = default;
};

inline void check_shape(const Corpus& corpus, const Assignments& z, std::size_t K)
{
    if (z.size() != corpus.num_slices())
        throw CorpusError(CorpusError::Kind::shape, "assignments have the wrong number of slices");
    for (std::size_t t = 0; t < z.size(); ++t) {
        if (z[t].size() != corpus.num_docs(t))
            throw CorpusError(CorpusError::Kind::shape,
                              "assignments have the wrong number of documents in slice " + std::to_string(t + 1));
        for (std::size_t d = 0; d < z[t].size(); ++d) {
            if (z[t][d].size() != corpus.slices[t][d].size())
                throw CorpusError(CorpusError::Kind::shape, "assignment length differs from document length");
            for (TopicId k : z[t][d])
                if (k >= K)
                    throw CorpusError(CorpusError::Kind::shape, "topic id outside [0, K)");
        }
    }
}

inline CountStatistics count_statistics(const Corpus& corpus, const Assignments& z, std::size_t K)
{
    check_shape(corpus, z, K);
    CountStatistics cs;
    cs.K = K;
    cs.V = corpus.vocab_size;
    cs.T = corpus.num_slices();
    cs.y_data.assign(cs.K * cs.V * cs.T, 0);
    cs.ny_data.assign(cs.K * cs.T, 0);
    cs.x_data.resize(cs.T);
    cs.N.resize(cs.T);
    for (std::size_t t = 0; t < cs.T; ++t) {
        const auto& docs = corpus.slices[t];
        cs.x_data[t].assign(docs.size() * K, 0);
        cs.N[t].resize(docs.size());
        for (std::size_t d = 0; d < docs.size(); ++d) {
            cs.N[t][d] = static_cast<std::int64_t>(docs[d].size());
            for (std::size_t n = 0; n < docs[d].size(); ++n) {
                const TopicId k = z[t][d][n];
                ++cs.y(k, docs[d][n], t);
                ++cs.ny(k, t);
                ++cs.x(t, d, k);
            }
        }
    }
    return cs;
}

} // namespace dltm
