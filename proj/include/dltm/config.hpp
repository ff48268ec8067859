#pragma once

// Flat key = value configuration files.
//
//     # comment
//     corpus = "data/corpus.txt"
//     K = 3
//     [prior]            keys below read as prior.<key>
//     sigma2 = 0.01
//
// Values may be quoted.  Lists are comma separated.

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace dltm {

class ConfigError : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

class Config
{
public:
    static Config parse(std::istream& in)
    {
        Config cfg;
        std::string line, section;
        std::size_t line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            const std::string s = trim(strip_comment(line));
            if (s.empty())
                continue;
            if (s.front() == '[') {
                if (s.back() != ']')
                    throw ConfigError("line " + std::to_string(line_no) + ": unterminated section header");
                section = trim(s.substr(1, s.size() - 2));
                continue;
            }
            const auto eq = s.find('=');
            if (eq == std::string::npos)
                throw ConfigError("line " + std::to_string(line_no) + ": expected key = value");
            std::string key = trim(s.substr(0, eq));
            if (key.empty())
                throw ConfigError("line " + std::to_string(line_no) + ": empty key");
            if (!section.empty())
                key = section + "." + key;
            if (cfg.values_.count(key))
                throw ConfigError("line " + std::to_string(line_no) + ": duplicate key '" + key + "'");
            cfg.values_[key] = unquote(trim(s.substr(eq + 1)));
        }
        return cfg;
    }

    static Config load(const std::string& path)
    {
        std::ifstream in(path);
        if (!in)
            throw ConfigError("cannot open config file '" + path + "'");
        return parse(in);
    }

    bool has(const std::string& key) const { return values_.count(key) > 0; }
    void set(const std::string& key, const std::string& value) { values_[key] = value; }
    const std::map<std::string, std::string>& values() const noexcept { return values_; }

    /// Throw on any key outside `allowed`, so typos do not pass silently.
    void require_known(const std::set<std::string>& allowed) const
    {
        for (const auto& [k, v] : values_)
            if (!allowed.count(k))
                throw ConfigError("unknown config key '" + k + "'");
    }

    std::string get_string(const std::string& key, const std::string& fallback) const
    {
        auto it = values_.find(key);
        return it == values_.end() ? fallback : it->second;
    }

    std::string require_string(const std::string& key) const
    {
        auto it = values_.find(key);
        if (it == values_.end())
            throw ConfigError("missing required config key '" + key + "'");
        return it->second;
    }

    double get_double(const std::string& key, double fallback) const
    {
        return has(key) ? to_double(key, values_.at(key)) : fallback;
    }

    long long get_int(const std::string& key, long long fallback) const
    {
        if (!has(key))
            return fallback;
        const std::string& s = values_.at(key);
        long long v = 0;
        const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
        if (res.ec != std::errc() || res.ptr != s.data() + s.size())
            throw ConfigError("config key '" + key + "' expects an integer, got '" + s + "'");
        return v;
    }

    bool get_bool(const std::string& key, bool fallback) const
    {
        if (!has(key))
            return fallback;
        const std::string& s = values_.at(key);
        if (s == "true" || s == "1" || s == "yes")
            return true;
        if (s == "false" || s == "0" || s == "no")
            return false;
        throw ConfigError("config key '" + key + "' expects a boolean, got '" + s + "'");
    }

    std::vector<double> get_doubles(const std::string& key, std::vector<double> fallback = {}) const
    {
        if (!has(key))
            return fallback;
        std::vector<double> out;
        std::stringstream ss(values_.at(key));
        std::string item;
        while (std::getline(ss, item, ','))
            out.push_back(to_double(key, trim(item)));
        return out;
    }

private:
    static std::string trim(const std::string& s)
    {
        const auto b = s.find_first_not_of(" \t\r");
        if (b == std::string::npos)
            return {};
        const auto e = s.find_last_not_of(" \t\r");
        return s.substr(b, e - b + 1);
    }

    static std::string strip_comment(const std::string& s)
    {
        bool quoted = false;
        for (std::size_t i = 0; i < s.size(); ++i) {
            if (s[i] == '"')
                quoted = !quoted;
            else if (s[i] == '#' && !quoted)
                return s.substr(0, i);
        }
        return s;
    }

    static std::string unquote(const std::string& s)
    {
        if (s.size() >= 2 && s.front() == '"' && s.back() == '"')
            return s.substr(1, s.size() - 2);
        return s;
    }

    static double to_double(const std::string& key, const std::string& s)
    {
        double v = 0.0;
        const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
        if (res.ec != std::errc() || res.ptr != s.data() + s.size())
            throw ConfigError("config key '" + key + "' expects a number, got '" + s + "'");
        return v;
    }

    std::map<std::string, std::string> values_;
};

} // namespace dltm
