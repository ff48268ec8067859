#pragma once

// Counter-based random streams.
//
// Every unit of work in the sampler (a topic in the beta step, a document in
// the eta step, ...) draws from its own stream, addressed by a tuple of
// integers.  Streams are Philox4x32-10 blocks: the key comes from the chain
// seed, the upper half of the counter from a hash of the address and the
// lower half counts blocks.  Results therefore do not depend on which thread
// runs which unit, or in what order.

#include <array>
#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <limits>
#include <random>
#include <utility>
#include <vector>

namespace dltm {

namespace detail {

inline constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept
{
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

} // namespace detail

/// Philox4x32 with 10 rounds, bijective on 128-bit counters for a fixed key.
struct Philox4x32
{
    using Counter = std::array<std::uint32_t, 4>;
    using Key = std::array<std::uint32_t, 2>;

    static constexpr Counter block(Counter ctr, Key key) noexcept
    {
        for (int r = 0; r < 10; ++r) {
            if (r > 0) {
                key[0] += 0x9E3779B9U;
                key[1] += 0xBB67AE85U;
            }
            const std::uint64_t p0 = std::uint64_t{0xD2511F53U} * ctr[0];
            const std::uint64_t p1 = std::uint64_t{0xCD9E8D57U} * ctr[2];
            const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
            const auto lo0 = static_cast<std::uint32_t>(p0);
            const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
            const auto lo1 = static_cast<std::uint32_t>(p1);
            ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
        }
        return ctr;
    }
};

/// Hash an address tuple into a 64-bit stream id.
inline constexpr std::uint64_t stream_id(std::initializer_list<std::uint64_t> parts) noexcept
{
    std::uint64_t h = 0x243F6A8885A308D3ULL;
    for (auto p : parts)
        h = detail::splitmix64(h ^ detail::splitmix64(p + 0x13198A2E03707344ULL));
    return h;
}

/// One independent random stream.  Satisfies UniformRandomBitGenerator, so
/// it can drive the <random> distributions directly.
class Stream
{
public:
    using result_type = std::uint32_t;

    Stream(std::uint64_t seed, std::uint64_t id) noexcept
        : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
          id_{id}
    {}

    /// Stream addressed by a tuple, e.g. Stream::at(seed, {sweep, step, k}).
    static Stream at(std::uint64_t seed, std::initializer_list<std::uint64_t> address) noexcept
    {
        return Stream(seed, stream_id(address));
    }

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

    result_type operator()() noexcept
    {
        if (pos_ == 4) {
            Philox4x32::Counter ctr{static_cast<std::uint32_t>(block_),
                                    static_cast<std::uint32_t>(block_ >> 32),
                                    static_cast<std::uint32_t>(id_),
                                    static_cast<std::uint32_t>(id_ >> 32)};
            buf_ = Philox4x32::block(ctr, key_);
            ++block_;
            pos_ = 0;
        }
        return buf_[pos_++];
    }

    /// Uniform on the open interval (0, 1) with 53 random bits.
    double uniform() noexcept
    {
        const std::uint64_t hi = (*this)();
        const std::uint64_t lo = (*this)();
        const std::uint64_t bits = ((hi << 32) | lo) >> 11;
        return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
    }

    /// Standard normal via Box-Muller; the second variate is cached.
    double normal() noexcept
    {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const double u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 6.283185307179586476925 * u2;
        spare_ = r * std::sin(theta);
        has_spare_ = true;
        return r * std::cos(theta);
    }

    double normal(double mean, double sd) noexcept { return mean + sd * normal(); }

    /// Exp(1).
    double exponential() noexcept { return -std::log(uniform()); }

    /// Uniform integer in [0, n).
    std::uint64_t below(std::uint64_t n) noexcept
    {
        return static_cast<std::uint64_t>(uniform() * static_cast<double>(n)) % n;
    }

private:
    Philox4x32::Key key_;
    std::uint64_t id_;
    std::uint64_t block_ = 0;
    Philox4x32::Counter buf_{};
    int pos_ = 4;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

/// Fisher-Yates shuffle of 0..n-1 driven by a stream.
template <typename Index = std::size_t>
std::vector<Index> random_permutation(std::size_t n, Stream& rng)
{
    std::vector<Index> perm(n);
    for (std::size_t i = 0; i < n; ++i)
        perm[i] = static_cast<Index>(i);
    for (std::size_t i = n; i > 1; --i) {
        const auto j = static_cast<std::size_t>(rng.below(i));
        std::swap(perm[i - 1], perm[j]);
    }
    return perm;
}

/// Poisson draw.  Wraps std::poisson_distribution so the call site reads
/// like the other helpers.
inline long poisson(double mean, Stream& rng)
{
    std::poisson_distribution<long> dist(mean);
    return dist(rng);
}

} // namespace dltm
