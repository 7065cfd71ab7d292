#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <utility>

namespace groupsei {

inline constexpr std::uint64_t splitmix64(std::uint64_t z)
{
    z += 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

/* Counter-based generator: the n-th output is a pure function of (key, n).
 * A key is derived from a run seed plus up to two stream coordinates, so
 * independent streams (per user, per purpose) can be opened in any order
 * without sharing state. Output is identical on every platform. */
class counter_rng {
public:
    using result_type = std::uint64_t;

    static constexpr std::uint64_t never = std::numeric_limits<std::uint64_t>::max();

    explicit counter_rng(std::uint64_t seed, std::uint64_t stream = 0, std::uint64_t substream = 0)
        : key_(splitmix64(splitmix64(splitmix64(seed) ^ stream) ^ (substream * 0xD1B54A32D192ED03ULL)))
    {}

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

    result_type operator()() { return splitmix64(key_ + 0x9E3779B97F4A7C15ULL * (++counter_)); }

    /* uniform on [0,1) with 53 bits */
    double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

    /* uniform integer on [0, n); Lemire's nearly-divisionless rejection */
    std::uint64_t below(std::uint64_t n)
    {
        unsigned __int128 m = static_cast<unsigned __int128>((*this)()) * n;
        auto low = static_cast<std::uint64_t>(m);
        if (low < n) {
            const std::uint64_t threshold = (0 - n) % n;
            while (low < threshold) {
                m = static_cast<unsigned __int128>((*this)()) * n;
                low = static_cast<std::uint64_t>(m);
            }
        }
        return static_cast<std::uint64_t>(m >> 64);
    }

    bool bernoulli(double p) { return uniform() < p; }

    /* Number of Bernoulli(p) trials up to and including the first success
     * (support 1, 2, ...). Returns `never` for p == 0. */
    std::uint64_t geometric_trials(double p)
    {
        if (p >= 1.0)
            return 1;
        if (p <= 0.0)
            return never;
        const double u = 1.0 - uniform(); /* (0,1] */
        const double k = std::floor(std::log(u) / std::log1p(-p));
        if (!(k < 9.0e18))
            return never;
        return 1 + static_cast<std::uint64_t>(k);
    }

    /* Number of failures before the first success of Bernoulli(1-p);
     * mean p/(1-p). */
    std::uint64_t geometric_failures(double p)
    {
        if (p <= 0.0)
            return 0;
        const std::uint64_t trials = geometric_trials(1.0 - p);
        return trials == never ? never : trials - 1;
    }

    template <typename T>
    void shuffle(std::span<T> items)
    {
        for (std::size_t i = items.size(); i > 1; --i) {
            const auto j = static_cast<std::size_t>(below(i));
            std::swap(items[i - 1], items[j]);
        }
    }

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

} // namespace groupsei
