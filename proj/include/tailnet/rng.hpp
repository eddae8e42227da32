#pragma once

#include <cstdint>

namespace tailnet {

/// Stream identifiers. Each consumer of randomness owns one so that draws for
/// different purposes never share counters.
enum class Stream : std::uint64_t {
    ModelSample = 1,
    Mixture = 2,
    Adjacency = 3,
    NetworkMoments = 4,
    NormalIntegrator = 5,
    Study = 6,
    Test = 99,
};

/// SplitMix64 finalizer (Steele, Lea, Flood 2014).
std::uint64_t mix64(std::uint64_t x);

/// Key for the pair (seed, stream).
std::uint64_t stream_key(std::uint64_t seed, std::uint64_t stream);

/// Counter-based generator.
///
/// Draw number i of the stream keyed by k is mix64(k + (i + 1) * 0x9E3779B97F4A7C15),
/// i.e. the i-th output of a SplitMix64 sequence whose state starts at k. The
/// value depends only on (seed, stream, i), so any partition of the counter
/// space across workers reproduces the same numbers. Only integer arithmetic
/// is involved, so the raw bits are identical on every platform.
class CounterRng {
public:
    CounterRng(std::uint64_t seed, std::uint64_t stream, std::uint64_t counter = 0)
        : key_(stream_key(seed, stream)), counter_(counter) {}
    CounterRng(std::uint64_t seed, Stream stream, std::uint64_t counter = 0)
        : CounterRng(seed, static_cast<std::uint64_t>(stream), counter) {}

    std::uint64_t next_u64();
    /// Uniform on the open interval (0, 1) with 53 random bits.
    double uniform();
    /// Standard normal by inversion of one uniform.
    double normal();
    /// Exponential with the given rate.
    double exponential(double rate);

    /// Jump to an absolute counter position.
    void seek(std::uint64_t counter) { counter_ = counter; }
    std::uint64_t counter() const { return counter_; }
    std::uint64_t key() const { return key_; }

    /// Raw draw at an absolute position, no state change.
    std::uint64_t at(std::uint64_t counter) const;

private:
    std::uint64_t key_;
    std::uint64_t counter_;
};

/// Standard normal quantile, accurate in both tails.
double normal_quantile(double p);
/// Standard normal survival function P(N > x), accurate for large x.
double normal_survival(double x);
/// Standard normal CDF.
double normal_cdf(double x);

} // namespace tailnet
