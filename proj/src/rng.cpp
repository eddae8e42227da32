#include "tailnet/rng.hpp"

#include <boost/math/special_functions/erf.hpp>

#include <cmath>

namespace tailnet {

namespace {
constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;
}

std::uint64_t mix64(std::uint64_t x) {
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

std::uint64_t stream_key(std::uint64_t seed, std::uint64_t stream) {
    return mix64(mix64(seed) ^ mix64(stream * kGolden + 0x632BE59BD9B4E019ULL));
}

std::uint64_t CounterRng::at(std::uint64_t counter) const {
    return mix64(key_ + (counter + 1) * kGolden);
}

std::uint64_t CounterRng::next_u64() {
    return at(counter_++);
}

double CounterRng::uniform() {
    // (k + 0.5) / 2^53 for k in [0, 2^53): never 0 or 1.
    const std::uint64_t k = next_u64() >> 11;
    return (static_cast<double>(k) + 0.5) * 0x1.0p-53;
}

double CounterRng::normal() {
    return normal_quantile(uniform());
}

double CounterRng::exponential(double rate) {
    return -std::log(uniform()) / rate;
}

double normal_quantile(double p) {
    if (p <= 0.0) return -INFINITY;
    if (p >= 1.0) return INFINITY;
    if (p < 0.5) return -std::sqrt(2.0) * boost::math::erfc_inv(2.0 * p);
    return std::sqrt(2.0) * boost::math::erfc_inv(2.0 * (1.0 - p));
}

double normal_survival(double x) {
    return 0.5 * std::erfc(x / std::sqrt(2.0));
}

double normal_cdf(double x) {
    return 0.5 * std::erfc(-x / std::sqrt(2.0));
}

} // namespace tailnet
