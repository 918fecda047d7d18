#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace bampath {

/// Seedable generator with a fully pinned output stream.
///
/// The engine is std::mt19937_64, whose sequence the standard fixes exactly.
/// The standard distributions are implementation-defined, so every variate is
/// derived here from the raw 64-bit words:
///   uniform     (w >> 11) * 2^-53, in [0, 1)
///   normal      Box-Muller on two uniforms, second value cached
///   poisson     Knuth multiplication below mean 30, PTRS transformed
///               rejection (Hormann 1993) above
///   bernoulli   uniform() < p
///   exponential -log(1 - uniform())
class Rng
{
public:
    static constexpr std::string_view algorithm =
        "mt19937_64; uniform=(w>>11)*2^-53; normal=box-muller(cached); "
        "poisson=knuth(<30)/ptrs; bernoulli=u<p; exponential=-log1p(-u)";

    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    double uniform();
    double normal();
    double exponential();
    bool bernoulli(double p);
    long long poisson(double mean);
    /// Uniform integer in [0, n).
    std::size_t index(std::size_t n);

private:
    std::mt19937_64 engine_;
    bool has_cached_normal_ = false;
    double cached_normal_ = 0.0;
};

} // namespace bampath
