#pragma once

#include <array>
#include <cstdint>
#include <string_view>

namespace proscan {

/// FNV-1a 64-bit hash, used to derive per-module RNG streams from stable names.
std::uint64_t fnv1a64(std::string_view text);

/// Advances a splitmix64 state and returns the next output word.
std::uint64_t splitmix64_next(std::uint64_t& state);

/// Deterministic xoshiro256++ generator with explicit, portable distributions.
///
/// Every draw path (uniform, normal, exponential, poisson) is implemented here
/// rather than through <random> distributions so that identical seeds produce
/// identical byte-level results on any platform or standard library.
///
/// Stream derivation: Rng(master, name) seeds from
///   u = master ^ fnv1a64(name)
/// expanded through splitmix64 into the four state words. Modules draw from
/// their own named streams, so adding a new consumer never perturbs the draws
/// of an existing one.
class Rng {
public:
    explicit Rng(std::uint64_t seed);
    Rng(std::uint64_t master_seed, std::string_view stream_name);

    std::uint64_t next_u64();

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform();

    /// Standard normal via Box-Muller (two uniforms per call, no caching).
    double normal();
    double normal(double mean, double sigma);

    /// Exponential with the given rate (mean 1/rate).
    double exponential(double rate);

    /// Exact Poisson sample: Knuth multiplication for small means, Hormann's
    /// PTRD transformed-rejection for large means.
    std::uint64_t poisson(double mean);

private:
    std::array<std::uint64_t, 4> state_;
};

}  // namespace proscan
