#pragma once

#include <cstdint>
#include <span>

namespace mdlab {

/// SplitMix64 step; used to expand seeds and derive independent streams.
std::uint64_t splitmix64(std::uint64_t& state);

/// Deterministic per-stream seed derivation: hash of (seed, stream).
/// Replicate k of a run with master seed s always uses deriveSeed(s, k),
/// so results do not depend on how replicates are distributed over threads.
std::uint64_t deriveSeed(std::uint64_t seed, std::uint64_t stream);

/// xoshiro256** generator, seeded via SplitMix64. All samplers below avoid
/// std::* distributions so that byte-level reproducibility only depends on
/// this file, not on the standard library implementation.
class Rng {
public:
    explicit Rng(std::uint64_t seed, std::uint64_t stream = 0);

    std::uint64_t nextU64();

    /// Uniform on [0,1), 53-bit resolution.
    double uniform01();

    /// Uniform on [-c, c].
    double uniformSym(double c);

    /// Fair +1/-1.
    double rademacher();

    /// Index in [0, n).
    std::size_t uniformIndex(std::size_t n);

    /// Index sampled from the given probability row (assumed to sum to 1).
    std::size_t categorical(std::span<const double> probs);

private:
    std::uint64_t s_[4];
};

}  // namespace mdlab
