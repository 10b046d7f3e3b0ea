#include "mdlab/rng.hpp"

namespace mdlab {

std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

std::uint64_t deriveSeed(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t st = seed;
    std::uint64_t a = splitmix64(st);
    st ^= stream * 0x9e3779b97f4a7c15ULL + 0x632be59bd9b4e019ULL;
    std::uint64_t b = splitmix64(st);
    return a ^ (b + 0x9e3779b97f4a7c15ULL + (a << 6) + (a >> 2));
}

namespace {
inline std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
}
}  // namespace

Rng::Rng(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t st = deriveSeed(seed, stream);
    for (auto& w : s_) w = splitmix64(st);
}

std::uint64_t Rng::nextU64() {
    const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
}

double Rng::uniform01() {
    return static_cast<double>(nextU64() >> 11) * 0x1.0p-53;
}

double Rng::uniformSym(double c) {
    return c * (2.0 * uniform01() - 1.0);
}

double Rng::rademacher() {
    return (nextU64() & 1ULL) ? 1.0 : -1.0;
}

std::size_t Rng::uniformIndex(std::size_t n) {
    // Rejection-free modulo is fine here: n is tiny compared to 2^64.
    return static_cast<std::size_t>(nextU64() % n);
}

std::size_t Rng::categorical(std::span<const double> probs) {
    double u = uniform01();
    double acc = 0.0;
    for (std::size_t i = 0; i + 1 < probs.size(); ++i) {
        acc += probs[i];
        if (u < acc) return i;
    }
    return probs.size() - 1;
}

}  // namespace mdlab
