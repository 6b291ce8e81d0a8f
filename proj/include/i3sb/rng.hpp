#pragma once

#include <cstdint>
#include <random>

namespace i3sb {

// Deterministic random stream. Uniform bits come from mt19937_64 (the bit
// sequence is pinned by the standard) and normals use an explicit
// Box-Muller transform, so identical seeds give identical draws on every
// platform and standard library. std::normal_distribution is avoided on
// purpose: its algorithm is implementation-defined.
class RandomStream {
public:
    explicit RandomStream(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t raw() { return engine_(); }

    // [0, 1) with 53 random bits
    double uniform() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    // (0, 1]; safe as a log argument
    double uniform_pos() {
        return static_cast<double>((engine_() >> 11) + 1) * 0x1.0p-53;
    }

    // One standard normal variate; always consumes exactly two uniforms.
    double normal();

private:
    std::mt19937_64 engine_;
};

// Splits one experiment seed into independent child seeds (per trajectory,
// per image, per dataset item). splitmix64 finalizer over
// base + (index + 1) * golden-gamma; children of distinct indices or
// distinct bases do not collide in practice.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index);

}  // namespace i3sb
