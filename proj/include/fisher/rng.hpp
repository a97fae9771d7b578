#pragma once

#include <array>
#include <cstdint>
#include <limits>

namespace fisher {

/// xoshiro256** (Blackman & Vigna), seeded through splitmix64. Normals come
/// from the Box-Muller transform on 53-bit uniforms so a seed reproduces the
/// same stream on any platform with IEEE-754 doubles and a correctly rounded
/// libm.
class Xoshiro256 {
public:
    using result_type = std::uint64_t;

    explicit Xoshiro256(std::uint64_t seed);

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

    result_type operator()();

    /// Uniform on (0, 1].
    double uniform();

    /// Standard normal.
    double normal();

private:
    std::array<std::uint64_t, 4> state_{};
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace fisher
