#pragma once

#include <cstdint>
#include <vector>

namespace pfnbench {

// Deterministic low-discrepancy points. Both samplers are pure functions of
// (kind, dims, index); SamplerState is just a cursor.

enum class SamplerKind { halton, sobol };

// Radical inverse in the i-th prime base per coordinate; index starts at 1
// (index 0 would be the all-zero point). dims <= 10 (first ten primes).
std::vector<double> halton_point(std::uint64_t index, int dims);

// Gray-code Sobol point with embedded direction numbers; dims <= 6.
// Index 0 maps to the origin by convention.
std::vector<double> sobol_point(std::uint64_t index, int dims);

inline constexpr int kHaltonMaxDims = 10;
inline constexpr int kSobolMaxDims = 6;

struct SamplerState {
    SamplerKind kind = SamplerKind::halton;
    int dims = 1;
    std::uint64_t next_index = 1;

    SamplerState() = default;
    SamplerState(SamplerKind k, int d, std::uint64_t start);

    std::vector<double> next();
};

}  // namespace pfnbench
