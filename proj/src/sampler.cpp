#include "pfnbench/sampler.hpp"

#include <array>
#include <bit>
#include <string>

#include "pfnbench/errors.hpp"

namespace pfnbench {
namespace {

constexpr std::array<int, 10> kPrimes{2, 3, 5, 7, 11, 13, 17, 19, 23, 29};

double radical_inverse(std::uint64_t index, int base) {
    double f = 1.0;
    double r = 0.0;
    while (index > 0) {
        f /= base;
        r += f * static_cast<double>(index % static_cast<std::uint64_t>(base));
        index /= static_cast<std::uint64_t>(base);
    }
    return r;
}

// Direction numbers from the first entries of the Joe-Kuo D6 table:
// dimension, polynomial degree s, coefficient a, initial m values.
struct SobolDim {
    int s;
    std::uint32_t a;
    std::array<std::uint32_t, 4> m;
};
constexpr std::array<SobolDim, 5> kSobolDims{{
    {1, 0, {1, 0, 0, 0}},      // dim 2
    {2, 1, {1, 3, 0, 0}},      // dim 3
    {3, 1, {1, 3, 1, 0}},      // dim 4
    {3, 2, {1, 1, 1, 0}},      // dim 5
    {4, 1, {1, 1, 3, 3}},      // dim 6
}};

constexpr int kSobolBits = 32;

struct DirectionTable {
    // v[dim][k], k in [0, 32)
    std::uint32_t v[kSobolMaxDims][kSobolBits];

    DirectionTable() {
        // dimension 1: van der Corput in base 2
        for (int k = 0; k < kSobolBits; ++k) v[0][k] = 1u << (31 - k);
        for (int dim = 1; dim < kSobolMaxDims; ++dim) {
            const SobolDim& sd = kSobolDims[static_cast<std::size_t>(dim - 1)];
            std::uint32_t m[kSobolBits];
            for (int k = 0; k < sd.s; ++k) m[k] = sd.m[static_cast<std::size_t>(k)];
            for (int k = sd.s; k < kSobolBits; ++k) {
                std::uint32_t mk = m[k - sd.s] ^ (m[k - sd.s] << sd.s);
                for (int i = 1; i < sd.s; ++i) {
                    if ((sd.a >> (sd.s - 1 - i)) & 1u) mk ^= m[k - i] << i;
                }
                m[k] = mk;
            }
            for (int k = 0; k < kSobolBits; ++k) {
                v[dim][k] = m[k] << (31 - k);
            }
        }
    }
};

const DirectionTable& direction_table() {
    static const DirectionTable table;
    return table;
}

}  // namespace

std::vector<double> halton_point(std::uint64_t index, int dims) {
    if (index < 1) throw ConfigError("halton_point: index starts at 1");
    if (dims < 1 || dims > kHaltonMaxDims) {
        throw ConfigError("halton_point: dims must be in [1, " + std::to_string(kHaltonMaxDims) +
                          "]");
    }
    std::vector<double> point(static_cast<std::size_t>(dims));
    for (int j = 0; j < dims; ++j) {
        point[static_cast<std::size_t>(j)] =
            radical_inverse(index, kPrimes[static_cast<std::size_t>(j)]);
    }
    return point;
}

std::vector<double> sobol_point(std::uint64_t index, int dims) {
    if (dims < 1 || dims > kSobolMaxDims) {
        throw ConfigError("sobol_point: dims must be in [1, " + std::to_string(kSobolMaxDims) +
                          "]; use Halton for higher dimensions");
    }
    if (index >= (1ULL << kSobolBits)) throw ConfigError("sobol_point: index exceeds 2^32");
    const auto& table = direction_table();
    // XOR of direction numbers selected by the Gray code of the index: the
    // same points as the incremental construction, in the same order, but
    // addressable at random.
    const std::uint32_t gray = static_cast<std::uint32_t>(index ^ (index >> 1));
    std::vector<double> point(static_cast<std::size_t>(dims), 0.0);
    for (int j = 0; j < dims; ++j) {
        std::uint32_t acc = 0;
        std::uint32_t bits = gray;
        while (bits) {
            const int k = std::countr_zero(bits);
            acc ^= table.v[j][k];
            bits &= bits - 1;
        }
        point[static_cast<std::size_t>(j)] =
            static_cast<double>(acc) * 0x1.0p-32;
    }
    return point;
}

SamplerState::SamplerState(SamplerKind k, int d, std::uint64_t start)
    : kind(k), dims(d), next_index(start) {
    if (kind == SamplerKind::halton && start < 1) {
        throw ConfigError("SamplerState: Halton indices start at 1");
    }
}

std::vector<double> SamplerState::next() {
    const std::uint64_t index = next_index++;
    return kind == SamplerKind::halton ? halton_point(index, dims) : sobol_point(index, dims);
}

}  // namespace pfnbench
