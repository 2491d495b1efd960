#pragma once

#include <cstddef>
#include <cstdint>

namespace chase::memest
{

struct MemoryInputs
{
    std::uint64_t n = 0;
    std::uint64_t nev = 0;
    std::uint64_t nex = 0;
    std::uint64_t r = 1;
    std::uint64_t c = 1;
    std::uint64_t r_g = 1;
    std::uint64_t c_g = 1;
};

/// Element counts of 64-bit slots per rank (cpu) and per device (gpu).
struct MemoryEstimate
{
    std::uint64_t p = 0;
    std::uint64_t q = 0;
    std::uint64_t n_e = 0;

    // cpu = pq + (p+q) n_e + 2 n_e n
    std::uint64_t cpu_terms[3] = {0, 0, 0};
    // gpu = pq/(r_g c_g) + 3 max(p/r_g, q/c_g) n_e + (2n + n_e) n_e
    std::uint64_t gpu_terms[3] = {0, 0, 0};

    std::uint64_t cpu_elements = 0;
    std::uint64_t gpu_elements = 0;
    std::uint64_t cpu_bytes = 0;
    std::uint64_t gpu_bytes = 0;
    double cpu_scalable_fraction = 0.0;
    double gpu_scalable_fraction = 0.0;
};

/// p and q are the largest block sizes (ceiling division). Device-level
/// quotients are rounded up as well. `element_bytes` is 8 for real data and
/// 16 for the complex case.
MemoryEstimate estimate(const MemoryInputs& in, std::uint64_t element_bytes = 8);

} // namespace chase::memest
