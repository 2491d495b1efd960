#include "chase/memest.hpp"

#include <algorithm>

#include "chase/errors.hpp"

namespace chase::memest
{

namespace
{

std::uint64_t ceil_div(std::uint64_t a, std::uint64_t b) { return (a + b - 1) / b; }

double fraction(const std::uint64_t (&t)[3])
{
    const double total = double(t[0]) + double(t[1]) + double(t[2]);
    return total > 0.0 ? (double(t[0]) + double(t[1])) / total : 0.0;
}

} // namespace

MemoryEstimate estimate(const MemoryInputs& in, std::uint64_t element_bytes)
{
    if (in.n == 0 || in.nev == 0 || in.nex == 0 || in.r == 0 || in.c == 0 || in.r_g == 0 || in.c_g == 0)
    {
        throw InvalidArgument("memest: all inputs must be positive");
    }
    if (element_bytes == 0)
    {
        throw InvalidArgument("memest: element size must be positive");
    }
    MemoryEstimate m;
    m.p = ceil_div(in.n, in.r);
    m.q = ceil_div(in.n, in.c);
    m.n_e = in.nev + in.nex;

    m.cpu_terms[0] = m.p * m.q;
    m.cpu_terms[1] = (m.p + m.q) * m.n_e;
    m.cpu_terms[2] = 2 * m.n_e * in.n;

    m.gpu_terms[0] = ceil_div(m.p * m.q, in.r_g * in.c_g);
    m.gpu_terms[1] = 3 * std::max(ceil_div(m.p, in.r_g), ceil_div(m.q, in.c_g)) * m.n_e;
    m.gpu_terms[2] = (2 * in.n + m.n_e) * m.n_e;

    m.cpu_elements = m.cpu_terms[0] + m.cpu_terms[1] + m.cpu_terms[2];
    m.gpu_elements = m.gpu_terms[0] + m.gpu_terms[1] + m.gpu_terms[2];
    m.cpu_bytes = m.cpu_elements * element_bytes;
    m.gpu_bytes = m.gpu_elements * element_bytes;
    m.cpu_scalable_fraction = fraction(m.cpu_terms);
    m.gpu_scalable_fraction = fraction(m.gpu_terms);
    return m;
}

} // namespace chase::memest
