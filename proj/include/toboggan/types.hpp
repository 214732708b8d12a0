#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>

#include "toboggan/rational.hpp"

namespace toboggan {

using cplx = std::complex<double>;

inline constexpr cplx imag_unit{0.0, 1.0};
inline constexpr double pi = std::numbers::pi;

/// Integer power by repeated squaring. Conjugation and sign symmetries of the
/// base carry over bit-exactly, which keeps discretized PT checks at machine zero.
inline cplx ipow(cplx base, std::int64_t k)
{
    if (k < 0)
        return 1.0 / ipow(base, -k);
    cplx result{1.0, 0.0};
    while (k > 0) {
        if (k & 1)
            result *= base;
        base *= base;
        k >>= 1;
    }
    return result;
}

/// r^p for a rational exponent; principal branch when p is not an integer.
inline cplx rpow(cplx base, Rational p)
{
    if (p.is_integer())
        return ipow(base, p.num());
    return std::exp(p.value() * std::log(base));
}

} // namespace toboggan
