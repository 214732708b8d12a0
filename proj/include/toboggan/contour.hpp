#pragma once

#include <cmath>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "toboggan/error.hpp"
#include "toboggan/types.hpp"

namespace toboggan {

/// Downward-shifted integration line r(x) = x - i eps(x) and its tobogganic
/// partner winding N times around the branch point at the origin.
///
/// The shift is either the constant `epsilon` or an even, positive profile
/// eps(x). Profiles are restricted to those for which x / eps(x) is strictly
/// increasing, so that the angular parametrization tan(gamma) = x / eps(x)
/// can be inverted.
struct ContourSpec {
    double epsilon = 1.0;
    int winding = 0;
    std::function<double(double)> profile;

    bool constant() const { return !profile; }
    double shift_at(double x) const { return profile ? profile(x) : epsilon; }

    void validate() const
    {
        if (winding < 0)
            throw error(errc::config, "winding must be non-negative, got " + std::to_string(winding));
        if (constant()) {
            if (!(epsilon > 0.0) || !std::isfinite(epsilon))
                throw error(errc::config, "epsilon must be positive, got " + num(epsilon));
            return;
        }
        double previous = -INFINITY;
        for (int k = -400; k <= 400; ++k) {
            const double x = 0.125 * k;
            const double e = profile(x);
            if (!(e > 0.0) || !std::isfinite(e))
                throw error(errc::config, "profile eps(x) must be positive at x = " + num(x));
            if (std::abs(profile(-x) - e) > 1e-12 * e)
                throw error(errc::config, "profile eps(x) must be even, fails at x = " + num(x));
            const double g = x / e;
            if (!(g > previous))
                throw error(errc::config, "x/eps(x) must be strictly increasing, fails at x = " + num(x));
            previous = g;
        }
    }
};

struct ContourPoint {
    double gamma = 0.0;
    cplx z;
    cplx r;
};

inline cplx line_point(double x, const ContourSpec& spec) { return {x, -spec.shift_at(x)}; }

/// Real parameter x belonging to the angle gamma, tan(gamma) = x / eps(x).
inline double gamma_to_x(double gamma, const ContourSpec& spec)
{
    if (!(std::abs(gamma) < pi / 2))
        throw error(errc::domain, "gamma must lie in (-pi/2, pi/2), got " + num(gamma));
    const double t = std::tan(gamma);
    if (spec.constant())
        return spec.epsilon * t;
    if (t == 0.0)
        return 0.0;
    // x/eps(x) is odd and increasing; bracket on the side of t and bisect
    const double sign = t > 0 ? 1.0 : -1.0;
    const double target = std::abs(t);
    double lo = 0.0, hi = 1.0;
    while (hi / spec.profile(hi) < target) {
        lo = hi;
        hi *= 2.0;
        if (hi > 1e300)
            throw error(errc::domain, "profile does not reach tan(gamma) = " + num(t));
    }
    for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
        const double mid = 0.5 * (lo + hi);
        (mid / spec.profile(mid) < target ? lo : hi) = mid;
    }
    return sign * 0.5 * (lo + hi);
}

inline ContourPoint spiral_point(double gamma, const ContourSpec& spec)
{
    const double x = gamma_to_x(gamma, spec);
    const double rho = spec.shift_at(x) / std::cos(gamma);
    const int p = 2 * spec.winding + 1;
    ContourPoint pt;
    pt.gamma = gamma;
    pt.r = -imag_unit * rho * std::polar(1.0, gamma);
    pt.z = -imag_unit * std::pow(rho, p) * std::polar(1.0, p * gamma);
    return pt;
}

/// Uniform gamma grid of `count` points on [-gamma_max, gamma_max].
inline std::vector<ContourPoint> sample_spiral(const ContourSpec& spec, int count, double gamma_max)
{
    if (count < 2)
        throw error(errc::config, "need at least two path samples");
    if (!(gamma_max > 0.0 && gamma_max < pi / 2))
        throw error(errc::domain, "gamma_max must lie in (0, pi/2)");
    std::vector<ContourPoint> path;
    path.reserve(static_cast<std::size_t>(count));
    for (int k = 0; k < count; ++k) {
        const double gamma = -gamma_max + 2.0 * gamma_max * k / (count - 1);
        path.push_back(spiral_point(gamma, spec));
    }
    return path;
}

/// z = -i (i r)^(2N+1); polynomial, so no branch choice is involved.
inline cplx unrectify_point(cplx r, int winding) { return -imag_unit * ipow(imag_unit * r, 2 * winding + 1); }

inline std::vector<cplx> unrectify(std::span<const ContourPoint> path, int winding)
{
    std::vector<cplx> out;
    out.reserve(path.size());
    for (const auto& p : path)
        out.push_back(unrectify_point(p.r, winding));
    return out;
}

/// Argument of z on the sheet selected by gamma: the representative of arg(z)
/// closest to (2N+1) gamma - pi/2.
inline double sheet_arg(cplx z, double gamma, int winding)
{
    const double target = (2 * winding + 1) * gamma - pi / 2;
    const double a = std::arg(z);
    return a + 2.0 * pi * std::round((target - a) / (2.0 * pi));
}

/// i r = (i z)^(1/(2N+1)) with the root selected by the path angle gamma.
inline cplx rectify_point(cplx z, double gamma, int winding)
{
    if (z == cplx{})
        throw error(errc::domain, "rectification path crosses z = 0");
    const int p = 2 * winding + 1;
    const double arg_iz = sheet_arg(z, gamma, winding) + pi / 2;
    const cplx ir = std::polar(std::pow(std::abs(z), 1.0 / p), arg_iz / p);
    return -imag_unit * ir;
}

inline std::vector<cplx> rectify(std::span<const ContourPoint> path, int winding)
{
    std::vector<cplx> out;
    out.reserve(path.size());
    for (const auto& p : path)
        out.push_back(rectify_point(p.z, p.gamma, winding));
    return out;
}

/// Continuously tracked argument along a sampled curve (no jumps of 2 pi).
inline std::vector<double> unwrapped_arg(std::span<const cplx> values)
{
    std::vector<double> out;
    out.reserve(values.size());
    for (const auto& v : values) {
        double a = std::arg(v);
        if (!out.empty())
            a += 2.0 * pi * std::round((out.back() - a) / (2.0 * pi));
        out.push_back(a);
    }
    return out;
}

} // namespace toboggan
