#pragma once

#include <cmath>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "toboggan/contour.hpp"
#include "toboggan/error.hpp"
#include "toboggan/rational.hpp"
#include "toboggan/types.hpp"

namespace toboggan {

/// -d^2/dz^2 + ell(ell+1)/z^2 + sum_k c_k z^k, k >= 1.
struct ModelSpec {
    double ell = 0.0;
    std::map<int, cplx> coeffs;

    /// Convenience for the omega^2 z^2 term.
    void set_omega(double omega) { coeffs[2] = omega * omega; }

    double centrifugal() const { return ell * (ell + 1.0); }
    bool has_centrifugal() const { return centrifugal() != 0.0; }

    /// c_k real for even k and purely imaginary for odd k.
    bool pt_symmetric() const
    {
        for (const auto& [k, c] : coeffs)
            if (k % 2 == 0 ? c.imag() != 0.0 : c.real() != 0.0)
                return false;
        return true;
    }

    cplx potential(cplx z) const
    {
        cplx v{};
        if (has_centrifugal())
            v += centrifugal() / (z * z);
        for (const auto& [k, c] : coeffs)
            v += c * ipow(z, k);
        return v;
    }

    void validate() const
    {
        if (!std::isfinite(ell))
            throw error(errc::config, "ell must be finite");
        for (const auto& [k, c] : coeffs) {
            if (k < 1)
                throw error(errc::config, "coefficient power k must be >= 1, got " + std::to_string(k));
            if (!std::isfinite(c.real()) || !std::isfinite(c.imag()))
                throw error(errc::config, "coefficient c_" + std::to_string(k) + " is not finite");
        }
    }
};

/// Phase attached to c_k z^k when the term is carried over to the rectified line.
///  - substitution: beta_k = (-1)^(N k), what z = -i (i r)^(2N+1) gives term by term.
///                  Agrees with direct shooting on the spiral; the default.
///  - printed:      beta_k = +1 (+9 omega^2 r^10 + 9 i r^13 for N = 1). For odd N k this
///                  describes the mirrored spiral z = +r^(2N+1) instead.
enum class BranchConvention { printed, substitution };

inline const char* to_string(BranchConvention c)
{
    return c == BranchConvention::printed ? "printed" : "substitution";
}

inline BranchConvention parse_branch_convention(const std::string& s)
{
    if (s == "printed")
        return BranchConvention::printed;
    if (s == "substitution")
        return BranchConvention::substitution;
    throw error(errc::config, "branch_convention must be 'printed' or 'substitution', got '" + s + "'");
}

/// Rectified problem  [-d^2/dr^2 + L(L+1)/r^2 + sum_p a_p r^p] psi = E W(r) psi,
/// W(r) = (2N+1)^2 r^(4N).
struct RectifiedModel {
    double L = 0.0;
    std::map<Rational, cplx> rect_coeffs;
    double weight_prefactor = 1.0;
    Rational weight_power{0};
    int winding = 0;
    BranchConvention convention = BranchConvention::substitution;

    double centrifugal() const { return L * (L + 1.0); }

    bool has_singular_terms() const
    {
        if (centrifugal() != 0.0)
            return true;
        return !rect_coeffs.empty() && rect_coeffs.begin()->first < Rational{0};
    }

    bool pt_symmetric() const
    {
        for (const auto& [p, c] : rect_coeffs) {
            if (!p.is_integer())
                return false;
            if (p.num() % 2 == 0 ? c.imag() != 0.0 : c.real() != 0.0)
                return false;
        }
        return true;
    }

    cplx potential(cplx r) const
    {
        cplx v{};
        if (centrifugal() != 0.0)
            v += centrifugal() / (r * r);
        for (const auto& [p, c] : rect_coeffs)
            v += c * rpow(r, p);
        return v;
    }

    cplx weight(cplx r) const { return weight_prefactor * rpow(r, weight_power); }
};

inline double rectified_ell(double ell, int winding) { return (2 * winding + 1) * (ell + 0.5) - 0.5; }

inline RectifiedModel rectify_model(const ModelSpec& spec, int winding,
                                    BranchConvention convention = BranchConvention::substitution)
{
    spec.validate();
    if (winding < 0)
        throw error(errc::config, "winding must be non-negative");
    const std::int64_t p = 2 * winding + 1;
    RectifiedModel out;
    out.winding = winding;
    out.convention = convention;
    out.L = rectified_ell(spec.ell, winding);
    out.weight_prefactor = static_cast<double>(p * p);
    out.weight_power = Rational{4 * winding};
    for (const auto& [k, c] : spec.coeffs) {
        if (c == cplx{})
            continue;
        double beta = 1.0;
        if (convention == BranchConvention::substitution && (winding * k) % 2 != 0)
            beta = -1.0;
        const Rational power = Rational{k} * Rational{p} + Rational{4 * winding};
        out.rect_coeffs[power] += c * out.weight_prefactor * beta;
    }
    return out;
}

/// psi(r) = z^(-N/(2N+1)) phi(z) on the spiral; the power of z uses the sheet fixed by gamma.
inline std::vector<cplx> wavefunction_pullback(std::span<const ContourPoint> path, std::span<const cplx> phi,
                                               int winding)
{
    if (path.size() != phi.size())
        throw error(errc::config, "path and wavefunction sample counts differ");
    std::vector<cplx> psi;
    psi.reserve(phi.size());
    const double exponent = -static_cast<double>(winding) / (2 * winding + 1);
    for (std::size_t j = 0; j < path.size(); ++j) {
        const cplx z = path[j].z;
        if (z == cplx{})
            throw error(errc::domain, "wavefunction path crosses z = 0");
        const cplx log_z{std::log(std::abs(z)), sheet_arg(z, path[j].gamma, winding)};
        psi.push_back(std::exp(exponent * log_z) * phi[j]);
    }
    return psi;
}

/// Inverse of wavefunction_pullback: phi(z) = z^(N/(2N+1)) psi(r).
inline std::vector<cplx> wavefunction_pushforward(std::span<const ContourPoint> path, std::span<const cplx> psi,
                                                  int winding)
{
    if (path.size() != psi.size())
        throw error(errc::config, "path and wavefunction sample counts differ");
    std::vector<cplx> phi;
    phi.reserve(psi.size());
    const double exponent = static_cast<double>(winding) / (2 * winding + 1);
    for (std::size_t j = 0; j < path.size(); ++j) {
        const cplx z = path[j].z;
        if (z == cplx{})
            throw error(errc::domain, "wavefunction path crosses z = 0");
        const cplx log_z{std::log(std::abs(z)), sheet_arg(z, path[j].gamma, winding)};
        phi.push_back(std::exp(exponent * log_z) * psi[j]);
    }
    return phi;
}

} // namespace toboggan
