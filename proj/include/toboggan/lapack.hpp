#pragma once

// Thin wrappers over the LAPACK routines used by the solvers, plus the
// complex-symmetric tridiagonal QL iteration used for eigenvalue-only runs.

#include <algorithm>
#include <cmath>
#include <complex>
#include <optional>
#include <string>

#include <complex>
#ifndef lapack_complex_float
#define lapack_complex_float std::complex<float>
#endif
#ifndef lapack_complex_double
#define lapack_complex_double std::complex<double>
#endif
#include <lapacke.h>

#include <Eigen/Dense>

#include "toboggan/error.hpp"
#include "toboggan/types.hpp"

namespace toboggan::lapack {

struct EigenDecomposition {
    Eigen::VectorXcd values;
    Eigen::MatrixXcd vectors; // right eigenvectors, unit 2-norm columns; empty when not requested
};

/// zgeev on a copy of `a`.
inline EigenDecomposition eig(Eigen::MatrixXcd a, bool want_vectors)
{
    const auto n = static_cast<lapack_int>(a.rows());
    if (a.cols() != a.rows())
        throw error(errc::config, "eig needs a square matrix");
    EigenDecomposition out;
    out.values.resize(n);
    if (want_vectors)
        out.vectors.resize(n, n);
    cplx dummy{};
    const lapack_int info =
        LAPACKE_zgeev(LAPACK_COL_MAJOR, 'N', want_vectors ? 'V' : 'N', n, a.data(), n, out.values.data(), &dummy, 1,
                      want_vectors ? out.vectors.data() : &dummy, want_vectors ? n : 1);
    if (info != 0)
        throw error(errc::solver_failure, "zgeev returned info = " + std::to_string(info));
    return out;
}

/// Eigenvalues of an upper Hessenberg matrix (zhseqr, job 'E').
inline Eigen::VectorXcd hessenberg_eigenvalues(Eigen::MatrixXcd a)
{
    const auto n = static_cast<lapack_int>(a.rows());
    Eigen::VectorXcd values(n);
    cplx dummy{};
    const lapack_int info =
        LAPACKE_zhseqr(LAPACK_COL_MAJOR, 'E', 'N', n, 1, n, a.data(), n, values.data(), &dummy, 1);
    if (info != 0)
        throw error(errc::solver_failure, "zhseqr returned info = " + std::to_string(info));
    return values;
}

/// LU factorization of a banded complex matrix (zgbtrf / zgbtrs).
class BandedLU {
public:
    BandedLU(const Eigen::MatrixXcd& a, int lower, int upper)
        : n_(static_cast<lapack_int>(a.rows())), kl_(lower), ku_(upper), ldab_(2 * lower + upper + 1),
          ab_(ldab_, n_), ipiv_(n_)
    {
        ab_.setZero();
        for (lapack_int j = 0; j < n_; ++j) {
            const lapack_int i0 = std::max<lapack_int>(0, j - ku_);
            const lapack_int i1 = std::min<lapack_int>(n_ - 1, j + kl_);
            for (lapack_int i = i0; i <= i1; ++i)
                ab_(kl_ + ku_ + i - j, j) = a(i, j);
        }
        info_ = LAPACKE_zgbtrf(LAPACK_COL_MAJOR, n_, n_, kl_, ku_, ab_.data(), ldab_, ipiv_.data());
        if (info_ < 0)
            throw error(errc::solver_failure, "zgbtrf returned info = " + std::to_string(info_));
    }

    bool singular() const { return info_ > 0; }

    Eigen::VectorXcd solve(Eigen::VectorXcd b) const
    {
        const lapack_int info = LAPACKE_zgbtrs(LAPACK_COL_MAJOR, 'N', n_, kl_, ku_, 1, ab_.data(), ldab_,
                                               ipiv_.data(), b.data(), n_);
        if (info != 0)
            throw error(errc::solver_failure, "zgbtrs returned info = " + std::to_string(info));
        return b;
    }

private:
    lapack_int n_, kl_, ku_, ldab_;
    Eigen::MatrixXcd ab_;
    Eigen::Matrix<lapack_int, Eigen::Dynamic, 1> ipiv_;
    lapack_int info_ = 0;
};

/// Eigenvalues of the complex symmetric tridiagonal matrix with diagonal `d`
/// and off-diagonal `e` (e.size() == d.size() - 1) by implicit QL with
/// complex orthogonal rotations, O(n^2). Returns nullopt when a rotation
/// becomes isotropic (c^2 + s^2 = 1 with |c|, |s| >> 1) or the iteration
/// stalls; callers then fall back to a unitary method.
inline std::optional<Eigen::VectorXcd> complex_symmetric_tridiagonal_eigenvalues(Eigen::VectorXcd d,
                                                                                 const Eigen::VectorXcd& off)
{
    const Eigen::Index n = d.size();
    if (n == 0)
        return d;
    Eigen::VectorXcd e = Eigen::VectorXcd::Zero(n);
    e.head(n - 1) = off;
    constexpr double eps = std::numeric_limits<double>::epsilon();
    constexpr double isotropy_guard = 1e-6;
    for (Eigen::Index l = 0; l < n; ++l) {
        int iter = 0;
        Eigen::Index m;
        do {
            for (m = l; m < n - 1; ++m) {
                const double dd = std::abs(d[m]) + std::abs(d[m + 1]);
                if (std::abs(e[m]) <= eps * dd)
                    break;
            }
            if (m == l)
                break;
            if (++iter > 60)
                return std::nullopt;
            cplx g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            cplx r = std::sqrt(g * g + 1.0);
            g = d[m] - d[l] + e[l] / (std::abs(g + r) >= std::abs(g - r) ? g + r : g - r);
            cplx s = 1.0, c = 1.0, p = 0.0;
            Eigen::Index i;
            bool deflated = false;
            for (i = m - 1; i >= l; --i) {
                const cplx f = s * e[i];
                const cplx b = c * e[i];
                r = std::sqrt(f * f + g * g);
                if (std::abs(r) < isotropy_guard * (std::abs(f) + std::abs(g))) {
                    if (std::abs(f) + std::abs(g) == 0.0) {
                        d[i + 1] -= p;
                        e[m] = 0.0;
                        deflated = true;
                        break;
                    }
                    return std::nullopt;
                }
                e[i + 1] = r;
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
            }
            if (deflated)
                continue;
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        } while (m != l);
    }
    for (Eigen::Index k = 0; k < n; ++k)
        if (!std::isfinite(d[k].real()) || !std::isfinite(d[k].imag()))
            return std::nullopt;
    return d;
}

} // namespace toboggan::lapack
