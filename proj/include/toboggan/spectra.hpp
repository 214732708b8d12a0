#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "toboggan/discrete.hpp"
#include "toboggan/error.hpp"
#include "toboggan/lapack.hpp"
#include "toboggan/types.hpp"

namespace toboggan {

/// Eigenpairs of H v = lambda W v with their left partners.
/// Column j of `left` is the vector l_j with l_j^dag H = lambda_j l_j^dag W.
struct Eigensystem {
    Eigen::VectorXcd lambdas;
    Eigen::MatrixXcd right;
    Eigen::MatrixXcd left;
    Eigen::VectorXcd sigmas; // l_j^dag W r_j
    Eigen::VectorXcd kappa;  // accumulated rescaling, ones when fresh
    Eigen::VectorXd residual_right;
    Eigen::VectorXd residual_left;
    Eigen::Index discarded = 0; // modes dropped by filter_real

    Eigen::Index modes() const { return lambdas.size(); }
    Eigen::Index dim() const { return right.rows(); }
};

namespace detail {

inline bool mode_less(cplx a, cplx b)
{
    if (a.real() != b.real())
        return a.real() < b.real();
    return a.imag() < b.imag();
}

inline std::vector<Eigen::Index> sorted_order(const Eigen::VectorXcd& values)
{
    std::vector<Eigen::Index> idx(static_cast<std::size_t>(values.size()));
    std::iota(idx.begin(), idx.end(), Eigen::Index{0});
    std::stable_sort(idx.begin(), idx.end(), [&](auto a, auto b) { return mode_less(values[a], values[b]); });
    return idx;
}

inline Eigen::VectorXcd weighted(const Eigen::VectorXcd& w, const Eigen::VectorXcd& v) { return w.cwiseProduct(v); }

} // namespace detail

/// ||H r - lambda W r|| / ||W r||
inline double right_residual(const Eigen::MatrixXcd& H, const Eigen::VectorXcd& w, cplx lambda,
                             const Eigen::VectorXcd& r)
{
    const Eigen::VectorXcd wr = detail::weighted(w, r);
    return (H * r - lambda * wr).norm() / wr.norm();
}

/// ||H^dag l - conj(lambda) W^dag l|| / ||W^dag l||
inline double left_residual(const Eigen::MatrixXcd& H, const Eigen::VectorXcd& w, cplx lambda,
                            const Eigen::VectorXcd& l)
{
    const Eigen::VectorXcd wl = detail::weighted(w.conjugate(), l);
    return (H.adjoint() * l - std::conj(lambda) * wl).norm() / wl.norm();
}

inline void refresh_diagnostics(Eigensystem& es, const Eigen::MatrixXcd& H, const Eigen::VectorXcd& w)
{
    const auto m = es.modes();
    es.sigmas.resize(m);
    es.residual_right.resize(m);
    es.residual_left.resize(m);
    for (Eigen::Index j = 0; j < m; ++j) {
        es.sigmas[j] = es.left.col(j).dot(detail::weighted(w, es.right.col(j)));
        es.residual_right[j] = right_residual(H, w, es.lambdas[j], es.right.col(j));
        es.residual_left[j] = left_residual(H, w, es.lambdas[j], es.left.col(j));
    }
}

/// All eigenvalues of the pair, ascending real part.
///
/// Tridiagonal runs with constant weight go through complex-symmetric QL,
/// which is O(n^2) but only accurate to roughly 1e-7 relative since its
/// rotations are not unitary; solve_lowest polishes what it returns. A varying
/// weight makes the symmetrized matrix far from normal and QL unreliable, so
/// those runs (and any QL breakdown) use zhseqr on W^-1 H; wider stencils use zgeev.
inline Eigen::VectorXcd generalized_eigenvalues(const OperatorPair& pair)
{
    const Eigen::Index n = pair.size();
    const bool constant_weight = n == 0 || (pair.w.array() == pair.w[0]).all();
    std::optional<Eigen::VectorXcd> values;
    if (pair.bandwidth == 1 && constant_weight) {
        const Eigen::VectorXcd s = pair.w.cwiseSqrt().cwiseInverse();
        Eigen::VectorXcd d(n), e(n > 0 ? n - 1 : 0);
        for (Eigen::Index j = 0; j < n; ++j)
            d[j] = pair.H(j, j) * s[j] * s[j];
        for (Eigen::Index j = 0; j + 1 < n; ++j)
            e[j] = pair.H(j, j + 1) * s[j] * s[j + 1];
        values = lapack::complex_symmetric_tridiagonal_eigenvalues(d, e);
        if (!values)
            values = lapack::hessenberg_eigenvalues(pair.w.cwiseInverse().asDiagonal() * pair.H);
    } else if (pair.bandwidth == 1) {
        values = lapack::hessenberg_eigenvalues(pair.w.cwiseInverse().asDiagonal() * pair.H);
    } else {
        values = lapack::eig(pair.w.cwiseInverse().asDiagonal() * pair.H, false).values;
    }
    Eigen::VectorXcd out(n);
    const auto order = detail::sorted_order(*values);
    for (Eigen::Index j = 0; j < n; ++j)
        out[j] = (*values)[order[static_cast<std::size_t>(j)]];
    return out;
}

/// Full eigendecomposition with independently solved left vectors.
///
/// Right vectors come from W^-1 H, left vectors from (H W^-1)^dag = W^-dag H^dag,
/// whose eigenvalues are the conjugates. Modes are paired greedily by nearest
/// eigenvalue; a partner must lie within tol * max(1, |lambda|) and no second
/// candidate may.
inline Eigensystem solve_generalized(const Eigen::MatrixXcd& H, const Eigen::VectorXcd& w, double tol)
{
    if (!(tol > 0.0))
        throw error(errc::config, "pairing tolerance must be positive");
    if (H.rows() != H.cols() || H.rows() != w.size())
        throw error(errc::config, "H must be square and match the weight dimension");
    if ((w.array() == cplx{}).any())
        throw error(errc::config, "weight W is singular");
    const Eigen::Index n = H.rows();

    const auto rd = lapack::eig(w.cwiseInverse().asDiagonal() * H, true);
    const auto ld = lapack::eig(w.conjugate().cwiseInverse().asDiagonal() * H.adjoint(), true);
    for (Eigen::Index k = 0; k < n; ++k)
        if (!std::isfinite(std::abs(rd.values[k])) || !std::isfinite(std::abs(ld.values[k])))
            throw error(errc::solver_failure, "eigenvalue solver produced non-finite values");

    const auto order = detail::sorted_order(rd.values);
    Eigensystem es;
    es.lambdas.resize(n);
    es.right.resize(n, n);
    es.left.resize(n, n);
    for (Eigen::Index j = 0; j < n; ++j) {
        es.lambdas[j] = rd.values[order[static_cast<std::size_t>(j)]];
        es.right.col(j) = rd.vectors.col(order[static_cast<std::size_t>(j)]);
    }

    for (Eigen::Index j = 0; j + 1 < n; ++j) {
        const double scale = tol * std::max(1.0, std::abs(es.lambdas[j]));
        for (Eigen::Index k = j + 1; k < n && es.lambdas[k].real() - es.lambdas[j].real() <= scale; ++k)
            if (std::abs(es.lambdas[k] - es.lambdas[j]) <= scale)
                throw error(errc::degenerate_pairing, "eigenvalues " + std::to_string(j) + " and " +
                                                          std::to_string(k) + " coincide within the pairing tolerance");
    }

    std::vector<bool> used(static_cast<std::size_t>(n), false);
    for (Eigen::Index j = 0; j < n; ++j) {
        const double scale = tol * std::max(1.0, std::abs(es.lambdas[j]));
        Eigen::Index best = -1, second = -1;
        double best_d = INFINITY, second_d = INFINITY;
        for (Eigen::Index k = 0; k < n; ++k) {
            if (used[static_cast<std::size_t>(k)])
                continue;
            const double d = std::abs(std::conj(ld.values[k]) - es.lambdas[j]);
            if (d < best_d) {
                second = best;
                second_d = best_d;
                best = k;
                best_d = d;
            } else if (d < second_d) {
                second = k;
                second_d = d;
            }
        }
        if (best < 0 || best_d > scale)
            throw error(errc::solver_failure, "no left eigenvalue within tolerance of mode " + std::to_string(j) +
                                                  " (nearest distance " + num(best_d) + ")");
        if (second >= 0 && second_d <= scale)
            throw error(errc::degenerate_pairing, "two left eigenvalues match mode " + std::to_string(j));
        used[static_cast<std::size_t>(best)] = true;
        es.left.col(j) = ld.vectors.col(best);
    }

    es.kappa = Eigen::VectorXcd::Ones(n);
    refresh_diagnostics(es, H, w);
    return es;
}

inline Eigensystem solve_generalized(const OperatorPair& pair, double tol)
{
    return solve_generalized(pair.H, pair.w, tol);
}

/// Keeps modes with |Im lambda| < tol_im * max(1, |Re lambda|), ascending real part.
inline Eigensystem filter_real(const Eigensystem& es, double tol_im)
{
    std::vector<Eigen::Index> keep;
    for (Eigen::Index j = 0; j < es.modes(); ++j) {
        const cplx l = es.lambdas[j];
        if (std::abs(l.imag()) < tol_im * std::max(1.0, std::abs(l.real())))
            keep.push_back(j);
    }
    if (keep.empty())
        throw error(errc::empty_spectrum, "no eigenvalue passes |Im| < " + num(tol_im));
    std::stable_sort(keep.begin(), keep.end(),
                     [&](auto a, auto b) { return es.lambdas[a].real() < es.lambdas[b].real(); });
    const auto m = static_cast<Eigen::Index>(keep.size());
    Eigensystem out;
    out.lambdas.resize(m);
    out.right.resize(es.dim(), m);
    out.left.resize(es.dim(), m);
    out.sigmas.resize(m);
    out.kappa.resize(m);
    out.residual_right.resize(m);
    out.residual_left.resize(m);
    for (Eigen::Index j = 0; j < m; ++j) {
        const auto k = keep[static_cast<std::size_t>(j)];
        out.lambdas[j] = es.lambdas[k];
        out.right.col(j) = es.right.col(k);
        out.left.col(j) = es.left.col(k);
        out.sigmas[j] = es.sigmas[k];
        out.kappa[j] = es.kappa[k];
        out.residual_right[j] = es.residual_right[k];
        out.residual_left[j] = es.residual_left[k];
    }
    out.discarded = es.discarded + (es.modes() - m);
    return out;
}

/// Refines an approximate eigenvalue mu0 of the pair by inverse iteration on
/// H - mu W and its adjoint, then a two-sided Rayleigh quotient.
inline void refine_mode(const OperatorPair& pair, cplx mu0, cplx& lambda, Eigen::VectorXcd& r, Eigen::VectorXcd& l)
{
    const Eigen::Index n = pair.size();
    const int band = pair.bandwidth;
    Eigen::VectorXcd start(n);
    for (Eigen::Index j = 0; j < n; ++j)
        start[j] = std::polar(1.0, 0.37 * static_cast<double>(j) + 0.11 * static_cast<double>(j * j % 17));
    cplx mu = mu0;
    for (int pass = 0; pass < 2; ++pass) {
        // a tiny offset keeps the shifted matrix numerically nonsingular
        const cplx shift = mu * (1.0 + cplx{1e-12, 1e-12}) + cplx{1e-14, 0.0};
        const Eigen::MatrixXcd shifted = pair.H - shift * Eigen::MatrixXcd(pair.w.asDiagonal());
        const lapack::BandedLU lu(shifted, band, band);
        const lapack::BandedLU lu_adj(shifted.adjoint(), band, band);
        if (lu.singular() || lu_adj.singular())
            throw error(errc::solver_failure, "shifted operator is exactly singular near " + num(mu0.real()));
        r = pass == 0 ? start : r;
        l = pass == 0 ? start : l;
        for (int it = 0; it < 3; ++it) {
            r = lu.solve(detail::weighted(pair.w, r)).normalized();
            l = lu_adj.solve(detail::weighted(pair.w.conjugate(), l)).normalized();
        }
        mu = l.dot(pair.H * r) / l.dot(detail::weighted(pair.w, r));
    }
    lambda = mu;
}

/// Polishes every mode of a dense solution by refine_mode. A mode keeps its
/// dense value when refinement drifts further than `drift` relative or the
/// left/right overlap collapses (the two sides locked onto different members
/// of a cluster). Returns the number of modes kept as is.
inline Eigen::Index refine_eigensystem(const OperatorPair& pair, Eigensystem& es, double drift = 1e-6)
{
    auto overlap = [&](const Eigen::VectorXcd& r, const Eigen::VectorXcd& l) {
        const Eigen::VectorXcd wr = detail::weighted(pair.w, r);
        return std::abs(l.dot(wr)) / (l.norm() * wr.norm());
    };
    Eigen::Index kept = 0;
    for (Eigen::Index j = 0; j < es.modes(); ++j) {
        cplx lambda;
        Eigen::VectorXcd r, l;
        try {
            refine_mode(pair, es.lambdas[j], lambda, r, l);
        } catch (const error&) {
            ++kept;
            continue;
        }
        if (!(std::abs(lambda - es.lambdas[j]) < drift * std::max(1.0, std::abs(es.lambdas[j]))) ||
            !(overlap(r, l) >= 0.5 * overlap(es.right.col(j), es.left.col(j)))) {
            ++kept;
            continue;
        }
        es.lambdas[j] = lambda;
        es.right.col(j) = r;
        es.left.col(j) = l;
    }
    refresh_diagnostics(es, pair.H, pair.w);
    return kept;
}

namespace detail {

/// Candidate eigenvalues for solve_lowest. A five-point operator with constant
/// weight is screened through its three-point partner on the same grid (an
/// O(h^2) perturbation of the low modes) so the O(n^3) dense solve is skipped.
inline Eigen::VectorXcd screening_eigenvalues(const OperatorPair& pair)
{
    const Eigen::Index n = pair.size();
    const bool constant_weight = n == 0 || (pair.w.array() == pair.w[0]).all();
    if (pair.bandwidth != 2 || !constant_weight)
        return generalized_eigenvalues(pair);
    const double h2 = pair.grid.spacing() * pair.grid.spacing();
    OperatorPair tri;
    tri.w = pair.w;
    tri.grid = pair.grid;
    tri.bandwidth = 1;
    tri.H = Eigen::MatrixXcd::Zero(n, n);
    for (Eigen::Index j = 0; j < n; ++j) {
        tri.H(j, j) = pair.H(j, j) - 30.0 / (12.0 * h2) + 2.0 / h2;
        if (j + 1 < n)
            tri.H(j, j + 1) = tri.H(j + 1, j) = -1.0 / h2;
    }
    return generalized_eigenvalues(tri);
}

} // namespace detail

/// Lowest `count` modes with |Im lambda| < tol_im * max(1, |Re lambda|).
/// Candidates come from detail::screening_eigenvalues with a loose reality
/// screen; each is refined by refine_mode and the reality test is applied to
/// the refined value. Never forms a dense eigenbasis.
inline Eigensystem solve_lowest(const OperatorPair& pair, int count, double tol_im)
{
    if (count < 1)
        throw error(errc::config, "need at least one mode");
    constexpr double screen = 1e-4;
    const Eigen::VectorXcd all = detail::screening_eigenvalues(pair);
    std::vector<cplx> lambdas;
    std::vector<Eigen::VectorXcd> rights, lefts;
    Eigen::Index rejected = 0;
    for (Eigen::Index j = 0; j < all.size() && static_cast<int>(lambdas.size()) < count; ++j) {
        const cplx c = all[j];
        if (std::abs(c.imag()) >= std::max(screen, tol_im) * std::max(1.0, std::abs(c.real())))
            continue;
        cplx lambda;
        Eigen::VectorXcd r, l;
        refine_mode(pair, c, lambda, r, l);
        if (std::abs(lambda.imag()) >= tol_im * std::max(1.0, std::abs(lambda.real()))) {
            ++rejected;
            continue;
        }
        const bool duplicate = std::any_of(lambdas.begin(), lambdas.end(), [&](cplx o) {
            return std::abs(o - lambda) < 1e-9 * std::max(1.0, std::abs(lambda));
        });
        if (duplicate)
            throw error(errc::degenerate_pairing, "two candidates refine to the same eigenvalue " + num(lambda.real()));
        lambdas.push_back(lambda);
        rights.push_back(r);
        lefts.push_back(l);
    }
    if (lambdas.empty())
        throw error(errc::empty_spectrum, "no eigenvalue passes |Im| < " + num(tol_im));

    const auto m = static_cast<Eigen::Index>(lambdas.size());
    Eigensystem es;
    es.lambdas.resize(m);
    es.right.resize(pair.size(), m);
    es.left.resize(pair.size(), m);
    for (Eigen::Index k = 0; k < m; ++k) {
        es.lambdas[k] = lambdas[static_cast<std::size_t>(k)];
        es.right.col(k) = rights[static_cast<std::size_t>(k)];
        es.left.col(k) = lefts[static_cast<std::size_t>(k)];
    }
    es.kappa = Eigen::VectorXcd::Ones(m);
    es.discarded = rejected;
    refresh_diagnostics(es, pair.H, pair.w);
    return es;
}

struct NormalizationReport {
    Eigen::MatrixXcd gram; // L^dag W R after normalization
    double max_offdiag = 0.0;
    double max_diag_error = 0.0;
};

/// Relative |sigma| below which a mode counts as self-orthogonal.
inline constexpr double self_orthogonal_threshold = 1e-13;

/// l_j <- l_j / conj(sigma_j), so that l_j^dag W r_j = 1. Right vectors untouched.
inline Eigensystem normalize_biorthogonal(const Eigensystem& es, const Eigen::VectorXcd& w,
                                          NormalizationReport* report = nullptr)
{
    Eigensystem out = es;
    for (Eigen::Index j = 0; j < es.modes(); ++j) {
        const Eigen::VectorXcd wr = detail::weighted(w, es.right.col(j));
        const cplx sigma = es.left.col(j).dot(wr);
        if (std::abs(sigma) < self_orthogonal_threshold * es.left.col(j).norm() * wr.norm())
            throw error(errc::self_orthogonal_mode, "mode " + std::to_string(j) + " has |sigma| = " +
                                                        num(std::abs(sigma)) +
                                                        " relative to its vector norms");
        out.left.col(j) = es.left.col(j) / std::conj(sigma);
        out.sigmas[j] = out.left.col(j).dot(wr);
    }
    if (report) {
        report->gram = out.left.adjoint() * w.asDiagonal() * out.right;
        report->max_offdiag = 0.0;
        report->max_diag_error = 0.0;
        for (Eigen::Index i = 0; i < report->gram.rows(); ++i)
            for (Eigen::Index j = 0; j < report->gram.cols(); ++j) {
                if (i == j)
                    report->max_diag_error = std::max(report->max_diag_error, std::abs(report->gram(i, j) - 1.0));
                else
                    report->max_offdiag = std::max(report->max_offdiag, std::abs(report->gram(i, j)));
            }
    }
    return out;
}

/// Largest off-diagonal |l_i^dag W r_j|.
inline double max_offdiag_gram(const Eigensystem& es, const Eigen::VectorXcd& w)
{
    const Eigen::MatrixXcd g = es.left.adjoint() * w.asDiagonal() * es.right;
    double worst = 0.0;
    for (Eigen::Index i = 0; i < g.rows(); ++i)
        for (Eigen::Index j = 0; j < g.cols(); ++j)
            if (i != j)
                worst = std::max(worst, std::abs(g(i, j)));
    return worst;
}

/// sum_j r_j sigma_j^-1 l_j^dag, n x n.
inline Eigen::MatrixXcd spectral_projector_sum(const Eigensystem& es)
{
    return es.right * es.sigmas.cwiseInverse().asDiagonal() * es.left.adjoint();
}

/// ||sum_j r_j sigma_j^-1 l_j^dag W - I||_F / sqrt(m) over the retained modes.
/// For m < n this measures a projector, not completeness.
inline double partial_completeness_residual(const Eigensystem& es, const Eigen::VectorXcd& w)
{
    const Eigen::Index n = es.dim();
    Eigen::MatrixXcd c = spectral_projector_sum(es) * w.asDiagonal();
    c -= Eigen::MatrixXcd::Identity(n, n);
    return c.norm() / std::sqrt(static_cast<double>(n));
}

inline double completeness_residual(const Eigensystem& es, const Eigen::VectorXcd& w)
{
    if (es.modes() < es.dim())
        throw error(errc::incomplete_basis, "completeness needs all " + std::to_string(es.dim()) + " modes, have " +
                                                std::to_string(es.modes()));
    return partial_completeness_residual(es, w);
}

/// ||sum_j W r_j (lambda_j / sigma_j) l_j^dag W - H||_F / ||H||_F
inline double spectral_rebuild_residual(const Eigensystem& es, const Eigen::MatrixXcd& H, const Eigen::VectorXcd& w)
{
    if (es.modes() < es.dim())
        throw error(errc::incomplete_basis, "spectral rebuild needs all " + std::to_string(es.dim()) +
                                                " modes, have " + std::to_string(es.modes()));
    const Eigen::VectorXcd d = es.lambdas.cwiseQuotient(es.sigmas);
    const Eigen::MatrixXcd rebuilt = w.asDiagonal() * es.right * d.asDiagonal() * es.left.adjoint() * w.asDiagonal();
    return (rebuilt - H).norm() / H.norm();
}

inline double spectral_rebuild_residual(const Eigensystem& es, const OperatorPair& pair)
{
    return spectral_rebuild_residual(es, pair.H, pair.w);
}

/// r_j <- r_j / kappa_j, l_j <- conj(kappa_j) l_j, so each l_j^dag picks up kappa_j.
inline Eigensystem apply_kappa(const Eigensystem& es, const Eigen::VectorXcd& kappa)
{
    if (kappa.size() != es.modes())
        throw error(errc::config, "kappa has " + std::to_string(kappa.size()) + " entries for " +
                                      std::to_string(es.modes()) + " modes");
    for (Eigen::Index j = 0; j < kappa.size(); ++j)
        if (kappa[j] == cplx{} || !std::isfinite(std::abs(kappa[j])))
            throw error(errc::zero_kappa, "kappa_" + std::to_string(j) + " is zero or not finite");
    Eigensystem out = es;
    for (Eigen::Index j = 0; j < kappa.size(); ++j) {
        out.right.col(j) /= kappa[j];
        out.left.col(j) *= std::conj(kappa[j]);
        out.kappa[j] *= kappa[j];
    }
    return out;
}

struct QuasiParityResult {
    Eigen::MatrixXcd left;  // P r_n Q_n
    Eigen::VectorXcd Q;     // 1 / conj(r_n^dag P W r_n)
    Eigen::VectorXd angle;  // against es.left, radians
};

/// Angle between the complex lines spanned by a and b.
inline double line_angle(const Eigen::VectorXcd& a, const Eigen::VectorXcd& b)
{
    const Eigen::VectorXcd ua = a.normalized();
    const Eigen::VectorXcd ub = b.normalized();
    const cplx proj = ua.dot(ub);
    const double perp = (ub - proj * ua).norm();
    return std::atan2(perp, std::abs(proj));
}

inline constexpr double parity_overlap_threshold = 1e-12;

/// Left vectors from parity: for a PT-covariant pair (P H P = H^dag, P W P = W^dag)
/// and real lambda, P r is a left eigenvector. Q_n makes (P r_n Q_n)^dag W r_n = 1;
/// with W = I this is Q_n = 1/<n|P|n> for real overlaps.
inline QuasiParityResult quasiparity_leftkets(const Eigensystem& es, const Eigen::VectorXcd& w)
{
    const Eigen::Index n = es.dim();
    const Eigen::Index m = es.modes();
    QuasiParityResult out;
    out.left.resize(n, m);
    out.Q.resize(m);
    out.angle.resize(m);
    for (Eigen::Index j = 0; j < m; ++j) {
        const Eigen::VectorXcd r = es.right.col(j);
        const Eigen::VectorXcd pr = r.reverse();
        const cplx overlap = r.dot(pr.cwiseProduct(w.reverse()));
        if (std::abs(overlap) < parity_overlap_threshold * r.squaredNorm() * w.cwiseAbs().maxCoeff())
            throw error(errc::vanishing_parity_overlap, "<n|PW|n> vanishes for mode " + std::to_string(j));
        out.Q[j] = 1.0 / std::conj(overlap);
        out.left.col(j) = pr * out.Q[j];
        out.angle[j] = line_angle(out.left.col(j), es.left.col(j));
    }
    return out;
}

} // namespace toboggan
