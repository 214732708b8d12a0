#pragma once

#include <cmath>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "toboggan/contour.hpp"
#include "toboggan/error.hpp"
#include "toboggan/model.hpp"
#include "toboggan/types.hpp"

namespace toboggan {

enum class Stencil { three_point = 3, five_point = 5 };

/// Uniform grid x_j = (j - (n+1)/2) h, j = 1..n, h = 2X/(n+1), Dirichlet outside.
struct GridSpec {
    double half_width = 10.0;
    int n = 500;
    Stencil stencil = Stencil::three_point;

    double spacing() const { return 2.0 * half_width / (n + 1); }

    /// 0-based node; x(n-1-j) == -x(j) exactly.
    double x(int j) const { return (static_cast<double>(j + 1) - 0.5 * (n + 1)) * spacing(); }

    void validate() const
    {
        if (!(half_width > 0.0) || !std::isfinite(half_width))
            throw error(errc::config, "grid.half_width must be positive");
        if (n < 3)
            throw error(errc::config, "grid.n must be at least 3, got " + std::to_string(n));
        if (stencil == Stencil::five_point && n < 5)
            throw error(errc::config, "five-point stencil needs grid.n >= 5");
    }
};

/// Dense H, diagonal weight W (stored as its diagonal), and the grid they live on.
/// P is the index-reversal permutation.
struct OperatorPair {
    Eigen::MatrixXcd H;
    Eigen::VectorXcd w;
    GridSpec grid;
    double epsilon = 0.0;
    int bandwidth = 1;
    Eigen::VectorXd x;
    Eigen::VectorXcd r;

    Eigen::Index size() const { return H.rows(); }
    Eigen::MatrixXcd W() const { return w.asDiagonal(); }

    Eigen::MatrixXcd P() const
    {
        const auto n = size();
        Eigen::MatrixXcd p = Eigen::MatrixXcd::Zero(n, n);
        for (Eigen::Index j = 0; j < n; ++j)
            p(j, n - 1 - j) = 1.0;
        return p;
    }

    double weight_condition() const
    {
        const double big = w.cwiseAbs().maxCoeff();
        const double small = w.cwiseAbs().minCoeff();
        return big / small;
    }
};

/// Discretizes the rectified problem on the shifted line r_j = x_j - i eps(x_j).
///
/// For a constant shift this is H = -(1/h^2) tridiag(1,-2,1) + diag(V(r_j)) and
/// W_jj = (2N+1)^2 r_j^(4N). For a variable profile the derivative is taken
/// along the curve, dr = r'(x) dx, in the symmetric weak form
///   H = D^T diag(1/r'_{j+1/2}) D / h^2 + diag(V(r_j) r'_j),  W_jj = W(r_j) r'_j,
/// which keeps H complex symmetric and PT-covariant.
inline OperatorPair build_operators(const RectifiedModel& model, const GridSpec& grid, const ContourSpec& contour)
{
    grid.validate();
    contour.validate();
    if (!contour.constant() && grid.stencil != Stencil::three_point)
        throw error(errc::config, "variable eps(x) profiles are discretized with the three-point stencil only");

    const int n = grid.n;
    const double h = grid.spacing();
    OperatorPair pair;
    pair.grid = grid;
    pair.epsilon = contour.shift_at(0.0);
    pair.bandwidth = grid.stencil == Stencil::three_point ? 1 : 2;
    pair.x.resize(n);
    pair.r.resize(n);
    pair.w.resize(n);
    pair.H = Eigen::MatrixXcd::Zero(n, n);

    for (int j = 0; j < n; ++j) {
        pair.x[j] = grid.x(j);
        pair.r[j] = line_point(pair.x[j], contour);
        if (model.has_singular_terms() && std::abs(pair.r[j]) == 0.0)
            throw error(errc::config, "grid node sits on the singularity r = 0; use epsilon > 0");
    }

    if (contour.constant()) {
        const double h2 = h * h;
        for (int j = 0; j < n; ++j) {
            const cplx rj = pair.r[j];
            pair.w[j] = model.weight(rj);
            if (grid.stencil == Stencil::three_point) {
                pair.H(j, j) = 2.0 / h2 + model.potential(rj);
                if (j + 1 < n)
                    pair.H(j, j + 1) = pair.H(j + 1, j) = -1.0 / h2;
            } else {
                pair.H(j, j) = 30.0 / (12.0 * h2) + model.potential(rj);
                if (j + 1 < n)
                    pair.H(j, j + 1) = pair.H(j + 1, j) = -16.0 / (12.0 * h2);
                if (j + 2 < n)
                    pair.H(j, j + 2) = pair.H(j + 2, j) = 1.0 / (12.0 * h2);
            }
        }
    } else {
        // r'(x) = 1 - i eps'(x), centred difference keeps eps' exactly odd
        const double dx = 1e-6 * std::max(1.0, grid.half_width);
        auto slope = [&](double xv) {
            const double de = (contour.shift_at(xv + dx) - contour.shift_at(xv - dx)) / (2.0 * dx);
            return cplx{1.0, -de};
        };
        Eigen::VectorXcd inv_mid(n + 1);
        for (int j = 0; j <= n; ++j) {
            const double xm = (static_cast<double>(j) + 0.5 - 0.5 * (n + 1)) * h;
            inv_mid[j] = 1.0 / slope(xm);
        }
        for (int j = 0; j < n; ++j) {
            const cplx dr = slope(pair.x[j]);
            pair.w[j] = model.weight(pair.r[j]) * dr;
            pair.H(j, j) = (inv_mid[j] + inv_mid[j + 1]) / (h * h) + model.potential(pair.r[j]) * dr;
            if (j + 1 < n)
                pair.H(j, j + 1) = pair.H(j + 1, j) = -inv_mid[j + 1] / (h * h);
        }
    }

    for (int j = 0; j < n; ++j)
        if (pair.w[j] == cplx{})
            throw error(errc::config, "weight vanishes at grid node " + std::to_string(j));
    return pair;
}

/// max(||P H P^-1 - H^dag||_F, ||P W P^-1 - W^dag||_F) / (||H||_F + ||W||_F)
inline double pt_residual(const OperatorPair& pair)
{
    const Eigen::MatrixXcd ph = pair.H.reverse();
    const double dh = (ph - pair.H.adjoint()).norm();
    const double dw = (pair.w.reverse() - pair.w.conjugate()).norm();
    return std::max(dh, dw) / (pair.H.norm() + pair.w.norm());
}

/// Smallest half-width X (on a 1% geometric ladder from 0.5) beyond which the
/// rectified potential dominates the eigenvalue term by three orders,
/// |V(r(+-x))| >= 1e3 |E_max| |W(r(+-x))| for x in {X, 1.5X, 2X}.
inline double default_half_width(const RectifiedModel& model, const ContourSpec& contour, double e_max)
{
    const double target = 1e3 * std::max(1.0, std::abs(e_max));
    for (double x = 0.5; x < 1e6; x *= 1.01) {
        // the wall must persist beyond X, not just touch it (centrifugal spikes near 0)
        bool ok = true;
        for (double s : {-1.0, 1.0})
            for (double stretch : {1.0, 1.5, 2.0}) {
                const cplx r = line_point(s * stretch * x, contour);
                if (std::abs(model.potential(r)) < target * std::abs(model.weight(r)))
                    ok = false;
            }
        if (ok)
            return x;
    }
    throw error(errc::config, "potential never dominates the weight term; pass grid.half_width explicitly");
}

} // namespace toboggan
