#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include <Eigen/Dense>

#include "toboggan/error.hpp"
#include "toboggan/spectra.hpp"
#include "toboggan/types.hpp"

namespace toboggan {

struct MetricDiagnostics {
    double quasiH = 0.0;
    double quasiW = 0.0;
    double hermiticity = 0.0;
    double min_eig = 0.0;
    double cond_S = 0.0;
    double cond_Theta = 0.0;
    double ms_residual = 0.0;       // ||M S - I||_F / sqrt(m)
    double identity_residual = 0.0; // max |<l|Theta W|l'> - delta| in the kappa frame
    bool incomplete = false;        // m < n: Theta is a metric on the retained span only
};

struct MetricResult {
    Eigen::MatrixXcd S;
    Eigen::MatrixXcd M;
    Eigen::MatrixXcd Theta;
    MetricDiagnostics diagnostics;
    Eigen::VectorXcd kappa_used;
    Eigen::MatrixXcd span; // orthonormal basis of the retained right kets; empty when m = n
};

/// Operators compressed to the span of the retained right kets, Q^dag A Q.
struct SpanOperators {
    Eigen::MatrixXcd Theta;
    Eigen::MatrixXcd H;
    Eigen::MatrixXcd W;
};

inline constexpr double s_condition_limit = 1e12;

/// 2-norm condition number via SVD; infinity for a singular matrix.
inline double condition_number(const Eigen::MatrixXcd& a)
{
    if (a.size() == 0)
        return 1.0;
    const Eigen::BDCSVD<Eigen::MatrixXcd> svd(a);
    const auto& s = svd.singularValues();
    const double smin = s[s.size() - 1];
    return smin > 0.0 ? s[0] / smin : std::numeric_limits<double>::infinity();
}

/// S_jk = l_j^dag W^2 r_k over the retained modes.
inline Eigen::MatrixXcd build_S(const Eigensystem& es, const Eigen::VectorXcd& w)
{
    return es.left.adjoint() * w.cwiseProduct(w).asDiagonal() * es.right;
}

/// (||H^dag Theta - Theta H||_F, ||W^dag Theta - Theta W||_F), each divided by
/// ||Theta||_F ||A||_F.
inline std::pair<double, double> quasi_hermiticity_residuals(const Eigen::MatrixXcd& theta, const Eigen::MatrixXcd& H,
                                                             const Eigen::VectorXcd& w, bool require_invertible = true)
{
    const double tn = theta.norm();
    if (tn == 0.0 || (require_invertible && !Eigen::FullPivLU<Eigen::MatrixXcd>(theta).isInvertible()))
        throw error(errc::singular_theta, "metric is singular");
    const double rh = (H.adjoint() * theta - theta * H).norm() / (tn * H.norm());
    const Eigen::MatrixXcd wt = w.conjugate().asDiagonal() * theta - theta * w.asDiagonal();
    const double rw = wt.norm() / (tn * w.norm());
    return {rh, rw};
}

struct PositivityReport {
    double hermiticity = 0.0; // ||Theta - Theta^dag||_F / ||Theta||_F
    double min_eig = 0.0;     // of (Theta + Theta^dag)/2
};

inline PositivityReport positivity_report(const Eigen::MatrixXcd& theta)
{
    PositivityReport rep;
    const double tn = theta.norm();
    rep.hermiticity = tn > 0.0 ? (theta - theta.adjoint()).norm() / tn : 0.0;
    const Eigen::MatrixXcd herm = 0.5 * (theta + theta.adjoint());
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> sol(herm, Eigen::EigenvaluesOnly);
    rep.min_eig = sol.eigenvalues().size() ? sol.eigenvalues()[0] : 0.0;
    return rep;
}

/// Theta = W^dag L diag(conj kappa) M diag(kappa) L^dag W with M = S^-1,
/// S from the normalized eigensystem `es` (sigma = 1).
inline MetricResult build_metric(const Eigensystem& es, const Eigen::MatrixXcd& H, const Eigen::VectorXcd& w,
                                 const Eigen::VectorXcd& kappa)
{
    const Eigen::Index m = es.modes();
    const Eigen::Index n = es.dim();
    if (kappa.size() != m)
        throw error(errc::config, "kappa has " + std::to_string(kappa.size()) + " entries for " + std::to_string(m) +
                                      " modes");
    for (Eigen::Index j = 0; j < m; ++j)
        if (kappa[j] == cplx{})
            throw error(errc::zero_kappa, "kappa_" + std::to_string(j) + " is zero");

    MetricResult out;
    out.kappa_used = kappa;
    out.S = build_S(es, w);
    out.diagnostics.cond_S = condition_number(out.S);
    if (!(out.diagnostics.cond_S <= s_condition_limit))
        throw error(errc::ill_conditioned_s, "cond(S) = " + num(out.diagnostics.cond_S) + " exceeds " +
                                                 num(s_condition_limit));
    const Eigen::FullPivLU<Eigen::MatrixXcd> lu(out.S);
    out.M = lu.inverse();
    out.diagnostics.ms_residual =
        (out.M * out.S - Eigen::MatrixXcd::Identity(m, m)).norm() / std::sqrt(static_cast<double>(m));

    const Eigen::MatrixXcd weighted_left = w.conjugate().asDiagonal() * es.left; // W^dag L
    const Eigen::MatrixXcd core = kappa.conjugate().asDiagonal() * out.M * kappa.asDiagonal();
    out.Theta = weighted_left * core * weighted_left.adjoint();

    auto& d = out.diagnostics;
    d.incomplete = m < n;
    if (!d.incomplete) {
        const auto [qh, qw] = quasi_hermiticity_residuals(out.Theta, H, w);
        d.quasiH = qh;
        d.quasiW = qw;
        const auto pos = positivity_report(out.Theta);
        d.hermiticity = pos.hermiticity;
        d.min_eig = pos.min_eig;
        d.cond_Theta = condition_number(out.Theta);
    } else {
        // Theta has rank m; every diagnostic is taken on span(R) via Q^dag (.) Q
        const Eigen::HouseholderQR<Eigen::MatrixXcd> qr(es.right);
        out.span = qr.householderQ() * Eigen::MatrixXcd::Identity(n, m);
        const Eigen::MatrixXcd& q = out.span;
        const Eigen::MatrixXcd theta_r = q.adjoint() * out.Theta * q;
        const Eigen::MatrixXcd h_r = q.adjoint() * H * q;
        const Eigen::MatrixXcd w_r = q.adjoint() * w.asDiagonal() * q;
        const double tn = theta_r.norm();
        if (tn == 0.0)
            throw error(errc::singular_theta, "metric vanishes on the retained span");
        const Eigen::MatrixXcd rh = q.adjoint() * (H.adjoint() * out.Theta - out.Theta * H) * q;
        const Eigen::MatrixXcd rw =
            q.adjoint() * (w.conjugate().asDiagonal() * out.Theta - out.Theta * w.asDiagonal()) * q;
        d.quasiH = rh.norm() / (tn * h_r.norm());
        d.quasiW = rw.norm() / (tn * w_r.norm());
        const auto pos = positivity_report(theta_r);
        d.hermiticity = pos.hermiticity;
        d.min_eig = pos.min_eig;
        d.cond_Theta = condition_number(theta_r);
    }

    // identity check in the frame r_j / kappa_j
    const Eigen::MatrixXcd rk = es.right * kappa.cwiseInverse().asDiagonal();
    const Eigen::MatrixXcd ident = rk.adjoint() * out.Theta * w.asDiagonal() * rk;
    d.identity_residual = (ident - Eigen::MatrixXcd::Identity(m, m)).cwiseAbs().maxCoeff();
    return out;
}

inline MetricResult build_metric(const Eigensystem& es, const OperatorPair& pair, const Eigen::VectorXcd& kappa)
{
    return build_metric(es, pair.H, pair.w, kappa);
}

inline MetricResult build_metric(const Eigensystem& es, const OperatorPair& pair)
{
    return build_metric(es, pair.H, pair.w, Eigen::VectorXcd::Ones(es.modes()));
}

/// sum_j l_j (|kappa_j|^2 / sigma_j) l_j^dag, the metric family of the W = I theory.
inline Eigen::MatrixXcd single_series_metric(const Eigensystem& es, const Eigen::VectorXcd& kappa)
{
    const Eigen::VectorXcd d = kappa.cwiseAbs2().cast<cplx>().cwiseQuotient(es.sigmas);
    return es.left * d.asDiagonal() * es.left.adjoint();
}

/// Off-diagonal over diagonal Frobenius mass.
inline double offdiag_ratio(const Eigen::MatrixXcd& a)
{
    const double diag = a.diagonal().norm();
    Eigen::MatrixXcd off_part = a;
    off_part.diagonal().setZero();
    const double off = off_part.norm();
    return diag > 0.0 ? off / diag : std::numeric_limits<double>::infinity();
}

struct KappaProbe {
    double difference = 0.0;          // ||Theta1 - Theta2||_F
    double relative_difference = 0.0; // divided by ||Theta1||_F
    double quasiH1 = 0.0, quasiW1 = 0.0;
    double quasiH2 = 0.0, quasiW2 = 0.0;
};

inline KappaProbe kappa_dependence_probe(const Eigensystem& es, const Eigen::MatrixXcd& H, const Eigen::VectorXcd& w,
                                         const Eigen::VectorXcd& kappa1, const Eigen::VectorXcd& kappa2)
{
    const auto m1 = build_metric(es, H, w, kappa1);
    const auto m2 = build_metric(es, H, w, kappa2);
    KappaProbe p;
    p.difference = (m1.Theta - m2.Theta).norm();
    p.relative_difference = p.difference / m1.Theta.norm();
    p.quasiH1 = m1.diagnostics.quasiH;
    p.quasiW1 = m1.diagnostics.quasiW;
    p.quasiH2 = m2.diagnostics.quasiH;
    p.quasiW2 = m2.diagnostics.quasiW;
    return p;
}

/// The metric, H and W as seen on the retained span (the full matrices when m = n).
inline SpanOperators restrict_to_span(const MetricResult& metric, const Eigen::MatrixXcd& H, const Eigen::VectorXcd& w)
{
    if (metric.span.size() == 0)
        return {metric.Theta, H, Eigen::MatrixXcd(w.asDiagonal())};
    const Eigen::MatrixXcd& q = metric.span;
    return {q.adjoint() * metric.Theta * q, q.adjoint() * H * q, q.adjoint() * w.asDiagonal() * q};
}

struct PhysicalOperatorResiduals {
    double h_residual = 0.0; // ||h - h^dag||_F / ||h||_F, h = Omega H Omega^-1
    double w_residual = 0.0;
};

/// Factorizes Theta = Omega^dag Omega with Omega the Hermitian square root of
/// the Hermitian part and measures the Hermiticity of the pulled-back H and W.
inline PhysicalOperatorResiduals physical_operators(const Eigen::MatrixXcd& H, const Eigen::MatrixXcd& W,
                                                    const Eigen::MatrixXcd& theta, double hermiticity_tol = 1e-8)
{
    const auto pos = positivity_report(theta);
    if (!(pos.hermiticity <= hermiticity_tol) || !(pos.min_eig > 0.0))
        throw error(errc::non_positive_theta, "metric is not Hermitian positive (hermiticity " +
                                                  num(pos.hermiticity) + ", min eigenvalue " + num(pos.min_eig) +
                                                  ")");
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> sol(0.5 * (theta + theta.adjoint()));
    const Eigen::VectorXd root = sol.eigenvalues().cwiseSqrt();
    const Eigen::MatrixXcd& v = sol.eigenvectors();
    const Eigen::MatrixXcd omega = v * root.cast<cplx>().asDiagonal() * v.adjoint();
    const Eigen::MatrixXcd omega_inv = v * root.cwiseInverse().cast<cplx>().asDiagonal() * v.adjoint();
    const Eigen::MatrixXcd h = omega * H * omega_inv;
    const Eigen::MatrixXcd wp = omega * W * omega_inv;
    PhysicalOperatorResiduals out;
    out.h_residual = (h - h.adjoint()).norm() / h.norm();
    out.w_residual = (wp - wp.adjoint()).norm() / wp.norm();
    return out;
}

inline PhysicalOperatorResiduals physical_operators(const OperatorPair& pair, const Eigen::MatrixXcd& theta,
                                                    double hermiticity_tol = 1e-8)
{
    return physical_operators(pair.H, pair.W(), theta, hermiticity_tol);
}

inline PhysicalOperatorResiduals physical_operators(const SpanOperators& ops, double hermiticity_tol = 1e-8)
{
    return physical_operators(ops.H, ops.W, ops.Theta, hermiticity_tol);
}

/// psi^dag Theta phi
inline cplx physical_inner_product(const Eigen::VectorXcd& psi, const Eigen::VectorXcd& phi,
                                   const Eigen::MatrixXcd& theta)
{
    if (psi.size() != theta.rows() || phi.size() != theta.cols())
        throw error(errc::config, "vectors do not live on the metric's grid");
    return psi.dot(theta * phi);
}

/// Largest distance from an eigenvalue of Theta^-1 W^-dag H^dag Theta to the
/// nearest entry of `lambdas`. Small only when quasi-Hermiticity holds and the
/// spectrum is real.
inline double conjugated_spectrum_mismatch(const Eigen::MatrixXcd& theta, const Eigen::MatrixXcd& H,
                                           const Eigen::VectorXcd& w, const Eigen::VectorXcd& lambdas)
{
    const Eigen::FullPivLU<Eigen::MatrixXcd> lu(theta);
    if (!lu.isInvertible())
        throw error(errc::singular_theta, "metric is singular");
    const Eigen::MatrixXcd a = lu.solve(w.conjugate().cwiseInverse().asDiagonal() * H.adjoint() * theta);
    const auto values = lapack::eig(a, false).values;
    double worst = 0.0;
    for (Eigen::Index i = 0; i < values.size(); ++i) {
        double best = std::numeric_limits<double>::infinity();
        for (Eigen::Index j = 0; j < lambdas.size(); ++j)
            best = std::min(best, std::abs(values[i] - lambdas[j]) / std::max(1.0, std::abs(lambdas[j])));
        worst = std::max(worst, best);
    }
    return worst;
}

} // namespace toboggan
