// Acceptance run: one PASS/FAIL line per criterion, exit status 0 iff all pass.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "toboggan/toboggan.hpp"

using namespace toboggan;

namespace {

struct Line {
    int id;
    bool pass;
    std::string detail;
};

std::vector<Line> lines;

void report(int id, bool pass, const std::string& detail)
{
    lines.push_back({id, pass, detail});
    std::printf("criterion %2d: %s  %s\n", id, pass ? "PASS" : "FAIL", detail.c_str());
    std::fflush(stdout);
}


template <class... T>
std::string format(const char* f, T... args)
{
    char b[512];
    std::snprintf(b, sizeof b, f, args...);
    return b;
}

ModelSpec model(double ell, std::initializer_list<std::pair<int, cplx>> terms)
{
    ModelSpec m;
    m.ell = ell;
    for (const auto& [k, c] : terms)
        m.coeffs[k] = c;
    return m;
}

OperatorPair operators(const ModelSpec& m, int winding, double eps, double X, int n, Stencil st,
                       BranchConvention conv = BranchConvention::substitution)
{
    ContourSpec c;
    c.epsilon = eps;
    c.winding = winding;
    GridSpec g;
    g.half_width = X;
    g.n = n;
    g.stencil = st;
    return build_operators(rectify_model(m, winding, conv), g, c);
}

double max_im_rel(const Eigen::VectorXcd& v)
{
    double worst = 0.0;
    for (Eigen::Index j = 0; j < v.size(); ++j)
        worst = std::max(worst, std::abs(v[j].imag()) / std::max(1.0, std::abs(v[j].real())));
    return worst;
}

/// Full, refined, normalized eigensystem and its real part.
struct Solved {
    OperatorPair pair;
    Eigensystem full;
    Eigensystem real;
};

Solved solve_full(const OperatorPair& pair, double tol_im)
{
    Eigensystem es = solve_generalized(pair, 1e-8);
    refine_eigensystem(pair, es);
    es = normalize_biorthogonal(es, pair.w);
    return {pair, es, filter_real(es, tol_im)};
}

const cplx I{0.0, 1.0};

// Criterion 1: V = r^2 on the shifted line, E_n = 2n + 1.
void criterion1()
{
    const auto t0 = std::chrono::steady_clock::now();
    const ModelSpec ho = model(0.0, {{2, 1.0}});
    const auto acc = solve_lowest(operators(ho, 0, 0.5, 12.0, 1500, Stencil::five_point), 5, 1e-8);
    double err = 0.0;
    for (int k = 0; k < 5; ++k)
        err = std::max(err, std::abs(acc.lambdas[k] - cplx(2.0 * k + 1.0)));
    // Richardson: three-point errors at n = 750, 1500, 3000 (h halves up to the n + 1 offset)
    std::vector<Eigen::VectorXcd> ladder;
    for (int n : {750, 1500, 3000})
        ladder.push_back(solve_lowest(operators(ho, 0, 0.5, 12.0, n, Stencil::three_point), 5, 1e-8).lambdas);
    double order_lo = 1e9, order_hi = -1e9;
    for (int k = 0; k < 5; ++k) {
        const double d1 = std::abs(ladder[0][k] - ladder[1][k]);
        const double d2 = std::abs(ladder[1][k] - ladder[2][k]);
        const double h_ratio = (1501.0 / 751.0 + 3001.0 / 1501.0) / 2.0;
        const double p = std::log(d1 / d2) / std::log(h_ratio);
        order_lo = std::min(order_lo, p);
        order_hi = std::max(order_hi, p);
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool pass = err < 5e-4 && order_lo > 1.9 && order_hi < 2.1 && secs < 60.0;
    report(1, pass,
           format("max|E_n-(2n+1)| = %.2e (< 5e-4, five-point n=1500); Richardson order in [%.3f, %.3f] "
                  "(three-point n=750/1500/3000); %.1f s (< 60 s)",
                  err, order_lo, order_hi, secs));
}

// Criterion 2: V = x^2 + i x, E_n = 2n + 5/4.
void criterion2()
{
    const ModelSpec bb = model(0.0, {{2, 1.0}, {1, I}});
    const auto es = solve_lowest(operators(bb, 0, 1.0, 12.0, 1500, Stencil::five_point), 5, 1e-8);
    double err = 0.0;
    for (int k = 0; k < 5; ++k)
        err = std::max(err, std::abs(es.lambdas[k] - cplx(2.0 * k + 1.25)));
    report(2, es.modes() == 5 && err < 5e-4,
           format("max|E_n-(2n+5/4)| = %.2e (< 5e-4), eps = 1, five-point n=1500", err));
}

// Criterion 3: V = i z^3, N = 0, against the sinc-collocation oracle.
void criterion3()
{
    constexpr double frozen_ground = 1.156267071988; // oracle::sinc_eigenvalues, K = 100, h = 0.07, eps = 0.5
    const auto ref = oracle::sinc_lowest_real([](cplx r) { return I * r * r * r; }, 0.5, 0.07, 100, 1);
    const ModelSpec cubic = model(0.0, {{3, I}});
    const auto es = solve_lowest(operators(cubic, 0, 0.5, 6.0, 1500, Stencil::five_point), 5, 1e-6);
    const double rel = std::abs(es.lambdas[0] - ref[0]) / std::abs(ref[0]);
    const double frozen_gap = std::abs(ref[0].real() - frozen_ground);
    double im = 0.0;
    for (Eigen::Index k = 0; k < es.modes(); ++k)
        im = std::max(im, std::abs(es.lambdas[k].imag()));
    report(3, es.modes() == 5 && rel < 1e-4 && im < 1e-8 && frozen_gap < 1e-10,
           format("E_0 = %.10f vs oracle %.10f: rel %.2e (< 1e-4); max|Im| lowest 5 = %.2e (< 1e-8)",
                  es.lambdas[0].real(), ref[0].real(), rel, im));
}

// Criterion 4: spiked oscillator, ell = 0.3, eps = 1 vs eps = 2.
void criterion4()
{
    const ModelSpec spiked = model(0.3, {{2, 1.0}});
    const auto a = solve_lowest(operators(spiked, 0, 1.0, 10.0, 1500, Stencil::three_point), 5, 1e-8);
    const auto b = solve_lowest(operators(spiked, 0, 2.0, 10.0, 1500, Stencil::three_point), 5, 1e-8);
    double rel = 0.0;
    for (int k = 0; k < 5; ++k)
        rel = std::max(rel, std::abs(a.lambdas[k] - b.lambdas[k]) / std::abs(a.lambdas[k]));
    const double im = std::max(max_im_rel(a.lambdas), max_im_rel(b.lambdas));
    report(4, a.modes() == 5 && b.modes() == 5 && rel < 1e-6 && im < 1e-8,
           format("lowest 5 at eps=1 vs eps=2: max rel diff %.2e (< 1e-6); max |Im|/|Re| %.2e (< 1e-8)", rel, im));
}

// Criterion 5: N = 1 cubic toboggan, rectified vs shooting; adjudicates the branch phase.
void criterion5()
{
    ShootConfig sc;
    sc.steps = 40000;
    ContourSpec shoot_contour;
    shoot_contour.epsilon = 0.2;
    shoot_contour.winding = 1;

    const ModelSpec cubic = model(0.0, {{3, I}});
    const auto rect = solve_lowest(operators(cubic, 1, 0.2, 3.0, 1200, Stencil::three_point), 3, 1e-8);
    std::vector<cplx> guesses;
    for (Eigen::Index k = 0; k < rect.modes(); ++k)
        guesses.emplace_back(rect.lambdas[k].real(), 0.0);
    const auto shot = find_eigenvalues(cubic, 1, shoot_contour, sc, guesses);
    double rel = shot.roots.size() == 3 ? 0.0 : INFINITY;
    for (std::size_t k = 0; k < shot.roots.size() && k < 3; ++k)
        rel = std::max(rel, std::abs(rect.lambdas[static_cast<Eigen::Index>(k)] - shot.roots[k]) /
                                std::abs(shot.roots[k]));

    // ell = 0.3: the centrifugal term makes the two branch phases inequivalent
    const ModelSpec spiked = model(0.3, {{3, I}});
    const auto sub = solve_lowest(operators(spiked, 1, 0.2, 3.0, 1200, Stencil::three_point), 1, 1e-8);
    const auto prt = solve_lowest(
        operators(spiked, 1, 0.2, 3.0, 1200, Stencil::three_point, BranchConvention::printed), 1, 1e-8);
    const auto ground = find_eigenvalues(spiked, 1, shoot_contour, sc, {cplx{sub.lambdas[0].real(), 0.0}, cplx{0.3, 0.0}});
    double rel_sub = INFINITY, rel_prt = INFINITY;
    if (!ground.roots.empty()) {
        rel_sub = std::abs(sub.lambdas[0] - ground.roots[0]) / std::abs(ground.roots[0]);
        rel_prt = std::abs(prt.lambdas[0] - ground.roots[0]) / std::abs(ground.roots[0]);
    }
    const bool pass = rel < 1e-3 && rel_sub < 1e-3 && rel_prt > 1e-3;
    report(5, pass,
           format("ell=0 lowest 3: max rel %.2e (< 1e-3); ell=0.3 ground: shooting %.8f, substitution rel %.2e "
                  "(< 1e-3), printed rel %.2e -> substitution phase",
                  rel, ground.roots.empty() ? NAN : ground.roots[0].real(), rel_sub, rel_prt));
}

// Criterion 6: biorthogonality, completeness and spectral rebuild on a full mode set.
void criterion6(const Solved& s)
{
    const double gram = max_offdiag_gram(s.full, s.pair.w);
    const double comp = completeness_residual(s.full, s.pair.w);
    const double rebuild = spectral_rebuild_residual(s.full, s.pair);
    report(6, gram < 1e-8 && comp < 1e-8 && rebuild < 1e-8,
           format("harmonic eps=0.5 X=6 n=200, all %ld modes: Gram offdiag %.2e, completeness %.2e, rebuild %.2e "
                  "(each < 1e-8)",
                  static_cast<long>(s.full.modes()), gram, comp, rebuild));
}

// Criterion 7: metric on the retained real modes of the same run.
void criterion7(const Solved& s)
{
    const MetricResult mr = build_metric(s.real, s.pair);
    const auto& d = mr.diagnostics;
    const auto phys = physical_operators(restrict_to_span(mr, s.pair.H, s.pair.w));
    const bool pass = d.ms_residual < 1e-10 && d.identity_residual < 1e-8 && d.quasiH < 1e-8 && d.quasiW < 1e-8 &&
                      d.hermiticity < 1e-8 && d.min_eig > 0.0 && phys.h_residual < 1e-7 && phys.w_residual < 1e-7;
    report(7, pass,
           format("span %ld/%ld real modes: MS-I %.1e, <l|TW|l'>-d %.1e, quasiH %.1e, quasiW %.1e, herm %.1e, "
                  "min_eig %.3f, h %.1e, w %.1e",
                  static_cast<long>(s.real.modes()), static_cast<long>(s.full.modes()), d.ms_residual,
                  d.identity_residual, d.quasiH, d.quasiW, d.hermiticity, d.min_eig, phys.h_residual,
                  phys.w_residual));
}

// Criterion 8: ten kappa draws.
void criterion8(const Solved& s)
{
    std::mt19937_64 rng(20240611);
    std::uniform_real_distribution<double> mag(0.5, 2.0), phase(-pi, pi);
    auto draw = [&](Eigen::Index m) {
        Eigen::VectorXcd k(m);
        for (Eigen::Index j = 0; j < m; ++j) {
            const double a = mag(rng);
            k[j] = std::polar(a, phase(rng));
        }
        return k;
    };
    const auto& w = s.pair.w;
    const Eigen::MatrixXcd gram0 = s.real.left.adjoint() * w.asDiagonal() * s.real.right;
    const double rebuild0 = spectral_rebuild_residual(s.full, s.pair);
    double d_lambda = 0.0, d_sigma = 0.0, d_gram = 0.0, d_rebuild = 0.0, qh = 0.0, min_sep = INFINITY;
    std::vector<Eigen::MatrixXcd> thetas;
    for (int draw_id = 0; draw_id < 10; ++draw_id) {
        const Eigensystem kr = apply_kappa(s.real, draw(s.real.modes()));
        const Eigen::MatrixXcd g = kr.left.adjoint() * w.asDiagonal() * kr.right;
        d_gram = std::max(d_gram, (g - gram0).cwiseAbs().maxCoeff());
        d_sigma = std::max(d_sigma, (g.diagonal() - s.real.sigmas).cwiseAbs().maxCoeff());
        for (Eigen::Index j = 0; j < kr.modes(); ++j) {
            const cplx rq = kr.left.col(j).dot(s.pair.H * kr.right.col(j)) / g(j, j);
            d_lambda = std::max(d_lambda, std::abs(rq - s.real.lambdas[j]) / std::max(1.0, std::abs(rq)));
        }
        const Eigensystem kf = apply_kappa(s.full, draw(s.full.modes()));
        d_rebuild = std::max(d_rebuild, std::abs(spectral_rebuild_residual(kf, s.pair) - rebuild0));
        const MetricResult mr = build_metric(s.real, s.pair, kr.kappa);
        qh = std::max({qh, mr.diagnostics.quasiH, mr.diagnostics.quasiW});
        for (const auto& t : thetas)
            min_sep = std::min(min_sep, (t - mr.Theta).norm() / mr.Theta.norm());
        thetas.push_back(mr.Theta);
    }
    const bool pass = d_lambda < 1e-12 && d_sigma < 1e-12 && d_gram < 1e-12 && d_rebuild < 1e-12 && min_sep > 1e-3 &&
                      qh < 1e-8;
    report(8, pass,
           format("10 draws: d(lambda) %.1e, d(sigma) %.1e, d(Gram) %.1e, d(rebuild) %.1e (each < 1e-12); "
                  "min ||T-T'||/||T|| %.3f (> 1e-3); max quasiH/W %.1e (< 1e-8)",
                  d_lambda, d_sigma, d_gram, d_rebuild, min_sep, qh));
}

// Criterion 9: W = I degeneration of the double series on a non-Hermitian N = 0 run.
void criterion9()
{
    const ModelSpec cubic = model(0.0, {{3, I}});
    const Solved s = solve_full(operators(cubic, 0, 0.5, 4.0, 200, Stencil::three_point), 1e-8);
    const MetricResult mr = build_metric(s.real, s.pair);
    const double ratio = offdiag_ratio(mr.S);
    const double diff =
        (mr.Theta - single_series_metric(s.real, Eigen::VectorXcd::Ones(s.real.modes()))).norm() / mr.Theta.norm();
    report(9, ratio < 1e-8 && diff < 1e-10,
           format("i z^3, N=0, %ld real modes: S offdiag/diag %.2e (< 1e-8); double vs single series %.2e (< 1e-10)",
                  static_cast<long>(s.real.modes()), ratio, diff));
}

// Criterion 10: PT pseudo-Hermiticity of the matrices and quasi-parity left vectors.
void criterion10()
{
    struct Case {
        const char* name;
        ModelSpec m;
        int winding;
        double eps, X;
    };
    const std::vector<Case> cases{
        {"harmonic", model(0.0, {{2, 1.0}}), 0, 0.5, 10.0},
        {"x^2+ix", model(0.0, {{2, 1.0}, {1, I}}), 0, 1.0, 10.0},
        {"iz^3", model(0.0, {{3, I}}), 0, 0.5, 6.0},
        {"spiked", model(0.3, {{2, 1.0}}), 0, 1.0, 10.0},
        {"N=1 iz^3", model(0.0, {{3, I}}), 1, 0.2, 3.0},
    };
    double pt = 0.0, angle = 0.0;
    bool ok = true;
    for (const auto& c : cases) {
        const OperatorPair pair = operators(c.m, c.winding, c.eps, c.X, 600, Stencil::three_point);
        ok = ok && rectify_model(c.m, c.winding).pt_symmetric();
        pt = std::max(pt, pt_residual(pair));
        const auto es = solve_lowest(pair, 5, 1e-8);
        const auto qp = quasiparity_leftkets(es, pair.w);
        angle = std::max(angle, qp.angle.maxCoeff());
        ok = ok && es.modes() == 5;
    }
    report(10, ok && pt < 1e-12 && angle < 1e-6,
           format("5 PT-flagged models (incl. N=1): max pt_residual %.1e (< 1e-12); max quasi-parity angle, "
                  "lowest 5 modes, %.1e rad (< 1e-6)",
                  pt, angle));
}

void guarded(int id, const std::function<void()>& body)
{
    try {
        body();
    } catch (const std::exception& e) {
        report(id, false, std::string("error: ") + e.what());
    }
}

} // namespace

int main()
{
    guarded(1, criterion1);
    guarded(2, criterion2);
    guarded(3, criterion3);
    guarded(4, criterion4);
    guarded(5, criterion5);
    std::optional<Solved> harmonic;
    try {
        harmonic = solve_full(operators(model(0.0, {{2, 1.0}}), 0, 0.5, 6.0, 200, Stencil::three_point), 1e-8);
    } catch (const std::exception& e) {
        for (int id : {6, 7, 8})
            report(id, false, std::string("error: ") + e.what());
    }
    if (harmonic) {
        guarded(6, [&] { criterion6(*harmonic); });
        guarded(7, [&] { criterion7(*harmonic); });
        guarded(8, [&] { criterion8(*harmonic); });
    }
    guarded(9, criterion9);
    guarded(10, criterion10);
    int failed = 0;
    for (const auto& l : lines)
        failed += l.pass ? 0 : 1;
    std::printf("%d of %zu criteria pass\n", static_cast<int>(lines.size()) - failed, lines.size());
    return failed == 0 ? 0 : 1;
}
