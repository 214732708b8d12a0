#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdlib>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "toboggan/contour.hpp"
#include "toboggan/error.hpp"
#include "toboggan/model.hpp"
#include "toboggan/types.hpp"

namespace toboggan {

/// Direct integration of -phi'' + U(z) phi = E phi along the spiral z(gamma),
/// U = ell(ell+1)/z^2 + sum c_k z^k. No rectification is involved.
struct ShootConfig {
    double gamma_max = 0.0; // 0 selects the truncation from the seed ratio
    int steps = 20000;      // RK4 steps per half path
    double match_gamma = 0.0;
    double root_tol = 1e-9;
    int max_iter = 60;
    double seed_ratio = 1e12; // subdominant/dominant contrast demanded at the truncation

    void validate() const
    {
        if (!(gamma_max >= 0.0 && gamma_max < pi / 2))
            throw error(errc::config, "shoot.gamma_max must lie in [0, pi/2)");
        if (steps < 100)
            throw error(errc::config, "shoot.steps must be at least 100, got " + std::to_string(steps));
        if (!(std::abs(match_gamma) < pi / 2))
            throw error(errc::config, "shoot.match_gamma must lie in (-pi/2, pi/2)");
        if (!(root_tol > 0.0))
            throw error(errc::config, "shoot.root_tol must be positive");
        if (max_iter < 1)
            throw error(errc::config, "shoot.max_iter must be positive");
        if (!(seed_ratio > 1.0))
            throw error(errc::config, "shoot.seed_ratio must exceed 1");
    }
};

enum class Side { left, right };

/// (phi, dphi/dz) at the match point, times exp(log_scale).
struct HalfPathResult {
    cplx value;
    cplx derivative;
    double log_scale = 0.0;
    int renormalizations = 0;
    double max_step_phase = 0.0; // max |dz/dgamma| |sqrt(U - E)| dgamma over the steps
    bool step_too_coarse = false;
    double gamma_end = 0.0;
    double precision_loss = 0.0; // ln of the largest amplification of rounding error into the match point
};

inline constexpr double coarse_step_limit = 0.5;

/// Beyond this (natural log) amplification, rounding swamps the seeded
/// solution before it reaches the match point.
inline constexpr double precision_loss_limit = 27.6; // ln(1e12)

namespace detail {

/// dz/dgamma on the constant-eps spiral: (2N+1) z (tan gamma + i).
inline cplx spiral_velocity(cplx z, double gamma, int winding)
{
    return static_cast<double>(2 * winding + 1) * z * cplx{std::tan(gamma), 1.0};
}

inline void require_constant(const ContourSpec& contour)
{
    if (!contour.constant())
        throw error(errc::config, "shooting supports constant eps only");
    contour.validate();
}

inline ContourSpec with_winding(ContourSpec contour, int winding)
{
    contour.winding = winding;
    return contour;
}

} // namespace detail

/// Truncation angle for one side (returned as |gamma|).
///
/// The WKB branch q = sqrt(U - E) is tracked outward from match_gamma to
/// gamma = +-(pi/2 - 1e-4). Its sign is fixed so that Re(q dz_out) > 0 at the
/// far end, i.e. the branch of the solution that decays asymptotically. The
/// truncation is the first angle past the last sign change of that rate at
/// which the accumulated action from the match point reaches ln(seed_ratio).
/// Truncating any earlier would seed a solution that is only locally decaying.
inline double auto_gamma_max_side(const ModelSpec& model, int winding, cplx E, const ShootConfig& cfg,
                                  const ContourSpec& contour, Side side)
{
    detail::require_constant(contour);
    const ContourSpec c = detail::with_winding(contour, winding);
    const double sign = side == Side::right ? 1.0 : -1.0;
    const double far = pi / 2 - 1e-4;
    const double dg = 1e-4;
    std::vector<double> gammas, rates;
    cplx q_track{};
    for (double g = cfg.match_gamma; sign * g < far; g += sign * dg) {
        const double gm = g + 0.5 * sign * dg;
        const cplx z = spiral_point(gm, c).z;
        cplx q = std::sqrt(model.potential(z) - E);
        if (!gammas.empty() && (q * std::conj(q_track)).real() < 0.0)
            q = -q;
        q_track = q;
        gammas.push_back(g + sign * dg);
        rates.push_back((q * detail::spiral_velocity(z, gm, winding) * sign).real());
    }
    if (rates.empty() || rates.back() == 0.0)
        throw error(errc::domain, "no asymptotic decay direction along the path");
    const double s_inf = rates.back() > 0.0 ? 1.0 : -1.0;
    std::size_t first = 0;
    for (std::size_t k = rates.size(); k-- > 0;)
        if (s_inf * rates[k] < 0.0) {
            first = k + 1;
            break;
        }
    const double target = std::log(cfg.seed_ratio);
    double action = 0.0;
    for (std::size_t k = 0; k < rates.size(); ++k) {
        action += s_inf * rates[k] * dg;
        if (k >= first && action >= target)
            return std::abs(gammas[k]);
    }
    throw error(errc::domain, "action never reaches ln(seed_ratio) before gamma = pi/2");
}

/// Larger of the two one-sided truncation angles, so the path stays symmetric.
inline double auto_gamma_max(const ModelSpec& model, int winding, cplx E, const ShootConfig& cfg,
                             const ContourSpec& contour)
{
    return std::max(auto_gamma_max_side(model, winding, E, cfg, contour, Side::left),
                    auto_gamma_max_side(model, winding, E, cfg, contour, Side::right));
}

/// Integrates from the truncated end on `side` to match_gamma with fixed-step RK4
/// in gamma. The end is seeded with the solution decaying outward,
/// phi = 1, phi' = -q phi, q = +-sqrt(U - E) with Re(q dz_out) > 0.
inline HalfPathResult integrate_halfpath(const ModelSpec& model, int winding, cplx E, Side side,
                                         const ShootConfig& cfg, const ContourSpec& contour)
{
    cfg.validate();
    detail::require_constant(contour);
    if (!std::isfinite(E.real()) || !std::isfinite(E.imag()))
        throw error(errc::domain, "energy must be finite");
    const ContourSpec c = detail::with_winding(contour, winding);
    const double gmax = cfg.gamma_max > 0.0 ? cfg.gamma_max : auto_gamma_max(model, winding, E, cfg, c);
    const double g_end = side == Side::right ? gmax : -gmax;
    if ((side == Side::right) != (g_end > cfg.match_gamma))
        throw error(errc::config, "match_gamma lies outside the truncated path");

    auto rhs = [&](double g, const std::array<cplx, 2>& y) {
        const cplx z = spiral_point(g, c).z;
        const cplx dz = detail::spiral_velocity(z, g, winding);
        return std::array<cplx, 2>{dz * y[1], dz * (model.potential(z) - E) * y[0]};
    };

    HalfPathResult out;
    out.gamma_end = g_end;
    {
        const ContourPoint pt = spiral_point(g_end, c);
        const cplx outward = (side == Side::right ? 1.0 : -1.0) * detail::spiral_velocity(pt.z, g_end, winding);
        cplx q = std::sqrt(model.potential(pt.z) - E);
        if ((q * outward).real() < 0.0)
            q = -q;
        std::array<cplx, 2> y{1.0, -q};
        const double h = (cfg.match_gamma - g_end) / cfg.steps;
        double g = g_end;
        // WKB bookkeeping: with q tracked continuously from the seed, the
        // seeded solution grows inward at rate Re(q dz_out) and its competitor
        // decays at the same rate; a negative rate amplifies contamination.
        const double out_sign = side == Side::right ? 1.0 : -1.0;
        cplx q_track = q;
        double amplification = 0.0;
        for (int s = 0; s < cfg.steps; ++s) {
            const cplx z = spiral_point(g, c).z;
            const cplx dz = detail::spiral_velocity(z, g, winding);
            cplx qs = std::sqrt(model.potential(z) - E);
            if ((qs * std::conj(q_track)).real() < 0.0)
                qs = -qs;
            q_track = qs;
            const double rate = (qs * dz * out_sign).real();
            amplification = std::max(0.0, amplification - 2.0 * rate * std::abs(h));
            out.precision_loss = std::max(out.precision_loss, amplification);
            const double phase = std::abs(dz) * std::abs(qs) * std::abs(h);
            out.max_step_phase = std::max(out.max_step_phase, phase);
            const auto k1 = rhs(g, y);
            const auto k2 = rhs(g + 0.5 * h, {y[0] + 0.5 * h * k1[0], y[1] + 0.5 * h * k1[1]});
            const auto k3 = rhs(g + 0.5 * h, {y[0] + 0.5 * h * k2[0], y[1] + 0.5 * h * k2[1]});
            const auto k4 = rhs(g + h, {y[0] + h * k3[0], y[1] + h * k3[1]});
            for (int i = 0; i < 2; ++i)
                y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            g = s + 1 == cfg.steps ? cfg.match_gamma : g_end + (s + 1) * h;
            const double size = std::hypot(std::abs(y[0]), std::abs(y[1]));
            if (!std::isfinite(size))
                throw error(errc::solver_failure, "integration overflowed between renormalizations");
            if (size > 1e50 || (size < 1e-50 && size > 0.0)) {
                y[0] /= size;
                y[1] /= size;
                out.log_scale += std::log(size);
                ++out.renormalizations;
            }
        }
        out.value = y[0];
        out.derivative = y[1];
    }
    out.step_too_coarse = out.max_step_phase > coarse_step_limit;
    return out;
}

/// Scale-free Wronskian (phi_L phi_R' - phi_R phi_L') / (|u_L| |u_R|) at the match point.
inline cplx wronskian_mismatch(const HalfPathResult& l, const HalfPathResult& r)
{
    const double nl = std::hypot(std::abs(l.value), std::abs(l.derivative));
    const double nr = std::hypot(std::abs(r.value), std::abs(r.derivative));
    return (l.value * r.derivative - r.value * l.derivative) / (nl * nr);
}

/// phi_L'/phi_L - phi_R'/phi_R at the match point.
inline cplx logderiv_mismatch(const HalfPathResult& l, const HalfPathResult& r)
{
    return l.derivative / l.value - r.derivative / r.value;
}

struct Mismatch {
    cplx F;
    cplx logderiv;
    bool step_too_coarse = false;
    double precision_loss = 0.0;
};

inline Mismatch shooting_mismatch(const ModelSpec& model, int winding, cplx E, const ShootConfig& cfg,
                                  const ContourSpec& contour)
{
    const auto l = integrate_halfpath(model, winding, E, Side::left, cfg, contour);
    const auto r = integrate_halfpath(model, winding, E, Side::right, cfg, contour);
    return {wronskian_mismatch(l, r), logderiv_mismatch(l, r), l.step_too_coarse || r.step_too_coarse,
            std::max(l.precision_loss, r.precision_loss)};
}

enum class RootStatus { converged, no_convergence, failed };

struct RootAttempt {
    cplx guess;
    std::optional<cplx> root;
    RootStatus status = RootStatus::no_convergence;
    int iterations = 0;
    double abs_F = 0.0;
    double gamma_max = 0.0;
    bool step_too_coarse = false;
    std::string message;
};

struct RootSearch {
    std::vector<cplx> roots; // converged, deduplicated, ascending real part
    std::vector<RootAttempt> attempts;
};

/// Secant iteration on F(E) from one guess, with the truncation angle frozen
/// at its value for the guess so that F stays a fixed analytic function.
inline RootAttempt secant_root(const ModelSpec& model, int winding, cplx guess, const ShootConfig& cfg,
                               const ContourSpec& contour)
{
    RootAttempt at;
    at.guess = guess;
    try {
        ShootConfig fixed = cfg;
        if (fixed.gamma_max == 0.0)
            fixed.gamma_max = auto_gamma_max(model, winding, guess, cfg, contour);
        at.gamma_max = fixed.gamma_max;
        cplx e0 = guess;
        cplx e1 = guess + 1e-4 * std::max(1.0, std::abs(guess));
        Mismatch m0 = shooting_mismatch(model, winding, e0, fixed, contour);
        Mismatch m1 = shooting_mismatch(model, winding, e1, fixed, contour);
        at.step_too_coarse = m0.step_too_coarse || m1.step_too_coarse;
        for (int it = 1; it <= cfg.max_iter; ++it) {
            at.iterations = it;
            const cplx denom = m1.F - m0.F;
            if (denom == cplx{}) {
                at.message = "secant denominator vanished";
                break;
            }
            const cplx e2 = e1 - m1.F * (e1 - e0) / denom;
            e0 = e1;
            m0 = m1;
            e1 = e2;
            m1 = shooting_mismatch(model, winding, e1, fixed, contour);
            at.step_too_coarse = at.step_too_coarse || m1.step_too_coarse;
            if (m1.precision_loss > precision_loss_limit) {
                at.status = RootStatus::failed;
                at.message = "rounding error is amplified by e^" + num(m1.precision_loss) +
                             " before the match point; the mismatch carries no information";
                return at;
            }
            at.abs_F = std::abs(m1.F);
            if (at.abs_F < cfg.root_tol && std::abs(e1 - e0) < 1e3 * cfg.root_tol * std::max(1.0, std::abs(e1))) {
                at.root = e1;
                at.status = RootStatus::converged;
                return at;
            }
        }
        if (at.message.empty())
            at.message = "no convergence within max_iter";
    } catch (const error& e) {
        at.status = RootStatus::failed;
        at.message = e.what();
    }
    return at;
}

/// Worker count: TOBOGGAN_THREADS if set and positive, else the hardware count.
inline unsigned thread_budget()
{
    unsigned n = std::max(1u, std::thread::hardware_concurrency());
    if (const char* env = std::getenv("TOBOGGAN_THREADS")) {
        const long v = std::strtol(env, nullptr, 10);
        if (v > 0)
            n = static_cast<unsigned>(v);
    }
    return n;
}

/// Runs `task(i)` for i in [0, count) on up to thread_budget() workers.
template <class Task>
void parallel_for(std::size_t count, Task task)
{
    const unsigned workers = static_cast<unsigned>(std::min<std::size_t>(thread_budget(), count));
    if (workers <= 1) {
        for (std::size_t i = 0; i < count; ++i)
            task(i);
        return;
    }
    std::mutex lock;
    std::size_t next = 0;
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w)
        pool.emplace_back([&] {
            for (;;) {
                std::size_t i;
                {
                    std::lock_guard g(lock);
                    if (next >= count)
                        return;
                    i = next++;
                }
                task(i);
            }
        });
    for (auto& t : pool)
        t.join();
}

/// Guesses closer than root_tol are rejected; converged roots closer than
/// 1e-7 relative are merged.
inline RootSearch find_eigenvalues(const ModelSpec& model, int winding, const ContourSpec& contour,
                                   const ShootConfig& cfg, const std::vector<cplx>& guesses)
{
    cfg.validate();
    model.validate();
    detail::require_constant(contour);
    for (std::size_t i = 0; i < guesses.size(); ++i)
        for (std::size_t j = i + 1; j < guesses.size(); ++j)
            if (std::abs(guesses[i] - guesses[j]) <= cfg.root_tol)
                throw error(errc::config, "initial guesses " + std::to_string(i) + " and " + std::to_string(j) +
                                              " are not separated by more than root_tol");
    RootSearch out;
    out.attempts.resize(guesses.size());
    parallel_for(guesses.size(), [&](std::size_t i) {
        out.attempts[i] = secant_root(model, winding, guesses[i], cfg, contour);
    });
    for (const auto& at : out.attempts) {
        if (!at.root)
            continue;
        const cplx r = *at.root;
        const bool seen = std::any_of(out.roots.begin(), out.roots.end(), [&](cplx o) {
            return std::abs(o - r) < 1e-7 * std::max(1.0, std::abs(r));
        });
        if (!seen)
            out.roots.push_back(r);
    }
    std::sort(out.roots.begin(), out.roots.end(), [](cplx a, cplx b) { return a.real() < b.real(); });
    return out;
}

struct ScanPoint {
    double re_E;
    double im_E;
    double abs_F;
};

/// |F(E)| on a re_count x im_count grid over [re_lo, re_hi] x [im_lo, im_hi].
/// The truncation angle is fixed once, at the grid centre, when cfg leaves it automatic.
inline std::vector<ScanPoint> mismatch_scan(const ModelSpec& model, int winding, const ContourSpec& contour,
                                            const ShootConfig& cfg, double re_lo, double re_hi, int re_count,
                                            double im_lo, double im_hi, int im_count)
{
    cfg.validate();
    if (re_count < 1 || im_count < 1)
        throw error(errc::config, "scan grid needs at least one point per axis");
    ShootConfig fixed = cfg;
    if (fixed.gamma_max == 0.0)
        fixed.gamma_max =
            auto_gamma_max(model, winding, cplx{0.5 * (re_lo + re_hi), 0.5 * (im_lo + im_hi)}, cfg, contour);
    auto axis = [](double lo, double hi, int count, int k) {
        return count == 1 ? lo : lo + (hi - lo) * k / (count - 1);
    };
    std::vector<ScanPoint> out(static_cast<std::size_t>(re_count) * static_cast<std::size_t>(im_count));
    parallel_for(out.size(), [&](std::size_t idx) {
        const int i = static_cast<int>(idx / static_cast<std::size_t>(im_count));
        const int j = static_cast<int>(idx % static_cast<std::size_t>(im_count));
        const cplx E{axis(re_lo, re_hi, re_count, i), axis(im_lo, im_hi, im_count, j)};
        out[idx] = {E.real(), E.imag(), std::abs(shooting_mismatch(model, winding, E, fixed, contour).F)};
    });
    return out;
}

} // namespace toboggan
