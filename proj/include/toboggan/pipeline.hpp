#pragma once

// Batch commands behind the CLI. Each writes its artifacts into the output
// directory and returns a process exit code:
//   0 success, 2 validation failure, 3 solver error, 4 configuration error.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "toboggan/config.hpp"
#include "toboggan/discrete.hpp"
#include "toboggan/error.hpp"
#include "toboggan/io.hpp"
#include "toboggan/metric.hpp"
#include "toboggan/shoot.hpp"
#include "toboggan/spectra.hpp"

namespace toboggan {

inline constexpr int exit_ok = 0;
inline constexpr int exit_validation = 2;
inline constexpr int exit_solver = 3;
inline constexpr int exit_config = 4;

inline int exit_code_for(errc code)
{
    switch (code) {
    case errc::config:
    case errc::domain:
    case errc::schema_mismatch:
    case errc::io:
        return exit_config;
    default:
        return exit_solver;
    }
}

struct RunResult {
    int exit_code = exit_ok;
    std::string summary;
};

/// Fixed row order of the metric diagnostics report.
inline const std::vector<std::string>& metric_diagnostic_keys()
{
    static const std::vector<std::string> keys{"quasiH", "quasiW", "hermiticity", "min_eig", "cond_S", "cond_Theta"};
    return keys;
}

/// Two-column text table of metric diagnostics, 10 significant digits.
/// Rows follow metric_diagnostic_keys(); absent keys are skipped and null
/// (a non-finite value in JSON) renders as "nan".
inline std::string report_render(const nlohmann::json& diagnostics)
{
    if (!diagnostics.is_object())
        throw error(errc::schema_mismatch, "diagnostics must be a JSON object");
    const auto& keys = metric_diagnostic_keys();
    for (const auto& [key, value] : diagnostics.items()) {
        if (std::find(keys.begin(), keys.end(), key) == keys.end())
            throw error(errc::schema_mismatch, "unexpected diagnostics key '" + key + "'");
        if (!value.is_number() && !value.is_null())
            throw error(errc::schema_mismatch, "diagnostics value '" + key + "' is not a number");
    }
    std::string out;
    char line[96];
    std::snprintf(line, sizeof line, "%-12s %18s\n", "quantity", "value");
    out += line;
    for (const auto& key : keys) {
        if (!diagnostics.contains(key))
            continue;
        const auto& v = diagnostics[key];
        if (v.is_null())
            std::snprintf(line, sizeof line, "%-12s %18s\n", key.c_str(), "nan");
        else
            std::snprintf(line, sizeof line, "%-12s %18.9e\n", key.c_str(), v.get<double>());
        out += line;
    }
    return out;
}

namespace detail {

inline nlohmann::json finite_or_null(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(); }

inline nlohmann::json diagnostics_json(const MetricDiagnostics& d)
{
    return {{"quasiH", finite_or_null(d.quasiH)},         {"quasiW", finite_or_null(d.quasiW)},
            {"hermiticity", finite_or_null(d.hermiticity)}, {"min_eig", finite_or_null(d.min_eig)},
            {"cond_S", finite_or_null(d.cond_S)},         {"cond_Theta", finite_or_null(d.cond_Theta)}};
}

/// |kappa| uniform in [0.5, 2], phase uniform.
inline Eigen::VectorXcd random_kappa(Eigen::Index m, std::mt19937_64& rng)
{
    std::uniform_real_distribution<double> mag(0.5, 2.0), phase(-pi, pi);
    Eigen::VectorXcd k(m);
    for (Eigen::Index j = 0; j < m; ++j) {
        const double a = mag(rng);
        k[j] = std::polar(a, phase(rng));
    }
    return k;
}

inline double max_or_zero(const Eigen::VectorXd& v) { return v.size() ? v.maxCoeff() : 0.0; }

inline OperatorPair operators_for(const RunConfig& cfg)
{
    return build_operators(cfg.rectified(), cfg.resolved_grid(), cfg.contour);
}

inline nlohmann::json run_header(const RunConfig& cfg, const OperatorPair& pair)
{
    const RectifiedModel rm = cfg.rectified();
    return {{"n", pair.size()},
            {"half_width", pair.grid.half_width},
            {"h", pair.grid.spacing()},
            {"stencil", static_cast<int>(pair.grid.stencil)},
            {"epsilon", cfg.contour.epsilon},
            {"winding", cfg.contour.winding},
            {"L", rm.L},
            {"branch_convention", to_string(cfg.convention)},
            {"weight_condition", pair.weight_condition()},
            {"pt_flagged", rm.pt_symmetric()},
            {"pt_residual", finite_or_null(pt_residual(pair))}};
}

inline ContourSpec shooting_contour(const RunConfig& cfg)
{
    ContourSpec c = cfg.contour;
    if (cfg.shoot.epsilon)
        c.epsilon = *cfg.shoot.epsilon;
    return c;
}

/// Grid points whose |F| is no larger than any of their axis neighbours.
inline std::vector<cplx> scan_minima(const std::vector<ScanPoint>& scan, const ScanSpec& spec)
{
    std::vector<cplx> out;
    const int nr = spec.re_count, ni = spec.im_count;
    auto at = [&](int i, int j) { return scan[static_cast<std::size_t>(i) * static_cast<std::size_t>(ni) + j].abs_F; };
    for (int i = 0; i < nr; ++i)
        for (int j = 0; j < ni; ++j) {
            const double f = at(i, j);
            if (!std::isfinite(f))
                continue;
            bool minimum = (nr > 1 || ni > 1);
            if (i > 0 && !(f <= at(i - 1, j)))
                minimum = false;
            if (i + 1 < nr && !(f <= at(i + 1, j)))
                minimum = false;
            if (j > 0 && !(f <= at(i, j - 1)))
                minimum = false;
            if (j + 1 < ni && !(f <= at(i, j + 1)))
                minimum = false;
            const auto& p = scan[static_cast<std::size_t>(i) * static_cast<std::size_t>(ni) + j];
            if (minimum)
                out.emplace_back(p.re_E, p.im_E);
        }
    return out;
}

inline std::vector<io::ScanSample> to_samples(const std::vector<ScanPoint>& scan)
{
    std::vector<io::ScanSample> out;
    out.reserve(scan.size());
    for (const auto& p : scan)
        out.push_back({{p.re_E, p.im_E}, p.abs_F});
    return out;
}

/// Converged shooting roots matched one-to-one to `reference` by nearest distance.
struct Pairing {
    std::vector<cplx> reference;
    std::vector<std::optional<cplx>> matched;
    std::vector<double> rel_delta; // infinity when unmatched
};

inline Pairing match_roots(const std::vector<cplx>& reference, const std::vector<cplx>& roots)
{
    Pairing p;
    p.reference = reference;
    std::vector<bool> used(roots.size(), false);
    for (const cplx e : reference) {
        std::optional<std::size_t> best;
        for (std::size_t i = 0; i < roots.size(); ++i)
            if (!used[i] && (!best || std::abs(roots[i] - e) < std::abs(roots[*best] - e)))
                best = i;
        if (best) {
            used[*best] = true;
            p.matched.push_back(roots[*best]);
            p.rel_delta.push_back(std::abs(roots[*best] - e) / std::max(1e-300, std::abs(roots[*best])));
        } else {
            p.matched.push_back(std::nullopt);
            p.rel_delta.push_back(std::numeric_limits<double>::infinity());
        }
    }
    return p;
}

/// Indices of the `count` modes with smallest real part among the (numerically) real ones.
inline std::vector<Eigen::Index> lowest_real_modes(const Eigensystem& es, Eigen::Index count)
{
    std::vector<Eigen::Index> idx;
    for (Eigen::Index j = 0; j < es.modes(); ++j)
        idx.push_back(j);
    std::stable_sort(idx.begin(), idx.end(), [&](auto a, auto b) {
        const bool ra = std::abs(es.lambdas[a].imag()) < 1e-8 * std::max(1.0, std::abs(es.lambdas[a]));
        const bool rb = std::abs(es.lambdas[b].imag()) < 1e-8 * std::max(1.0, std::abs(es.lambdas[b]));
        if (ra != rb)
            return ra;
        return es.lambdas[a].real() < es.lambdas[b].real();
    });
    idx.resize(static_cast<std::size_t>(std::min<Eigen::Index>(count, es.modes())));
    return idx;
}

/// max |G_a - G_b| over the selected modes, G = L^dag W R.
inline double gram_change(const Eigensystem& a, const Eigensystem& b, const Eigen::VectorXcd& w,
                          const std::vector<Eigen::Index>& modes)
{
    double worst = 0.0;
    for (const auto i : modes)
        for (const auto j : modes) {
            const cplx ga = a.left.col(i).dot(w.cwiseProduct(a.right.col(j)));
            const cplx gb = b.left.col(i).dot(w.cwiseProduct(b.right.col(j)));
            worst = std::max(worst, std::abs(ga - gb));
        }
    return worst;
}

inline int level_count(const RunConfig& cfg) { return cfg.levels > 0 ? cfg.levels : 5; }

inline std::vector<cplx> as_vector(const Eigen::VectorXcd& v) { return {v.data(), v.data() + v.size()}; }

inline std::vector<cplx> real_parts(const Eigen::VectorXcd& v)
{
    std::vector<cplx> out;
    for (Eigen::Index j = 0; j < v.size(); ++j)
        out.emplace_back(v[j].real(), 0.0);
    return out;
}

inline nlohmann::json attempts_json(const RootSearch& rs)
{
    nlohmann::json list = nlohmann::json::array();
    for (const auto& a : rs.attempts) {
        const char* status = a.status == RootStatus::converged        ? "converged"
                             : a.status == RootStatus::no_convergence ? "no_convergence"
                                                                      : "failed";
        nlohmann::json j{{"guess", {a.guess.real(), a.guess.imag()}},
                         {"status", status},
                         {"iterations", a.iterations},
                         {"abs_F", finite_or_null(a.abs_F)},
                         {"gamma_max", a.gamma_max},
                         {"step_too_coarse", a.step_too_coarse},
                         {"message", a.message}};
        if (a.root)
            j["root"] = {a.root->real(), a.root->imag()};
        list.push_back(j);
    }
    return list;
}

} // namespace detail

inline RunResult run_spectrum(const RunConfig& cfg, const std::filesystem::path& out)
{
    const OperatorPair pair = detail::operators_for(cfg);
    const Eigensystem es = cfg.levels > 0 ? solve_lowest(pair, cfg.levels, cfg.tolerances.tol_im)
                                          : solve_generalized(pair, cfg.tolerances.pairing);
    io::write_spectrum_csv(out / "spectrum.csv", es);
    nlohmann::json report = detail::run_header(cfg, pair);
    report["modes"] = es.modes();
    report["discarded"] = es.discarded;
    report["max_residual_right"] = detail::max_or_zero(es.residual_right);
    report["max_residual_left"] = detail::max_or_zero(es.residual_left);
    io::write_json(out / "residuals.json", report);
    return {exit_ok, std::to_string(es.modes()) + " modes written to spectrum.csv"};
}

inline RunResult run_metric(const RunConfig& cfg, const std::filesystem::path& out)
{
    const OperatorPair pair = detail::operators_for(cfg);
    Eigensystem es = solve_generalized(pair, cfg.tolerances.pairing);
    refine_eigensystem(pair, es);
    es = normalize_biorthogonal(es, pair.w);
    if (cfg.metric_span == "real")
        es = filter_real(es, cfg.tolerances.tol_im);
    io::write_spectrum_csv(out / "spectrum.csv", es);
    nlohmann::json residuals = detail::run_header(cfg, pair);
    residuals["modes"] = es.modes();
    residuals["discarded"] = es.discarded;
    residuals["max_residual_right"] = detail::max_or_zero(es.residual_right);
    residuals["max_residual_left"] = detail::max_or_zero(es.residual_left);
    io::write_json(out / "residuals.json", residuals);

    const MetricResult mr = build_metric(es, pair);
    const double h = pair.grid.spacing();
    io::write_matrix_binary(out / "theta.bin", mr.Theta, h, cfg.contour.epsilon);
    io::write_matrix_binary(out / "S.bin", mr.S, h, cfg.contour.epsilon);
    io::write_matrix_binary(out / "M.bin", mr.M, h, cfg.contour.epsilon);
    const nlohmann::json diag = detail::diagnostics_json(mr.diagnostics);
    io::write_json(out / "diagnostics.json", diag);
    {
        auto txt = io::open_output(out / "diagnostics.txt");
        txt << report_render(diag);
        io::finish(txt, out / "diagnostics.txt");
    }

    nlohmann::json extra{{"modes", es.modes()},
                         {"dim", es.dim()},
                         {"span", cfg.metric_span},
                         {"incomplete", mr.diagnostics.incomplete},
                         {"ms_residual", detail::finite_or_null(mr.diagnostics.ms_residual)},
                         {"identity_residual", detail::finite_or_null(mr.diagnostics.identity_residual)}};
    try {
        const auto phys = physical_operators(restrict_to_span(mr, pair.H, pair.w), cfg.tolerances.hermiticity);
        extra["h_residual"] = phys.h_residual;
        extra["w_residual"] = phys.w_residual;
    } catch (const error& e) {
        extra["physical_operators"] = e.what();
    }
    io::write_json(out / "metric_report.json", extra);
    return {exit_ok, "metric over " + std::to_string(es.modes()) + " of " + std::to_string(es.dim()) + " modes"};
}

inline RunResult run_shoot(const RunConfig& cfg, const std::filesystem::path& out)
{
    const ContourSpec contour = detail::shooting_contour(cfg);
    const auto& sp = cfg.shoot.scan;
    const auto scan = mismatch_scan(cfg.model, contour.winding, contour, cfg.shoot.config, sp.re_lo, sp.re_hi,
                                    sp.re_count, sp.im_lo, sp.im_hi, sp.im_count);
    const auto samples = detail::to_samples(scan);
    io::write_scan_csv(out / "scan.csv", samples);
    const std::vector<cplx> guesses = cfg.shoot.guesses.empty() ? detail::scan_minima(scan, sp) : cfg.shoot.guesses;
    const RootSearch rs = find_eigenvalues(cfg.model, contour.winding, contour, cfg.shoot.config, guesses);
    std::vector<std::vector<std::string>> rows;
    for (std::size_t k = 0; k < rs.roots.size(); ++k)
        rows.push_back({std::to_string(k), io::format_double(rs.roots[k].real()),
                        io::format_double(rs.roots[k].imag())});
    io::write_csv(out / "roots.csv", {"index", "re_E", "im_E"}, rows);
    io::write_json(out / "shoot_report.json",
                   {{"epsilon", contour.epsilon}, {"winding", contour.winding}, {"attempts", detail::attempts_json(rs)}});
    if (rs.roots.empty())
        return {exit_solver, "no shooting root converged (see shoot_report.json)"};
    return {exit_ok, std::to_string(rs.roots.size()) + " roots written to roots.csv"};
}

inline RunResult run_compare(const RunConfig& cfg, const std::filesystem::path& out)
{
    const OperatorPair pair = detail::operators_for(cfg);
    const Eigensystem es = solve_lowest(pair, detail::level_count(cfg), cfg.tolerances.tol_im);
    const ContourSpec contour = detail::shooting_contour(cfg);
    const std::vector<cplx> guesses =
        cfg.shoot.guesses.empty() ? detail::real_parts(es.lambdas) : cfg.shoot.guesses;
    const RootSearch rs = find_eigenvalues(cfg.model, contour.winding, contour, cfg.shoot.config, guesses);
    const auto pairing = detail::match_roots(detail::as_vector(es.lambdas), rs.roots);

    std::vector<std::vector<std::string>> rows;
    double worst = 0.0;
    for (std::size_t k = 0; k < pairing.reference.size(); ++k) {
        const cplx e = pairing.reference[k];
        const auto& s = pairing.matched[k];
        rows.push_back({std::to_string(k), io::format_double(e.real()), io::format_double(e.imag()),
                        s ? io::format_double(s->real()) : "nan", s ? io::format_double(s->imag()) : "nan",
                        io::format_double(pairing.rel_delta[k])});
        worst = std::max(worst, pairing.rel_delta[k]);
    }
    io::write_csv(out / "compare.csv",
                  {"index", "rectified_re", "rectified_im", "shooting_re", "shooting_im", "rel_delta"}, rows);
    const bool pass = worst < cfg.tolerances.compare;
    io::write_json(out / "compare.json", {{"modes", pairing.reference.size()},
                                          {"max_rel_delta", detail::finite_or_null(worst)},
                                          {"tolerance", cfg.tolerances.compare},
                                          {"pass", pass},
                                          {"shooting_epsilon", contour.epsilon},
                                          {"attempts", detail::attempts_json(rs)}});
    char msg[128];
    std::snprintf(msg, sizeof msg, "max relative delta %.3e (tolerance %.1e)", worst, cfg.tolerances.compare);
    return {pass ? exit_ok : exit_validation, msg};
}

namespace detail {

struct Check {
    std::string name;
    double value = 0.0;
    double limit = 0.0;
    bool below = true; // pass when value < limit; otherwise value > limit
    bool pass() const { return below ? value < limit : value > limit; }
};

/// Runs checks in order and stops at the first violation.
class Validator {
public:
    bool record(std::string name, double value, double limit, bool below = true)
    {
        Check c{std::move(name), value, limit, below};
        checks_.push_back(c);
        if (!c.pass() && !failed_)
            failed_ = checks_.size() - 1;
        return c.pass();
    }
    bool failed() const { return failed_.has_value(); }
    const Check& first_failure() const { return checks_[*failed_]; }

    nlohmann::json json() const
    {
        nlohmann::json list = nlohmann::json::array();
        for (const auto& c : checks_)
            list.push_back({{"name", c.name},
                            {"value", finite_or_null(c.value)},
                            {"limit", c.limit},
                            {"relation", c.below ? "<" : ">"},
                            {"pass", c.pass()}});
        nlohmann::json doc{{"checks", list}, {"pass", !failed()}};
        if (failed_)
            doc["first_violation"] = checks_[*failed_].name;
        return doc;
    }

private:
    std::vector<Check> checks_;
    std::optional<std::size_t> failed_;
};

} // namespace detail

/// Runs the invariant suite on the configured model; stops at the first violation.
inline RunResult run_validate(const RunConfig& cfg, const std::filesystem::path& out)
{
    const auto& tol = cfg.tolerances;
    detail::Validator v;
    auto finish = [&]() -> RunResult {
        io::write_json(out / "validation.json", v.json());
        if (v.failed()) {
            const auto& c = v.first_failure();
            char msg[256];
            std::snprintf(msg, sizeof msg, "violation: %s = %.3e, required %s %.1e", c.name.c_str(), c.value,
                          c.below ? "<" : ">", c.limit);
            return {exit_validation, msg};
        }
        return {exit_ok, "all invariants hold"};
    };
    auto stop = [&] { return v.failed(); };

    const OperatorPair pair = detail::operators_for(cfg);
    const RectifiedModel rm = cfg.rectified();
    const bool pt = rm.pt_symmetric();
    if (pt && !v.record("pt_residual", pt_residual(pair), tol.pt))
        return finish();

    // spectra
    Eigensystem solved = solve_generalized(pair, tol.pairing);
    refine_eigensystem(pair, solved);
    const Eigensystem full = normalize_biorthogonal(solved, pair.w);
    const Eigensystem real = filter_real(full, tol.tol_im);
    v.record("residual_right", detail::max_or_zero(real.residual_right), tol.residual);
    v.record("residual_left", detail::max_or_zero(real.residual_left), tol.residual);
    v.record("gram_offdiag", max_offdiag_gram(full, pair.w), tol.gram);
    v.record("completeness", completeness_residual(full, pair.w), tol.completeness);
    const double rebuild = spectral_rebuild_residual(full, pair);
    v.record("spectral_rebuild", rebuild, tol.rebuild);
    if (stop())
        return finish();

    std::mt19937_64 rng(cfg.seed);
    {
        const Eigensystem k = apply_kappa(full, detail::random_kappa(full.modes(), rng));
        const Eigen::VectorXcd sigma_k = (k.left.adjoint() * pair.w.asDiagonal() * k.right).diagonal();
        v.record("kappa_sigma_change", (sigma_k - full.sigmas).cwiseAbs().maxCoeff(), tol.kappa);
        // off-diagonal Gram noise is rescaled by kappa_i / kappa_j, so compare entries on the low modes
        const Eigen::Index low = std::min<Eigen::Index>(full.modes(), detail::level_count(cfg));
        const std::vector<Eigen::Index> order = detail::lowest_real_modes(full, low);
        v.record("kappa_gram_change", detail::gram_change(full, k, pair.w, order), tol.kappa);
        v.record("kappa_rebuild_change", std::abs(spectral_rebuild_residual(k, pair) - rebuild), tol.kappa);
        v.record("kappa_completeness_change",
                 std::abs(completeness_residual(k, pair.w) - completeness_residual(full, pair.w)), tol.kappa);
        if (stop())
            return finish();
    }

    if (pt) {
        const Eigen::Index count = std::min<Eigen::Index>(real.modes(), detail::level_count(cfg));
        Eigensystem low = real;
        low.lambdas.conservativeResize(count);
        low.right.conservativeResize(Eigen::NoChange, count);
        low.left.conservativeResize(Eigen::NoChange, count);
        const auto qp = quasiparity_leftkets(low, pair.w);
        if (!v.record("quasiparity_angle", qp.angle.maxCoeff(), tol.collinearity))
            return finish();
    }

    // metric on the retained real span
    const MetricResult mr = build_metric(real, pair);
    const auto& d = mr.diagnostics;
    v.record("metric_ms", d.ms_residual, tol.ms);
    v.record("metric_identity", d.identity_residual, tol.identity);
    v.record("metric_quasiH", d.quasiH, tol.quasi_hermiticity);
    v.record("metric_quasiW", d.quasiW, tol.quasi_hermiticity);
    v.record("metric_hermiticity", d.hermiticity, tol.hermiticity);
    v.record("metric_min_eig", d.min_eig, 0.0, false);
    if (stop())
        return finish();
    const auto phys = physical_operators(restrict_to_span(mr, pair.H, pair.w), tol.hermiticity);
    v.record("physical_h", phys.h_residual, tol.physical);
    v.record("physical_w", phys.w_residual, tol.physical);
    if (stop())
        return finish();
    {
        const Eigen::VectorXcd k1 = detail::random_kappa(real.modes(), rng);
        const Eigen::VectorXcd k2 = detail::random_kappa(real.modes(), rng);
        const auto probe = kappa_dependence_probe(real, pair.H, pair.w, k1, k2);
        v.record("kappa_metric_difference", probe.relative_difference, 1e-3, false);
        v.record("kappa_quasiH", std::max({probe.quasiH1, probe.quasiH2, probe.quasiW1, probe.quasiW2}),
                 tol.quasi_hermiticity);
        if (stop())
            return finish();
    }
    if (cfg.contour.winding == 0) {
        const Eigen::VectorXcd ones = Eigen::VectorXcd::Ones(real.modes());
        v.record("degeneration_S_offdiag", offdiag_ratio(mr.S), tol.identity);
        v.record("degeneration_single_series",
                 (mr.Theta - single_series_metric(real, ones)).norm() / mr.Theta.norm(), tol.ms);
        if (stop())
            return finish();
    }

    // shooting
    const ContourSpec contour = detail::shooting_contour(cfg);
    const int count = static_cast<int>(std::min<Eigen::Index>(real.modes(), detail::level_count(cfg)));
    std::vector<cplx> reference(real.lambdas.data(), real.lambdas.data() + count);
    const std::vector<cplx> guesses = detail::real_parts(real.lambdas.head(count));
    const RootSearch base = find_eigenvalues(cfg.model, contour.winding, contour, cfg.shoot.config, guesses);
    const auto cmp = detail::match_roots(reference, base.roots);
    v.record("rectification_consistency", *std::max_element(cmp.rel_delta.begin(), cmp.rel_delta.end()),
             tol.compare);
    if (stop())
        return finish();

    ContourSpec doubled = contour;
    doubled.epsilon *= 2.0;
    const std::vector<cplx> roots = base.roots;
    const RootSearch wide = find_eigenvalues(cfg.model, contour.winding, doubled, cfg.shoot.config, roots);
    const auto eps_cmp = detail::match_roots(roots, wide.roots);
    v.record("shoot_eps_independence", *std::max_element(eps_cmp.rel_delta.begin(), eps_cmp.rel_delta.end()),
             tol.eps_independence);
    if (stop())
        return finish();

    ShootConfig fine = cfg.shoot.config;
    fine.steps *= 2;
    const RootSearch refined = find_eigenvalues(cfg.model, contour.winding, contour, fine, roots);
    const auto step_cmp = detail::match_roots(roots, refined.roots);
    v.record("shoot_step_refinement", *std::max_element(step_cmp.rel_delta.begin(), step_cmp.rel_delta.end()),
             tol.eps_independence);
    return finish();
}

/// Dispatches `command`, writing artifacts into `out`. Errors become exit
/// codes with an error.json next to the artifacts.
inline RunResult run(const RunConfig& cfg, Command command, const std::filesystem::path& out)
{
    try {
        std::error_code ec;
        std::filesystem::create_directories(out, ec);
        if (ec || !std::filesystem::is_directory(out))
            throw error(errc::io, "output directory " + out.string() + " cannot be created");
        nlohmann::json echo = to_json(cfg);
        echo["command"] = to_string(command);
        io::write_json(out / "config.json", echo);
        switch (command) {
        case Command::spectrum: return run_spectrum(cfg, out);
        case Command::metric: return run_metric(cfg, out);
        case Command::shoot: return run_shoot(cfg, out);
        case Command::compare: return run_compare(cfg, out);
        case Command::validate: return run_validate(cfg, out);
        }
        throw error(errc::config, "unknown command");
    } catch (const error& e) {
        const int code = exit_code_for(e.code());
        try {
            io::write_json(out / "error.json",
                           {{"code", to_string(e.code())}, {"message", e.what()}, {"exit_code", code}});
        } catch (const error&) {
        }
        return {code, e.what()};
    }
}

} // namespace toboggan
