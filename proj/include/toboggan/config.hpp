#pragma once

// Run configuration: a JSON document with an explicit schema version.
// Unknown keys anywhere are errors. See docs/model-format.md for the grammar.

#include <cmath>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "toboggan/contour.hpp"
#include "toboggan/discrete.hpp"
#include "toboggan/error.hpp"
#include "toboggan/io.hpp"
#include "toboggan/model.hpp"
#include "toboggan/shoot.hpp"

namespace toboggan {

inline constexpr int config_schema_version = 1;

enum class Command { spectrum, metric, shoot, compare, validate };

inline const char* to_string(Command c)
{
    switch (c) {
    case Command::spectrum: return "spectrum";
    case Command::metric: return "metric";
    case Command::shoot: return "shoot";
    case Command::compare: return "compare";
    case Command::validate: return "validate";
    }
    return "unknown";
}

inline Command parse_command(const std::string& s)
{
    for (Command c : {Command::spectrum, Command::metric, Command::shoot, Command::compare, Command::validate})
        if (s == to_string(c))
            return c;
    throw error(errc::config, "command must be one of spectrum, metric, shoot, compare, validate; got '" + s + "'");
}

/// Numerical thresholds. Every entry must be positive.
struct Tolerances {
    double pairing = 1e-8;         // left/right eigenvalue matching, relative
    double tol_im = 1e-8;          // reality filter, relative
    double residual = 1e-8;        // per-mode eigen-residual
    double gram = 1e-8;            // off-diagonal weighted Gram
    double completeness = 1e-8;
    double rebuild = 1e-8;
    double kappa = 1e-12;          // kappa invariance
    double ms = 1e-10;             // M S = I
    double identity = 1e-8;        // <l|Theta W|l'> = delta
    double quasi_hermiticity = 1e-8;
    double hermiticity = 1e-8;
    double physical = 1e-7;        // Hermiticity of Omega H Omega^-1, Omega W Omega^-1
    double pt = 1e-12;
    double collinearity = 1e-6;    // quasi-parity angle, radians
    double compare = 1e-3;         // rectified vs shooting, relative
    double eps_independence = 1e-6;
};

struct ScanSpec {
    double re_lo = 0.0, re_hi = 10.0;
    int re_count = 41;
    double im_lo = 0.0, im_hi = 0.0;
    int im_count = 1;
};

struct ShootSpec {
    ShootConfig config;
    std::optional<double> epsilon; // shift for the shooting contour, defaults to the model's
    std::vector<cplx> guesses;     // empty: local minima of the scan
    ScanSpec scan;
};

struct RunConfig {
    ModelSpec model;
    ContourSpec contour;
    GridSpec grid;
    std::optional<double> half_width; // unset: default_half_width(model, contour, e_max)
    double e_max = 20.0;
    BranchConvention convention = BranchConvention::substitution;
    std::optional<Command> command;
    Tolerances tolerances;
    ShootSpec shoot;
    int levels = 5;
    std::string metric_span = "real"; // "real": retained real modes; "full": every mode
    int kappa_draws = 10;
    std::filesystem::path output_dir = "out";
    std::uint64_t seed = 1;

    RectifiedModel rectified() const { return rectify_model(model, contour.winding, convention); }

    /// Grid with the half-width resolved.
    GridSpec resolved_grid() const
    {
        GridSpec g = grid;
        g.half_width = half_width ? *half_width : default_half_width(rectified(), contour, e_max);
        return g;
    }
};

namespace detail {

inline void require_keys(const nlohmann::json& obj, const std::string& where, const std::set<std::string>& allowed)
{
    if (!obj.is_object())
        throw error(errc::config, where + " must be an object");
    for (const auto& [key, value] : obj.items())
        if (!allowed.count(key))
            throw error(errc::config, "unknown key '" + (where.empty() ? key : where + "." + key) + "'");
}

inline double get_number(const nlohmann::json& v, const std::string& name)
{
    if (!v.is_number())
        throw error(errc::config, name + " must be a number");
    const double x = v.get<double>();
    if (!std::isfinite(x))
        throw error(errc::config, name + " must be finite");
    return x;
}

inline double get_positive(const nlohmann::json& v, const std::string& name)
{
    const double x = get_number(v, name);
    if (!(x > 0.0))
        throw error(errc::config, name + " must be positive, got " + num(x));
    return x;
}

inline int get_int(const nlohmann::json& v, const std::string& name)
{
    if (!v.is_number_integer())
        throw error(errc::config, name + " must be an integer");
    return v.get<int>();
}

inline std::string get_string(const nlohmann::json& v, const std::string& name)
{
    if (!v.is_string())
        throw error(errc::config, name + " must be a string");
    return v.get<std::string>();
}

inline cplx get_complex(const nlohmann::json& v, const std::string& name)
{
    if (v.is_number())
        return {get_number(v, name), 0.0};
    if (v.is_array() && v.size() == 2)
        return {get_number(v[0], name + "[0]"), get_number(v[1], name + "[1]")};
    throw error(errc::config, name + " must be a number or a [re, im] pair");
}

} // namespace detail

/// Sets a dotted key ("grid.n") in the document. The value is parsed as JSON
/// when it is valid JSON and taken as a string otherwise.
inline void apply_override(nlohmann::json& doc, const std::string& assignment)
{
    const auto eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0)
        throw error(errc::config, "override '" + assignment + "' is not of the form KEY=VALUE");
    const std::string key = assignment.substr(0, eq);
    const std::string text = assignment.substr(eq + 1);
    nlohmann::json value;
    try {
        value = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error&) {
        value = text;
    }
    nlohmann::json* node = &doc;
    std::size_t start = 0;
    for (;;) {
        const auto dot = key.find('.', start);
        const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
        if (part.empty())
            throw error(errc::config, "override key '" + key + "' has an empty component");
        if (!node->is_object())
            throw error(errc::config, "override key '" + key + "' descends into a non-object");
        if (dot == std::string::npos) {
            (*node)[part] = value;
            return;
        }
        node = &(*node)[part];
        if (node->is_null())
            *node = nlohmann::json::object();
        start = dot + 1;
    }
}

inline RunConfig parse_config(const nlohmann::json& doc)
{
    using namespace detail;
    require_keys(doc, "",
                 {"schema_version", "ell", "omega", "coeffs", "winding", "epsilon", "grid", "branch_convention",
                  "tolerances", "shoot", "levels", "metric", "output_dir", "seed", "command"});
    if (!doc.contains("schema_version"))
        throw error(errc::config, "schema_version is required");
    if (get_int(doc["schema_version"], "schema_version") != config_schema_version)
        throw error(errc::config, "schema_version must be " + std::to_string(config_schema_version));

    RunConfig cfg;
    if (doc.contains("ell"))
        cfg.model.ell = get_number(doc["ell"], "ell");
    if (doc.contains("coeffs")) {
        const auto& list = doc["coeffs"];
        if (!list.is_array())
            throw error(errc::config, "coeffs must be a list of [k, re, im]");
        for (std::size_t i = 0; i < list.size(); ++i) {
            const std::string name = "coeffs[" + std::to_string(i) + "]";
            const auto& t = list[i];
            if (!t.is_array() || t.size() != 3)
                throw error(errc::config, name + " must be [k, re, im]");
            const int k = get_int(t[0], name + ".k");
            if (k < 1)
                throw error(errc::config, name + ".k must be >= 1, got " + std::to_string(k));
            if (cfg.model.coeffs.count(k))
                throw error(errc::config, name + " repeats power " + std::to_string(k));
            cfg.model.coeffs[k] = {get_number(t[1], name + ".re"), get_number(t[2], name + ".im")};
        }
    }
    if (doc.contains("omega")) {
        if (cfg.model.coeffs.count(2))
            throw error(errc::config, "omega and a k = 2 entry in coeffs both set the quadratic term");
        cfg.model.set_omega(get_number(doc["omega"], "omega"));
    }
    if (doc.contains("winding")) {
        cfg.contour.winding = get_int(doc["winding"], "winding");
        if (cfg.contour.winding < 0)
            throw error(errc::config, "winding must be non-negative, got " + std::to_string(cfg.contour.winding));
    }
    if (doc.contains("epsilon"))
        cfg.contour.epsilon = get_positive(doc["epsilon"], "epsilon");

    if (doc.contains("grid")) {
        const auto& g = doc["grid"];
        require_keys(g, "grid", {"half_width", "n", "stencil", "e_max"});
        if (g.contains("half_width"))
            cfg.half_width = get_positive(g["half_width"], "grid.half_width");
        if (g.contains("n"))
            cfg.grid.n = get_int(g["n"], "grid.n");
        if (g.contains("stencil")) {
            const int s = get_int(g["stencil"], "grid.stencil");
            if (s != 3 && s != 5)
                throw error(errc::config, "grid.stencil must be 3 or 5, got " + std::to_string(s));
            cfg.grid.stencil = s == 3 ? Stencil::three_point : Stencil::five_point;
        }
        if (g.contains("e_max"))
            cfg.e_max = get_positive(g["e_max"], "grid.e_max");
    }
    if (doc.contains("branch_convention"))
        cfg.convention = parse_branch_convention(get_string(doc["branch_convention"], "branch_convention"));

    if (doc.contains("tolerances")) {
        const auto& t = doc["tolerances"];
        auto& tol = cfg.tolerances;
        const std::vector<std::pair<std::string, double*>> fields{
            {"pairing", &tol.pairing},
            {"tol_im", &tol.tol_im},
            {"residual", &tol.residual},
            {"gram", &tol.gram},
            {"completeness", &tol.completeness},
            {"rebuild", &tol.rebuild},
            {"kappa", &tol.kappa},
            {"ms", &tol.ms},
            {"identity", &tol.identity},
            {"quasi_hermiticity", &tol.quasi_hermiticity},
            {"hermiticity", &tol.hermiticity},
            {"physical", &tol.physical},
            {"pt", &tol.pt},
            {"collinearity", &tol.collinearity},
            {"compare", &tol.compare},
            {"eps_independence", &tol.eps_independence},
        };
        std::set<std::string> allowed;
        for (const auto& f : fields)
            allowed.insert(f.first);
        require_keys(t, "tolerances", allowed);
        for (const auto& [key, target] : fields)
            if (t.contains(key))
                *target = get_positive(t[key], "tolerances." + key);
    }

    if (doc.contains("shoot")) {
        const auto& s = doc["shoot"];
        require_keys(s, "shoot",
                     {"gamma_max", "steps", "match_gamma", "root_tol", "max_iter", "seed_ratio", "epsilon", "guesses",
                      "scan"});
        auto& sc = cfg.shoot.config;
        if (s.contains("gamma_max"))
            sc.gamma_max = get_number(s["gamma_max"], "shoot.gamma_max");
        if (s.contains("steps"))
            sc.steps = get_int(s["steps"], "shoot.steps");
        if (s.contains("match_gamma"))
            sc.match_gamma = get_number(s["match_gamma"], "shoot.match_gamma");
        if (s.contains("root_tol"))
            sc.root_tol = get_positive(s["root_tol"], "shoot.root_tol");
        if (s.contains("max_iter"))
            sc.max_iter = get_int(s["max_iter"], "shoot.max_iter");
        if (s.contains("seed_ratio"))
            sc.seed_ratio = get_number(s["seed_ratio"], "shoot.seed_ratio");
        if (s.contains("epsilon"))
            cfg.shoot.epsilon = get_positive(s["epsilon"], "shoot.epsilon");
        if (s.contains("guesses")) {
            const auto& g = s["guesses"];
            if (!g.is_array())
                throw error(errc::config, "shoot.guesses must be a list");
            for (std::size_t i = 0; i < g.size(); ++i)
                cfg.shoot.guesses.push_back(get_complex(g[i], "shoot.guesses[" + std::to_string(i) + "]"));
        }
        if (s.contains("scan")) {
            const auto& g = s["scan"];
            require_keys(g, "shoot.scan", {"re_lo", "re_hi", "re_count", "im_lo", "im_hi", "im_count"});
            auto& sp = cfg.shoot.scan;
            if (g.contains("re_lo"))
                sp.re_lo = get_number(g["re_lo"], "shoot.scan.re_lo");
            if (g.contains("re_hi"))
                sp.re_hi = get_number(g["re_hi"], "shoot.scan.re_hi");
            if (g.contains("re_count"))
                sp.re_count = get_int(g["re_count"], "shoot.scan.re_count");
            if (g.contains("im_lo"))
                sp.im_lo = get_number(g["im_lo"], "shoot.scan.im_lo");
            if (g.contains("im_hi"))
                sp.im_hi = get_number(g["im_hi"], "shoot.scan.im_hi");
            if (g.contains("im_count"))
                sp.im_count = get_int(g["im_count"], "shoot.scan.im_count");
            if (sp.re_count < 1 || sp.im_count < 1)
                throw error(errc::config, "shoot.scan counts must be positive");
            if (sp.re_hi < sp.re_lo || sp.im_hi < sp.im_lo)
                throw error(errc::config, "shoot.scan ranges must satisfy lo <= hi");
        }
        sc.validate();
    }

    if (doc.contains("levels")) {
        cfg.levels = get_int(doc["levels"], "levels");
        if (cfg.levels < 0)
            throw error(errc::config, "levels must be non-negative (0 selects every mode)");
    }
    if (doc.contains("metric")) {
        const auto& m = doc["metric"];
        require_keys(m, "metric", {"span", "kappa_draws"});
        if (m.contains("span")) {
            cfg.metric_span = get_string(m["span"], "metric.span");
            if (cfg.metric_span != "real" && cfg.metric_span != "full")
                throw error(errc::config, "metric.span must be 'real' or 'full'");
        }
        if (m.contains("kappa_draws")) {
            cfg.kappa_draws = get_int(m["kappa_draws"], "metric.kappa_draws");
            if (cfg.kappa_draws < 2)
                throw error(errc::config, "metric.kappa_draws must be at least 2");
        }
    }
    if (doc.contains("output_dir"))
        cfg.output_dir = get_string(doc["output_dir"], "output_dir");
    if (doc.contains("seed")) {
        if (!doc["seed"].is_number_unsigned())
            throw error(errc::config, "seed must be a non-negative integer");
        cfg.seed = doc["seed"].get<std::uint64_t>();
    }
    if (doc.contains("command"))
        cfg.command = parse_command(get_string(doc["command"], "command"));

    cfg.model.validate();
    cfg.contour.validate();
    GridSpec probe = cfg.grid;
    probe.half_width = cfg.half_width.value_or(1.0);
    probe.validate();
    return cfg;
}

inline RunConfig load_config(const std::filesystem::path& path, const std::vector<std::string>& overrides = {})
{
    nlohmann::json doc = io::read_json(path);
    for (const auto& o : overrides)
        apply_override(doc, o);
    return parse_config(doc);
}

/// The parsed configuration echoed back with every default filled in.
inline nlohmann::json to_json(const RunConfig& cfg)
{
    nlohmann::json doc;
    doc["schema_version"] = config_schema_version;
    doc["ell"] = cfg.model.ell;
    nlohmann::json coeffs = nlohmann::json::array();
    for (const auto& [k, c] : cfg.model.coeffs)
        coeffs.push_back({k, c.real(), c.imag()});
    doc["coeffs"] = coeffs;
    doc["winding"] = cfg.contour.winding;
    doc["epsilon"] = cfg.contour.epsilon;
    doc["grid"] = {{"n", cfg.grid.n},
                   {"stencil", static_cast<int>(cfg.grid.stencil)},
                   {"e_max", cfg.e_max}};
    if (cfg.half_width)
        doc["grid"]["half_width"] = *cfg.half_width;
    doc["branch_convention"] = to_string(cfg.convention);
    const auto& t = cfg.tolerances;
    doc["tolerances"] = {{"pairing", t.pairing},
                         {"tol_im", t.tol_im},
                         {"residual", t.residual},
                         {"gram", t.gram},
                         {"completeness", t.completeness},
                         {"rebuild", t.rebuild},
                         {"kappa", t.kappa},
                         {"ms", t.ms},
                         {"identity", t.identity},
                         {"quasi_hermiticity", t.quasi_hermiticity},
                         {"hermiticity", t.hermiticity},
                         {"physical", t.physical},
                         {"pt", t.pt},
                         {"collinearity", t.collinearity},
                         {"compare", t.compare},
                         {"eps_independence", t.eps_independence}};
    const auto& s = cfg.shoot;
    doc["shoot"] = {{"gamma_max", s.config.gamma_max},
                    {"steps", s.config.steps},
                    {"match_gamma", s.config.match_gamma},
                    {"root_tol", s.config.root_tol},
                    {"max_iter", s.config.max_iter},
                    {"seed_ratio", s.config.seed_ratio},
                    {"scan",
                     {{"re_lo", s.scan.re_lo},
                      {"re_hi", s.scan.re_hi},
                      {"re_count", s.scan.re_count},
                      {"im_lo", s.scan.im_lo},
                      {"im_hi", s.scan.im_hi},
                      {"im_count", s.scan.im_count}}}};
    if (s.epsilon)
        doc["shoot"]["epsilon"] = *s.epsilon;
    nlohmann::json guesses = nlohmann::json::array();
    for (const auto& g : s.guesses)
        guesses.push_back({g.real(), g.imag()});
    doc["shoot"]["guesses"] = guesses;
    doc["levels"] = cfg.levels;
    doc["metric"] = {{"span", cfg.metric_span}, {"kappa_draws", cfg.kappa_draws}};
    doc["output_dir"] = cfg.output_dir.string();
    doc["seed"] = cfg.seed;
    if (cfg.command)
        doc["command"] = to_string(*cfg.command);
    return doc;
}

} // namespace toboggan
