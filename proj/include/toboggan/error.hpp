#pragma once

#include <cstdio>
#include <stdexcept>
#include <string>

namespace toboggan {

enum class errc {
    domain,                  // argument outside the admissible set (|gamma| >= pi/2, z = 0, ...)
    config,                  // malformed model, grid or run configuration
    degenerate_pairing,
    solver_failure,
    empty_spectrum,
    self_orthogonal_mode,
    incomplete_basis,
    zero_kappa,
    vanishing_parity_overlap,
    ill_conditioned_s,
    singular_theta,
    non_positive_theta,
    schema_mismatch,
    io,
};

inline const char* to_string(errc code)
{
    switch (code) {
    case errc::domain: return "DomainError";
    case errc::config: return "ConfigError";
    case errc::degenerate_pairing: return "DegeneratePairing";
    case errc::solver_failure: return "SolverFailure";
    case errc::empty_spectrum: return "EmptySpectrum";
    case errc::self_orthogonal_mode: return "SelfOrthogonalMode";
    case errc::incomplete_basis: return "IncompleteBasis";
    case errc::zero_kappa: return "ZeroKappa";
    case errc::vanishing_parity_overlap: return "VanishingParityOverlap";
    case errc::ill_conditioned_s: return "IllConditionedS";
    case errc::singular_theta: return "SingularTheta";
    case errc::non_positive_theta: return "NonPositiveTheta";
    case errc::schema_mismatch: return "SchemaMismatch";
    case errc::io: return "IOError";
    }
    return "UnknownError";
}

/// Short human-readable rendering of a number for messages.
inline std::string num(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

class error : public std::runtime_error {
public:
    error(errc code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code)
    {
    }

    errc code() const noexcept { return code_; }

private:
    errc code_;
};

} // namespace toboggan
