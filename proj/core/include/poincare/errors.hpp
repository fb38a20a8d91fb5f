#pragma once

#include <stdexcept>
#include <string>

namespace poincare {

enum class ErrorCode {
    invalid_argument,
    outside_collar,
    non_convergence,
    degenerate_boundary,
    trajectory_escape,
    certification,
    radius_too_large,
    solver_breakdown,
    gate_failure,
    cover_failure,
    blend_mismatch,
    config,
};

const char* to_string(ErrorCode code);

/// Single exception type for the library; the code decides how the CLI maps it to an exit status.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(what), code_(code) {}
    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

}  // namespace poincare
