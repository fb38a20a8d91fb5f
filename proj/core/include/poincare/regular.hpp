#pragma once

#include <string>

#include "poincare/operators.hpp"

namespace poincare {

struct LinearSolveInfo {
    std::string method;
    int iterations = 0;
    double relative_residual = 0.0;
};

struct RegularOptions {
    double tol = 1e-12;
    std::size_t direct_limit = 8000;  // unknowns; above it restarted GMRES with ILUT
    bool check_gamma = true;
};

struct RegularSolution {
    GridField u;
    double slack = 0.0;  // constant absorbed by the compatibility border
    LinearSolveInfo info;
    std::size_t split_rows = 0;
    std::size_t directional_rows = 0;
};

/// Solves L u = f, du/dl = phi on the whole grid with the mean over Omega_0 pinned.
/// The result is used on Omega \ N'; gamma > 0 is required on the boundary away from N'.
RegularSolution solve_regular_oblique(const DiscreteProblem& problem, const Grid& grid, const RegionMasks& regions,
                                      const RegularOptions& opts = {});

/// L u = f inside with ghost values prescribed (ghost entries of boundary_values are used).
RegularSolution solve_dirichlet(const DiscreteProblem& problem, const Grid& grid, const GridField& boundary_values,
                                const RegularOptions& opts = {});

/// Oblique rows on ghosts except the fixed ones, which take the given values.
RegularSolution solve_mixed(const DiscreteProblem& problem, const Grid& grid, const std::vector<char>& fixed,
                            const GridField& values, const RegularOptions& opts = {});

/// Residuals of both equations of (1) for a grid field.
struct ResidualReport {
    double interior_max = 0.0;   // max |L_h u - f| over inside nodes away from the ghost layer
    double interior_rel = 0.0;
    double boundary_max = 0.0;   // max |B_h u - phi| over ghost feet
    double boundary_rel = 0.0;
    double source_shift = 0.0;   // constant added to f by the compatibility border
};
ResidualReport equation_residuals(const DiscreteProblem& problem, const Grid& grid, const GridField& u,
                                  double source_shift = 0.0);

/// Pointwise node values of an analytic function.
GridField sample(const Grid& grid, const ScalarFn& fn);

/// Weighted mean over a mask.
double weighted_mean(const Grid& grid, const GridField& u, const std::vector<char>& mask);

}  // namespace poincare
