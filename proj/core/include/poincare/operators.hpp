#pragma once

#include <string>
#include <vector>

#include <Eigen/Sparse>

#include "poincare/problem.hpp"

namespace poincare {

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;
using Triplets = std::vector<Eigen::Triplet<double>>;

/// 19-point stencil of a : D^2 at an inside node (entries over active indices).
void elliptic_stencil(const Grid& grid, const Mat3& a, std::size_t node, std::vector<std::pair<int, double>>& out);

/// Rows for inside nodes only (ghost rows empty); maps active values to a^{ij} D_ij u.
SparseMatrix assemble_elliptic(const Grid& grid, const Coefficients& a);

GridField apply(const SparseMatrix& A, const GridField& u);

enum class StencilKind { directional, split };

/// Linear functional on active values approximating dl u at a boundary point.
struct BoundaryRow {
    Vec3 point;
    Vec3 normal;
    Vec3 direction;
    StencilKind kind = StencilKind::directional;
    std::vector<int> nodes;
    std::vector<double> coef;
    double apply(const GridField& u) const;
};

/// One row per ghost node, evaluated at the ghost's boundary foot point, direction ell(y).
std::vector<BoundaryRow> assemble_oblique_bc(const Grid& grid, const BoundaryField& field);
BoundaryRow oblique_row(const Grid& grid, const Domain& domain, const Vec3& y, const Vec3& nu, const Vec3& ell);

/// Ghost closure: u_g = sum rho_i u_i + sigma * phi(y) from a quadratic fit to inside nodes
/// constrained by the directional boundary functional.
struct GhostClosure {
    std::vector<int> nodes;
    std::vector<double> rho;
    double sigma = 0.0;
    StencilKind kind = StencilKind::directional;
};
GhostClosure ghost_closure(const Grid& grid, const Domain& domain, std::size_t ghost, const Vec3& ell);

/// L . grad_h u on the masked nodes (0 elsewhere); throws when L is unavailable on a masked node.
GridField directional_derivative(const Grid& grid, const GridField& u, const DirectionField& L,
                                 const std::vector<char>& mask);

/// Pointwise source of (6) from local derivative data.
double derived_dirichlet_source(const Vec3& x, const Vec3& grad_u, const Mat3& hess_u, const Vec3& grad_f,
                                const Coefficients& a, const DirectionField& L, double fd_step = 1e-3);

/// Source of (6) on the masked nodes using grid derivatives of u.
GridField derived_dirichlet_rhs(const Grid& grid, const GridField& u, const DiscreteProblem& problem,
                                const std::vector<char>& mask);

}  // namespace poincare
