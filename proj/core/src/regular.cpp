#include "poincare/regular.hpp"

#include <cmath>

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseLU>
#include <unsupported/Eigen/IterativeSolvers>

namespace poincare {

GridField sample(const Grid& grid, const ScalarFn& fn) {
    GridField v(grid.n_active());
    for (std::size_t a = 0; a < grid.n_active(); ++a) v[a] = fn(grid.position(a));
    return v;
}

double weighted_mean(const Grid& grid, const GridField& u, const std::vector<char>& mask) {
    double s = 0.0, w = 0.0;
    for (std::size_t a = 0; a < grid.n_active(); ++a) {
        if (!mask[a]) continue;
        s += grid.weight[a] * u[a];
        w += grid.weight[a];
    }
    if (!(w > 0.0)) throw Error(ErrorCode::invalid_argument, "mean over an empty region");
    return s / w;
}

namespace {

// Factorizes once, solves for several right-hand sides.
class SparseSolver {
public:
    SparseSolver(const SparseMatrix& A, const RegularOptions& opts, LinearSolveInfo& info)
        : A_(A), opts_(opts), info_(info) {
        if (static_cast<std::size_t>(A.rows()) <= opts.direct_limit) {
            Eigen::SparseMatrix<double> Ac(A);
            Ac.makeCompressed();
            lu_.analyzePattern(Ac);
            lu_.factorize(Ac);
            if (lu_.info() != Eigen::Success)
                throw Error(ErrorCode::solver_breakdown, "sparse LU failed: " + lu_.lastErrorMessage());
            info.method = "sparse-lu";
            direct_ = true;
        } else {
            setup(0);
            info.method = "gmres-ilut";
        }
    }

    Eigen::VectorXd solve(const Eigen::VectorXd& b) {
        Eigen::VectorXd x;
        if (direct_) {
            x = lu_.solve(b);
            info_.iterations = std::max(info_.iterations, 1);
        } else {
            // a stiffer preconditioner is tried before giving up
            for (;;) {
                x = it_.solve(b);
                info_.iterations = std::max(info_.iterations, static_cast<int>(it_.iterations()));
                if (it_.info() == Eigen::Success) break;
                if (level_ >= 2) throw Error(ErrorCode::solver_breakdown, "GMRES did not converge");
                setup(level_ + 1);
            }
        }
        double bn = b.norm();
        double rel = (A_ * x - b).norm() / (bn > 0.0 ? bn : 1.0);
        info_.relative_residual = std::max(info_.relative_residual, rel);
        if (!(rel <= 1e-8)) throw Error(ErrorCode::solver_breakdown, "linear residual above 1e-8");
        return x;
    }

private:
    void setup(int level) {
        static const double drop[] = {1e-3, 1e-4, 1e-5};
        static const int fill[] = {10, 20, 40};
        level_ = level;
        it_.preconditioner().setDroptol(drop[level]);
        it_.preconditioner().setFillfactor(fill[level]);
        it_.setTolerance(opts_.tol);
        it_.set_restart(level == 0 ? 80 : 200);
        it_.setMaxIterations(level == 0 ? 1500 : 4000);
        it_.compute(A_);
        if (it_.info() != Eigen::Success) throw Error(ErrorCode::solver_breakdown, "ILUT factorization failed");
    }

    const SparseMatrix& A_;
    RegularOptions opts_;
    LinearSolveInfo& info_;
    bool direct_ = false;
    int level_ = 0;
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu_;
    Eigen::GMRES<SparseMatrix, Eigen::IncompleteLUT<double>> it_;
};

}  // namespace

RegularSolution solve_regular_oblique(const DiscreteProblem& problem, const Grid& grid, const RegionMasks& regions,
                                      const RegularOptions& opts) {
    const Domain& dom = *problem.domain;
    const BoundaryField& field = *problem.field;
    const std::size_t n = grid.n_active();
    const double h2 = grid.h * grid.h;
    if (opts.check_gamma) {
        for (std::size_t a = 0; a < n; ++a) {
            if (grid.is_inside(a)) continue;
            const Vec3& y = grid.foot[a];
            bool near_E = problem.nb && !problem.nb->empty() && problem.nb->dist_to_E(y) <= problem.nb->rho(1);
            double g = field.gamma(y);
            if (g < -field.eps_tan() || (!near_E && !(g > 0.0)))
                throw Error(ErrorCode::certification, "gamma <= 0 on the active boundary portion");
        }
    }
    // The kernel holds the constants. One inside node of Omega_0 is pinned; the compatibility
    // constant s and the mean shift are recovered from the pinned row and the mean condition.
    int pin = -1;
    double best = -1.0;
    for (std::size_t a = 0; a < n; ++a)
        if (regions.omega0[a] && grid.distance[a] > best) {
            best = grid.distance[a];
            pin = static_cast<int>(a);
        }
    if (pin < 0) throw Error(ErrorCode::invalid_argument, "Omega_0 contains no grid nodes");
    Triplets t;
    t.reserve(grid.n_inside * 20 + grid.n_ghost * 60);
    Eigen::VectorXd b = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
    Eigen::VectorXd c = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
    std::vector<std::pair<int, double>> st, pin_row;
    RegularSolution sol;
    double pin_rhs = 0.0;
    for (std::size_t a = 0; a < n; ++a) {
        Vec3 x = grid.position(a);
        if (grid.is_inside(a)) {
            elliptic_stencil(grid, problem.a->value(x), a, st);
            if (static_cast<int>(a) == pin) {
                pin_row = st;
                pin_rhs = h2 * problem.f(x);
                t.emplace_back(pin, pin, 1.0);
                continue;
            }
            for (auto& [col, v] : st) t.emplace_back(static_cast<int>(a), col, h2 * v);
            b[a] = h2 * problem.f(x);
            c[a] = h2;
        } else {
            const Vec3& y = grid.foot[a];
            Vec3 ell = field.ell_with_normal(y, grid.foot_normal[a]);
            GhostClosure gc = ghost_closure(grid, dom, a, ell);
            t.emplace_back(static_cast<int>(a), static_cast<int>(a), 1.0);
            for (std::size_t k = 0; k < gc.nodes.size(); ++k) t.emplace_back(static_cast<int>(a), gc.nodes[k], -gc.rho[k]);
            b[a] = gc.sigma * problem.phi(y);
            if (gc.kind == StencilKind::split) ++sol.split_rows; else ++sol.directional_rows;
        }
    }
    SparseMatrix A(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    A.setFromTriplets(t.begin(), t.end());
    SparseSolver solver(A, opts, sol.info);
    Eigen::VectorXd xb = solver.solve(b);
    Eigen::VectorXd xc = solver.solve(c);
    double rb = 0.0, rc = 0.0;
    for (auto& [col, v] : pin_row) {
        rb += h2 * v * xb[col];
        rc += h2 * v * xc[col];
    }
    double denom = rc - h2;
    if (std::abs(denom) < 1e-14 * h2) throw Error(ErrorCode::solver_breakdown, "degenerate compatibility border");
    double slack = (pin_rhs - rb) / denom;
    sol.u.resize(n);
    for (std::size_t a = 0; a < n; ++a) sol.u[a] = xb[a] + slack * xc[a];
    double shift = problem.mean_target - weighted_mean(grid, sol.u, regions.omega0);
    for (double& v : sol.u) v += shift;
    sol.slack = slack;
    return sol;
}

RegularSolution solve_dirichlet(const DiscreteProblem& problem, const Grid& grid, const GridField& boundary_values,
                                const RegularOptions& opts) {
    const std::size_t n = grid.n_active();
    const double h2 = grid.h * grid.h;
    Triplets t;
    t.reserve(grid.n_inside * 20 + grid.n_ghost);
    Eigen::VectorXd b(static_cast<Eigen::Index>(n));
    std::vector<std::pair<int, double>> st;
    for (std::size_t a = 0; a < n; ++a) {
        if (grid.is_inside(a)) {
            Vec3 x = grid.position(a);
            elliptic_stencil(grid, problem.a->value(x), a, st);
            for (auto& [c, v] : st) t.emplace_back(static_cast<int>(a), c, h2 * v);
            b[a] = h2 * problem.f(x);
        } else {
            t.emplace_back(static_cast<int>(a), static_cast<int>(a), 1.0);
            b[a] = boundary_values[a];
        }
    }
    SparseMatrix A(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    A.setFromTriplets(t.begin(), t.end());
    RegularSolution sol;
    SparseSolver solver(A, opts, sol.info);
    Eigen::VectorXd x = solver.solve(b);
    sol.u.assign(x.data(), x.data() + n);
    return sol;
}

RegularSolution solve_mixed(const DiscreteProblem& problem, const Grid& grid, const std::vector<char>& fixed,
                            const GridField& values, const RegularOptions& opts) {
    const std::size_t n = grid.n_active();
    const double h2 = grid.h * grid.h;
    bool any = false;
    for (std::size_t a = 0; a < n; ++a) any = any || (fixed[a] && !grid.is_inside(a));
    if (!any) throw Error(ErrorCode::invalid_argument, "mixed solve without prescribed ghost values");
    Triplets t;
    t.reserve(grid.n_inside * 20 + grid.n_ghost * 60);
    Eigen::VectorXd b(static_cast<Eigen::Index>(n));
    std::vector<std::pair<int, double>> st;
    RegularSolution sol;
    for (std::size_t a = 0; a < n; ++a) {
        Vec3 x = grid.position(a);
        if (grid.is_inside(a)) {
            elliptic_stencil(grid, problem.a->value(x), a, st);
            for (auto& [col, v] : st) t.emplace_back(static_cast<int>(a), col, h2 * v);
            b[a] = h2 * problem.f(x);
        } else if (fixed[a]) {
            t.emplace_back(static_cast<int>(a), static_cast<int>(a), 1.0);
            b[a] = values[a];
        } else {
            const Vec3& y = grid.foot[a];
            Vec3 ell = problem.field->ell_with_normal(y, grid.foot_normal[a]);
            GhostClosure gc = ghost_closure(grid, *problem.domain, a, ell);
            t.emplace_back(static_cast<int>(a), static_cast<int>(a), 1.0);
            for (std::size_t k = 0; k < gc.nodes.size(); ++k) t.emplace_back(static_cast<int>(a), gc.nodes[k], -gc.rho[k]);
            b[a] = gc.sigma * problem.phi(y);
            if (gc.kind == StencilKind::split) ++sol.split_rows; else ++sol.directional_rows;
        }
    }
    SparseMatrix A(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    A.setFromTriplets(t.begin(), t.end());
    SparseSolver solver(A, opts, sol.info);
    Eigen::VectorXd x = solver.solve(b);
    sol.u.assign(x.data(), x.data() + n);
    return sol;
}

ResidualReport equation_residuals(const DiscreteProblem& problem, const Grid& grid, const GridField& u,
                                  double source_shift) {
    ResidualReport r;
    r.source_shift = source_shift;
    std::vector<std::pair<int, double>> st;
    double fmax = 0.0, pmax = 0.0;
    for (std::size_t a = 0; a < grid.n_active(); ++a) {
        Vec3 x = grid.position(a);
        if (grid.is_inside(a)) {
            elliptic_stencil(grid, problem.a->value(x), a, st);
            double lu = 0.0;
            for (auto& [c, v] : st) lu += v * u[c];
            double f = problem.f(x);
            r.interior_max = std::max(r.interior_max, std::abs(lu - f - source_shift));
            fmax = std::max(fmax, std::abs(f));
        } else {
            const Vec3& y = grid.foot[a];
            const Vec3& nu = grid.foot_normal[a];
            BoundaryRow row = oblique_row(grid, *problem.domain, y, nu, problem.field->ell_with_normal(y, nu));
            double phi = problem.phi(y);
            r.boundary_max = std::max(r.boundary_max, std::abs(row.apply(u) - phi));
            pmax = std::max(pmax, std::abs(phi));
        }
    }
    r.interior_rel = r.interior_max / std::max(fmax, 1.0);
    r.boundary_rel = r.boundary_max / std::max(pmax, 1.0);
    return r;
}

}  // namespace poincare
