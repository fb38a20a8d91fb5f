#include "poincare/operators.hpp"

#include <cmath>

#include <Eigen/LU>

namespace poincare {

void elliptic_stencil(const Grid& grid, const Mat3& a, std::size_t node, std::vector<std::pair<int, double>>& out) {
    out.clear();
    const double h2 = grid.h * grid.h;
    auto add = [&](int di, int dj, int dk, double c) {
        int nb = grid.neighbor(node, di, dj, dk);
        if (nb < 0) throw Error(ErrorCode::degenerate_boundary, "incomplete second-difference stencil");
        out.emplace_back(nb, c);
    };
    double diag = 0.0;
    for (int d = 0; d < 3; ++d) {
        int o[3] = {0, 0, 0};
        o[d] = 1;
        double c = a(d, d) / h2;
        add(o[0], o[1], o[2], c);
        add(-o[0], -o[1], -o[2], c);
        diag -= 2.0 * c;
    }
    for (int d = 0; d < 3; ++d)
        for (int e = d + 1; e < 3; ++e) {
            double c = 2.0 * a(d, e) / (4.0 * h2);
            if (c == 0.0) continue;
            int p[3] = {0, 0, 0};
            p[d] = 1;
            p[e] = 1;
            int m[3] = {0, 0, 0};
            m[d] = 1;
            m[e] = -1;
            add(p[0], p[1], p[2], c);
            add(-p[0], -p[1], -p[2], c);
            add(m[0], m[1], m[2], -c);
            add(-m[0], -m[1], -m[2], -c);
        }
    out.emplace_back(static_cast<int>(node), diag);
}

SparseMatrix assemble_elliptic(const Grid& grid, const Coefficients& a) {
    const std::size_t n = grid.n_active();
    Triplets t;
    t.reserve(grid.n_inside * 19);
    std::vector<std::pair<int, double>> st;
    for (std::size_t i = 0; i < n; ++i) {
        if (!grid.is_inside(i)) continue;
        elliptic_stencil(grid, a.value(grid.position(i)), i, st);
        for (auto& [c, v] : st) t.emplace_back(static_cast<int>(i), c, v);
    }
    SparseMatrix A(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    A.setFromTriplets(t.begin(), t.end());
    return A;
}

GridField apply(const SparseMatrix& A, const GridField& u) {
    Eigen::Map<const Eigen::VectorXd> x(u.data(), static_cast<Eigen::Index>(u.size()));
    Eigen::VectorXd y = A * x;
    return GridField(y.data(), y.data() + y.size());
}

double BoundaryRow::apply(const GridField& u) const {
    double s = 0.0;
    for (std::size_t i = 0; i < nodes.size(); ++i) s += coef[i] * u[nodes[i]];
    return s;
}

namespace {

// Sample points and weights of the directional functional at y.
struct PointFunctional {
    std::vector<Vec3> points;
    std::vector<double> weights;
    StencilKind kind = StencilKind::directional;
};

PointFunctional boundary_functional(const Domain& domain, double s, const Vec3& y, const Vec3& nu,
                                    const Vec3& ell) {
    PointFunctional pf;
    double g = ell.dot(nu);
    Vec3 p1 = y - s * ell, p2 = y - 2.0 * s * ell;
    if (domain.level(p1) < 0.0 && domain.level(p2) < 0.0) {
        pf.points = {y, p1, p2};
        pf.weights = {1.5 / s, -2.0 / s, 0.5 / s};
        return pf;
    }
    pf.kind = StencilKind::split;
    Vec3 tau = ell - g * nu;
    double tn = tau.norm();
    if (tn > 1e-14) {
        Vec3 th = tau / tn;
        Vec3 qp = domain.project(y + s * th).point;
        Vec3 qm = domain.project(y - s * th).point;
        double len = (qp - qm).dot(th);
        pf.points.push_back(qp);
        pf.weights.push_back(tn / len);
        pf.points.push_back(qm);
        pf.weights.push_back(-tn / len);
    }
    if (std::abs(g) > 0.0) {
        pf.points.push_back(y);
        pf.weights.push_back(g * 1.5 / s);
        pf.points.push_back(y - s * nu);
        pf.weights.push_back(-g * 2.0 / s);
        pf.points.push_back(y - 2.0 * s * nu);
        pf.weights.push_back(g * 0.5 / s);
    }
    return pf;
}

void basis(const Vec3& s, double* out) {
    out[0] = 1.0;
    out[1] = s.x();
    out[2] = s.y();
    out[3] = s.z();
    out[4] = 0.5 * s.x() * s.x();
    out[5] = 0.5 * s.y() * s.y();
    out[6] = 0.5 * s.z() * s.z();
    out[7] = s.x() * s.y();
    out[8] = s.x() * s.z();
    out[9] = s.y() * s.z();
}

}  // namespace

BoundaryRow oblique_row(const Grid& grid, const Domain& domain, const Vec3& y, const Vec3& nu, const Vec3& ell) {
    BoundaryRow row;
    row.point = y;
    row.normal = nu;
    row.direction = ell;
    PointFunctional pf = boundary_functional(domain, grid.h, y, nu, ell);
    row.kind = pf.kind;
    std::vector<double> acc;
    std::vector<int> slot(grid.n_active(), -1);
    for (std::size_t k = 0; k < pf.points.size(); ++k) {
        FitStencil f = quadratic_fit(grid, pf.points[k]);
        for (std::size_t r = 0; r < f.nodes.size(); ++r) {
            int nd = f.nodes[r];
            if (slot[nd] < 0) {
                slot[nd] = static_cast<int>(row.nodes.size());
                row.nodes.push_back(nd);
                row.coef.push_back(0.0);
            }
            row.coef[slot[nd]] += pf.weights[k] * f.coef(0, r);
        }
    }
    return row;
}

std::vector<BoundaryRow> assemble_oblique_bc(const Grid& grid, const BoundaryField& field) {
    std::vector<BoundaryRow> rows;
    rows.reserve(grid.n_ghost);
    for (std::size_t a = 0; a < grid.n_active(); ++a) {
        if (grid.is_inside(a)) continue;
        const Vec3& y = grid.foot[a];
        const Vec3& nu = grid.foot_normal[a];
        rows.push_back(oblique_row(grid, field.domain(), y, nu, field.ell_with_normal(y, nu)));
    }
    return rows;
}

GhostClosure ghost_closure(const Grid& grid, const Domain& domain, std::size_t ghost, const Vec3& ell) {
    const double h = grid.h;
    const Vec3& y = grid.foot[ghost];
    const Vec3& nu = grid.foot_normal[ghost];
    PointFunctional pf = boundary_functional(domain, h, y, nu, ell);
    // the constraint is ell . grad p(y), exact on the fitted polynomial
    double b[10], row[10];
    std::fill(b, b + 10, 0.0);
    for (int c = 0; c < 3; ++c) b[1 + c] = ell[c];
    Vec3 cy = grid.lattice_coords(y);
    int ci = static_cast<int>(std::floor(cy.x()));
    int cj = static_cast<int>(std::floor(cy.y()));
    int ck = static_cast<int>(std::floor(cy.z()));
    for (int lo = -2; lo >= -4; --lo) {
        int hi = 1 - lo;
        std::vector<int> nodes;
        std::vector<Vec3> offs;
        for (int k = ck + lo; k <= ck + hi; ++k)
            for (int j = cj + lo; j <= cj + hi; ++j)
                for (int i = ci + lo; i <= ci + hi; ++i) {
                    int a = grid.active_at(i, j, k);
                    if (a < 0 || !grid.is_inside(a)) continue;
                    nodes.push_back(a);
                    offs.push_back((grid.lattice_position(i, j, k) - y) / h);
                }
        const int m = static_cast<int>(nodes.size());
        if (m < 12) continue;
        Eigen::MatrixXd AtW(10, m);
        Eigen::Matrix<double, 11, 11> K = Eigen::Matrix<double, 11, 11>::Zero();
        for (int r = 0; r < m; ++r) {
            basis(offs[r], row);
            double w = 1.0 / (1.0 + offs[r].squaredNorm());
            for (int c = 0; c < 10; ++c) AtW(c, r) = w * row[c];
            for (int c = 0; c < 10; ++c)
                for (int d = 0; d < 10; ++d) K(c, d) += w * row[c] * row[d];
        }
        for (int c = 0; c < 10; ++c) K(c, 10) = K(10, c) = b[c];
        Eigen::FullPivLU<Eigen::Matrix<double, 11, 11>> lu(K);
        lu.setThreshold(1e-11);
        if (lu.rank() < 11) continue;
        Eigen::Matrix<double, 11, 11> Ki = lu.inverse();
        double eg[10];
        basis((grid.position(ghost) - y) / h, eg);
        Eigen::Matrix<double, 1, 10> e;
        for (int c = 0; c < 10; ++c) e(c) = eg[c];
        Eigen::RowVectorXd rho = e * Ki.topLeftCorner<10, 10>() * AtW;
        GhostClosure gc;
        gc.nodes = std::move(nodes);
        gc.rho.assign(rho.data(), rho.data() + rho.size());
        gc.sigma = h * (e * Ki.block<10, 1>(0, 10))(0, 0);
        gc.kind = pf.kind;
        return gc;
    }
    throw Error(ErrorCode::degenerate_boundary, "ghost closure is rank deficient");
}

GridField directional_derivative(const Grid& grid, const GridField& u, const DirectionField& L,
                                 const std::vector<char>& mask) {
    GridField out(grid.n_active(), 0.0);
    for (std::size_t a = 0; a < grid.n_active(); ++a) {
        if (!mask[a]) continue;
        Vec3 x = grid.position(a);
        Vec3 l;
        try {
            l = L.value(x);
        } catch (const Error&) {
            throw Error(ErrorCode::outside_collar, "directional derivative: L unavailable on the masked region");
        }
        out[a] = l.dot(grid_gradient(grid, u, a));
    }
    return out;
}

double derived_dirichlet_source(const Vec3& x, const Vec3& grad_u, const Mat3& hess_u, const Vec3& grad_f,
                                const Coefficients& a, const DirectionField& L, double d) {
    Vec3 l = L.value(x);
    Mat3 A = a.value(x);
    Mat3 DL;  // DL(k, i) = d L^k / d x_i
    Vec3 Lp[3], Lm[3];
    for (int i = 0; i < 3; ++i) {
        Vec3 e = Vec3::Zero();
        e[i] = d;
        Lp[i] = L.value(x + e);
        Lm[i] = L.value(x - e);
        DL.col(i) = (Lp[i] - Lm[i]) / (2 * d);
    }
    // sum_ij a_ij D_ij L^k
    Vec3 aD2L = Vec3::Zero();
    for (int i = 0; i < 3; ++i) aD2L += A(i, i) * (Lp[i] - 2.0 * l + Lm[i]) / (d * d);
    for (int i = 0; i < 3; ++i)
        for (int j = i + 1; j < 3; ++j) {
            if (A(i, j) == 0.0) continue;
            Vec3 ei = Vec3::Zero(), ej = Vec3::Zero();
            ei[i] = d;
            ej[j] = d;
            Vec3 mixed = (L.value(x + ei + ej) - L.value(x + ei - ej) - L.value(x - ei + ej) + L.value(x - ei - ej)) /
                         (4 * d * d);
            aD2L += 2.0 * A(i, j) * mixed;
        }
    double t1 = grad_f.dot(l);
    double t2 = 0.0;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            for (int k = 0; k < 3; ++k) t2 += A(i, j) * DL(k, j) * hess_u(k, i);
    double t3 = aD2L.dot(grad_u);
    double t4 = (a.derivative(x, l).cwiseProduct(hess_u)).sum();
    return t1 + 2.0 * t2 + t3 - t4;
}

GridField derived_dirichlet_rhs(const Grid& grid, const GridField& u, const DiscreteProblem& problem,
                                const std::vector<char>& mask) {
    GridField out(grid.n_active(), 0.0);
    for (std::size_t a = 0; a < grid.n_active(); ++a) {
        if (!mask[a]) continue;
        Vec3 x = grid.position(a);
        Vec3 gf;
        if (problem.grad_f) {
            gf = problem.grad_f(x);
        } else {
            const double d = 1e-4;
            for (int k = 0; k < 3; ++k) {
                Vec3 e = Vec3::Zero();
                e[k] = d;
                gf[k] = (problem.f(x + e) - problem.f(x - e)) / (2 * d);
            }
        }
        try {
            out[a] = derived_dirichlet_source(x, grid_gradient(grid, u, a), grid_hessian(grid, u, a), gf, *problem.a,
                                              *problem.L);
        } catch (const Error&) {
            throw Error(ErrorCode::outside_collar, "second differences of L unavailable on the masked region");
        }
    }
    return out;
}

}  // namespace poincare
