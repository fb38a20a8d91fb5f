#include "poincare/norms.hpp"

#include <cmath>

namespace poincare {

NodeDerivatives node_derivatives(const Grid& grid, const GridField& u, const std::vector<char>& mask) {
    NodeDerivatives d;
    d.grad.assign(grid.n_active(), Vec3::Zero());
    d.hess.assign(grid.n_active(), Mat3::Zero());
    for (std::size_t a = 0; a < grid.n_active(); ++a) {
        if (!mask[a]) continue;
        d.grad[a] = grid_gradient(grid, u, a);
        d.hess[a] = grid_hessian(grid, u, a);
    }
    return d;
}

double lq_norm(const Grid& grid, const GridField& v, double q, const std::vector<char>& region) {
    double s = 0.0;
    bool any = false;
    for (std::size_t a = 0; a < grid.n_active(); ++a) {
        if (!region[a] || grid.weight[a] <= 0.0) continue;
        any = true;
        s += grid.weight[a] * std::pow(std::abs(v[a]), q);
    }
    if (!any) throw Error(ErrorCode::invalid_argument, "norm over an empty region");
    return std::pow(s, 1.0 / q);
}

double sobolev_norm(const Grid& grid, const GridField& u, const NodeDerivatives& du, int k, double q,
                    const std::vector<char>& region) {
    if (k < 0 || k > 2) throw Error(ErrorCode::invalid_argument, "Sobolev order must be 0, 1 or 2");
    double s = 0.0;
    bool any = false;
    for (std::size_t a = 0; a < grid.n_active(); ++a) {
        if (!region[a] || grid.weight[a] <= 0.0) continue;
        any = true;
        double acc = std::pow(std::abs(u[a]), q);
        if (k >= 1)
            for (int d = 0; d < 3; ++d) acc += std::pow(std::abs(du.grad[a][d]), q);
        if (k >= 2) {
            const Mat3& H = du.hess[a];
            for (int d = 0; d < 3; ++d)
                for (int e = d; e < 3; ++e) acc += std::pow(std::abs(H(d, e)), q);
        }
        s += grid.weight[a] * acc;
    }
    if (!any) throw Error(ErrorCode::invalid_argument, "norm over an empty region");
    return std::pow(s, 1.0 / q);
}

double sobolev_norm(const Grid& grid, const GridField& u, int k, double q, const std::vector<char>& region) {
    NodeDerivatives du;
    if (k > 0) du = node_derivatives(grid, u, region);
    return sobolev_norm(grid, u, du, k, q, region);
}

BoundaryQuadrature boundary_quadrature(const Domain& domain, std::size_t n) {
    BoundarySamples s = domain.sample_boundary(n);
    BoundaryQuadrature bq;
    bq.points = s.points;
    bq.normals = s.normals;
    bq.weights = s.weights;
    for (const Vec3& nu : s.normals) {
        Vec3 e = std::abs(nu.x()) < 0.9 ? Vec3::UnitX() : Vec3::UnitY();
        Vec3 a = (e - e.dot(nu) * nu).normalized();
        bq.t1.push_back(a);
        bq.t2.push_back(nu.cross(a));
    }
    return bq;
}

Vec3 surface_gradient(const Domain& domain, const ScalarFn& phi, const Vec3& y, const Vec3& t1, const Vec3& t2,
                      double step) {
    Vec3 g = Vec3::Zero();
    for (const Vec3* t : {&t1, &t2}) {
        Vec3 p = domain.project(y + step * *t).point;
        Vec3 m = domain.project(y - step * *t).point;
        double len = (p - m).dot(*t);
        g += (phi(p) - phi(m)) / len * *t;
    }
    return g;
}

double gagliardo_seminorm(const BoundaryQuadrature& bq, const std::vector<Eigen::VectorXd>& values, double s,
                          double q, const std::vector<char>* mask, const std::vector<double>* self_gradient) {
    const std::size_t n = bq.size();
    std::size_t active = 0;
    for (std::size_t i = 0; i < n; ++i) active += (!mask || (*mask)[i]) ? 1 : 0;
    if (active < 2) throw Error(ErrorCode::invalid_argument, "fractional norm needs at least two quadrature points");
    const double expo = 2.0 + s * q;  // (n - 1) + s q with n = 3
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        if (mask && !(*mask)[i]) continue;
        for (std::size_t j = i + 1; j < n; ++j) {
            if (mask && !(*mask)[j]) continue;
            double dist2 = (bq.points[i] - bq.points[j]).squaredNorm();
            double diff = (values[i] - values[j]).norm();
            if (diff == 0.0) continue;
            sum += 2.0 * bq.weights[i] * bq.weights[j] * std::pow(diff, q) / std::pow(dist2, 0.5 * expo);
        }
    }
    if (self_gradient) {
        // Each point's own cell: integral of |g.z|^q / |z|^{2+sq} over a disc of equal area.
        const double Aq = 2.0 * std::sqrt(M_PI) * std::tgamma(0.5 * (q + 1.0)) / std::tgamma(0.5 * q + 1.0);
        const double e = q * (1.0 - s);
        for (std::size_t i = 0; i < n; ++i) {
            if (mask && !(*mask)[i]) continue;
            double delta = std::sqrt(bq.weights[i] / M_PI);
            sum += bq.weights[i] * std::pow((*self_gradient)[i], q) * Aq * std::pow(delta, e) / e;
        }
    }
    return std::pow(sum, 1.0 / q);
}

namespace {

double boundary_lq(const BoundaryQuadrature& bq, const std::vector<double>& v, double q,
                   const std::vector<char>* mask) {
    double s = 0.0;
    for (std::size_t i = 0; i < bq.size(); ++i)
        if (!mask || (*mask)[i]) s += bq.weights[i] * std::pow(std::abs(v[i]), q);
    return std::pow(s, 1.0 / q);
}

}  // namespace

double fractional_boundary_norm(const Domain& domain, const BoundaryQuadrature& bq, const ScalarFn& phi, double s,
                                double q, const std::vector<char>* mask) {
    if (!(s > 0.0 && s < 2.0) || std::abs(s - 1.0) < 1e-12)
        throw Error(ErrorCode::invalid_argument, "fractional order must lie in (0,1) or (1,2)");
    const std::size_t n = bq.size();
    std::vector<double> vals(n, 0.0);
    std::vector<Vec3> grads(n, Vec3::Zero());
    for (std::size_t i = 0; i < n; ++i) {
        if (mask && !(*mask)[i]) continue;
        vals[i] = phi(bq.points[i]);
        grads[i] = surface_gradient(domain, phi, bq.points[i], bq.t1[i], bq.t2[i]);
    }
    double lq = boundary_lq(bq, vals, q, mask);
    if (s < 1.0) {
        std::vector<Eigen::VectorXd> v(n, Eigen::VectorXd(1));
        std::vector<double> sg(n);
        for (std::size_t i = 0; i < n; ++i) {
            v[i](0) = vals[i];
            sg[i] = grads[i].norm();
        }
        double semi = gagliardo_seminorm(bq, v, s, q, mask, &sg);
        return lq + semi;
    }
    // s in (1,2): L^q of phi and of its surface gradient, plus the (s-1)-seminorm of the gradient.
    std::vector<Eigen::VectorXd> v(n, Eigen::VectorXd(3));
    std::vector<double> gl(n), sg(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        v[i] = grads[i];
        gl[i] = grads[i].norm();
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (mask && !(*mask)[i]) continue;
        // Frobenius size of the tangential derivative of the surface gradient.
        const double d = 1e-3;
        double acc = 0.0;
        for (const Vec3* t : {&bq.t1[i], &bq.t2[i]}) {
            Vec3 p = domain.project(bq.points[i] + d * *t).point;
            Vec3 m = domain.project(bq.points[i] - d * *t).point;
            Projection pp = domain.project(p), pm = domain.project(m);
            Vec3 ap = (std::abs(pp.normal.x()) < 0.9 ? Vec3::UnitX() : Vec3::UnitY());
            Vec3 am = (std::abs(pm.normal.x()) < 0.9 ? Vec3::UnitX() : Vec3::UnitY());
            Vec3 t1p = (ap - ap.dot(pp.normal) * pp.normal).normalized(), t2p = pp.normal.cross(t1p);
            Vec3 t1m = (am - am.dot(pm.normal) * pm.normal).normalized(), t2m = pm.normal.cross(t1m);
            Vec3 gp = surface_gradient(domain, phi, p, t1p, t2p);
            Vec3 gm = surface_gradient(domain, phi, m, t1m, t2m);
            acc += ((gp - gm) / (p - m).norm()).squaredNorm();
        }
        sg[i] = std::sqrt(acc);
    }
    double grad_lq = boundary_lq(bq, gl, q, mask);
    double semi = gagliardo_seminorm(bq, v, s - 1.0, q, mask, &sg);
    return lq + grad_lq + semi;
}

double f_norm(const Grid& grid, const GridField& f, const GridField& df_dL, double q,
              const std::vector<char>& omega, const std::vector<char>& n) {
    double a = lq_norm(grid, f, q, omega);
    bool any = false;
    for (std::size_t i = 0; i < n.size(); ++i) any = any || (n[i] && grid.weight[i] > 0.0);
    double b = any ? lq_norm(grid, df_dL, q, n) : 0.0;
    return a + b;
}

double phi_norm(const Domain& domain, const BoundaryQuadrature& bq, const ScalarFn& phi, double q,
                const std::vector<char>& in_n) {
    double a = fractional_boundary_norm(domain, bq, phi, 1.0 - 1.0 / q, q, nullptr);
    std::size_t cnt = 0;
    for (char c : in_n) cnt += c ? 1 : 0;
    double b = cnt >= 2 ? fractional_boundary_norm(domain, bq, phi, 2.0 - 1.0 / q, q, &in_n) : 0.0;
    return a + b;
}

double qprime(double p, double q, int n) {
    if (!(p > 1.0) || !(q > 1.0) || !std::isfinite(q)) throw Error(ErrorCode::invalid_argument, "exponents must be in (1, inf)");
    if (p > q) throw Error(ErrorCode::invalid_argument, "qprime requires p <= q");
    if (n < 3) throw Error(ErrorCode::invalid_argument, "qprime requires n >= 3");
    if (p >= n) return q;
    return std::min(q, n * p / (n - p));
}

std::vector<double> qprime_ladder(double p, double q, int n) {
    std::vector<double> ladder;
    double cur = qprime(p, q, n);
    ladder.push_back(cur);
    while (cur < q) {
        cur = qprime(cur, q, n);
        ladder.push_back(cur);
        if (ladder.size() > 64) throw Error(ErrorCode::non_convergence, "q' ladder does not reach q");
    }
    return ladder;
}

}  // namespace poincare
