#include <cmath>

#include <Eigen/QR>

#include "poincare/grid.hpp"

namespace poincare {

namespace {

// Basis in scaled offsets s = (x - p) / h.
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

bool try_fit(const Grid& grid, const Vec3& p, int lo, int hi, FitStencil& out) {
    Vec3 c = grid.lattice_coords(p);
    int ci = static_cast<int>(std::floor(c.x()));
    int cj = static_cast<int>(std::floor(c.y()));
    int ck = static_cast<int>(std::floor(c.z()));
    std::vector<int> nodes;
    std::vector<Vec3> offs;
    for (int k = ck + lo; k <= ck + hi; ++k)
        for (int j = cj + lo; j <= cj + hi; ++j)
            for (int i = ci + lo; i <= ci + hi; ++i) {
                int a = grid.active_at(i, j, k);
                if (a < 0) continue;
                nodes.push_back(a);
                offs.push_back((grid.lattice_position(i, j, k) - p) / grid.h);
            }
    const int m = static_cast<int>(nodes.size());
    if (m < 14) return false;
    Eigen::MatrixXd A(m, 10);
    Eigen::VectorXd w(m);
    double row[10];
    for (int r = 0; r < m; ++r) {
        basis(offs[r], row);
        w[r] = 1.0 / (1.0 + offs[r].squaredNorm());
        for (int c2 = 0; c2 < 10; ++c2) A(r, c2) = w[r] * row[c2];
    }
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(A);
    qr.setThreshold(1e-10);
    if (qr.rank() < 10) return false;
    // coef = (W A)^+ W
    Eigen::MatrixXd pinv = qr.solve(Eigen::MatrixXd::Identity(m, m));
    for (int r = 0; r < m; ++r) pinv.col(r) *= w[r];
    const double h = grid.h;
    for (int d = 1; d <= 3; ++d) pinv.row(d) /= h;
    for (int d = 4; d < 10; ++d) pinv.row(d) /= h * h;
    out.nodes = std::move(nodes);
    out.coef = std::move(pinv);
    return true;
}

}  // namespace

double FitStencil::value(const GridField& u) const {
    double s = 0.0;
    for (std::size_t r = 0; r < nodes.size(); ++r) s += coef(0, r) * u[nodes[r]];
    return s;
}

Vec3 FitStencil::gradient(const GridField& u) const {
    Vec3 g = Vec3::Zero();
    for (std::size_t r = 0; r < nodes.size(); ++r)
        for (int d = 0; d < 3; ++d) g[d] += coef(1 + d, r) * u[nodes[r]];
    return g;
}

Mat3 FitStencil::hessian(const GridField& u) const {
    double c[6] = {0, 0, 0, 0, 0, 0};
    for (std::size_t r = 0; r < nodes.size(); ++r)
        for (int d = 0; d < 6; ++d) c[d] += coef(4 + d, r) * u[nodes[r]];
    Mat3 H;
    H << c[0], c[3], c[4], c[3], c[1], c[5], c[4], c[5], c[2];
    return H;
}

FitStencil quadratic_fit(const Grid& grid, const Vec3& p) {
    FitStencil f;
    if (try_fit(grid, p, -1, 2, f)) return f;
    if (try_fit(grid, p, -2, 3, f)) return f;
    if (try_fit(grid, p, -3, 4, f)) return f;
    throw Error(ErrorCode::degenerate_boundary, "quadratic fit is rank deficient near the given point");
}

GridSampler::GridSampler(const Grid& grid, const GridField& u) : grid_(&grid), u_(&u), cache_(grid.n_active()) {}

const GridSampler::Jet& GridSampler::node_jet(std::size_t a) const {
    if (!cache_[a]) {
        Vec3 x = grid_->position(a);
        FitStencil f = quadratic_fit(*grid_, x);
        cache_[a] = Jet{(*u_)[a], f.gradient(*u_), f.hessian(*u_)};
    }
    return *cache_[a];
}

GridSampler::Jet GridSampler::at(const Vec3& x) const {
    const Grid& g = *grid_;
    Vec3 c = g.lattice_coords(x);
    int ci = static_cast<int>(std::floor(c.x()));
    int cj = static_cast<int>(std::floor(c.y()));
    int ck = static_cast<int>(std::floor(c.z()));
    Vec3 f(c.x() - ci, c.y() - cj, c.z() - ck);
    Jet out{0.0, Vec3::Zero(), Mat3::Zero()};
    double wsum = 0.0;
    for (int s = 0; s < 8; ++s) {
        int di = s & 1, dj = (s >> 1) & 1, dk = (s >> 2) & 1;
        int a = g.active_at(ci + di, cj + dj, ck + dk);
        if (a < 0) continue;
        double w = (di ? f.x() : 1.0 - f.x()) * (dj ? f.y() : 1.0 - f.y()) * (dk ? f.z() : 1.0 - f.z());
        if (w <= 0.0) continue;
        const Jet& J = node_jet(a);
        Vec3 d = x - g.position(a);
        out.value += w * (J.value + J.gradient.dot(d) + 0.5 * d.dot(J.hessian * d));
        out.gradient += w * (J.gradient + J.hessian * d);
        out.hessian += w * J.hessian;
        wsum += w;
    }
    if (wsum < 1e-12) {
        FitStencil fit = quadratic_fit(g, x);
        return Jet{fit.value(*u_), fit.gradient(*u_), fit.hessian(*u_)};
    }
    out.value /= wsum;
    out.gradient /= wsum;
    out.hessian /= wsum;
    return out;
}

Vec3 grid_gradient(const Grid& grid, const GridField& u, std::size_t a) {
    Vec3 g;
    for (int d = 0; d < 3; ++d) {
        int o[3] = {0, 0, 0};
        o[d] = 1;
        int p = grid.neighbor(a, o[0], o[1], o[2]);
        int m = grid.neighbor(a, -o[0], -o[1], -o[2]);
        if (p < 0 || m < 0) return quadratic_fit(grid, grid.position(a)).gradient(u);
        g[d] = (u[p] - u[m]) / (2.0 * grid.h);
    }
    return g;
}

Mat3 grid_hessian(const Grid& grid, const GridField& u, std::size_t a) {
    const double h2 = grid.h * grid.h;
    Mat3 H;
    for (int d = 0; d < 3; ++d) {
        int o[3] = {0, 0, 0};
        o[d] = 1;
        int p = grid.neighbor(a, o[0], o[1], o[2]);
        int m = grid.neighbor(a, -o[0], -o[1], -o[2]);
        if (p < 0 || m < 0) return quadratic_fit(grid, grid.position(a)).hessian(u);
        H(d, d) = (u[p] - 2.0 * u[a] + u[m]) / h2;
    }
    for (int d = 0; d < 3; ++d)
        for (int e = d + 1; e < 3; ++e) {
            int o1[3] = {0, 0, 0};
            o1[d] = 1;
            o1[e] = 1;
            int o2[3] = {0, 0, 0};
            o2[d] = 1;
            o2[e] = -1;
            int pp = grid.neighbor(a, o1[0], o1[1], o1[2]);
            int mm = grid.neighbor(a, -o1[0], -o1[1], -o1[2]);
            int pm = grid.neighbor(a, o2[0], o2[1], o2[2]);
            int mp = grid.neighbor(a, -o2[0], -o2[1], -o2[2]);
            if (pp < 0 || mm < 0 || pm < 0 || mp < 0) return quadratic_fit(grid, grid.position(a)).hessian(u);
            H(d, e) = H(e, d) = (u[pp] + u[mm] - u[pm] - u[mp]) / (4.0 * h2);
        }
    return H;
}

}  // namespace poincare
