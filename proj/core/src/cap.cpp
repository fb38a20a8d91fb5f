#include "poincare/cap.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace poincare {

namespace {

constexpr double nan_v = std::numeric_limits<double>::quiet_NaN();

// Offsets of the 19-point stencil (center first).
struct Offsets {
    std::vector<std::array<int, 3>> o;
    Offsets() {
        o.push_back({0, 0, 0});
        for (int dk = -1; dk <= 1; ++dk)
            for (int dj = -1; dj <= 1; ++dj)
                for (int di = -1; di <= 1; ++di) {
                    int nz = (di != 0) + (dj != 0) + (dk != 0);
                    if (nz == 1 || nz == 2) o.push_back({di, dj, dk});
                }
    }
};
const Offsets& stencil() {
    static const Offsets s;
    return s;
}

bool in_range(const Tube& t, int i, int j, int k) {
    return i >= 0 && j >= 0 && k >= 0 && i < t.na() && j < t.na() && k < t.nxi;
}

bool full_stencil(const Tube& t, int i, int j, int k) {
    for (const auto& d : stencil().o) {
        int ii = i + d[0], jj = j + d[1], kk = k + d[2];
        if (!in_range(t, ii, jj, kk) || !t.valid[t.idx(ii, jj, kk)]) return false;
    }
    return true;
}

void unpack(const Tube& t, std::size_t id, int& i, int& j, int& k) {
    const std::size_t na = static_cast<std::size_t>(t.na());
    i = static_cast<int>(id % na);
    j = static_cast<int>((id / na) % na);
    k = static_cast<int>(id / (na * na));
}

// Lattice derivatives of a field with a full stencil at (i, j, k).
Vec3 lat_grad(const Tube& t, const std::vector<double>& f, int i, int j, int k) {
    const double h = t.h;
    return Vec3((f[t.idx(i + 1, j, k)] - f[t.idx(i - 1, j, k)]) / (2 * h),
                (f[t.idx(i, j + 1, k)] - f[t.idx(i, j - 1, k)]) / (2 * h),
                (f[t.idx(i, j, k + 1)] - f[t.idx(i, j, k - 1)]) / (2 * h));
}

Mat3 lat_hess(const Tube& t, const std::vector<double>& f, int i, int j, int k) {
    const double h2 = t.h * t.h;
    auto v = [&](int di, int dj, int dk) { return f[t.idx(i + di, j + dj, k + dk)]; };
    double c = v(0, 0, 0);
    Mat3 H;
    H(0, 0) = (v(1, 0, 0) - 2 * c + v(-1, 0, 0)) / h2;
    H(1, 1) = (v(0, 1, 0) - 2 * c + v(0, -1, 0)) / h2;
    H(2, 2) = (v(0, 0, 1) - 2 * c + v(0, 0, -1)) / h2;
    H(0, 1) = H(1, 0) = (v(1, 1, 0) - v(1, -1, 0) - v(-1, 1, 0) + v(-1, -1, 0)) / (4 * h2);
    H(0, 2) = H(2, 0) = (v(1, 0, 1) - v(1, 0, -1) - v(-1, 0, 1) + v(-1, 0, -1)) / (4 * h2);
    H(1, 2) = H(2, 1) = (v(0, 1, 1) - v(0, 1, -1) - v(0, -1, 1) + v(0, -1, -1)) / (4 * h2);
    return H;
}

// x'-Hessian (aa, bb, ab) of a field at slice k; missing neighbors read as 0.
Eigen::Vector3d slice_hess(const Tube& t, const std::vector<double>& f, int i, int j, int k) {
    const double h2 = t.h * t.h;
    auto v = [&](int di, int dj) {
        int ii = i + di, jj = j + dj;
        if (!in_range(t, ii, jj, k)) return 0.0;
        double x = f[t.idx(ii, jj, k)];
        return std::isfinite(x) ? x : 0.0;
    };
    double c = v(0, 0);
    return Eigen::Vector3d((v(1, 0) - 2 * c + v(-1, 0)) / h2, (v(0, 1) - 2 * c + v(0, -1)) / h2,
                           (v(1, 1) - v(1, -1) - v(-1, 1) + v(-1, -1)) / (4 * h2));
}

double contract_ab(const Mat3& P, const Eigen::Vector3d& w) {
    return P(0, 0) * w[0] + P(1, 1) * w[1] + 2.0 * P(0, 1) * w[2];
}

bool region_contains(const Tube& t, CapCase kind, double T, int i, int j, int k) {
    double rho = std::hypot(t.a(i), t.a(j)) / t.r;
    double z = (t.xi(k) - T) / (2.5 * t.r);
    if (kind == CapCase::B && z > 0.0) return rho < 1.0;
    return std::pow(rho, 4) + std::pow(z, 4) < 1.0;
}

// Differences of mu on the lattice; the analytic derivatives are not resolved when h ~ r/4.
void lattice_mu(const Tube& t, const MuCutoff& mu, double a, double b, Eigen::Vector2d& g, Eigen::Matrix2d& H) {
    const double h = t.h;
    auto m = [&](int di, int dj) { return mu.value(a + di * h, b + dj * h); };
    double c = m(0, 0);
    g = Eigen::Vector2d((m(1, 0) - m(-1, 0)) / (2 * h), (m(0, 1) - m(0, -1)) / (2 * h));
    H(0, 0) = (m(1, 0) - 2 * c + m(-1, 0)) / (h * h);
    H(1, 1) = (m(0, 1) - 2 * c + m(0, -1)) / (h * h);
    H(0, 1) = H(1, 0) = (m(1, 1) - m(1, -1) - m(-1, 1) + m(-1, -1)) / (4 * h * h);
}

}  // namespace

// ------------------------------------------------------------------ operator

TubeOperator transform_operator(const Tube& tube, const Coefficients& a) {
    const std::size_t n = tube.size();
    const double h = tube.h;
    TubeOperator op;
    op.tube = &tube;
    op.G.assign(n, Mat3::Zero());
    op.P.assign(n, Mat3::Zero());
    op.beta.assign(n, Vec3::Zero());
    op.Q.assign(n, Vec3::Zero());
    op.J.assign(n, Mat3::Constant(nan_v));
    op.X2.assign(n, {});
    op.det.assign(n, nan_v);
    op.ok.assign(n, 0);
    for (std::size_t id = 0; id < n; ++id) {
        int i, j, k;
        unpack(tube, id, i, j, k);
        if (!tube.valid[id] || !full_stencil(tube, i, j, k)) continue;
        auto X = [&](int di, int dj, int dk) -> const Vec3& { return tube.X[tube.idx(i + di, j + dj, k + dk)]; };
        Mat3 J;
        J.col(0) = (X(1, 0, 0) - X(-1, 0, 0)) / (2 * h);
        J.col(1) = (X(0, 1, 0) - X(0, -1, 0)) / (2 * h);
        J.col(2) = (X(0, 0, 1) - X(0, 0, -1)) / (2 * h);
        std::array<Vec3, 6> D;
        const Vec3& c = X(0, 0, 0);
        D[0] = (X(1, 0, 0) - 2 * c + X(-1, 0, 0)) / (h * h);
        D[1] = (X(0, 1, 0) - 2 * c + X(0, -1, 0)) / (h * h);
        D[2] = (X(0, 0, 1) - 2 * c + X(0, 0, -1)) / (h * h);
        D[3] = (X(1, 1, 0) - X(1, -1, 0) - X(-1, 1, 0) + X(-1, -1, 0)) / (4 * h * h);
        D[4] = (X(1, 0, 1) - X(1, 0, -1) - X(-1, 0, 1) + X(-1, 0, -1)) / (4 * h * h);
        D[5] = (X(0, 1, 1) - X(0, 1, -1) - X(0, -1, 1) + X(0, -1, -1)) / (4 * h * h);
        double det = J.determinant();
        if (!(det > 0.0)) continue;
        Mat3 Ji = J.inverse();
        Mat3 G = Ji * a.value(c) * Ji.transpose();
        // G : X^k for each physical component k
        Vec3 gx = G(0, 0) * D[0] + G(1, 1) * D[1] + G(2, 2) * D[2] + 2.0 * G(0, 1) * D[3] + 2.0 * G(0, 2) * D[4] +
                  2.0 * G(1, 2) * D[5];
        op.beta[id] = -(Ji * gx);
        op.G[id] = G;
        op.J[id] = J;
        op.X2[id] = D;
        op.det[id] = det;
        op.ok[id] = 1;
    }
    for (std::size_t id = 0; id < n; ++id) {
        if (!op.ok[id]) continue;
        int i, j, k;
        unpack(tube, id, i, j, k);
        std::size_t up = k + 1 < tube.nxi ? tube.idx(i, j, k + 1) : id;
        std::size_t dn = k > 0 ? tube.idx(i, j, k - 1) : id;
        bool hu = up != id && op.ok[up], hd = dn != id && op.ok[dn];
        if (hu && hd) {
            op.P[id] = -(op.G[up] - op.G[dn]) / (2 * h);
            op.Q[id] = -(op.beta[up] - op.beta[dn]) / (2 * h);
        } else if (hu) {
            op.P[id] = -(op.G[up] - op.G[id]) / h;
            op.Q[id] = -(op.beta[up] - op.beta[id]) / h;
        } else if (hd) {
            op.P[id] = -(op.G[id] - op.G[dn]) / h;
            op.Q[id] = -(op.beta[id] - op.beta[dn]) / h;
        }
    }
    return op;
}

// ------------------------------------------------------------------ localization

LocalizedProblem localize(const Tube& tube, const TubeOperator& op, const GridSampler& u, const ScalarFn& f,
                          const ScalarFn& phi, const MuCutoff& mu) {
    const std::size_t n = tube.size();
    LocalizedProblem L;
    L.mu = mu;
    L.u.assign(n, 0.0);
    L.U.assign(n, 0.0);
    L.V.assign(n, 0.0);
    L.F.assign(n, 0.0);
    L.Phi.assign(n, 0.0);
    L.Ua.assign(n, Eigen::Vector2d::Zero());
    L.Uab.assign(n, Eigen::Vector3d::Zero());
    L.du_dL.assign(n, 0.0);
    L.grad_u.assign(n, Vec3::Zero());
    L.have.assign(n, 0);
    const Domain& dom = *tube.domain;
    for (std::size_t id = 0; id < n; ++id) {
        if (!tube.valid[id]) continue;
        int i, j, k;
        unpack(tube, id, i, j, k);
        double aa = tube.a(i), bb = tube.a(j);
        double m = mu.value(aa, bb);
        const Vec3& X = tube.X[id];
        if (!tube.inside[id]) {
            Projection pr = dom.project(X);
            if (m != 0.0) L.Phi[id] = m * phi(pr.point);
            // a thin outer layer keeps xi-differences of F centered at the last inside nodes
            if (pr.distance > 2.0 * tube.h) continue;
        }
        GridSampler::Jet jet;
        try {
            jet = u.at(X);
        } catch (const Error&) {
            continue;
        }
        Vec3 lvec;
        try {
            lvec = tube.field->value(X);
        } catch (const Error&) {
            if (!op.ok[id]) continue;
            lvec = op.J[id].col(2);
        }
        L.u[id] = jet.value;
        L.grad_u[id] = jet.gradient;
        L.du_dL[id] = lvec.dot(jet.gradient);
        L.U[id] = m * jet.value;
        L.V[id] = m * L.du_dL[id];
        L.have[id] = 1;
        if (!op.ok[id]) continue;
        const Mat3& J = op.J[id];
        const auto& D = op.X2[id];
        Vec3 ut(J.col(0).dot(jet.gradient), J.col(1).dot(jet.gradient), lvec.dot(jet.gradient));
        auto second = [&](const Vec3& p, const Vec3& q, const Vec3& d2) {
            return p.dot(jet.hessian * q) + jet.gradient.dot(d2);
        };
        double uaa = second(J.col(0), J.col(0), D[0]);
        double ubb = second(J.col(1), J.col(1), D[1]);
        double uab = second(J.col(0), J.col(1), D[3]);
        Eigen::Vector2d mg;
        Eigen::Matrix2d mh;
        lattice_mu(tube, mu, aa, bb, mg, mh);
        const Mat3& G = op.G[id];
        const Vec3& be = op.beta[id];
        L.Ua[id] = Eigen::Vector2d(mg[0] * jet.value + m * ut[0], mg[1] * jet.value + m * ut[1]);
        L.Uab[id] = Eigen::Vector3d(mh(0, 0) * jet.value + 2 * mg[0] * ut[0] + m * uaa,
                                    mh(1, 1) * jet.value + 2 * mg[1] * ut[1] + m * ubb,
                                    mh(0, 1) * jet.value + mg[0] * ut[1] + mg[1] * ut[0] + m * uab);
        double cross = 0.0;
        for (int al = 0; al < 2; ++al)
            for (int nn = 0; nn < 3; ++nn) cross += G(al, nn) * mg[al] * ut[nn];
        double lower = G(0, 0) * mh(0, 0) + G(1, 1) * mh(1, 1) + 2 * G(0, 1) * mh(0, 1) + be[0] * mg[0] + be[1] * mg[1];
        L.F[id] = m * f(X) + 2.0 * cross + jet.value * lower;
        L.have[id] = 2;
    }
    return L;
}

TransformedProblem transform_to_tube(const Tube& tube, const TubeOperator& op, const LocalizedProblem& loc) {
    const std::size_t n = tube.size();
    const double h = tube.h;
    TransformedProblem tp;
    tp.tube = &tube;
    tp.op = &op;
    tp.rhs1.assign(n, 0.0);
    tp.V_data.assign(n, 0.0);
    tp.Phi = loc.Phi;
    const int k0 = tube.xi_index(0.0);
    for (std::size_t id = 0; id < n; ++id) {
        if (!tube.valid[id]) continue;
        if (!tube.inside[id]) {
            tp.V_data[id] = loc.Phi[id];
            continue;
        }
        if (!loc.have[id]) continue;
        tp.V_data[id] = loc.V[id];
        if (loc.have[id] < 2) continue;
        int i, j, k;
        unpack(tube, id, i, j, k);
        std::size_t up = k + 1 < tube.nxi ? tube.idx(i, j, k + 1) : id;
        std::size_t dn = k > 0 ? tube.idx(i, j, k - 1) : id;
        bool hu = up != id && loc.have[up] == 2, hd = dn != id && loc.have[dn] == 2;
        double dF = 0.0;
        if (hu && hd) dF = (loc.F[up] - loc.F[dn]) / (2 * h);
        else if (hu) dF = (loc.F[up] - loc.F[id]) / h;
        else if (hd) dF = (loc.F[id] - loc.F[dn]) / h;
        std::size_t base = tube.idx(i, j, k0);
        const Mat3& P = op.P[id];
        const Vec3& Q = op.Q[id];
        double r = dF + Q[0] * loc.Ua[id][0] + Q[1] * loc.Ua[id][1];
        if (loc.have[base] == 2) r += contract_ab(P, loc.Uab[base]);
        tp.rhs1[id] = r;
    }
    return tp;
}

// ------------------------------------------------------------------ caps

CapCase classify_cap(const Tube& tube, double T) {
    if (T >= tube.T_max) return CapCase::C;
    if (T + 2.0 * tube.r >= tube.T_max) return CapCase::B;
    return CapCase::A;
}

Cap build_cap(const Tube& tube, const TubeOperator& op, double T, CapCase kind) {
    if (kind == CapCase::C) throw Error(ErrorCode::invalid_argument, "case C has no cap problem");
    const double h = tube.h, r = tube.r;
    Cap cap;
    cap.T = T;
    cap.kind = kind;
    cap.eta = cutoff_eta(T, r);
    if (kind == CapCase::B) cap.eta.unit = true;
    cap.k_lo = std::max(1, tube.xi_index(T - 2.5 * r) - 1);
    cap.k_hi = kind == CapCase::A ? std::min(tube.nxi - 2, tube.xi_index(T + 2.5 * r) + 1) : tube.nxi - 2;
    const std::size_t n = tube.size();
    cap.unknown.assign(n, -1);
    cap.in_region.assign(n, 0);
    for (int k = cap.k_lo; k <= cap.k_hi; ++k)
        for (int j = 1; j < tube.na() - 1; ++j)
            for (int i = 1; i < tube.na() - 1; ++i) {
                if (!region_contains(tube, kind, T, i, j, k)) continue;
                std::size_t id = tube.idx(i, j, k);
                cap.in_region[id] = 1;
                if (!tube.valid[id] || !tube.inside[id] || !op.ok[id]) continue;
                cap.unknown[id] = static_cast<int>(cap.node_of.size());
                cap.node_of.push_back(static_cast<int>(id));
            }
    const int m = static_cast<int>(cap.node_of.size());
    if (m == 0) throw Error(ErrorCode::degenerate_boundary, "empty cap");
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(static_cast<std::size_t>(m) * 19);
    cap.boundary_coupling.assign(m, {});
    const double h2 = h * h;
    for (int row = 0; row < m; ++row) {
        std::size_t id = cap.node_of[row];
        int i, j, k;
        unpack(tube, id, i, j, k);
        const Mat3& G = op.G[id];
        const Mat3& P = op.P[id];
        Vec3 c(op.beta[id][0] - 2 * P(0, 2), op.beta[id][1] - 2 * P(1, 2), op.beta[id][2] - P(2, 2));
        double c0 = -op.Q[id][2];
        // scaled by h^2
        std::vector<std::pair<std::array<int, 3>, double>> st;
        st.push_back({{0, 0, 0}, -2.0 * (G(0, 0) + G(1, 1) + G(2, 2)) + h2 * c0});
        for (int d = 0; d < 3; ++d) {
            std::array<int, 3> e{0, 0, 0};
            e[d] = 1;
            std::array<int, 3> me{-e[0], -e[1], -e[2]};
            st.push_back({e, G(d, d) + 0.5 * h * c[d]});
            st.push_back({me, G(d, d) - 0.5 * h * c[d]});
        }
        for (int p = 0; p < 3; ++p)
            for (int q = p + 1; q < 3; ++q) {
                double w = 2.0 * G(p, q) / 4.0;
                for (int sp = -1; sp <= 1; sp += 2)
                    for (int sq = -1; sq <= 1; sq += 2) {
                        std::array<int, 3> e{0, 0, 0};
                        e[p] = sp;
                        e[q] = sq;
                        st.push_back({e, sp * sq * w});
                    }
            }
        for (auto& [o, v] : st) {
            std::size_t nb = tube.idx(i + o[0], j + o[1], k + o[2]);
            int col = cap.unknown[nb];
            if (col >= 0) trip.emplace_back(row, col, v);
            else cap.boundary_coupling[row].push_back({static_cast<int>(nb), v});
        }
    }
    cap.M.resize(m, m);
    cap.M.setFromTriplets(trip.begin(), trip.end());
    cap.M.makeCompressed();
    cap.lu = std::make_shared<Eigen::SparseLU<Eigen::SparseMatrix<double>>>();
    cap.lu->analyzePattern(cap.M);
    cap.lu->factorize(cap.M);
    if (cap.lu->info() != Eigen::Success) throw Error(ErrorCode::solver_breakdown, "cap factorization failed");
    return cap;
}

LatticeField cap_boundary(const Cap& cap, const TransformedProblem& tp, const LatticeField& history) {
    const Tube& t = *tp.tube;
    LatticeField b(t.size(), 0.0);
    int klo = std::max(0, cap.k_lo - 1), khi = std::min(t.nxi - 1, cap.k_hi + 1);
    for (int k = klo; k <= khi; ++k) {
        double x = t.xi(k);
        double e = cap.eta.value(x);
        for (int j = 0; j < t.na(); ++j)
            for (int i = 0; i < t.na(); ++i) {
                std::size_t id = t.idx(i, j, k);
                if (cap.unknown[id] >= 0 || !t.valid[id]) continue;
                if (!t.inside[id]) b[id] = e * tp.Phi[id];
                else if (x <= cap.T + 1e-9 * t.h) b[id] = history[id];
            }
    }
    return b;
}

Eigen::VectorXd cap_source(const Cap& cap, const TransformedProblem& tp, const LatticeField& history) {
    const Tube& t = *tp.tube;
    const TubeOperator& op = *tp.op;
    const int m = static_cast<int>(cap.size());
    Eigen::VectorXd F(m);
    const int k0 = t.xi_index(0.0), kT = t.xi_index(cap.T);
    // H = int_0^T V dt per column
    std::vector<double> H;
    if (!tp.zero_memory) {
        H.assign(t.size(), 0.0);  // stored on slice k0
        for (int j = 0; j < t.na(); ++j)
            for (int i = 0; i < t.na(); ++i) {
                double s = 0.0;
                for (int k = k0; k <= kT; ++k) {
                    double v = history[t.idx(i, j, k)];
                    if (!std::isfinite(v)) v = 0.0;
                    s += (k == k0 || k == kT ? 0.5 : 1.0) * v;
                }
                H[t.idx(i, j, k0)] = s * t.h;
            }
    }
    for (int row = 0; row < m; ++row) {
        std::size_t id = cap.node_of[row];
        int i, j, k;
        unpack(t, id, i, j, k);
        double x = t.xi(k);
        double e = cap.eta.value(x), e1 = cap.eta.d1(x), e2 = cap.eta.d2(x);
        double val = e * tp.rhs1[id];
        if (e1 != 0.0 || e2 != 0.0) {
            const Mat3& G = op.G[id];
            double V = tp.V_data[id];
            Vec3 dV = lat_grad(t, tp.V_data, i, j, k);
            val += G(2, 2) * (2 * e1 * dV[2] + e2 * V) + 2 * e1 * (G(0, 2) * dV[0] + G(1, 2) * dV[1]) +
                   (op.beta[id][2] - op.P[id](2, 2)) * e1 * V;
        }
        if (!tp.zero_memory) val += e * contract_ab(op.P[id], slice_hess(t, H, i, j, k0));
        F[row] = val;
    }
    return F;
}

Eigen::VectorXd volterra_source(const Cap& cap, const TransformedProblem& tp, const LatticeField& w) {
    const Tube& t = *tp.tube;
    const TubeOperator& op = *tp.op;
    const int m = static_cast<int>(cap.size());
    Eigen::VectorXd S = Eigen::VectorXd::Zero(m);
    if (tp.zero_memory) return S;
    const int kT = t.xi_index(cap.T);
    const int na = t.na();
    // eta is nonincreasing, so min(1, eta(xi)/eta(t)) is eta(xi)/eta(t) above T and 1 below;
    // both integrals are running sums along each column.
    std::vector<char> used(static_cast<std::size_t>(na) * na, 0);
    for (int id : cap.node_of) used[static_cast<std::size_t>(id) % (static_cast<std::size_t>(na) * na)] = 1;
    std::vector<Eigen::Vector3d> cum(static_cast<std::size_t>(cap.k_hi - cap.k_lo + 3));
    auto at = [&](int k) -> Eigen::Vector3d& { return cum[static_cast<std::size_t>(k - cap.k_lo + 1)]; };
    for (int j = 0; j < na; ++j)
        for (int i = 0; i < na; ++i) {
            if (!used[static_cast<std::size_t>(j) * na + i]) continue;
            Eigen::Vector3d prev = slice_hess(t, w, i, j, kT), acc = Eigen::Vector3d::Zero();
            at(kT) = acc;
            for (int k = kT + 1; k <= cap.k_hi; ++k) {
                double et = cap.eta.value(t.xi(k));
                if (!(et > 0.0)) {
                    for (; k <= cap.k_hi; ++k) at(k) = Eigen::Vector3d::Zero();
                    break;
                }
                Eigen::Vector3d cur = slice_hess(t, w, i, j, k) / et;
                acc += 0.5 * t.h * (prev + cur);
                at(k) = et * acc;
                prev = cur;
            }
            prev = slice_hess(t, w, i, j, kT);
            acc.setZero();
            for (int k = kT - 1; k >= cap.k_lo; --k) {
                Eigen::Vector3d cur = slice_hess(t, w, i, j, k);
                acc -= 0.5 * t.h * (prev + cur);
                at(k) = acc;
                prev = cur;
            }
            for (int k = cap.k_lo; k <= cap.k_hi; ++k) {
                int u = cap.unknown[t.idx(i, j, k)];
                if (u >= 0 && k != kT) S[u] = contract_ab(op.P[t.idx(i, j, k)], at(k));
            }
        }
    return S;
}

LatticeField fixpoint_map(const Cap& cap, const TransformedProblem& tp, const Eigen::VectorXd& F2,
                          const LatticeField& boundary, const LatticeField& w) {
    const double h2 = tp.tube->h * tp.tube->h;
    const int m = static_cast<int>(cap.size());
    Eigen::VectorXd rhs = h2 * (F2 + volterra_source(cap, tp, w));
    for (int row = 0; row < m; ++row)
        for (auto& [nb, c] : cap.boundary_coupling[row]) rhs[row] -= c * boundary[nb];
    Eigen::VectorXd z = cap.lu->solve(rhs);
    LatticeField out = boundary;
    for (int row = 0; row < m; ++row) out[cap.node_of[row]] = z[row];
    return out;
}

double scaled_norm(const Cap& cap, const TransformedProblem& tp, const LatticeField& w, double s, double r) {
    const Tube& t = *tp.tube;
    const double vol = t.h * t.h * t.h;
    double n0 = 0.0, n1 = 0.0, n2 = 0.0;
    for (int id : cap.node_of) {
        int i, j, k;
        unpack(t, id, i, j, k);
        double wt = tp.op->det[id] * vol;
        if (s == 2.0) {
            n0 += wt * w[id] * w[id];
            n1 += wt * lat_grad(t, w, i, j, k).squaredNorm();
            n2 += wt * lat_hess(t, w, i, j, k).squaredNorm();
            continue;
        }
        n0 += wt * std::pow(std::abs(w[id]), s);
        n1 += wt * std::pow(lat_grad(t, w, i, j, k).norm(), s);
        n2 += wt * std::pow(lat_hess(t, w, i, j, k).norm(), s);
    }
    return std::pow(n0, 1.0 / s) + r * std::pow(n1, 1.0 / s) + r * r * std::pow(n2, 1.0 / s);
}

double hessian_lq(const Tube& tube, const TubeOperator& op, const LatticeField& w, double q,
                  const std::vector<char>& mask) {
    const double vol = tube.h * tube.h * tube.h;
    double acc = 0.0;
    for (std::size_t id = 0; id < tube.size(); ++id) {
        if (!mask[id] || !op.ok[id]) continue;
        int i, j, k;
        unpack(tube, id, i, j, k);
        acc += op.det[id] * vol * std::pow(lat_hess(tube, w, i, j, k).norm(), q);
    }
    return std::pow(acc, 1.0 / q);
}

double lattice_sobolev(const Tube& tube, const TubeOperator& op, const LatticeField& w, int order, double q,
                       const std::vector<char>& mask) {
    const double vol = tube.h * tube.h * tube.h;
    double acc = 0.0;
    for (std::size_t id = 0; id < tube.size(); ++id) {
        if (!mask[id] || !op.ok[id]) continue;
        int i, j, k;
        unpack(tube, id, i, j, k);
        double s = std::pow(std::abs(w[id]), q);
        if (order >= 1) s += std::pow(lat_grad(tube, w, i, j, k).norm(), q);
        if (order >= 2) s += std::pow(lat_hess(tube, w, i, j, k).norm(), q);
        acc += op.det[id] * vol * s;
    }
    return std::pow(acc, 1.0 / q);
}

CapSolve solve_cap(const Cap& cap, const TransformedProblem& tp, const LatticeField& history, const CapOptions& opts) {
    const double r = tp.tube->r;
    LatticeField bnd = cap_boundary(cap, tp, history);
    Eigen::VectorXd F2 = cap_source(cap, tp, history);
    CapSolve out;
    LatticeField w = bnd;
    for (int it = 0; it < opts.max_iterations; ++it) {
        LatticeField next = fixpoint_map(cap, tp, F2, bnd, w);
        LatticeField d(next.size(), 0.0);
        for (int id : cap.node_of) d[id] = next[id] - w[id];
        double dn = scaled_norm(cap, tp, d, opts.s, r);
        double wn = scaled_norm(cap, tp, next, opts.s, r);
        w = std::move(next);
        if (dn <= opts.rtol * wn || dn == 0.0) break;
        out.increments.push_back(dn);
        ++out.iterations;
    }
    if (out.iterations >= opts.max_iterations)
        throw Error(ErrorCode::non_convergence, "cap fixed point did not converge");
    if (out.increments.size() >= 2) {
        double lg = 0.0;
        for (std::size_t q = 1; q < out.increments.size(); ++q)
            lg += std::log(out.increments[q] / out.increments[q - 1]);
        out.rate = std::exp(lg / static_cast<double>(out.increments.size() - 1));
    }
    // residual of M V = F2 + volterra(V) with the boundary coupling
    const double h2 = tp.tube->h * tp.tube->h;
    const int m = static_cast<int>(cap.size());
    Eigen::VectorXd rhs = h2 * (F2 + volterra_source(cap, tp, w));
    for (int row = 0; row < m; ++row)
        for (auto& [nb, c] : cap.boundary_coupling[row]) rhs[row] -= c * bnd[nb];
    Eigen::VectorXd z(m);
    for (int row = 0; row < m; ++row) z[row] = w[cap.node_of[row]];
    double rn = rhs.norm();
    out.residual = (cap.M * z - rhs).norm() / (rn > 0.0 ? rn : 1.0);
    out.V = std::move(w);
    return out;
}

ContractionProbe contraction_probe(const Cap& cap, const TransformedProblem& tp, double s, int trials,
                                   unsigned seed) {
    const Tube& t = *tp.tube;
    const double r = t.r, h2 = t.h * t.h;
    const int m = static_cast<int>(cap.size());
    std::mt19937 gen(seed);
    std::normal_distribution<double> nd(0.0, 1.0);
    ContractionProbe out;
    auto to_field = [&](const Eigen::VectorXd& z) {
        LatticeField f(t.size(), 0.0);
        for (int row = 0; row < m; ++row) f[cap.node_of[row]] = z[row];
        return f;
    };
    for (int trial = 0; trial < trials; ++trial) {
        Eigen::VectorXd g(m);
        for (int row = 0; row < m; ++row) g[row] = nd(gen);
        LatticeField d = to_field(cap.lu->solve(g));
        for (int step = 0; step < 8; ++step) {
            double dn = scaled_norm(cap, tp, d, s, r);
            if (!(dn > 0.0)) break;
            LatticeField e = to_field(cap.lu->solve(h2 * volterra_source(cap, tp, d)));
            double en = scaled_norm(cap, tp, e, s, r);
            out.ratios.push_back(en / dn);
            out.theta = std::max(out.theta, en / dn);
            if (!(en > 0.0)) break;
            for (double& v : e) v /= en;
            d = std::move(e);
        }
    }
    return out;
}

}  // namespace poincare
