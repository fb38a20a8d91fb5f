#include <algorithm>
#include <cmath>
#include <limits>

#include "poincare/tube.hpp"

namespace poincare {

double smoothstep5(double s) {
    s = std::clamp(s, 0.0, 1.0);
    return s * s * s * (s * (6.0 * s - 15.0) + 10.0);
}

double smoothstep5_d1(double s) {
    if (s <= 0.0 || s >= 1.0) return 0.0;
    return 30.0 * s * s * (s - 1.0) * (s - 1.0);
}

double smoothstep5_d2(double s) {
    if (s <= 0.0 || s >= 1.0) return 0.0;
    return 60.0 * s * (2.0 * s - 1.0) * (s - 1.0);
}

double MuCutoff::value(double a, double b) const {
    if (unit) return 1.0;
    double rho = std::hypot(a, b);
    return 1.0 - smoothstep5((rho - 0.5 * r) / (0.25 * r));
}

Eigen::Vector2d MuCutoff::gradient(double a, double b) const {
    double rho = std::hypot(a, b);
    if (unit || rho <= 0.5 * r) return Eigen::Vector2d::Zero();
    double mr = -smoothstep5_d1((rho - 0.5 * r) / (0.25 * r)) / (0.25 * r);
    return mr * Eigen::Vector2d(a, b) / rho;
}

Eigen::Matrix2d MuCutoff::hessian(double a, double b) const {
    double rho = std::hypot(a, b);
    if (unit || rho <= 0.5 * r) return Eigen::Matrix2d::Zero();
    double s = (rho - 0.5 * r) / (0.25 * r);
    double mr = -smoothstep5_d1(s) / (0.25 * r);
    double mrr = -smoothstep5_d2(s) / (0.0625 * r * r);
    Eigen::Vector2d n(a / rho, b / rho);
    Eigen::Matrix2d nn = n * n.transpose();
    return mrr * nn + (mr / rho) * (Eigen::Matrix2d::Identity() - nn);
}

double EtaCutoff::value(double xi) const {
    if (unit) return 1.0;
    return 1.0 - smoothstep5((xi - T - r) / r);
}
double EtaCutoff::d1(double xi) const {
    if (unit) return 0.0;
    return -smoothstep5_d1((xi - T - r) / r) / r;
}
double EtaCutoff::d2(double xi) const {
    if (unit) return 0.0;
    return -smoothstep5_d2((xi - T - r) / r) / (r * r);
}

MuCutoff cutoff_mu(double r) {
    if (!(r > 0.0)) throw Error(ErrorCode::invalid_argument, "cutoff radius must be positive");
    return MuCutoff{r, false};
}

EtaCutoff cutoff_eta(double T, double r) {
    if (!(r > 0.0)) throw Error(ErrorCode::invalid_argument, "cutoff radius must be positive");
    return EtaCutoff{T, r, false};
}

// ------------------------------------------------------------------ Tube

int Tube::xi_index(double xi_value) const {
    return static_cast<int>(std::lround((xi_value - xi_lo) / h));
}

bool Tube::in_disc(int i, int j, double radius) const {
    double aa = a(i), bb = a(j);
    return aa * aa + bb * bb <= radius * radius * (1.0 + 1e-12);
}

bool Tube::in_body(int i, int j, int k) const {
    std::size_t id = idx(i, j, k);
    double x = xi(k);
    return in_disc(i, j, r) && valid[id] && inside[id] && x > 1e-12 * h && x < t_plus - t_minus;
}

Vec3 Tube::tube_point(double aa, double bb, double xi_value) const {
    const double dt = h / substeps;
    Vec3 y = x0 + aa * e1 + bb * e2;
    double tb = t_minus + xi_lo;
    int nb = std::max(1, static_cast<int>(std::ceil(std::abs(tb) / dt - 1e-9)));
    for (int s = 0; s < nb; ++s) y = rk4_step(*field, y, tb / nb);
    double span = xi_value - xi_lo;
    int m = static_cast<int>(std::floor(span / h + 1e-9));
    for (int k = 0; k < m; ++k)
        for (int s = 0; s < substeps; ++s) y = rk4_step(*field, y, dt);
    double rest = span - m * h;
    if (std::abs(rest) > 1e-14) {
        int nr = std::max(1, static_cast<int>(std::ceil(std::abs(rest) / dt - 1e-9)));
        for (int s = 0; s < nr; ++s) y = rk4_step(*field, y, rest / nr);
    }
    return y;
}

TubeCoords Tube::coordinates(const Vec3& x, bool polish) const {
    TubeCoords c;
    const double dt = h / substeps;
    auto plane = [&](const Vec3& y) { return (y - x0).dot(l0); };
    auto attempt = [&](double dir) -> bool {
        double limit = dir < 0 ? (t_plus - t_minus) + std::abs(t_minus) + 6.0 * r
                               : std::abs(t_minus) + 6.0 * r;
        EventResult ev;
        try {
            if (dir < 0)
                ev = integrate_until(*field, x, -1.0, limit, dt, [&](const Vec3& y) { return plane(y) <= 0.0; });
            else
                ev = integrate_until(*field, x, 1.0, limit, dt, [&](const Vec3& y) { return plane(y) >= 0.0; });
        } catch (const Error&) {
            return false;
        }
        if (!ev.found) return false;
        Vec3 d = ev.point - x0;
        if (d.norm() > 2.0 * (r + h)) return false;
        c.a = d.dot(e1);
        c.b = d.dot(e2);
        c.xi = -ev.time - t_minus;
        return true;
    };
    double first = plane(x) > 0.0 ? -1.0 : 1.0;
    c.ok = attempt(first) || attempt(-first);
    if (!c.ok) return c;
    if (polish) {
        const double eps = 1e-6 * std::max(r, 1e-3);
        for (int it = 0; it < 3; ++it) {
            Vec3 base = tube_point(c.a, c.b, c.xi);
            Vec3 res = base - x;
            if (res.norm() < 1e-13) break;
            Mat3 J;
            J.col(0) = (tube_point(c.a + eps, c.b, c.xi) - base) / eps;
            J.col(1) = (tube_point(c.a, c.b + eps, c.xi) - base) / eps;
            J.col(2) = (tube_point(c.a, c.b, c.xi + eps) - base) / eps;
            Vec3 d = J.fullPivLu().solve(res);
            c.a -= d(0);
            c.b -= d(1);
            c.xi -= d(2);
        }
    }
    return c;
}

Mat3 Tube::jacobian(int i, int j, int k) const {
    auto diff = [&](int di, int dj, int dk, int ii, int jj, int kk, int n) -> Vec3 {
        int ip = ii + di, jp = jj + dj, kp = kk + dk;
        int im = ii - di, jm = jj - dj, km = kk - dk;
        bool hp = ip >= 0 && ip < na() && jp >= 0 && jp < na() && kp >= 0 && kp < n && valid[idx(ip, jp, kp)];
        bool hm = im >= 0 && im < na() && jm >= 0 && jm < na() && km >= 0 && km < n && valid[idx(im, jm, km)];
        if (hp && hm) return (X[idx(ip, jp, kp)] - X[idx(im, jm, km)]) / (2.0 * h);
        if (hp) return (X[idx(ip, jp, kp)] - X[idx(ii, jj, kk)]) / h;
        if (hm) return (X[idx(ii, jj, kk)] - X[idx(im, jm, km)]) / h;
        return Vec3::Constant(std::numeric_limits<double>::quiet_NaN());
    };
    Mat3 J;
    J.col(0) = diff(1, 0, 0, i, j, k, nxi);
    J.col(1) = diff(0, 1, 0, i, j, k, nxi);
    J.col(2) = diff(0, 0, 1, i, j, k, nxi);
    return J;
}

namespace {

bool outside_domain(const Domain& dom, const Vec3& x) {
    return dom.level(x) > 0.0 && dom.project(x).distance > 1e-10;
}

}  // namespace

Tube build_tube_raw(std::shared_ptr<const DirectionField> L, std::shared_ptr<const Domain> domain,
                    const Vec3& x0, double r, double t_minus, double t_plus, const TubeOptions& opts) {
    if (!(r > 0.0)) throw Error(ErrorCode::invalid_argument, "tube radius must be positive");
    if (opts.n_per_r < 2 || opts.substeps < 1) throw Error(ErrorCode::invalid_argument, "bad tube lattice options");
    Tube t;
    t.field = L;
    t.domain = domain;
    t.x0 = x0;
    t.r = r;
    t.t_minus = t_minus;
    t.t_plus = t_plus;
    t.n_per_r = opts.n_per_r;
    t.substeps = opts.substeps;
    t.h = r / opts.n_per_r;
    t.half = opts.n_per_r + 1;
    t.l0 = L->value(x0).normalized();
    Vec3 e = std::abs(t.l0.x()) < 0.9 ? Vec3::UnitX() : Vec3::UnitY();
    t.e1 = (e - e.dot(t.l0) * t.l0).normalized();
    t.e2 = t.l0.cross(t.e1);
    const int npad = static_cast<int>(std::lround(opts.pad_factor * opts.n_per_r));
    t.xi_lo = -std::max(opts.pre_pad, 1) * t.h;
    const double dt = t.h / t.substeps;
    const double pad = npad * t.h;
    const int na = t.na();
    const int ncol = na * na;
    const Domain& dom = *domain;

    std::vector<std::vector<Vec3>> pos(ncol);
    std::vector<char> alive(ncol, 1);
    std::vector<double> exit_xi(ncol, std::numeric_limits<double>::quiet_NaN());
    std::vector<char> inside_now(ncol, 1);

    auto start_column = [&](int c) {
        int i = c % na, j = c / na;
        Vec3 y = x0 + t.a(i) * t.e1 + t.a(j) * t.e2;
        double tb = t_minus + t.xi_lo;
        int nb = std::max(1, static_cast<int>(std::ceil(std::abs(tb) / dt - 1e-9)));
        try {
            for (int s = 0; s < nb; ++s) y = rk4_step(*L, y, tb / nb);
            pos[c].push_back(y);
        } catch (const Error&) {
            alive[c] = 0;
        }
    };
    // Advances one lattice spacing; tracks the last inside-to-outside crossing for xi > 0.
    auto advance = [&](int c) {
        Vec3 y = pos[c].back();
        double xi0 = t.xi(static_cast<int>(pos[c].size()) - 1);
        try {
            for (int s = 0; s < t.substeps; ++s) {
                Vec3 next = rk4_step(*L, y, dt);
                double xs = xi0 + (s + 1) * dt;
                if (xs > 0.0) {
                    bool out = outside_domain(dom, next);
                    if (out && inside_now[c]) {
                        double lo = 0.0, hi = dt;
                        while (hi - lo > 1e-10) {
                            double mid = 0.5 * (lo + hi);
                            if (outside_domain(dom, rk4_step(*L, y, mid))) hi = mid; else lo = mid;
                        }
                        exit_xi[c] = xi0 + s * dt + hi;
                    }
                    inside_now[c] = out ? 0 : 1;
                }
                y = next;
            }
            pos[c].push_back(y);
        } catch (const Error&) {
            alive[c] = 0;
        }
    };

    // First pass: disc columns until each has been outside for a full pad beyond its exit.
    const int kmax_budget = static_cast<int>(std::ceil((opts.budget - t.xi_lo) / t.h));
    int k_hi = t.xi_index(t_plus - t_minus);
    for (int c = 0; c < ncol; ++c) {
        int i = c % na, j = c / na;
        start_column(c);
        if (!t.in_disc(i, j, r)) continue;
        if (!alive[c]) throw Error(ErrorCode::radius_too_large, "tube base column leaves the collar");
        while (alive[c] && static_cast<int>(pos[c].size()) < kmax_budget) {
            double xi_now = t.xi(static_cast<int>(pos[c].size()) - 1);
            if (!inside_now[c] && !std::isnan(exit_xi[c]) && xi_now >= exit_xi[c] + pad) break;
            advance(c);
        }
        if (!alive[c] && std::isnan(exit_xi[c]))
            throw Error(ErrorCode::radius_too_large, "tube column leaves the collar before exiting the domain");
        if (std::isnan(exit_xi[c])) throw Error(ErrorCode::certification, "tube column never exits the domain");
        t.T_max = std::max(t.T_max, exit_xi[c]);
    }
    k_hi = std::max(k_hi, t.xi_index(t.T_max + pad) + 1);
    t.nxi = k_hi + 1;
    // Second pass: every column to the common length.
    for (int c = 0; c < ncol; ++c) {
        while (alive[c] && static_cast<int>(pos[c].size()) < t.nxi) advance(c);
    }
    t.X.assign(t.size(), Vec3::Constant(std::numeric_limits<double>::quiet_NaN()));
    t.valid.assign(t.size(), 0);
    t.inside.assign(t.size(), 0);
    t.column_exit = exit_xi;
    for (int c = 0; c < ncol; ++c) {
        int i = c % na, j = c / na;
        int n = std::min<int>(t.nxi, static_cast<int>(pos[c].size()));
        for (int k = 0; k < n; ++k) {
            std::size_t id = t.idx(i, j, k);
            t.X[id] = pos[c][k];
            t.valid[id] = 1;
            t.inside[id] = dom.level(pos[c][k]) < 0.0 ? 1 : 0;
        }
    }
    t.t_plus = std::max(t_plus, t_minus + t.T_max + 0.5 * t.h);

    // Jacobian bounds over the body and the base.
    t.j_min = std::numeric_limits<double>::infinity();
    t.j_max = 0.0;
    int k0 = t.xi_index(0.0);
    for (int k = k0; k < t.nxi; ++k)
        for (int j = 0; j < na; ++j)
            for (int i = 0; i < na; ++i) {
                if (!(k == k0 ? t.in_disc(i, j, r) && t.valid[t.idx(i, j, k)] : t.in_body(i, j, k))) continue;
                double det = t.jacobian(i, j, k).determinant();
                t.j_min = std::min(t.j_min, det);
                t.j_max = std::max(t.j_max, det);
            }
    if (!(t.j_min >= opts.j_min))
        throw Error(ErrorCode::radius_too_large, "tube coordinate Jacobian below j_min");
    return t;
}

Tube build_tube(std::shared_ptr<const ExtendedField> L, const Neighborhoods& nb, const Vec3& x0, double r,
                const TubeOptions& opts) {
    const Domain& dom = L->domain();
    double step = std::min(dom.collar_width(), r) / 20.0;
    ExitTimes et = exit_times(*L, x0, nb, step, opts.budget, opts.base_fraction);
    std::shared_ptr<const Domain> dptr = L->boundary_field().domain_ptr();
    Tube t = build_tube_raw(L, dptr, x0, r, et.t_minus, et.t_plus, opts);
    int k0 = t.xi_index(0.0);
    for (int j = 0; j < t.na(); ++j)
        for (int i = 0; i < t.na(); ++i) {
            if (!t.in_disc(i, j, r)) continue;
            std::size_t id = t.idx(i, j, k0);
            int lv = t.valid[id] ? nb.level(t.X[id]) : -1;
            if (lv != 2)
                throw Error(ErrorCode::radius_too_large,
                            "tube base leaves N'' \\ N' (level " + std::to_string(lv) + ")");
        }
    for (int k = k0 + 1; k < t.nxi; ++k)
        for (int j = 0; j < t.na(); ++j)
            for (int i = 0; i < t.na(); ++i) {
                if (!t.in_body(i, j, k)) continue;
                if (!nb.in(t.X[t.idx(i, j, k)], 2))
                    throw Error(ErrorCode::radius_too_large, "tube body leaves N''");
            }
    return t;
}

double geometric_radius(std::shared_ptr<const ExtendedField> L, const Neighborhoods& nb, const Vec3& x0,
                        double r_start, const TubeOptions& opts) {
    auto ok = [&](double r) {
        try {
            build_tube(L, nb, x0, r, opts);
            return true;
        } catch (const Error& e) {
            if (e.code() == ErrorCode::radius_too_large) return false;
            throw;
        }
    };
    double r = r_start;
    if (ok(r)) return r;
    double bad = r;
    while (r > 1e-3) {
        r *= 0.5;
        if (ok(r)) break;
        bad = r;
    }
    if (r <= 1e-3) throw Error(ErrorCode::radius_too_large, "no admissible tube radius above 1e-3");
    double good = r;
    for (int it = 0; it < 4; ++it) {
        double mid = 0.5 * (good + bad);
        if (ok(mid)) good = mid; else bad = mid;
    }
    return good;
}

}  // namespace poincare
