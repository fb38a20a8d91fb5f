#include "poincare/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <map>
#include <memory>

namespace poincare {

namespace {

// Weighted least-squares quadratic through the active nodes within radius of each flagged node.
GridField smooth_at(const Grid& grid, const GridField& u, const std::vector<char>& which, double radius) {
    GridField out = u;
    const int R = static_cast<int>(std::ceil(radius / grid.h));
    Eigen::MatrixXd A;
    Eigen::VectorXd b;
    std::vector<double> rows;
    for (std::size_t a = 0; a < grid.n_active(); ++a) {
        if (!which[a]) continue;
        const Vec3 x0 = grid.position(a);
        const Eigen::Vector3i c = grid.ijk(grid.node_of[a]);
        rows.clear();
        for (int k = c.z() - R; k <= c.z() + R; ++k)
            for (int j = c.y() - R; j <= c.y() + R; ++j)
                for (int i = c.x() - R; i <= c.x() + R; ++i) {
                    int nb = grid.active_at(i, j, k);
                    if (nb < 0) continue;
                    Vec3 d = (grid.position(static_cast<std::size_t>(nb)) - x0) / radius;
                    double s2 = d.squaredNorm();
                    if (s2 >= 1.0) continue;
                    double w = (1.0 - s2) * (1.0 - s2);
                    rows.insert(rows.end(), {d.x(), d.y(), d.z(), w, u[static_cast<std::size_t>(nb)]});
                }
        const Eigen::Index m = static_cast<Eigen::Index>(rows.size() / 5);
        if (m < 16) continue;
        A.resize(m, 10);
        b.resize(m);
        for (Eigen::Index r = 0; r < m; ++r) {
            const double* q = &rows[static_cast<std::size_t>(r) * 5];
            double sw = std::sqrt(q[3]);
            A.row(r) << 1.0, q[0], q[1], q[2], q[0] * q[0], q[1] * q[1], q[2] * q[2], q[0] * q[1], q[0] * q[2],
                q[1] * q[2];
            A.row(r) *= sw;
            b[r] = sw * q[4];
        }
        out[a] = A.colPivHouseholderQr().solve(b)[0];
    }
    return out;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

double norm_or_zero(const Grid& grid, const GridField& u, const NodeDerivatives& du, int k, double q,
                    const std::vector<char>& mask) {
    for (std::size_t a = 0; a < grid.n_active(); ++a)
        if (mask[a] && grid.weight[a] > 0.0) return sobolev_norm(grid, u, du, k, q, mask);
    return 0.0;
}

std::vector<char> both(const std::vector<char>& a, const std::vector<char>& b, bool negate_b) {
    std::vector<char> m(a.size(), 0);
    for (std::size_t i = 0; i < a.size(); ++i) m[i] = a[i] && (negate_b ? !b[i] : b[i]);
    return m;
}

// Norms of the data, computed once per problem and grid.
struct DataNorms {
    double f_norm = 0.0, f_lq = 0.0, phi_norm = 0.0, phi_plain = 0.0;
};

DataNorms data_norms(const DiscreteProblem& problem, const Grid& grid, const RegionMasks& regions, double q,
                     std::size_t boundary_points) {
    DataNorms d;
    const std::size_t n = grid.n_active();
    GridField f = sample(grid, problem.f);
    GridField df(n, 0.0);
    std::vector<char> in_n(n, 0);
    if (problem.nb && !problem.nb->empty() && !regions.n3.empty()) in_n = regions.n3;
    for (std::size_t a = 0; a < n; ++a) {
        if (!in_n[a]) continue;
        Vec3 x = grid.position(a);
        try {
            Vec3 l = problem.L->value(x);
            if (problem.grad_f) {
                df[a] = l.dot(problem.grad_f(x));
            } else {
                const double e = 1e-5;
                df[a] = (problem.f(x + e * l) - problem.f(x - e * l)) / (2 * e);
            }
        } catch (const Error&) {
            df[a] = 0.0;
        }
    }
    d.f_norm = f_norm(grid, f, df, q, regions.omega, in_n);
    d.f_lq = lq_norm(grid, f, q, regions.omega);
    const Domain& dom = *problem.domain;
    BoundaryQuadrature bq = boundary_quadrature(dom, boundary_points);
    std::vector<char> bn(bq.size(), 0);
    if (problem.nb && !problem.nb->empty())
        for (std::size_t i = 0; i < bq.size(); ++i) bn[i] = problem.nb->in(bq.points[i], 3);
    d.phi_norm = phi_norm(dom, bq, problem.phi, q, bn);
    d.phi_plain = fractional_boundary_norm(dom, bq, problem.phi, 1.0 - 1.0 / q, q);
    return d;
}

EstimateReport estimate_with(const DiscreteProblem& problem, const Grid& grid, const RegionMasks& regions,
                             const GridField& u, double q, const DataNorms& d, const std::vector<char>* cover) {
    EstimateReport e;
    e.q = q;
    NodeDerivatives du = node_derivatives(grid, u, regions.omega);
    e.u_w2q = norm_or_zero(grid, u, du, 2, q, regions.omega);
    e.u_lq = norm_or_zero(grid, u, du, 0, q, regions.omega);
    e.f_norm = d.f_norm;
    e.f_lq = d.f_lq;
    e.phi_norm = d.phi_norm;
    e.phi_plain = d.phi_plain;
    e.u_w2q_away = norm_or_zero(grid, u, du, 2, q, regions.away);
    e.u_w2q_n2 = regions.n2.empty() ? 0.0 : norm_or_zero(grid, u, du, 2, q, regions.n2);
    const double den = e.u_lq + e.f_norm + e.phi_norm;
    e.ratio5 = guarded_ratio(e.u_w2q, den, e.violation);
    e.ratio7 = guarded_ratio(e.u_w2q_away, e.u_lq + e.f_lq + e.phi_plain, e.violation);
    e.ratio8 = guarded_ratio(e.u_w2q_n2, den, e.violation);
    if (!regions.n3.empty()) {
        e.u_w1q_n = norm_or_zero(grid, u, du, 1, q, regions.n3);
        GridField dl(grid.n_active(), 0.0);
        for (std::size_t a = 0; a < grid.n_active(); ++a) {
            if (!regions.n3[a]) continue;
            try {
                dl[a] = problem.L->value(grid.position(a)).dot(du.grad[a]);
            } catch (const Error&) {
            }
        }
        NodeDerivatives ddl = node_derivatives(grid, dl, regions.n3);
        e.dL_w1q_n = norm_or_zero(grid, dl, ddl, 1, q, regions.n3);
    }
    if (!regions.n2.empty() && e.u_w2q_n2 > 0.0)
        e.eps_interp = norm_or_zero(grid, u, du, 1, q, regions.n2) / e.u_w2q_n2;
    if (cover) {
        e.u_w2q_cover = norm_or_zero(grid, u, du, 2, q, both(regions.omega, *cover, false));
        if (!regions.n2.empty())
            e.u_w2q_n2_minus_cover = norm_or_zero(grid, u, du, 2, q, both(regions.n2, *cover, true));
    }
    return e;
}

// Grid node inside the mu support of one tube, with its trilinear stencil.
struct NodeHit {
    std::size_t node;
    std::array<std::size_t, 8> ids;
    std::array<double, 8> w;
    double mu;
    bool half;  // inside the half-radius tube
};

std::vector<NodeHit> tube_hits(const Tube& tube, const TubeLocator& loc, const Grid& grid, const MuCutoff& mu) {
    std::vector<NodeHit> hits;
    const Vec3 lo = loc.lo(), hi = loc.hi();
    const double end = tube.t_plus - tube.t_minus;
    for (std::size_t a = 0; a < grid.n_active(); ++a) {
        Vec3 x = grid.position(a);
        if ((x.array() < lo.array()).any() || (x.array() > hi.array()).any()) continue;
        TubeCoords c = loc.locate(x);
        if (!c.ok || c.xi < 0.0) continue;
        if (!(mu.value(c.a, c.b) > 0.0)) continue;
        NodeHit hit;
        if (!loc.corners(c, hit.ids, hit.w)) continue;
        // the weight is interpolated like U, so that U / mu reproduces u across the mu ramp
        double m = 0.0;
        for (int n = 0; n < 8; ++n) {
            const int na = tube.na();
            int i = static_cast<int>(hit.ids[n] % na), j = static_cast<int>((hit.ids[n] / na) % na);
            m += hit.w[n] * mu.value(tube.a(i), tube.a(j));
        }
        if (!(m > 0.0)) continue;
        hit.node = a;
        hit.mu = m;
        hit.half = std::hypot(c.a, c.b) <= 0.5 * tube.r * (1.0 + 1e-9) && c.xi <= end;
        hits.push_back(hit);
    }
    return hits;
}

}  // namespace

TubeLocator::TubeLocator(const Tube& tube) : tube_(&tube) {
    std::vector<Vec3> pts;
    lo_ = Vec3::Constant(std::numeric_limits<double>::infinity());
    hi_ = -lo_;
    double edge = tube.h;
    const int na = tube.na();
    for (int k = 0; k < tube.nxi; ++k)
        for (int j = 0; j < na; ++j)
            for (int i = 0; i < na; ++i) {
                std::size_t id = tube.idx(i, j, k);
                if (!tube.valid[id]) continue;
                pts.push_back(tube.X[id]);
                ids_.push_back(id);
                lo_ = lo_.cwiseMin(tube.X[id]);
                hi_ = hi_.cwiseMax(tube.X[id]);
                if (i + 1 < na && tube.valid[tube.idx(i + 1, j, k)])
                    edge = std::max(edge, (tube.X[tube.idx(i + 1, j, k)] - tube.X[id]).norm());
                if (j + 1 < na && tube.valid[tube.idx(i, j + 1, k)])
                    edge = std::max(edge, (tube.X[tube.idx(i, j + 1, k)] - tube.X[id]).norm());
                if (k + 1 < tube.nxi && tube.valid[tube.idx(i, j, k + 1)])
                    edge = std::max(edge, (tube.X[tube.idx(i, j, k + 1)] - tube.X[id]).norm());
            }
    index_ = PointIndex(pts, edge);
}

bool TubeLocator::corners(const TubeCoords& c, std::array<std::size_t, 8>& ids, std::array<double, 8>& w) const {
    const Tube& t = *tube_;
    const int na = t.na();
    double fa = c.a / t.h + t.half, fb = c.b / t.h + t.half, fk = (c.xi - t.xi_lo) / t.h;
    int i0 = std::clamp(static_cast<int>(std::floor(fa)), 0, na - 2);
    int j0 = std::clamp(static_cast<int>(std::floor(fb)), 0, na - 2);
    int k0 = std::clamp(static_cast<int>(std::floor(fk)), 0, t.nxi - 2);
    double tx = fa - i0, ty = fb - j0, tz = fk - k0;
    const double slack = 1e-9;
    if (tx < -slack || tx > 1 + slack || ty < -slack || ty > 1 + slack || tz < -slack || tz > 1 + slack) return false;
    int n = 0;
    for (int dk = 0; dk < 2; ++dk)
        for (int dj = 0; dj < 2; ++dj)
            for (int di = 0; di < 2; ++di) {
                std::size_t id = t.idx(i0 + di, j0 + dj, k0 + dk);
                if (!t.valid[id]) return false;
                ids[n] = id;
                w[n] = (di ? tx : 1 - tx) * (dj ? ty : 1 - ty) * (dk ? tz : 1 - tz);
                ++n;
            }
    return true;
}

TubeCoords TubeLocator::locate(const Vec3& x) const {
    const Tube& t = *tube_;
    TubeCoords c;
    double best = std::numeric_limits<double>::infinity();
    std::size_t near = 0;
    index_.for_each_near(x, [&](std::size_t i) {
        double d = (t.X[ids_[i]] - x).norm();
        if (d < best) {
            best = d;
            near = ids_[i];
        }
    });
    if (!std::isfinite(best)) return c;
    const int na = t.na();
    int i = static_cast<int>(near % na), j = static_cast<int>((near / na) % na), k = static_cast<int>(near / (na * na));
    Vec3 y(t.a(i), t.a(j), t.xi(k));
    for (int it = 0; it < 8; ++it) {
        double fa = y[0] / t.h + t.half, fb = y[1] / t.h + t.half, fk = (y[2] - t.xi_lo) / t.h;
        int i0 = std::clamp(static_cast<int>(std::floor(fa)), 0, na - 2);
        int j0 = std::clamp(static_cast<int>(std::floor(fb)), 0, na - 2);
        int k0 = std::clamp(static_cast<int>(std::floor(fk)), 0, t.nxi - 2);
        double tx = fa - i0, ty = fb - j0, tz = fk - k0;
        Vec3 X = Vec3::Zero();
        Mat3 D = Mat3::Zero();
        bool ok = true;
        for (int dk = 0; dk < 2 && ok; ++dk)
            for (int dj = 0; dj < 2 && ok; ++dj)
                for (int di = 0; di < 2; ++di) {
                    std::size_t id = t.idx(i0 + di, j0 + dj, k0 + dk);
                    if (!t.valid[id]) {
                        ok = false;
                        break;
                    }
                    double wx = di ? tx : 1 - tx, wy = dj ? ty : 1 - ty, wz = dk ? tz : 1 - tz;
                    double sx = di ? 1.0 : -1.0, sy = dj ? 1.0 : -1.0, sz = dk ? 1.0 : -1.0;
                    const Vec3& P = t.X[id];
                    X += wx * wy * wz * P;
                    D.col(0) += sx * wy * wz / t.h * P;
                    D.col(1) += wx * sy * wz / t.h * P;
                    D.col(2) += wx * wy * sz / t.h * P;
                }
        if (!ok) return c;
        Vec3 res = x - X;
        if (res.norm() < 1e-13) break;
        Vec3 d = D.fullPivLu().solve(res);
        if (!d.allFinite()) return c;
        y += d;
        if (d.norm() < 1e-12 * t.h) break;
    }
    c.a = y[0];
    c.b = y[1];
    c.xi = y[2];
    std::array<std::size_t, 8> ids;
    std::array<double, 8> w;
    c.ok = corners(c, ids, w);
    if (c.ok) {
        Vec3 X = Vec3::Zero();
        for (int n = 0; n < 8; ++n) X += w[n] * t.X[ids[n]];
        c.ok = (X - x).norm() <= 1e-8 * std::max(1.0, t.h);
    }
    return c;
}

double pilot_theta(std::shared_ptr<const ExtendedField> L, const Neighborhoods& nb, const Coefficients& a,
                   const Vec3& anchor, double r, const PipelineOptions& opts) {
    Tube tube = build_tube(L, nb, anchor, r, opts.tube);
    TubeOperator op = transform_operator(tube, a);
    Cap cap = build_cap(tube, op, 0.0, classify_cap(tube, 0.0));
    TransformedProblem tp;
    tp.tube = &tube;
    tp.op = &op;
    return contraction_probe(cap, tp, opts.cap.s, opts.probe_trials, opts.seed).theta;
}

void fit_linear_law(const std::vector<double>& radii, const std::vector<double>& theta, double& c, double& r2) {
    double num = 0.0, den = 0.0, mean = 0.0;
    for (std::size_t i = 0; i < radii.size(); ++i) {
        num += theta[i] * radii[i];
        den += radii[i] * radii[i];
        mean += theta[i];
    }
    c = den > 0.0 ? num / den : 0.0;
    mean /= std::max<std::size_t>(1, theta.size());
    double ss_res = 0.0, ss_tot = 0.0;
    for (std::size_t i = 0; i < radii.size(); ++i) {
        ss_res += std::pow(theta[i] - c * radii[i], 2);
        ss_tot += std::pow(theta[i] - mean, 2);
    }
    r2 = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : (ss_res == 0.0 ? 1.0 : 0.0);
}

Calibration calibrate_radius(std::shared_ptr<const ExtendedField> L, const Neighborhoods& nb, const Coefficients& a,
                             const Vec3& anchor, const PipelineOptions& opts) {
    Calibration cal;
    cal.anchor = anchor;
    cal.r_geo = geometric_radius(L, nb, anchor, opts.r_start, opts.tube);
    // the largest admissible radius sits past the linear range, so the sweep starts one level below
    double r = 0.5 * cal.r_geo;
    for (int k = 0; k < std::max(2, opts.calibration_levels); ++k, r *= 0.5) {
        cal.radii.push_back(r);
        cal.theta.push_back(pilot_theta(L, nb, a, anchor, r, opts));
    }
    fit_linear_law(cal.radii, cal.theta, cal.c, cal.r2);
    cal.r0 = cal.c > 0.0 ? std::min(cal.r_geo, 1.0 / (2.0 * cal.c)) : cal.r_geo;
    cal.r = 0.5 * cal.r0;
    return cal;
}

Cover cover_tangency(std::shared_ptr<const ExtendedField> L, const Neighborhoods& nb, const TangencySet& E, double r,
                     const PipelineOptions& opts) {
    Cover cv;
    const std::size_t n = E.points.size();
    if (n == 0) return cv;
    std::vector<char> covered(n, 0);
    std::vector<double> dmin(n, std::numeric_limits<double>::infinity());
    std::size_t next = 0;
    for (;;) {
        if (cv.tubes.size() >= opts.max_tubes)
            throw Error(ErrorCode::cover_failure, "tube cover exceeds " + std::to_string(opts.max_tubes) + " tubes");
        const Vec3 anchor = E.points[next];
        try {
            cv.tubes.push_back(build_tube(L, nb, anchor, r, opts.tube));
        } catch (const Error& e) {
            throw Error(ErrorCode::cover_failure, std::string("no admissible tube through an anchor on E: ") + e.what());
        }
        const Tube& t = cv.tubes.back();
        TubeLocator loc(t);
        const double end = t.t_plus - t.t_minus;
        std::size_t count = 0;
        for (std::size_t s = 0; s < n; ++s) {
            if (covered[s]) continue;
            const Vec3& p = E.points[s];
            if ((p.array() < loc.lo().array()).any() || (p.array() > loc.hi().array()).any()) continue;
            TubeCoords c = loc.locate(p);
            if (!c.ok || std::hypot(c.a, c.b) > 0.5 * r * (1.0 + 1e-9)) continue;
            if (c.xi < -t.h || c.xi > end + t.h) continue;
            covered[s] = 1;
            ++count;
        }
        if (!covered[next]) {
            covered[next] = 1;
            ++count;
        }
        cv.anchor_sample.push_back(next);
        cv.covered_by.push_back(count);
        double far = -1.0;
        bool any = false;
        for (std::size_t s = 0; s < n; ++s) {
            dmin[s] = std::min(dmin[s], (E.points[s] - anchor).norm());
            if (!covered[s] && dmin[s] > far) {
                far = dmin[s];
                next = s;
                any = true;
            }
        }
        if (!any) break;
    }
    return cv;
}

double guarded_ratio(double num, double den, bool& violation) {
    if (den > 0.0) return num / den;
    if (num > 0.0) {
        violation = true;
        return std::numeric_limits<double>::infinity();
    }
    return 0.0;
}

EstimateReport estimate_report(const DiscreteProblem& problem, const Grid& grid, const RegionMasks& regions,
                               const GridField& u, double q, std::size_t boundary_points,
                               const std::vector<char>* cover) {
    DataNorms d = data_norms(problem, grid, regions, q, boundary_points);
    return estimate_with(problem, grid, regions, u, q, d, cover);
}

namespace {

std::vector<char> tube_body(const Tube& tube) {
    std::vector<char> body(tube.size(), 0);
    for (int k = 0; k < tube.nxi; ++k)
        for (int j = 0; j < tube.na(); ++j)
            for (int i = 0; i < tube.na(); ++i) body[tube.idx(i, j, k)] = tube.in_body(i, j, k);
    return body;
}

TubeReport run_tube(const Tube& tube, const TubeOperator& op, const std::vector<Cap>& caps,
                    const std::vector<char>& body, const DiscreteProblem& P, const GridSampler& sampler,
                    const MuCutoff& mu, double K_global, const PipelineOptions& opts, LatticeField& U) {
    LocalizedProblem lp = localize(tube, op, sampler, P.f, P.phi, mu);
    TransformedProblem tp = transform_to_tube(tube, op, lp);
    const double q = P.q;
    double K = K_global + lattice_sobolev(tube, op, lp.u, 1, q, body) + lattice_sobolev(tube, op, lp.du_dL, 1, q, body);
    MarchOptions mo;
    mo.cap = opts.cap;
    mo.q = q;
    TubeMarch tm = march_tube(tube, caps, op, tp, K, mo);
    U = reconstruct_U(tube, tm.V, lp);
    TubeReport tr;
    tr.r = tube.r;
    tr.T_max = tube.T_max;
    tr.lattice_nodes = tube.size();
    tr.K = K;
    tr.v_w2q = lattice_sobolev(tube, op, tm.V, 2, q, body);
    bool viol = false;
    tr.ratio23 = guarded_ratio(tr.v_w2q, K, viol);
    tr.recon_defect = reconstruction_defect(tube, op, U, tm.V, q);
    for (const MarchStep& ms : tm.trace.steps) {
        tr.max_earlier_change = std::max(tr.max_earlier_change, ms.earlier_change);
        tr.max_cap_residual = std::max(tr.max_cap_residual, ms.residual);
        tr.max_iterations = std::max(tr.max_iterations, ms.iterations);
    }
    tr.trace = std::move(tm.trace);
    return tr;
}

}  // namespace

std::vector<SolveReport> solve_degenerate_batch(const std::vector<DegenerateJob>& jobs, const PipelineOptions& opts) {
    std::vector<SolveReport> reps(jobs.size());
    if (jobs.empty()) return reps;
    const DiscreteProblem& p0 = *jobs[0].problem;
    for (const DegenerateJob& j : jobs)
        if (j.problem->L != p0.L || j.problem->E != p0.E || j.problem->nb != p0.nb)
            throw Error(ErrorCode::invalid_argument, "batched problems must share L, E and the neighbourhoods");
    std::vector<DataNorms> dn(jobs.size());
    for (std::size_t jb = 0; jb < jobs.size(); ++jb) {
        const DegenerateJob& j = jobs[jb];
        SolveReport& rep = reps[jb];
        auto t0 = std::chrono::steady_clock::now();
        RegularSolution reg = solve_regular_oblique(*j.problem, *j.grid, *j.regions, opts.regular);
        rep.seconds_regular = seconds_since(t0);
        rep.regular_slack = reg.slack;
        rep.u_regular = std::move(reg.u);
        rep.regular_info = reg.info;
        rep.qprime_ladder = qprime_ladder(j.problem->p, j.problem->q, 3);
        dn[jb] = data_norms(*j.problem, *j.grid, *j.regions, j.problem->q, opts.boundary_points);
    }
    const bool no_E = !p0.E || p0.E->empty() || !p0.nb || p0.nb->empty();
    if (no_E) {
        for (std::size_t jb = 0; jb < jobs.size(); ++jb) {
            SolveReport& rep = reps[jb];
            rep.regular_only = true;
            rep.u = rep.u_regular;
            rep.u_blend = rep.u_regular;
            rep.residuals = equation_residuals(*jobs[jb].problem, *jobs[jb].grid, rep.u, rep.regular_slack);
            rep.estimate = estimate_with(*jobs[jb].problem, *jobs[jb].grid, *jobs[jb].regions, rep.u,
                                         jobs[jb].problem->q, dn[jb], nullptr);
        }
        return reps;
    }
    const TangencySet& E = *p0.E;
    const Neighborhoods& nb = *p0.nb;
    auto t_tubes = std::chrono::steady_clock::now();
    Calibration cal;
    if (opts.r > 0.0) {
        cal.r = opts.r;
        cal.r0 = 2.0 * opts.r;
    } else {
        cal = calibrate_radius(p0.L, nb, *p0.a, E.points[E.points.size() / 2], opts);
    }
    Cover cover = cover_tangency(p0.L, nb, E, cal.r, opts);
    const MuCutoff mu = cutoff_mu(cal.r);

    struct JobState {
        std::unique_ptr<GridSampler> sampler;
        GridField sumU, sumMu, first;
        std::vector<char> has_first, half;
        double mismatch = 0.0;
        double K_global = 0.0;
    };
    // later passes march from the previous result instead of the regular solve
    std::vector<GridField> base(jobs.size());
    for (std::size_t jb = 0; jb < jobs.size(); ++jb) base[jb] = reps[jb].u_regular;
    for (int pass = 0; pass < std::max(1, opts.passes); ++pass) {
        std::vector<JobState> st(jobs.size());
        for (std::size_t jb = 0; jb < jobs.size(); ++jb) {
            const std::size_t n = jobs[jb].grid->n_active();
            JobState& s = st[jb];
            s.sampler = std::make_unique<GridSampler>(*jobs[jb].grid, base[jb]);
            s.sumU.assign(n, 0.0);
            s.sumMu.assign(n, 0.0);
            s.first.assign(n, 0.0);
            s.has_first.assign(n, 0);
            s.half.assign(n, 0);
            double ulq = lq_norm(*jobs[jb].grid, base[jb], jobs[jb].problem->q, jobs[jb].regions->omega);
            s.K_global = ulq + dn[jb].f_norm + dn[jb].phi_norm;
            reps[jb].calibration = cal;
            reps[jb].e_samples = E.points.size();
            reps[jb].tubes.clear();
            reps[jb].blended_nodes = 0;
        }

        for (std::size_t ti = 0; ti < cover.tubes.size(); ++ti) {
            const Tube& tube = cover.tubes[ti];
            TubeLocator loc(tube);
            std::map<const Coefficients*, std::pair<TubeOperator, std::vector<Cap>>> ops;
            std::map<const Grid*, std::vector<NodeHit>> hits;
            const std::vector<char> body = tube_body(tube);
            for (std::size_t jb = 0; jb < jobs.size(); ++jb) {
                const DegenerateJob& job = jobs[jb];
                const DiscreteProblem& P = *job.problem;
                auto it = ops.find(P.a.get());
                if (it == ops.end()) {
                    TubeOperator op = transform_operator(tube, *P.a);
                    it = ops.emplace(P.a.get(), std::make_pair(std::move(op), std::vector<Cap>{})).first;
                    it->second.second = march_caps(tube, it->second.first);
                }
                const TubeOperator& op = it->second.first;
                const std::vector<Cap>& caps = it->second.second;
                auto ht = hits.find(job.grid);
                if (ht == hits.end()) ht = hits.emplace(job.grid, tube_hits(tube, loc, *job.grid, mu)).first;

                JobState& s = st[jb];
                LatticeField U;
                TubeReport tr = run_tube(tube, op, caps, body, P, *s.sampler, mu, s.K_global, opts, U);
                tr.id = static_cast<int>(ti);
                tr.anchor = E.points[cover.anchor_sample[ti]];
                tr.samples_covered = cover.covered_by[ti];
                tr.grid_nodes = ht->second.size();
                reps[jb].tubes.push_back(std::move(tr));

                for (const NodeHit& hit : ht->second) {
                    double Uv = 0.0;
                    for (int c = 0; c < 8; ++c) Uv += hit.w[c] * U[hit.ids[c]];
                    s.sumU[hit.node] += Uv;
                    s.sumMu[hit.node] += hit.mu;
                    if (hit.half) s.half[hit.node] = 1;
                    if (hit.mu >= 0.5) {
                        double uj = Uv / hit.mu;
                        if (s.has_first[hit.node]) {
                            s.mismatch = std::max(s.mismatch, std::abs(uj - s.first[hit.node]));
                        } else {
                            s.first[hit.node] = uj;
                            s.has_first[hit.node] = 1;
                        }
                    }
                }
            }
        }
        const double tube_seconds = seconds_since(t_tubes);

        for (std::size_t jb = 0; jb < jobs.size(); ++jb) {
            const DegenerateJob& job = jobs[jb];
            const Grid& grid = *job.grid;
            SolveReport& rep = reps[jb];
            JobState& s = st[jb];
            rep.seconds_tubes += tube_seconds / static_cast<double>(jobs.size());
            const std::size_t n = grid.n_active();
            double umax = 0.0;
            for (double v : base[jb]) umax = std::max(umax, std::abs(v));
            rep.blend_mismatch = s.mismatch / std::max(umax, 1e-300);
            rep.u_blend = base[jb];
            for (std::size_t a = 0; a < n; ++a) {
                if (!(s.sumMu[a] > 0.0)) continue;
                double rest = std::max(0.0, 1.0 - s.sumMu[a]);
                rep.u_blend[a] = (s.sumU[a] + rest * base[jb][a]) / (s.sumMu[a] + rest);
                ++rep.blended_nodes;
            }
            for (const TubeReport& tr : rep.tubes) {
                rep.C_step_max = std::max(rep.C_step_max, tr.trace.C_step);
                rep.C_fit_max = std::max(rep.C_fit_max, tr.trace.C_fit);
            }
            if (rep.blend_mismatch > opts.blend_tolerance)
                throw Error(ErrorCode::blend_mismatch, "overlapping tubes disagree by " + std::to_string(rep.blend_mismatch) +
                                                           " (tolerance " + std::to_string(opts.blend_tolerance) + ")");
            auto t0 = std::chrono::steady_clock::now();
            GridField ghosts = rep.u_blend;
            if (opts.ghost_smoothing > 0.0) {
                // tube data disagrees at the lattice scale; ghost values are refit at a fixed physical scale
                std::vector<char> which(n, 0);
                double rad = opts.ghost_smoothing * std::max(rep.calibration.r, grid.h);
                const int R = static_cast<int>(std::ceil(rad / grid.h));
                for (std::size_t a = 0; a < n; ++a) {
                    if (grid.is_inside(a) || !(s.sumMu[a] > 0.0)) continue;
                    const Eigen::Vector3i c = grid.ijk(grid.node_of[a]);
                    for (int k = c.z() - R; k <= c.z() + R; ++k)
                        for (int j = c.y() - R; j <= c.y() + R; ++j)
                            for (int i = c.x() - R; i <= c.x() + R; ++i) {
                                int b = grid.active_at(i, j, k);
                                if (b < 0 || grid.is_inside(static_cast<std::size_t>(b))) continue;
                                if ((grid.position(static_cast<std::size_t>(b)) - grid.position(a)).norm() < rad)
                                    which[static_cast<std::size_t>(b)] = 1;
                            }
                }
                ghosts = smooth_at(grid, rep.u_blend, which, rad);
            }
            // tube data replaces the boundary row only where the oblique condition degenerates
            std::vector<char> fixed(n, 0);
            const Neighborhoods& nbh = *job.problem->nb;
            for (std::size_t a = 0; a < n; ++a)
                fixed[a] = !grid.is_inside(a) && s.sumMu[a] > 0.0 && nbh.dist_to_E(grid.foot[a]) <= nbh.rho(1);
            RegularSolution fin = std::count(fixed.begin(), fixed.end(), 1) > 0
                                      ? solve_mixed(*job.problem, grid, fixed, ghosts, opts.regular)
                                      : solve_dirichlet(*job.problem, grid, ghosts, opts.regular);
            rep.fixed_ghosts = static_cast<std::size_t>(std::count(fixed.begin(), fixed.end(), 1));
            rep.seconds_consistency += seconds_since(t0);
            rep.u = std::move(fin.u);
            base[jb] = rep.u;
            rep.consistency_info = fin.info;
            double bmax = 0.0, change = 0.0;
            for (std::size_t a = 0; a < n; ++a) {
                bmax = std::max(bmax, std::abs(rep.u_blend[a]));
                if (grid.is_inside(a)) change = std::max(change, std::abs(rep.u[a] - rep.u_blend[a]));
            }
            rep.consistency_change = change / std::max(bmax, 1e-300);
            rep.residuals = equation_residuals(*job.problem, grid, rep.u);
            rep.estimate = estimate_with(*job.problem, grid, *job.regions, rep.u, job.problem->q, dn[jb], &s.half);
            for (const TubeReport& tr : rep.tubes) rep.estimate.ratio23 = std::max(rep.estimate.ratio23, tr.ratio23);
        }
    }
    return reps;
}

SolveReport solve_degenerate(const DiscreteProblem& problem, const Grid& grid, const RegionMasks& regions,
                             const PipelineOptions& opts) {
    DegenerateJob job;
    job.problem = &problem;
    job.grid = &grid;
    job.regions = &regions;
    return std::move(solve_degenerate_batch({job}, opts).front());
}

TubeReport solve_tube(const DiscreteProblem& problem, const Grid& grid, const RegionMasks& regions,
                      const GridField& u_base, const Vec3& anchor, double r, const PipelineOptions& opts) {
    Tube tube = build_tube(problem.L, *problem.nb, anchor, r, opts.tube);
    TubeOperator op = transform_operator(tube, *problem.a);
    std::vector<Cap> caps = march_caps(tube, op);
    GridSampler sampler(grid, u_base);
    DataNorms d = data_norms(problem, grid, regions, problem.q, opts.boundary_points);
    double K_global = lq_norm(grid, u_base, problem.q, regions.omega) + d.f_norm + d.phi_norm;
    LatticeField U;
    TubeReport tr = run_tube(tube, op, caps, tube_body(tube), problem, sampler, cutoff_mu(r), K_global, opts, U);
    tr.anchor = anchor;
    return tr;
}

}  // namespace poincare
