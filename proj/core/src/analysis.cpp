#include "poincare/analysis.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <random>

namespace poincare {

namespace {

Vec3 middle_anchor(const Scenario& sc) {
    if (!sc.E || sc.E->empty()) throw Error(ErrorCode::invalid_argument, "the tangency set is empty");
    return sc.E->points[sc.E->points.size() / 2];
}

double relative_max(const GridField& u, const GridField& exact) {
    double e = 0.0, m = 0.0;
    for (std::size_t a = 0; a < u.size(); ++a) {
        e = std::max(e, std::abs(u[a] - exact[a]));
        m = std::max(m, std::abs(exact[a]));
    }
    return m > 0.0 ? e / m : e;
}

double order_between(double e0, double e1, double s0, double s1) {
    if (!(e0 > 0.0) || !(e1 > 0.0)) return 0.0;
    return std::log(e0 / e1) / std::log(s0 / s1);
}

}  // namespace

ExtensionCheck extension_check(const Scenario& sc, std::size_t samples, unsigned seed) {
    const Domain& dom = *sc.domain;
    const BoundaryField& field = *sc.field;
    const ExtendedField& L = *sc.L;
    ExtensionCheck ec;
    BoundarySamples bs = dom.sample_boundary(samples);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> depth(0.0, dom.collar_width());
    for (std::size_t i = 0; i < bs.size(); ++i) {
        const Vec3& y = bs.points[i];
        const Vec3& nu = bs.normals[i];
        Vec3 ell = field.ell_with_normal(y, nu);
        ec.boundary_defect = std::max(ec.boundary_defect, (L.value(y) - ell).norm());
        Vec3 x = y - depth(rng) * nu;
        ec.unit_defect = std::max(ec.unit_defect, std::abs(L.value(x).norm() - 1.0));
        if (std::abs(field.gamma(y)) <= field.eps_tan()) {
            ec.tangency_defect = std::max(ec.tangency_defect, (L.value(y) - field.tau(y)).norm());
            ++ec.e_samples;
        }
    }
    if (sc.E) {
        for (const Vec3& y : sc.E->points) {
            ec.tangency_defect = std::max(ec.tangency_defect, (L.value(y) - field.tau(y)).norm());
            ++ec.e_samples;
        }
    }
    ec.samples = bs.size();
    ec.transversality = transversality_margin(L, bs);
    return ec;
}

PicardReport picard_check(const Scenario& sc, std::size_t pairs, unsigned seed, double tol) {
    const Domain& dom = *sc.domain;
    const double d0 = dom.collar_width();
    const double t = 0.2 * d0;
    const double delta = 0.01 * d0;
    const double step = 1e-3;
    BoundarySamples bs = dom.sample_boundary(std::max<std::size_t>(4 * pairs, 64));
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> pick(0, bs.size() - 1);
    std::uniform_real_distribution<double> depth(0.3 * d0, 0.6 * d0);
    std::normal_distribution<double> nd;
    std::vector<std::pair<Vec3, Vec3>> pr;
    std::vector<Vec3> base;
    std::size_t tries = 0;
    while (pr.size() < pairs && tries < 100 * pairs) {
        ++tries;
        std::size_t i = pick(rng);
        Vec3 x = bs.points[i] - depth(rng) * bs.normals[i];
        Vec3 u(nd(rng), nd(rng), nd(rng));
        Vec3 x2 = x + delta * u.normalized();
        std::vector<Vec3> path{x, x2};
        try {
            // the constant has to hold along the whole path, not only at the start
            for (int k = 1; k <= 4; ++k) {
                path.push_back(trajectory(*sc.L, x, 0.25 * k * t, step).point);
                path.push_back(trajectory(*sc.L, x2, 0.25 * k * t, step).point);
            }
        } catch (const Error&) {
            continue;
        }
        pr.emplace_back(x, x2);
        base.insert(base.end(), path.begin(), path.end());
    }
    double lip = lipschitz_probe(*sc.L, base, 1e-4);
    return picard_screen(*sc.L, pr, t, lip, step, tol);
}

FieldAnalysis analyze_field(const RunConfig& cfg, const Scenario& sc) {
    auto t0 = std::chrono::steady_clock::now();
    FieldAnalysis fa;
    const BoundaryField& field = *sc.field;
    fa.regular = sc.E->empty();
    if (fa.regular) fa.notice = "regular problem: gamma does not vanish on the boundary";
    BoundarySamples bs = sc.domain->sample_boundary(cfg.field_samples);
    fa.stats = field_stats(field, bs);
    fa.neutrality = classify_neutrality(field, cfg.field.eps_tan, cfg.pipeline.e_samples);
    fa.e_points = sc.E->points.size();
    fa.e_area = sc.E->area();
    for (const TangencyComponent& c : sc.E->components) fa.components.push_back({c.label, c.members.size(), c.area});
    if (!fa.regular) fa.certificate = certify_nontrapping(*sc.L, *sc.E, CertifyOptions{});
    fa.extension = extension_check(sc, cfg.field_samples, cfg.seed);
    fa.picard = picard_check(sc, cfg.picard_pairs, cfg.seed);
    std::vector<Vec3> pts;
    for (std::size_t i = 0; i < bs.size(); ++i) pts.push_back(bs.points[i] - 0.5 * sc.domain->collar_width() * bs.normals[i]);
    fa.ellipticity = ellipticity_probe(*sc.a, pts, cfg.seed);
    fa.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return fa;
}

double study_radius(const RunConfig& cfg, const Scenario& sc) {
    if (cfg.pipeline.r > 0.0) return cfg.pipeline.r;
    return calibrate_radius(sc.L, *sc.nb, *sc.a, middle_anchor(sc), cfg.pipeline).r;
}

ThetaSweep theta_sweep(const RunConfig& cfg, const Scenario& sc) {
    ThetaSweep ts;
    ts.anchor = middle_anchor(sc);
    if (cfg.pipeline.r > 0.0) {
        ts.r0 = 2.0 * cfg.pipeline.r;
        ts.r_geo = geometric_radius(sc.L, *sc.nb, ts.anchor, cfg.pipeline.r_start, cfg.pipeline.tube);
    } else {
        Calibration cal = calibrate_radius(sc.L, *sc.nb, *sc.a, ts.anchor, cfg.pipeline);
        ts.r0 = cal.r0;
        ts.r_geo = cal.r_geo;
    }
    double r = 0.5 * ts.r0;
    for (int k = 0; k < cfg.theta_levels; ++k, r *= 0.5) {
        ts.radii.push_back(r);
        ts.theta.push_back(pilot_theta(sc.L, *sc.nb, *sc.a, ts.anchor, r, cfg.pipeline));
    }
    for (std::size_t i = 0; i + 1 < ts.theta.size(); ++i)
        ts.ratio.push_back(ts.theta[i + 1] > 0.0 ? ts.theta[i] / ts.theta[i + 1] : 0.0);
    fit_linear_law(ts.radii, ts.theta, ts.c, ts.r2);
    return ts;
}

std::vector<SweepRow> estimate_sweep(const RunConfig& cfg, const Scenario& sc,
                                     const std::function<void(const SweepRow&)>& on_row) {
    std::vector<SweepRow> rows;
    for (int level : cfg.grid_levels) {
        Discretization d = discretize(sc, level);
        std::vector<ManufacturedInstance> inst;
        inst.reserve(cfg.problems.size());
        for (const std::string& name : cfg.problems) inst.push_back(manufactured_instance(sc, d, name, cfg.p, cfg.q));
        std::vector<DegenerateJob> jobs;
        for (const ManufacturedInstance& mi : inst) jobs.push_back({&mi.problem, &d.grid, &d.regions});
        std::vector<SolveReport> reps = solve_degenerate_batch(jobs, cfg.pipeline);
        for (std::size_t i = 0; i < inst.size(); ++i) {
            SweepRow row;
            row.problem = cfg.problems[i];
            row.level = level;
            row.h = d.grid.h;
            row.estimate = reps[i].estimate;
            row.error_max = relative_max(reps[i].u, inst[i].exact);
            row.residuals = reps[i].residuals;
            row.tubes = reps[i].tubes.size();
            row.blend_mismatch = reps[i].blend_mismatch;
            if (on_row) on_row(row);
            rows.push_back(std::move(row));
        }
    }
    return rows;
}

SweepSummary summarize_sweep(const std::vector<SweepRow>& rows, const std::vector<int>& levels) {
    SweepSummary s;
    if (rows.empty()) return s;
    s.ratio5_min = std::numeric_limits<double>::infinity();
    s.ratio5_max = 0.0;
    for (const SweepRow& r : rows) {
        s.ratio5_min = std::min(s.ratio5_min, r.estimate.ratio5);
        s.ratio5_max = std::max(s.ratio5_max, r.estimate.ratio5);
        s.violation = s.violation || r.estimate.violation;
    }
    s.spread = s.ratio5_min > 0.0 ? s.ratio5_max / s.ratio5_min : std::numeric_limits<double>::infinity();
    for (int level : levels) {
        double m = 0.0;
        for (const SweepRow& r : rows)
            if (r.level == level) m = std::max(m, r.estimate.ratio5);
        s.level_max.push_back(m);
    }
    s.increasing = s.level_max.size() >= 2;
    for (std::size_t i = 1; i < s.level_max.size(); ++i) s.increasing = s.increasing && s.level_max[i] > s.level_max[i - 1];
    return s;
}

std::vector<ConvergenceRow> convergence_study(const RunConfig& cfg, const Scenario& sc,
                                              const std::function<void(const ConvergenceRow&)>& on_row) {
    std::vector<ConvergenceRow> rows;
    std::map<std::string, ConvergenceRow> prev;
    for (int level : cfg.grid_levels) {
        Discretization d = discretize(sc, level);
        std::vector<ManufacturedInstance> inst;
        inst.reserve(cfg.problems.size());
        for (const std::string& name : cfg.problems) inst.push_back(manufactured_instance(sc, d, name, cfg.p, cfg.q));
        std::vector<DegenerateJob> jobs;
        for (const ManufacturedInstance& mi : inst) jobs.push_back({&mi.problem, &d.grid, &d.regions});
        std::vector<SolveReport> reps = solve_degenerate_batch(jobs, cfg.pipeline);
        for (std::size_t i = 0; i < inst.size(); ++i) {
            ConvergenceRow row;
            row.problem = cfg.problems[i];
            row.level = level;
            row.h = d.grid.h;
            row.error_max = relative_max(reps[i].u, inst[i].exact);
            GridField diff(reps[i].u.size());
            for (std::size_t a = 0; a < diff.size(); ++a) diff[a] = reps[i].u[a] - inst[i].exact[a];
            double ref = sobolev_norm(d.grid, inst[i].exact, 2, 2.0, d.regions.omega);
            double err = sobolev_norm(d.grid, diff, 2, 2.0, d.regions.omega);
            row.error_w22 = ref > 0.0 ? err / ref : err;
            row.ratio7 = reps[i].estimate.ratio7;
            row.regular_only = reps[i].regular_only;
            auto it = prev.find(row.problem);
            if (it != prev.end()) {
                row.order_max = order_between(it->second.error_max, row.error_max, it->second.h, row.h);
                row.order_w22 = order_between(it->second.error_w22, row.error_w22, it->second.h, row.h);
            }
            prev[row.problem] = row;
            if (on_row) on_row(row);
            rows.push_back(std::move(row));
        }
    }
    return rows;
}

namespace {

struct BaseSolution {
    Discretization d;
    ManufacturedInstance mi;
    GridField u;
};

std::unique_ptr<BaseSolution> base_solution(const RunConfig& cfg, const Scenario& sc, int level) {
    auto b = std::make_unique<BaseSolution>();
    b->d = discretize(sc, level);
    b->mi = manufactured_instance(sc, b->d, cfg.problems.front(), cfg.p, cfg.q);
    b->u = solve_regular_oblique(b->mi.problem, b->d.grid, b->d.regions, cfg.pipeline.regular).u;
    return b;
}

}  // namespace

std::vector<HalvingRow> reconstruction_study(const RunConfig& cfg, const Scenario& sc, int level, double r) {
    auto base = base_solution(cfg, sc, level);
    const Vec3 anchor = middle_anchor(sc);
    std::vector<HalvingRow> rows;
    for (int n : cfg.study_per_r) {
        PipelineOptions opts = cfg.pipeline;
        opts.tube.n_per_r = n;
        TubeReport tr = solve_tube(base->mi.problem, base->d.grid, base->d.regions, base->u, anchor, r, opts);
        HalvingRow row;
        row.n_per_r = n;
        row.spacing = r / n;
        row.defect = tr.recon_defect;
        row.max_earlier_change = tr.max_earlier_change;
        row.max_cap_residual = tr.max_cap_residual;
        row.steps_hold = tr.trace.steps_hold;
        row.C_step = tr.trace.C_step;
        row.C_fit = tr.trace.C_fit;
        if (!rows.empty()) row.order = order_between(rows.back().defect, row.defect, rows.back().spacing, row.spacing);
        rows.push_back(row);
    }
    return rows;
}

Remark6 remark6_check(const RunConfig& cfg, const Scenario& sc, int level, double r, double shift) {
    auto base = base_solution(cfg, sc, level);
    Remark6 out;
    out.anchor1 = middle_anchor(sc);
    out.anchor2 = trajectory(*sc.L, out.anchor1, shift, 1e-3).point;
    TubeReport t1 = solve_tube(base->mi.problem, base->d.grid, base->d.regions, base->u, out.anchor1, r, cfg.pipeline);
    TubeReport t2 = solve_tube(base->mi.problem, base->d.grid, base->d.regions, base->u, out.anchor2, r, cfg.pipeline);
    out.C1 = t1.trace.C_step;
    out.C2 = t2.trace.C_step;
    out.C_fit1 = t1.trace.C_fit;
    out.C_fit2 = t2.trace.C_fit;
    double m = std::max(out.C1, out.C2);
    out.relative_gap = m > 0.0 ? std::abs(out.C1 - out.C2) / m : 0.0;
    return out;
}

}  // namespace poincare
