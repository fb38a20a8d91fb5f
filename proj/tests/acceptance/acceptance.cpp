// One line per acceptance criterion; exit status is the number of failures.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <string>

#include "poincare/analysis.hpp"

using namespace poincare;
using clk = std::chrono::steady_clock;

namespace {

int failures = 0;

double since(clk::time_point t) { return std::chrono::duration<double>(clk::now() - t).count(); }

void verdict(int n, bool pass, const std::string& detail) {
    std::printf("criterion %d: %s: %s\n", n, pass ? "PASS" : "FAIL", detail.c_str());
    std::fflush(stdout);
    if (!pass) ++failures;
}

std::string g(double v) {
    char b[32];
    std::snprintf(b, sizeof b, "%.4g", v);
    return b;
}

RunConfig band_config() {
    RunConfig c;
    c.domain.collar_width = 0.7;
    c.problems = {"x1sq_minus_x2sq"};
    c.grid_levels = {8, 16};
    c.pipeline.tube.n_per_r = 5;
    return c;
}

double rel_max_error(const GridField& u, const GridField& exact) {
    double e = 0.0, m = 0.0;
    for (std::size_t a = 0; a < u.size(); ++a) {
        e = std::max(e, std::abs(u[a] - exact[a]));
        m = std::max(m, std::abs(exact[a]));
    }
    return m > 0.0 ? e / m : e;
}

void band_field() {
    auto t0 = clk::now();
    RunConfig cfg = band_config();
    cfg.picard_pairs = 100;
    Scenario sc = build_scenario(cfg);
    FieldAnalysis fa = analyze_field(cfg, sc);
    GeneratorField G(sc.field);
    Vec3 x(std::sqrt(1.0 - 1.0 / 16.0), 0.0, -0.25);
    double exit = band_exit_time(G, *sc.field, x, cfg.field.eps_tan, 1e-3, 10.0);
    double secs = since(t0);
    double k0 = 2.0 * std::asin(0.25), t_exit = 2.0 * std::atanh(0.25);
    bool pass = fa.neutrality.neutral && fa.certificate.ok() && std::abs(fa.certificate.kappa0 - k0) <= 1e-3 &&
                std::abs(exit - t_exit) <= 1e-3 && fa.picard.pairs == 100 && fa.picard.violations == 0 &&
                secs < 10.0;
    verdict(1, pass,
            std::string("neutral ") + (fa.neutrality.neutral ? "yes" : "no") + ", non-trapping " +
                (fa.certificate.ok() ? "yes" : "no") + ", kappa0 " + g(fa.certificate.kappa0) + " vs " + g(k0) +
                ", exit time " + g(exit) + " vs " + g(t_exit) + ", picard " + std::to_string(fa.picard.violations) +
                "/" + std::to_string(fa.picard.pairs) + ", " + g(secs) + " s");
}

void extension() {
    auto t0 = clk::now();
    RunConfig cfg = band_config();
    Scenario sc = build_scenario(cfg);
    ExtensionCheck ec = extension_check(sc, 10000, cfg.seed);
    double secs = since(t0);
    bool pass = ec.samples >= 10000 && ec.unit_defect <= 1e-8 && ec.boundary_defect <= 1e-8 &&
                ec.tangency_defect <= 1e-8 && ec.transversality > 0.0 && secs < 5.0;
    verdict(2, pass,
            "samples " + std::to_string(ec.samples) + ", | |L|-1 | " + g(ec.unit_defect) + ", boundary " +
                g(ec.boundary_defect) + ", tangency " + g(ec.tangency_defect) + ", c0 " + g(ec.transversality) +
                ", " + g(secs) + " s");
}

void regular_convergence() {
    auto t0 = clk::now();
    RunConfig cfg;
    cfg.domain.collar_width = 0.7;
    cfg.field.profile = "one";
    cfg.problems = {"exp_cos"};
    cfg.grid_levels = {8, 16, 32};
    Scenario sc = build_scenario(cfg);
    std::vector<ConvergenceRow> rows = convergence_study(cfg, sc);
    double secs = since(t0);
    double err16 = rows[1].error_w22;
    double order = std::log(rows[0].error_w22 / rows[2].error_w22) / std::log(4.0);
    double lo = rows[0].ratio7, hi = rows[0].ratio7;
    for (const ConvergenceRow& r : rows) lo = std::min(lo, r.ratio7), hi = std::max(hi, r.ratio7);
    bool pass = rows[0].regular_only && err16 <= 0.05 && order >= 1.0 && hi <= 2.0 * lo && secs < 120.0;
    verdict(3, pass,
            "W22 error at h=1/16 " + g(err16) + ", order " + g(order) + ", ratio7 in [" + g(lo) + ", " + g(hi) +
                "], " + g(secs) + " s");
}

void contraction() {
    RunConfig cfg = band_config();
    cfg.grid_levels = {8};
    Scenario sc = build_scenario(cfg);
    ThetaSweep ts = theta_sweep(cfg, sc);
    bool ratios_ok = ts.ratio.size() >= 3;
    std::string rs;
    for (std::size_t i = 0; i < 3 && i < ts.ratio.size(); ++i) {
        ratios_ok = ratios_ok && ts.ratio[i] >= 1.5 && ts.ratio[i] <= 2.5;
        rs += (i ? ", " : "") + g(ts.ratio[i]);
    }
    double r = study_radius(cfg, sc);
    Tube tube = build_tube(sc.L, *sc.nb, ts.anchor, r, cfg.pipeline.tube);
    TubeOperator op = transform_operator(tube, *sc.a);
    std::vector<Cap> caps = march_caps(tube, op);
    TransformedProblem tp;
    tp.tube = &tube;
    tp.op = &op;
    tp.rhs1.assign(tube.size(), 1.0);
    tp.V_data.assign(tube.size(), 0.0);
    tp.Phi = tp.V_data;
    LatticeField hist(tube.size(), 0.0);
    CapOptions co = cfg.pipeline.cap;
    co.rtol = 1e-9;
    double worst_rate = 0.0, worst_res = 0.0, theta_min = 1.0;
    bool geometric = true;
    for (const Cap& c : caps) {
        double theta = contraction_probe(c, tp, co.s, cfg.pipeline.probe_trials, cfg.seed).theta;
        CapSolve cs = solve_cap(c, tp, hist, co);
        theta_min = std::min(theta_min, theta);
        worst_rate = std::max(worst_rate, cs.rate / theta);
        worst_res = std::max(worst_res, cs.residual);
        geometric = geometric && theta < 1.0 && cs.rate <= theta && cs.residual <= 1e-7;
    }
    tp.zero_memory = true;
    int max_it = 0, min_it = 1 << 30;
    for (const Cap& c : caps) {
        CapSolve cs = solve_cap(c, tp, hist, co);
        max_it = std::max(max_it, cs.iterations);
        min_it = std::min(min_it, cs.iterations);
    }
    bool pass = ratios_ok && geometric && max_it == 1 && min_it == 1;
    verdict(4, pass,
            "theta(r)/theta(r/2) " + rs + ", " + std::to_string(caps.size()) + " caps: max rate/theta " +
                g(worst_rate) + ", max residual " + g(worst_res) + ", iterations without memory " +
                std::to_string(max_it));
}

void marching() {
    RunConfig cfg = band_config();
    cfg.grid_levels = {8};
    Scenario sc = build_scenario(cfg);
    double r = study_radius(cfg, sc);
    std::vector<HalvingRow> rows = reconstruction_study(cfg, sc, 8, r);
    bool hold = true;
    double change = 0.0;
    for (const HalvingRow& h : rows) {
        hold = hold && h.steps_hold && h.C_step > 0.0;
        change = std::max(change, h.max_earlier_change);
    }
    double order = rows.back().order;
    double ib = iteration_bound(2.0, 1.0, 3);
    bool pass = hold && change <= 1e-9 && order >= 0.9 && ib == 14.0;
    verdict(5, pass,
            std::string("steps hold ") + (hold ? "yes" : "no") + ", earlier change " + g(change) + ", defect " +
                g(rows.front().defect) + " -> " + g(rows.back().defect) + " (order " + g(order) +
                "), iteration_bound(2, 1, 3) = " + g(ib));
}

void pipeline_and_integrability() {
    auto t0 = clk::now();
    RunConfig cfg = band_config();
    Scenario sc = build_scenario(cfg);
    Discretization d8 = discretize(sc, 8), d16 = discretize(sc, 16);
    ManufacturedInstance band = manufactured_instance(sc, d16, "x1sq_minus_x2sq", 2.0, 2.0);
    ManufacturedInstance q8 = manufactured_instance(sc, d8, "r2", 2.0, 4.0);
    ManufacturedInstance q16 = manufactured_instance(sc, d16, "r2", 2.0, 4.0);
    std::vector<SolveReport> reps = solve_degenerate_batch(
        {{&band.problem, &d16.grid, &d16.regions}, {&q8.problem, &d8.grid, &d8.regions},
         {&q16.problem, &d16.grid, &d16.regions}},
        cfg.pipeline);
    double err = rel_max_error(reps[0].u, band.exact);
    double batch_secs = since(t0);

    RunConfig rc = band_config();
    rc.field.family = "normal";
    rc.field.profile = "one";
    Scenario rs = build_scenario(rc);
    Discretization rd = discretize(rs, 16);
    ManufacturedInstance ri = manufactured_instance(rs, rd, "x1sq_minus_x2sq", 2.0, 2.0);
    SolveReport full = solve_degenerate(ri.problem, rd.grid, rd.regions, rc.pipeline);
    RegularSolution reg = solve_regular_oblique(ri.problem, rd.grid, rd.regions, rc.pipeline.regular);
    bool identical = full.u.size() == reg.u.size() &&
                     std::memcmp(full.u.data(), reg.u.data(), reg.u.size() * sizeof(double)) == 0;

    RunConfig sw = band_config();
    sw.problems = {"x1sq_minus_x2sq", "r2", "x3", "sin_exp", "exp_cos"};
    sw.grid_levels = {8, 12, 16};
    sw.pipeline.tube.n_per_r = 3;
    std::vector<SweepRow> rows = estimate_sweep(sw, sc);
    SweepSummary s = summarize_sweep(rows, sw.grid_levels);
    std::string lm;
    for (std::size_t i = 0; i < s.level_max.size(); ++i) lm += (i ? ", " : "") + g(s.level_max[i]);
    bool pass6 = err <= 0.05 && identical && s.spread <= 3.0 && !s.increasing && !s.violation;
    verdict(6, pass6,
            "band error at h=1/16 " + g(err) + ", regular bypass " + (identical ? "bit-identical" : "differs") +
                ", ratio5 over " + std::to_string(rows.size()) + " runs in [" + g(s.ratio5_min) + ", " +
                g(s.ratio5_max) + "] spread " + g(s.spread) + ", level max " + lm + ", " + g(since(t0)) + " s");

    double w8 = reps[1].estimate.u_w2q, w16 = reps[2].estimate.u_w2q;
    double growth = w16 / w8 - 1.0;
    std::vector<double> ladder = qprime_ladder(2.0, 10.0, 3);
    bool ladder_ok = !ladder.empty() && ladder.front() == 6.0 && ladder.back() == 10.0 && ladder.size() <= 3;
    bool pass7 = growth <= 0.10 && ladder_ok && reps[2].estimate.q == 4.0;
    verdict(7, pass7,
            "W24 norm " + g(w8) + " -> " + g(w16) + " (" + g(100.0 * growth) + "%), ladder first " +
                g(ladder.front()) + ", " + std::to_string(ladder.size()) + " steps to " + g(ladder.back()) +
                ", batch " + g(batch_secs) + " s");
}

void same_trajectory() {
    RunConfig cfg = band_config();
    cfg.grid_levels = {8};
    Scenario sc = build_scenario(cfg);
    double r = study_radius(cfg, sc);
    Remark6 rm = remark6_check(cfg, sc, 8, r, 0.1);
    verdict(8, rm.relative_gap <= 0.2 && rm.C1 > 0.0,
            "C_step " + g(rm.C1) + " and " + g(rm.C2) + ", gap " + g(100.0 * rm.relative_gap) + "%");
}

}  // namespace

int main() {
    auto t0 = clk::now();
    auto guard = [](int n, void (*f)()) {
        try {
            f();
        } catch (const std::exception& e) {
            verdict(n, false, std::string("threw: ") + e.what());
        }
    };
    guard(1, band_field);
    guard(2, extension);
    guard(3, regular_convergence);
    guard(4, contraction);
    guard(5, marching);
    try {
        pipeline_and_integrability();
    } catch (const std::exception& e) {
        verdict(6, false, std::string("threw: ") + e.what());
        verdict(7, false, "not reached");
    }
    guard(8, same_trajectory);
    std::printf("acceptance: %d failed, %.0f s\n", failures, since(t0));
    return failures;
}
