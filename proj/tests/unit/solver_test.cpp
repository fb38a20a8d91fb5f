#include <cmath>
#include <cstring>

#include "doctest.h"
#include "poincare/config.hpp"

using namespace poincare;

namespace {

RunConfig ball_config(const std::string& family, const std::string& profile, const std::string& problem) {
    RunConfig cfg;
    cfg.domain.collar_width = 0.7;
    cfg.field.family = family;
    cfg.field.profile = profile;
    cfg.problems = {problem};
    cfg.grid_levels = {8};
    return cfg;
}

double max_error(const GridField& u, const GridField& exact) {
    double e = 0.0;
    for (std::size_t a = 0; a < u.size(); ++a) e = std::max(e, std::abs(u[a] - exact[a]));
    return e;
}

struct TubeFixture {
    Scenario sc;
    Tube tube;
    TubeOperator op;
    double r = 0.05;
    TubeFixture() {
        sc = build_scenario(ball_config("meridional", "band", "r2"));
        TubeOptions to;
        to.n_per_r = 3;
        tube = build_tube(sc.L, *sc.nb, Vec3(std::sqrt(1.0 - 0.01), 0.0, 0.1), r, to);
        op = transform_operator(tube, *sc.a);
    }
    TransformedProblem problem(bool zero_memory) const {
        TransformedProblem tp;
        tp.tube = &tube;
        tp.op = &op;
        tp.rhs1.assign(tube.size(), 1.0);
        tp.V_data.assign(tube.size(), 0.0);
        tp.Phi = tp.V_data;
        tp.zero_memory = zero_memory;
        return tp;
    }
};

}  // namespace

TEST_CASE("regular oblique solve is exact on harmonic quadratics") {
    RunConfig cfg = ball_config("meridional", "one", "x1sq_minus_x2sq");
    Scenario sc = build_scenario(cfg);
    REQUIRE(sc.E->empty());
    Discretization d = discretize(sc, 8);
    ManufacturedInstance mi = manufactured_instance(sc, d, "x1sq_minus_x2sq", 2.0, 2.0);
    RegularSolution s = solve_regular_oblique(mi.problem, d.grid, d.regions);
    CHECK(max_error(s.u, mi.exact) < 1e-8);
    CHECK(weighted_mean(d.grid, s.u, d.regions.omega0) == doctest::Approx(mi.problem.mean_target).epsilon(1e-10));
    ResidualReport rr = equation_residuals(mi.problem, d.grid, s.u);
    CHECK(rr.interior_rel < 1e-8);
    CHECK(rr.boundary_rel < 1e-6);
}

TEST_CASE("interior residual is measured against the shifted source") {
    RunConfig cfg = ball_config("meridional", "one", "exp_cos");
    Scenario sc = build_scenario(cfg);
    Discretization d = discretize(sc, 6);
    ManufacturedInstance mi = manufactured_instance(sc, d, "exp_cos", 2.0, 2.0);
    RegularSolution s = solve_regular_oblique(mi.problem, d.grid, d.regions);
    CHECK(std::abs(s.slack) > 1e-6);
    CHECK(equation_residuals(mi.problem, d.grid, s.u).interior_rel > 1e-6);
    ResidualReport rr = equation_residuals(mi.problem, d.grid, s.u, s.slack);
    CHECK(rr.interior_max < 1e-8);
    CHECK(rr.source_shift == s.slack);
}

TEST_CASE("Dirichlet and mixed solves reproduce quadratics") {
    Scenario sc = build_scenario(ball_config("meridional", "one", "r2"));
    Discretization d = discretize(sc, 8);
    ManufacturedInstance mi = manufactured_instance(sc, d, "r2", 2.0, 2.0);
    RegularSolution s = solve_dirichlet(mi.problem, d.grid, mi.exact);
    CHECK(max_error(s.u, mi.exact) < 1e-9);
    std::vector<char> fixed(d.grid.n_active(), 0);
    std::size_t half = 0;
    for (std::size_t a = 0; a < d.grid.n_active(); ++a)
        if (!d.grid.is_inside(a) && d.grid.foot[a].z() > 0.0) fixed[a] = 1, ++half;
    REQUIRE(half > 0);
    RegularSolution m = solve_mixed(mi.problem, d.grid, fixed, mi.exact);
    CHECK(max_error(m.u, mi.exact) < 1e-8);
    CHECK_THROWS(solve_mixed(mi.problem, d.grid, std::vector<char>(d.grid.n_active(), 0), mi.exact));
}

TEST_CASE("regular problems bypass the tube machinery bit for bit") {
    Scenario sc = build_scenario(ball_config("normal", "one", "exp_cos"));
    Discretization d = discretize(sc, 8);
    ManufacturedInstance mi = manufactured_instance(sc, d, "exp_cos", 2.0, 2.0);
    SolveReport rep = solve_degenerate(mi.problem, d.grid, d.regions, PipelineOptions{});
    RegularSolution s = solve_regular_oblique(mi.problem, d.grid, d.regions);
    CHECK(rep.regular_only);
    CHECK(rep.tubes.empty());
    REQUIRE(rep.u.size() == s.u.size());
    CHECK(std::memcmp(rep.u.data(), s.u.data(), s.u.size() * sizeof(double)) == 0);
}

TEST_CASE("iteration bound and step constants") {
    CHECK(iteration_bound(2.0, 1.0, 3) == 14.0);
    CHECK(iteration_bound(0.5, 4.0, 2) == 3.0);
    CHECK(iteration_bound(3.0, 2.0, 0) == 0.0);
    std::vector<double> zeta{0.0};
    const double K = 1.5;
    for (int j = 0; j < 6; ++j) zeta.push_back(0.6 * (K + zeta.back()));
    double cmax = 0.0, cls = 0.0;
    fit_step_constant(zeta, K, cmax, cls);
    CHECK(cmax == doctest::Approx(0.6).epsilon(1e-12));
    CHECK(cls == doctest::Approx(0.6).epsilon(1e-12));
    zeta[3] *= 1.2;
    fit_step_constant(zeta, K, cmax, cls);
    CHECK(cmax > 0.6);
    CHECK(cls <= cmax);
}

TEST_CASE("cutoffs") {
    MuCutoff mu = cutoff_mu(0.2);
    CHECK(mu.value(0.0, 0.0) == 1.0);
    CHECK(mu.value(0.05, 0.05) == 1.0);
    CHECK(mu.value(0.2, 0.0) == 0.0);
    EtaCutoff eta = cutoff_eta(0.5, 0.2);
    CHECK(eta.value(0.4) == 1.0);
    CHECK(eta.value(0.5 + 0.2) == 1.0);
    CHECK(eta.value(0.5 + 0.4) == 0.0);
    for (double x = 0.0; x < 1.0; x += 0.01) CHECK(eta.d1(x) <= 0.0);
    for (double s = 0.0; s <= 1.0; s += 0.05) {
        CHECK(smoothstep5(s) >= 0.0);
        CHECK(smoothstep5(s) <= 1.0);
    }
    CHECK(smoothstep5_d1(0.0) == 0.0);
    CHECK(smoothstep5_d2(1.0) == doctest::Approx(0.0));
}

TEST_CASE("tube coordinates round trip") {
    TubeFixture f;
    TubeLocator loc(f.tube);
    for (double a : {-0.02, 0.0, 0.015})
        for (double b : {-0.01, 0.02})
            for (double xi : {0.0, 0.05, 0.1}) {
                Vec3 x = f.tube.tube_point(a, b, xi);
                TubeCoords c = f.tube.coordinates(x);
                REQUIRE(c.ok);
                CHECK(c.a == doctest::Approx(a).epsilon(1e-6));
                CHECK(c.b == doctest::Approx(b).epsilon(1e-6));
                CHECK(c.xi == doctest::Approx(xi).epsilon(1e-6));
                // trilinear inverse: exact at lattice nodes, O(h^2) between them
                TubeCoords d = loc.locate(x);
                REQUIRE(d.ok);
                double h2 = f.tube.h * f.tube.h;
                CHECK(std::abs(d.a - a) < h2);
                CHECK(std::abs(d.b - b) < h2);
                CHECK(std::abs(d.xi - xi) < h2);
            }
    const Tube& t = f.tube;
    for (int k : {2, t.nxi / 2})
        for (int i : {t.half - 1, t.half + 1}) {
            std::size_t id = t.idx(i, t.half, k);
            REQUIRE(t.valid[id]);
            TubeCoords d = loc.locate(t.X[id]);
            REQUIRE(d.ok);
            CHECK(d.a == doctest::Approx(t.a(i)).epsilon(1e-9));
            CHECK(std::abs(d.b) < 1e-9);
            CHECK(d.xi == doctest::Approx(t.xi(k)).epsilon(1e-9));
        }
}

TEST_CASE("caps without memory are solved in one iteration") {
    TubeFixture f;
    TransformedProblem tp = f.problem(true);
    LatticeField hist(f.tube.size(), 0.0);
    std::vector<Cap> caps = march_caps(f.tube, f.op);
    REQUIRE(caps.size() >= 2);
    for (const Cap& c : caps) {
        CapSolve cs = solve_cap(c, tp, hist, CapOptions{});
        CHECK(cs.iterations == 1);
        CHECK(cs.residual <= 1e-7);
    }
}

TEST_CASE("caps with memory converge geometrically") {
    TubeFixture f;
    TransformedProblem tp = f.problem(false);
    std::vector<Cap> caps = march_caps(f.tube, f.op);
    const Cap& c = caps.front();
    ContractionProbe cp = contraction_probe(c, tp, 2.0, 3, 1);
    CHECK(cp.theta > 0.0);
    CHECK(cp.theta < 1.0);
    CapOptions opts;
    opts.rtol = 1e-9;
    CapSolve cs = solve_cap(c, tp, LatticeField(f.tube.size(), 0.0), opts);
    CHECK(cs.residual <= 1e-7);
    CHECK(cs.iterations > 1);
    CHECK(cs.rate <= cp.theta * 1.05);
    for (std::size_t i = 1; i < cs.increments.size(); ++i) CHECK(cs.increments[i] < cs.increments[i - 1]);
}

TEST_CASE("marching keeps earlier values and the step bound") {
    TubeFixture f;
    TransformedProblem tp = f.problem(false);
    TubeMarch tm = march_tube(f.tube, f.op, tp, 1.0, MarchOptions{});
    REQUIRE_FALSE(tm.trace.steps.empty());
    CHECK(tm.trace.steps_hold);
    CHECK(tm.trace.C_step > 0.0);
    for (std::size_t j = 0; j + 1 < tm.trace.zeta.size(); ++j)
        CHECK(tm.trace.zeta[j + 1] <= tm.trace.C_step * (tm.trace.K + tm.trace.zeta[j]) * (1.0 + 1e-12));
    for (const MarchStep& s : tm.trace.steps) {
        CHECK(s.earlier_change <= 1e-9);
        CHECK(s.residual <= 1e-7);
    }
    CHECK(tm.trace.bound == doctest::Approx(iteration_bound(tm.trace.C_step, tm.trace.K, tm.trace.m)));
}

TEST_CASE("guarded ratio") {
    bool v = false;
    CHECK(guarded_ratio(1.0, 2.0, v) == 0.5);
    CHECK_FALSE(v);
    CHECK(guarded_ratio(0.0, 0.0, v) == 0.0);
    CHECK_FALSE(v);
    CHECK(std::isinf(guarded_ratio(1.0, 0.0, v)));
    CHECK(v);
}

TEST_CASE("coefficients stay uniformly elliptic") {
    CoefficientSpec spec;
    spec.family = "bump";
    spec.eps = 0.3;
    Coefficients a(spec);
    auto dom = make_domain(DomainSpec{});
    EllipticityReport e = ellipticity_probe(a, dom->sample_boundary(500).points, 3);
    CHECK(e.lambda >= 1.0);
    CHECK(e.lambda < 10.0);
    CHECK(Coefficients{}.constant());
    CHECK((Coefficients{}.value(Vec3(0.1, 0.2, 0.3)) - Mat3::Identity()).norm() == 0.0);
}
