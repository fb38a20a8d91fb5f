#include <benchmark/benchmark.h>

#include "poincare/config.hpp"

using namespace poincare;

namespace {

RunConfig band() {
    RunConfig c;
    c.domain.collar_width = 0.7;
    c.problems = {"x1sq_minus_x2sq"};
    c.grid_levels = {8};
    return c;
}

const Scenario& scenario() {
    static Scenario sc = build_scenario(band());
    return sc;
}

}  // namespace

static void BM_Projection(benchmark::State& state) {
    auto dom = make_domain(DomainSpec{"ellipsoid", 1.0, Vec3::Zero(), Vec3(1.2, 1.0, 0.8)});
    Vec3 y = dom->boundary_point_along(Vec3(0.7, 0.3, -0.2));
    Vec3 x = y - 0.05 * dom->normal_unchecked(y);
    for (auto _ : state) benchmark::DoNotOptimize(nearest_point(*dom, x));
}
BENCHMARK(BM_Projection);

static void BM_ExtendedField(benchmark::State& state) {
    const Scenario& sc = scenario();
    Vec3 x(0.6, 0.2, 0.1);
    for (auto _ : state) benchmark::DoNotOptimize(sc.L->value(x));
}
BENCHMARK(BM_ExtendedField);

static void BM_Trajectory(benchmark::State& state) {
    const Scenario& sc = scenario();
    Vec3 x(0.7, 0.0, -0.1);
    for (auto _ : state) benchmark::DoNotOptimize(trajectory(*sc.L, x, 0.1, 1e-3));
}
BENCHMARK(BM_Trajectory);

static void BM_BuildGrid(benchmark::State& state) {
    const Scenario& sc = scenario();
    for (auto _ : state) benchmark::DoNotOptimize(build_grid(*sc.domain, 1.0 / state.range(0)));
}
BENCHMARK(BM_BuildGrid)->Arg(8)->Arg(16)->Unit(benchmark::kMillisecond);

static void BM_RegularSolve(benchmark::State& state) {
    RunConfig c = band();
    c.field.profile = "one";
    Scenario sc = build_scenario(c);
    Discretization d = discretize(sc, static_cast<int>(state.range(0)));
    ManufacturedInstance mi = manufactured_instance(sc, d, "exp_cos", 2.0, 2.0);
    for (auto _ : state) benchmark::DoNotOptimize(solve_regular_oblique(mi.problem, d.grid, d.regions));
    state.counters["unknowns"] = static_cast<double>(d.grid.n_active());
}
BENCHMARK(BM_RegularSolve)->Arg(8)->Arg(16)->Unit(benchmark::kMillisecond);

static void BM_TubeMarch(benchmark::State& state) {
    const Scenario& sc = scenario();
    TubeOptions to;
    to.n_per_r = static_cast<int>(state.range(0));
    Tube tube = build_tube(sc.L, *sc.nb, Vec3(std::sqrt(0.99), 0.0, 0.1), 0.05, to);
    TubeOperator op = transform_operator(tube, *sc.a);
    std::vector<Cap> caps = march_caps(tube, op);
    TransformedProblem tp;
    tp.tube = &tube;
    tp.op = &op;
    tp.rhs1.assign(tube.size(), 1.0);
    tp.V_data.assign(tube.size(), 0.0);
    tp.Phi = tp.V_data;
    for (auto _ : state) benchmark::DoNotOptimize(march_tube(tube, caps, op, tp, 1.0, MarchOptions{}));
    state.counters["lattice"] = static_cast<double>(tube.size());
}
BENCHMARK(BM_TubeMarch)->Arg(3)->Arg(5)->Unit(benchmark::kMillisecond);

static void BM_SobolevNorm(benchmark::State& state) {
    const Scenario& sc = scenario();
    Discretization d = discretize(sc, 16);
    GridField u = sample(d.grid, [](const Vec3& x) { return std::exp(x.x()) * std::cos(x.y()); });
    for (auto _ : state) benchmark::DoNotOptimize(sobolev_norm(d.grid, u, 2, 4.0, d.regions.omega));
}
BENCHMARK(BM_SobolevNorm)->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();
