#include <cmath>
#include <random>

#include "doctest.h"
#include "poincare/config.hpp"

using namespace poincare;

namespace {

struct Setup {
    std::shared_ptr<const Domain> dom;
    Grid grid;
    RegionMasks regions;
};

Setup ball_grid(double h) {
    DomainSpec ds;
    ds.collar_width = 0.7;
    Setup s;
    s.dom = make_domain(ds);
    s.grid = build_grid(*s.dom, h);
    s.regions = build_regions(s.grid, *s.dom, nullptr);
    return s;
}

GridField random_field(const Grid& g, std::mt19937& rng) {
    // smooth random quadratic plus a small trig term
    std::normal_distribution<double> n;
    double c[10];
    for (double& v : c) v = n(rng);
    return sample(g, [&](const Vec3& x) {
        return c[0] + c[1] * x.x() + c[2] * x.y() + c[3] * x.z() + c[4] * x.x() * x.x() + c[5] * x.y() * x.z() +
               c[6] * x.z() * x.z() + c[7] * std::sin(2.0 * x.x() + c[8] * x.y()) + c[9] * x.x() * x.y();
    });
}

}  // namespace

TEST_CASE("cut-cell weights integrate the ball volume") {
    for (double h : {1.0 / 8, 1.0 / 16}) {
        Setup s = ball_grid(h);
        CAPTURE(h);
        CHECK(s.grid.volume() == doctest::Approx(4.0 * M_PI / 3.0).epsilon(5e-3));
        CHECK(s.grid.n_inside + s.grid.n_ghost == s.grid.n_active());
        for (std::size_t a = 0; a < s.grid.n_active(); ++a) {
            CHECK(s.grid.weight[a] >= 0.0);
            CHECK(s.grid.weight[a] <= h * h * h * (1.0 + 1e-12));
        }
    }
}

TEST_CASE("quadratic fit reproduces quadratics") {
    Setup s = ball_grid(1.0 / 8);
    std::mt19937 rng(1);
    std::normal_distribution<double> n;
    Vec3 g(n(rng), n(rng), n(rng));
    Mat3 H;
    H << 1.0, 0.3, -0.2, 0.3, -0.7, 0.5, -0.2, 0.5, 0.4;
    const double c = 0.8;
    GridField u = sample(s.grid, [&](const Vec3& x) { return c + g.dot(x) + 0.5 * x.dot(H * x); });
    std::uniform_real_distribution<double> uni(-0.95, 0.95);
    for (int i = 0; i < 50; ++i) {
        Vec3 p(uni(rng), uni(rng), uni(rng));
        if (p.norm() > 0.95) continue;
        FitStencil f = quadratic_fit(s.grid, p);
        CHECK(f.value(u) == doctest::Approx(c + g.dot(p) + 0.5 * p.dot(H * p)).epsilon(1e-9));
        CHECK((f.gradient(u) - (g + H * p)).norm() < 1e-8);
        CHECK((f.hessian(u) - H).norm() < 1e-7);
        GridSampler gs(s.grid, u);
        GridSampler::Jet j = gs.at(p);
        CHECK(j.value == doctest::Approx(c + g.dot(p) + 0.5 * p.dot(H * p)).epsilon(1e-9));
        CHECK((j.hessian - H).norm() < 1e-7);
    }
}

TEST_CASE("Sobolev norms of polynomials on the unit ball") {
    Setup s = ball_grid(1.0 / 16);
    const auto& om = s.regions.omega;
    GridField one = sample(s.grid, [](const Vec3&) { return 1.0; });
    CHECK(lq_norm(s.grid, one, 2.0, om) == doctest::Approx(std::sqrt(4.0 * M_PI / 3.0)).epsilon(5e-3));
    CHECK(lq_norm(s.grid, one, 4.0, om) == doctest::Approx(std::pow(4.0 * M_PI / 3.0, 0.25)).epsilon(5e-3));
    // int x1^2 = 4 pi / 15, int x1^4 = 4 pi / 35
    GridField x1 = sample(s.grid, [](const Vec3& x) { return x.x(); });
    CHECK(sobolev_norm(s.grid, x1, 1, 2.0, om) ==
          doctest::Approx(std::sqrt(4.0 * M_PI / 15.0 + 4.0 * M_PI / 3.0)).epsilon(1e-2));
    CHECK(sobolev_norm(s.grid, x1, 2, 2.0, om) == doctest::Approx(sobolev_norm(s.grid, x1, 1, 2.0, om)).epsilon(1e-6));
    GridField sq = sample(s.grid, [](const Vec3& x) { return x.x() * x.x(); });
    double exact = 4.0 * M_PI / 35.0 + 4.0 * (4.0 * M_PI / 15.0) + 4.0 * (4.0 * M_PI / 3.0);
    CHECK(sobolev_norm(s.grid, sq, 2, 2.0, om) == doctest::Approx(std::sqrt(exact)).epsilon(1e-2));
}

TEST_CASE("norm properties on random fields") {
    Setup s = ball_grid(1.0 / 8);
    std::mt19937 rng(21);
    const auto& om = s.regions.omega;
    const auto& in = s.regions.omega0;
    REQUIRE(count(in) > 0);
    for (int t = 0; t < 20; ++t) {
        GridField u = random_field(s.grid, rng), v = random_field(s.grid, rng);
        GridField w(u.size());
        for (std::size_t a = 0; a < u.size(); ++a) w[a] = u[a] + v[a];
        for (double q : {2.0, 3.0, 4.0}) {
            double nu = sobolev_norm(s.grid, u, 2, q, om);
            CHECK(sobolev_norm(s.grid, w, 2, q, om) <= nu + sobolev_norm(s.grid, v, 2, q, om) + 1e-12);
            CHECK(sobolev_norm(s.grid, u, 2, q, in) <= nu + 1e-12);
            CHECK(sobolev_norm(s.grid, u, 1, q, om) <= nu + 1e-12);
            CHECK(lq_norm(s.grid, u, q, om) <= sobolev_norm(s.grid, u, 1, q, om) + 1e-12);
            GridField su(u.size());
            for (std::size_t a = 0; a < u.size(); ++a) su[a] = -2.5 * u[a];
            CHECK(sobolev_norm(s.grid, su, 2, q, om) == doctest::Approx(2.5 * nu).epsilon(1e-12));
        }
    }
}

TEST_CASE("fractional boundary norm") {
    auto dom = make_domain(DomainSpec{});
    BoundaryQuadrature bq = boundary_quadrature(*dom, 600);
    double area = 0.0;
    for (double w : bq.weights) area += w;
    // constants have zero seminorm
    double c = fractional_boundary_norm(*dom, bq, [](const Vec3&) { return 2.0; }, 0.5, 2.0);
    CHECK(c == doctest::Approx(2.0 * std::sqrt(area)).epsilon(1e-9));
    ScalarFn lin = [](const Vec3& y) { return y.z(); };
    ScalarFn lin2 = [](const Vec3& y) { return 2.0 * y.z(); };
    double a = fractional_boundary_norm(*dom, bq, lin, 0.5, 2.0);
    CHECK(a > std::sqrt(4.0 * M_PI / 3.0) * 0.99);
    CHECK(fractional_boundary_norm(*dom, bq, lin2, 0.5, 2.0) == doctest::Approx(2.0 * a).epsilon(1e-9));
    CHECK(fractional_boundary_norm(*dom, bq, lin, 1.5, 2.0) > a);
}

TEST_CASE("integrability ladder") {
    CHECK(qprime(2.0, 4.0, 3) == doctest::Approx(4.0));
    CHECK(qprime(1.5, 100.0, 3) == doctest::Approx(3.0));
    CHECK(qprime(3.0, 5.0, 3) == 5.0);
    CHECK(qprime(4.0, 4.0, 3) == 4.0);
    std::vector<double> l = qprime_ladder(3.0, 10.0, 3);
    CHECK(l.size() == 1);
    std::vector<double> m = qprime_ladder(2.0, 10.0, 3);
    REQUIRE(m.size() == 2);
    CHECK(m[0] == doctest::Approx(6.0));
    CHECK(m[1] == doctest::Approx(10.0));
    std::vector<double> k = qprime_ladder(1.2, 50.0, 3);
    for (std::size_t i = 1; i < k.size(); ++i) CHECK(k[i] > k[i - 1]);
    CHECK(k.back() == 50.0);
    CHECK_THROWS_AS(qprime(4.0, 2.0, 3), Error);
    CHECK_THROWS_AS(qprime(1.0, 2.0, 3), Error);
}
