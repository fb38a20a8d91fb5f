#include <random>

#include "doctest.h"
#include "poincare/geometry.hpp"

using namespace poincare;

namespace {

Vec3 random_point(std::mt19937& rng, double lo, double hi) {
    std::uniform_real_distribution<double> u(-1.0, 1.0), rad(lo, hi);
    Vec3 v;
    do v = Vec3(u(rng), u(rng), u(rng));
    while (v.norm() < 1e-3 || v.norm() > 1.0);
    return rad(rng) * v.normalized();
}

}  // namespace

TEST_CASE("ball projection has the closed form") {
    Ball ball(2.0, Vec3(0.5, 0.0, -1.0));
    ball.calibrate(std::nullopt);
    std::mt19937 rng(3);
    for (int i = 0; i < 200; ++i) {
        Vec3 x = Vec3(0.5, 0.0, -1.0) + random_point(rng, 0.2, 3.0);
        Vec3 d = x - Vec3(0.5, 0.0, -1.0);
        Projection p = ball.project(x);
        CHECK((p.point - (Vec3(0.5, 0.0, -1.0) + 2.0 * d.normalized())).norm() < 1e-12);
        CHECK((p.normal - d.normalized()).norm() < 1e-12);
        CHECK(p.distance == doctest::Approx(std::abs(d.norm() - 2.0)).epsilon(1e-12));
        CHECK(signed_distance(ball, x) == doctest::Approx(d.norm() - 2.0).epsilon(1e-12));
    }
}

TEST_CASE("ellipsoid projection on the long axis") {
    auto dom = make_domain(DomainSpec{"ellipsoid", 1.0, Vec3::Zero(), Vec3(2.0, 1.0, 1.0)});
    Projection p = nearest_point(*dom, Vec3(2.1, 0.0, 0.0));
    CHECK((p.point - Vec3(2.0, 0.0, 0.0)).norm() < 1e-8);
    CHECK(p.distance == doctest::Approx(0.1).epsilon(1e-8));
    CHECK((p.normal - Vec3(1.0, 0.0, 0.0)).norm() < 1e-8);
}

TEST_CASE("projection property: foot on the boundary, offset along the normal") {
    for (const char* kind : {"ellipsoid", "perturbed_ball"}) {
        DomainSpec spec;
        spec.kind = kind;
        spec.semi_axes = Vec3(1.2, 1.0, 0.8);
        auto dom = make_domain(spec);
        std::mt19937 rng(11);
        const double d0 = dom->collar_width();
        REQUIRE(d0 > 0.0);
        for (int i = 0; i < 300; ++i) {
            Vec3 y = dom->boundary_point_along(random_point(rng, 1.0, 1.0));
            Vec3 nu = dom->normal_unchecked(y);
            std::uniform_real_distribution<double> t(-0.9 * d0, 0.9 * d0);
            Vec3 x = y + t(rng) * nu;
            Projection p = nearest_point(*dom, x);
            CAPTURE(kind);
            CHECK(std::abs(dom->level(p.point)) < 1e-9);
            CHECK((x - p.point).cross(p.normal).norm() < 1e-7);
            CHECK(p.distance == doctest::Approx((x - p.point).norm()).epsilon(1e-9));
            CHECK(p.distance <= (x - y).norm() + 1e-9);
            CHECK((signed_distance(*dom, x) < 0.0) == dom->inside(x));
        }
    }
}

TEST_CASE("collar fits inside the reach") {
    for (const char* kind : {"ball", "ellipsoid", "perturbed_ball"}) {
        DomainSpec spec;
        spec.kind = kind;
        spec.semi_axes = Vec3(1.2, 1.0, 0.8);
        auto dom = make_domain(spec);
        CAPTURE(kind);
        CHECK(dom->collar_width() > 0.0);
        CHECK(dom->collar_width() < dom->reach_estimate());
        CHECK(dom->collar_width() < dom->inradius());
    }
    DomainSpec spec;
    spec.collar_width = 0.7;
    CHECK(make_domain(spec)->collar_width() == 0.7);
}

TEST_CASE("boundary samples integrate the sphere area") {
    auto dom = make_domain(DomainSpec{});
    BoundarySamples s = dom->sample_boundary(4000);
    double a = 0.0;
    for (double w : s.weights) a += w;
    CHECK(a == doctest::Approx(4.0 * M_PI).epsilon(1e-3));
    CHECK(dom->boundary_area() == doctest::Approx(4.0 * M_PI).epsilon(1e-2));
    for (std::size_t i = 0; i < s.size(); ++i) CHECK(std::abs(s.points[i].norm() - 1.0) < 1e-12);
}

TEST_CASE("squared distance is smooth across the boundary") {
    auto dom = make_domain(DomainSpec{"ellipsoid", 1.0, Vec3::Zero(), Vec3(1.2, 1.0, 0.8)});
    BoundarySamples s = dom->sample_boundary(200);
    SmoothnessProbeReport r = squared_distance_smoothness_probe(*dom, s.points, 1e-4);
    CHECK(r.max_boundary_gradient < 1e-3);
    CHECK(r.max_jump < 1e-3);
}
