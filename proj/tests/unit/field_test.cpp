#include <cmath>
#include <random>

#include "doctest.h"
#include "poincare/analysis.hpp"

using namespace poincare;

namespace {

std::shared_ptr<const BoundaryField> ball_field(const std::string& family, const std::string& profile) {
    DomainSpec ds;
    ds.collar_width = 0.7;
    FieldSpec fs;
    fs.family = family;
    fs.profile = profile;
    return std::make_shared<BoundaryField>(fs, make_domain(ds));
}

Vec3 on_sphere(std::mt19937& rng) {
    std::normal_distribution<double> g;
    return Vec3(g(rng), g(rng), g(rng)).normalized();
}

}  // namespace

TEST_CASE("decomposition splits a unit vector into tangential and normal parts") {
    std::mt19937 rng(5);
    for (int i = 0; i < 500; ++i) {
        Vec3 ell = on_sphere(rng), nu = on_sphere(rng);
        Decomposition d = decompose(ell, nu);
        CHECK(std::abs(d.tau.dot(nu)) < 1e-14);
        CHECK(d.gamma == doctest::Approx(ell.dot(nu)));
        CHECK(d.tau.squaredNorm() + d.gamma * d.gamma == doctest::Approx(1.0).epsilon(1e-13));
        CHECK((d.tau + d.gamma * nu - ell).norm() < 1e-14);
    }
}

TEST_CASE("boundary fields are unit and split consistently") {
    for (const char* fam : {"meridional", "rotational"})
        for (const char* prof : {"one", "square", "linear", "shifted_square", "band"}) {
            auto bf = ball_field(fam, prof);
            FieldStats s = field_stats(*bf, bf->domain().sample_boundary(2000));
            CAPTURE(fam);
            CAPTURE(prof);
            CHECK(s.max_unit_defect < 1e-12);
            CHECK(s.max_tau_normal < 1e-12);
            CHECK(s.max_pythagoras < 1e-12);
        }
}

TEST_CASE("band profile vanishes exactly on the band") {
    auto bf = ball_field("meridional", "band");
    for (double z = -0.25; z <= 0.25; z += 0.01) CHECK(bf->profile(z) == 0.0);
    for (double z : {-0.9, -0.5, -0.3, 0.3, 0.5, 0.9}) CHECK(bf->profile(z) > 0.0);
    for (double z : {-1.0, 1.0}) CHECK(bf->profile(z) == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("neutrality verdicts") {
    CHECK(classify_neutrality(*ball_field("meridional", "band"), 1e-8, 4001).neutral);
    CHECK(classify_neutrality(*ball_field("meridional", "square"), 1e-8, 4001).neutral);
    NeutralityVerdict lin = classify_neutrality(*ball_field("meridional", "linear"), 1e-8, 4001);
    CHECK_FALSE(lin.neutral);
    CHECK(lin.min_gamma < 0.0);
    CHECK_FALSE(lin.witnesses.empty());
    CHECK(tangency_set(*ball_field("normal", "one"), 1e-8, 4001).empty());
}

TEST_CASE("band tangency set is a zone of area pi") {
    // zone of height 1/2 on the unit sphere: 2 pi R h
    TangencySet E = tangency_set(*ball_field("meridional", "band"), 1e-8, 8001);
    CHECK(E.area() == doctest::Approx(M_PI).epsilon(0.03));
    for (const Vec3& z : E.points) CHECK(std::abs(z.z()) <= 0.25 + 1e-12);
    REQUIRE(E.components.size() == 1);
    CHECK(E.components[0].label == "massive-measure");
}

TEST_CASE("generator flow on the sphere solves the tanh law") {
    // x3' = 1 - x3^2 on the unit sphere
    auto bf = ball_field("meridional", "band");
    GeneratorField G(bf);
    const double z0 = -0.6;
    Vec3 x(std::sqrt(1.0 - z0 * z0), 0.0, z0);
    for (double t : {0.1, 0.5, 1.0, 2.0}) {
        FlowResult f = trajectory(G, x, t, 1e-3);
        CHECK(f.point.z() == doctest::Approx(std::tanh(t + std::atanh(z0))).epsilon(1e-8));
        CHECK(f.point.norm() == doctest::Approx(1.0).epsilon(1e-8));
    }
}

TEST_CASE("band exit time and tangency angle") {
    auto bf = ball_field("meridional", "band");
    GeneratorField G(bf);
    Vec3 x(std::sqrt(1.0 - 1.0 / 16.0), 0.0, -0.25);
    CHECK(band_exit_time(G, *bf, x, 1e-8, 1e-3, 10.0) == doctest::Approx(2.0 * std::atanh(0.25)).epsilon(1e-3));
    auto L = extend_field(bf);
    TangencySet E = tangency_set(*bf, 1e-8, 4001);
    Certificate c = certify_nontrapping(*L, E, CertifyOptions{});
    CHECK(c.ok());
    CHECK(std::abs(c.kappa0 - 2.0 * std::asin(0.25)) < 1e-3);
    CHECK(c.transversality > 0.0);
}

TEST_CASE("rotational field has closed trajectories") {
    auto bf = ball_field("rotational", "band");
    auto L = extend_field(bf);
    TangencySet E = tangency_set(*bf, 1e-8, 2001);
    Certificate c = certify_nontrapping(*L, E, CertifyOptions{});
    REQUIRE_FALSE(c.ok());
    CHECK(c.violation->kind == "closed");
}

TEST_CASE("extension is unit, matches the boundary field and the tangent field") {
    RunConfig cfg;
    cfg.domain.collar_width = 0.7;
    cfg.problems = {"r2"};
    cfg.grid_levels = {8};
    Scenario sc = build_scenario(cfg);
    ExtensionCheck ec = extension_check(sc, 4000, 2);
    CHECK(ec.unit_defect <= 1e-8);
    CHECK(ec.boundary_defect <= 1e-8);
    CHECK(ec.tangency_defect <= 1e-8);
    CHECK(ec.transversality > 0.0);
    std::mt19937 rng(9);
    std::uniform_real_distribution<double> depth(0.0, 0.69);
    for (int i = 0; i < 200; ++i) {
        Vec3 x = (1.0 - depth(rng)) * on_sphere(rng);
        CHECK(sc.L->value(x).norm() == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("flows of the extension satisfy the Picard bound") {
    RunConfig cfg;
    cfg.domain.collar_width = 0.7;
    cfg.problems = {"r2"};
    cfg.grid_levels = {8};
    Scenario sc = build_scenario(cfg);
    PicardReport pr = picard_check(sc, 30, 4);
    CHECK(pr.pairs == 30);
    CHECK(pr.violations == 0);
    CHECK(pr.lipschitz > 0.0);
    CHECK(lipschitz_probe(ConstantDirection(Vec3(1, 2, 3)), {Vec3::Zero(), Vec3(0.1, 0, 0)}, 1e-4) == 0.0);
}
