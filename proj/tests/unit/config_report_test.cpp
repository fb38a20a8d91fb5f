#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>

#include "doctest.h"
#include "poincare/report.hpp"

using namespace poincare;

namespace {

const char* minimal = R"({
  "domain": {"kind": "ball", "collar_width": 0.7},
  "field": {"family": "meridional", "profile": "band"},
  "problems": ["r2", "x3"],
  "grid_levels": [8, 16]
})";

std::string config_error(const std::string& text) {
    try {
        parse_config(text, "cfg.json");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::config);
        return e.what();
    }
    return "";
}

std::string with(const std::string& extra) {
    std::string s = minimal;
    s.insert(s.rfind(']') + 1, ",\n  " + extra);
    return s;
}

}  // namespace

TEST_CASE("minimal configuration parses with defaults") {
    RunConfig c = parse_config(minimal);
    CHECK(c.domain.kind == "ball");
    CHECK(c.domain.collar_width.value() == 0.7);
    CHECK(c.field.profile == "band");
    CHECK(c.problems.size() == 2);
    CHECK(c.grid_levels == std::vector<int>{8, 16});
    CHECK(c.p == 2.0);
    CHECK(c.q == 2.0);
    CHECK(c.pipeline.tube.n_per_r == 5);
    CHECK(c.dump == "binary");
}

TEST_CASE("configuration errors name the line") {
    std::string broken = "{\n  \"domain\": {\"kind\": \"ball\"},\n  \"field\": {\"family\": \"meridional\",\n"
                         "  \"problems\": [\"r2\"]\n}\n";
    std::string e = config_error(broken);
    CHECK(e.find("cfg.json:") == 0);
    CHECK(e.find("parse error") != std::string::npos);

    e = config_error(R"({
  "domain": {"kind": "ball"},
  "problems": ["r2"],
  "grid_levels": [8]
})");
    CHECK(e.find("'field'") != std::string::npos);

    e = config_error(with("\"colour\": 3"));
    CHECK(e.find("cfg.json:6") == 0);
    CHECK(e.find("colour") != std::string::npos);

    e = config_error(with("\"pipeline\": {\"n_per_r\": \"five\"}"));
    CHECK(e.find("n_per_r") != std::string::npos);
}

TEST_CASE("configuration invariants are enforced") {
    CHECK_FALSE(config_error(with("\"p\": 3, \"q\": 2")).empty());
    CHECK_FALSE(config_error(with("\"p\": 1")).empty());
    CHECK_FALSE(config_error(with("\"neighborhoods\": [0.3, 0.2, 0.8]")).empty());
    CHECK_FALSE(config_error(with("\"dump\": \"hdf5\"")).empty());
    CHECK_FALSE(config_error(with("\"pipeline\": {\"n_per_r\": 1}")).empty());
    std::string s = minimal;
    CHECK_FALSE(config_error(s.replace(s.find("[8, 16]"), 7, "[16, 8]")).empty());
    s = minimal;
    CHECK_FALSE(config_error(s.replace(s.find("\"x3\""), 4, "\"nope\"")).empty());
    CHECK(config_error(with("\"p\": 2, \"q\": 4")).empty());
}

TEST_CASE("configuration round trips through its JSON form") {
    RunConfig c = parse_config(with("\"p\": 2, \"q\": 4, \"seed\": 17, \"pipeline\": {\"n_per_r\": 3, \"r\": 0.05}"));
    std::string j = config_json(c);
    RunConfig d = parse_config(j);
    CHECK(config_json(d) == j);
    CHECK(d.seed == 17);
    CHECK(d.pipeline.seed == 17);
    CHECK(d.pipeline.r == 0.05);
}

TEST_CASE("number formatting") {
    CHECK(fmt(1.0) == "1");
    CHECK(fmt(0.1) == "0.1");
    CHECK(fmt(1.0 / 3.0) == "0.3333333333");
    CHECK(fmt(INFINITY) == "inf");
    CHECK(fmt(-INFINITY) == "-inf");
    CHECK(fmt(NAN) == "nan");
}

TEST_CASE("exit codes") {
    CHECK(exit_code(ErrorCode::gate_failure) == 1);
    CHECK(exit_code(ErrorCode::config) == 2);
    CHECK(exit_code(ErrorCode::certification) == 3);
    CHECK(exit_code(ErrorCode::trajectory_escape) == 3);
    CHECK(exit_code(ErrorCode::non_convergence) == 4);
    CHECK(exit_code(ErrorCode::cover_failure) == 5);
    CHECK(exit_code(ErrorCode::blend_mismatch) == 6);
    CHECK(exit_code(ErrorCode::invalid_argument) == 7);
}

TEST_CASE("solution dumps") {
    DomainSpec ds;
    ds.collar_width = 0.7;
    auto dom = make_domain(ds);
    Grid g = build_grid(*dom, 0.125);
    GridField u = sample(g, [](const Vec3& x) { return x.x() - 2.0 * x.z() * x.y(); });
    auto dir = std::filesystem::temp_directory_path() / "poincare_dump_test";
    std::filesystem::create_directories(dir);
    std::string bin = (dir / "u.pncr").string(), txt = (dir / "u.txt").string();
    write_dump(bin, g, u, true);
    const std::size_t n = static_cast<std::size_t>(g.nx) * g.ny * g.nz;
    CHECK(std::filesystem::file_size(bin) == 16 + 8 * n);
    std::ifstream in(bin, std::ios::binary);
    char magic[4];
    in.read(magic, 4);
    CHECK(std::string(magic, 4) == "PNCR");
    Dump d = read_dump(bin);
    CHECK(d.nx == g.nx);
    CHECK(d.ny == g.ny);
    CHECK(d.nz == g.nz);
    CHECK(d.h == 0.125f);
    REQUIRE(d.values.size() == n);
    std::size_t finite = 0;
    for (std::size_t id = 0; id < n; ++id) {
        int a = g.active_of[id];
        if (a < 0) {
            CHECK(std::isnan(d.values[id]));
        } else {
            CHECK(d.values[id] == u[a]);
            ++finite;
        }
    }
    CHECK(finite == g.n_active());
    write_dump(txt, g, u, false);
    std::ifstream t(txt);
    std::string first;
    std::getline(t, first);
    CHECK(first.rfind("# PNCR", 0) == 0);
    std::size_t lines = 0;
    for (std::string l; std::getline(t, l);) ++lines;
    CHECK(lines == g.n_active());
    std::filesystem::remove_all(dir);
}
