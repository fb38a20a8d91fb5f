#include "poincare/config.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

namespace poincare {

namespace {

using json = nlohmann::json;

struct Reader {
    const std::string& text;
    const std::string& source;

    int line_of(const std::string& key) const {
        auto pos = text.find("\"" + key + "\"");
        if (pos == std::string::npos) return 0;
        return 1 + static_cast<int>(std::count(text.begin(), text.begin() + static_cast<long>(pos), '\n'));
    }

    [[noreturn]] void fail(const std::string& path, const std::string& msg) const {
        std::string key = path.substr(path.find_last_of('.') + 1);
        int line = line_of(key);
        std::ostringstream os;
        os << source;
        if (line > 0) os << ":" << line;
        os << ": field '" << path << "': " << msg;
        throw Error(ErrorCode::config, os.str());
    }

    void only(const json& j, const std::string& path, std::initializer_list<const char*> keys) const {
        if (!j.is_object()) fail(path, "expected an object");
        std::set<std::string> ok(keys.begin(), keys.end());
        for (auto it = j.begin(); it != j.end(); ++it)
            if (!ok.count(it.key())) fail(path.empty() ? it.key() : path + "." + it.key(), "unknown field");
    }

    double number(const json& j, const char* key, const std::string& path, double fallback) const {
        if (!j.contains(key)) return fallback;
        const json& v = j.at(key);
        if (!v.is_number()) fail(path + key, "expected a number");
        return v.get<double>();
    }

    long integer(const json& j, const char* key, const std::string& path, long fallback) const {
        if (!j.contains(key)) return fallback;
        const json& v = j.at(key);
        if (!v.is_number_integer()) fail(path + key, "expected an integer");
        return v.get<long>();
    }

    std::string string(const json& j, const char* key, const std::string& path, const std::string& fallback) const {
        if (!j.contains(key)) return fallback;
        const json& v = j.at(key);
        if (!v.is_string()) fail(path + key, "expected a string");
        return v.get<std::string>();
    }

    Vec3 vec3(const json& j, const char* key, const std::string& path, const Vec3& fallback) const {
        if (!j.contains(key)) return fallback;
        const json& v = j.at(key);
        if (!v.is_array() || v.size() != 3) fail(path + key, "expected an array of 3 numbers");
        Vec3 out;
        for (int i = 0; i < 3; ++i) {
            if (!v[i].is_number()) fail(path + key, "expected an array of 3 numbers");
            out[i] = v[i].get<double>();
        }
        return out;
    }

    const json& section(const json& j, const char* key, bool required) const {
        static const json empty = json::object();
        if (!j.contains(key)) {
            if (required) fail(key, "missing required field");
            return empty;
        }
        return j.at(key);
    }
};

}  // namespace

RunConfig parse_config(const std::string& text, const std::string& source) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& e) {
        std::size_t pos = std::min<std::size_t>(e.byte, text.size());
        int line = 1 + static_cast<int>(std::count(text.begin(), text.begin() + static_cast<long>(pos), '\n'));
        throw Error(ErrorCode::config, source + ":" + std::to_string(line) + ": parse error: " + e.what());
    }
    Reader rd{text, source};
    rd.only(root, "", {"domain", "field", "coefficients", "problems", "problem", "p", "q", "grid_levels",
                       "neighborhoods", "pipeline", "tolerances", "analysis", "seed", "output", "dump"});
    RunConfig c;

    const json& dom = rd.section(root, "domain", true);
    rd.only(dom, "domain", {"kind", "radius", "center", "semi_axes", "perturbation", "collar_width"});
    c.domain.kind = rd.string(dom, "kind", "domain.", c.domain.kind);
    c.domain.radius = rd.number(dom, "radius", "domain.", c.domain.radius);
    c.domain.center = rd.vec3(dom, "center", "domain.", c.domain.center);
    c.domain.semi_axes = rd.vec3(dom, "semi_axes", "domain.", c.domain.semi_axes);
    c.domain.perturbation = rd.number(dom, "perturbation", "domain.", c.domain.perturbation);
    if (dom.contains("collar_width")) c.domain.collar_width = rd.number(dom, "collar_width", "domain.", 0.0);

    const json& fld = rd.section(root, "field", true);
    rd.only(fld, "field", {"family", "profile", "axis", "band_half_width", "band_ramp", "shift", "eps_tan"});
    c.field.family = rd.string(fld, "family", "field.", c.field.family);
    c.field.profile = rd.string(fld, "profile", "field.", c.field.profile);
    c.field.axis = rd.vec3(fld, "axis", "field.", c.field.axis);
    c.field.band_half_width = rd.number(fld, "band_half_width", "field.", c.field.band_half_width);
    c.field.band_ramp = rd.number(fld, "band_ramp", "field.", c.field.band_ramp);
    c.field.shift = rd.number(fld, "shift", "field.", c.field.shift);
    c.field.eps_tan = rd.number(fld, "eps_tan", "field.", c.field.eps_tan);

    const json& co = rd.section(root, "coefficients", false);
    rd.only(co, "coefficients", {"family", "eps", "width"});
    c.coefficients.family = rd.string(co, "family", "coefficients.", c.coefficients.family);
    c.coefficients.eps = rd.number(co, "eps", "coefficients.", c.coefficients.eps);
    c.coefficients.width = rd.number(co, "width", "coefficients.", c.coefficients.width);

    if (root.contains("problems")) {
        const json& pr = root.at("problems");
        if (!pr.is_array()) rd.fail("problems", "expected an array of solution names");
        for (const json& v : pr) {
            if (!v.is_string()) rd.fail("problems", "expected an array of solution names");
            c.problems.push_back(v.get<std::string>());
        }
    } else if (root.contains("problem")) {
        c.problems.push_back(rd.string(root, "problem", "", ""));
    } else {
        rd.fail("problems", "missing required field");
    }

    c.p = rd.number(root, "p", "", c.p);
    c.q = rd.number(root, "q", "", c.q);

    if (!root.contains("grid_levels")) rd.fail("grid_levels", "missing required field");
    const json& gl = root.at("grid_levels");
    if (!gl.is_array() || gl.empty()) rd.fail("grid_levels", "expected a nonempty array of integers");
    for (const json& v : gl) {
        if (!v.is_number_integer()) rd.fail("grid_levels", "expected a nonempty array of integers");
        c.grid_levels.push_back(v.get<int>());
    }

    if (root.contains("neighborhoods")) {
        const json& nb = root.at("neighborhoods");
        if (!nb.is_array() || nb.size() != 3) rd.fail("neighborhoods", "expected [rho1, rho2, rho3]");
        for (int i = 0; i < 3; ++i) {
            if (!nb[i].is_number()) rd.fail("neighborhoods", "expected [rho1, rho2, rho3]");
            c.rho[i] = nb[i].get<double>();
        }
    }

    const json& pl = rd.section(root, "pipeline", false);
    rd.only(pl, "pipeline", {"n_per_r", "r", "e_samples", "blend_tolerance", "passes", "boundary_points", "calibration_levels",
                             "probe_trials", "max_tubes", "cap_rtol", "cap_max_iterations", "direct_limit"});
    PipelineOptions& po = c.pipeline;
    po.tube.n_per_r = static_cast<int>(rd.integer(pl, "n_per_r", "pipeline.", 5));
    po.r = rd.number(pl, "r", "pipeline.", po.r);
    po.e_samples = static_cast<std::size_t>(rd.integer(pl, "e_samples", "pipeline.", static_cast<long>(po.e_samples)));
    po.blend_tolerance = rd.number(pl, "blend_tolerance", "pipeline.", po.blend_tolerance);
    po.passes = static_cast<int>(rd.integer(pl, "passes", "pipeline.", po.passes));
    po.boundary_points =
        static_cast<std::size_t>(rd.integer(pl, "boundary_points", "pipeline.", static_cast<long>(po.boundary_points)));
    po.calibration_levels = static_cast<int>(rd.integer(pl, "calibration_levels", "pipeline.", po.calibration_levels));
    po.probe_trials = static_cast<int>(rd.integer(pl, "probe_trials", "pipeline.", po.probe_trials));
    po.max_tubes = static_cast<std::size_t>(rd.integer(pl, "max_tubes", "pipeline.", static_cast<long>(po.max_tubes)));
    po.cap.rtol = rd.number(pl, "cap_rtol", "pipeline.", po.cap.rtol);
    po.cap.max_iterations = static_cast<int>(rd.integer(pl, "cap_max_iterations", "pipeline.", po.cap.max_iterations));
    po.regular.direct_limit =
        static_cast<std::size_t>(rd.integer(pl, "direct_limit", "pipeline.", static_cast<long>(po.regular.direct_limit)));

    const json& tol = rd.section(root, "tolerances", false);
    rd.only(tol, "tolerances", {"interior", "boundary", "error"});
    c.interior_tolerance = rd.number(tol, "interior", "tolerances.", c.interior_tolerance);
    c.boundary_tolerance = rd.number(tol, "boundary", "tolerances.", c.boundary_tolerance);
    c.error_tolerance = rd.number(tol, "error", "tolerances.", c.error_tolerance);

    const json& an = rd.section(root, "analysis", false);
    rd.only(an, "analysis", {"field_samples", "picard_pairs", "theta_levels", "study_per_r"});
    c.field_samples = static_cast<std::size_t>(rd.integer(an, "field_samples", "analysis.", static_cast<long>(c.field_samples)));
    c.picard_pairs = static_cast<std::size_t>(rd.integer(an, "picard_pairs", "analysis.", static_cast<long>(c.picard_pairs)));
    c.theta_levels = static_cast<int>(rd.integer(an, "theta_levels", "analysis.", c.theta_levels));
    if (an.contains("study_per_r")) {
        const json& v = an.at("study_per_r");
        if (!v.is_array()) rd.fail("analysis.study_per_r", "expected an array of integers");
        c.study_per_r.clear();
        for (const json& x : v) {
            if (!x.is_number_integer()) rd.fail("analysis.study_per_r", "expected an array of integers");
            c.study_per_r.push_back(x.get<int>());
        }
    }

    long seed = rd.integer(root, "seed", "", 1);
    if (seed < 0) rd.fail("seed", "must be nonnegative");
    c.seed = static_cast<unsigned>(seed);
    c.pipeline.seed = c.seed;
    c.output = rd.string(root, "output", "", c.output);
    c.dump = rd.string(root, "dump", "", c.dump);
    c.pipeline.eps_tan = c.field.eps_tan;

    try {
        validate(c);
    } catch (const Error& e) {
        throw Error(ErrorCode::config, source + ": " + e.what());
    }
    return c;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::config, "cannot read config file " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str(), path);
}

void validate(const RunConfig& c) {
    auto bad = [](const std::string& m) { throw Error(ErrorCode::config, m); };
    if (!(c.p > 1.0 && c.p <= c.q)) bad("exponents must satisfy 1 < p <= q");
    if (!(c.rho[0] > 0.0 && c.rho[0] < c.rho[1] && c.rho[1] < c.rho[2])) bad("neighborhood radii must increase strictly");
    if (c.grid_levels.empty()) bad("grid_levels is empty");
    for (std::size_t i = 0; i < c.grid_levels.size(); ++i) {
        if (c.grid_levels[i] < 2) bad("grid levels must be at least 2");
        if (i > 0 && c.grid_levels[i] <= c.grid_levels[i - 1]) bad("grid levels must be sorted and distinct");
    }
    if (c.problems.empty()) bad("no problems listed");
    auto names = analytic_solution_names();
    for (const std::string& p : c.problems)
        if (std::find(names.begin(), names.end(), p) == names.end()) bad("unknown manufactured solution '" + p + "'");
    if (c.dump != "binary" && c.dump != "text" && c.dump != "none") bad("dump must be binary, text or none");
    if (c.pipeline.tube.n_per_r < 2) bad("n_per_r must be at least 2");
    if (c.pipeline.passes < 1) bad("passes must be at least 1");
    if (c.pipeline.r < 0.0) bad("tube radius must be nonnegative");
    if (!(c.interior_tolerance > 0.0 && c.boundary_tolerance > 0.0 && c.error_tolerance > 0.0))
        bad("tolerances must be positive");
    if (c.theta_levels < 2) bad("theta_levels must be at least 2");
    if (c.study_per_r.size() < 2) bad("study_per_r needs two lattice resolutions");
}

std::string config_json(const RunConfig& c) {
    json j;
    j["domain"] = {{"kind", c.domain.kind},
                   {"radius", c.domain.radius},
                   {"center", {c.domain.center.x(), c.domain.center.y(), c.domain.center.z()}},
                   {"semi_axes", {c.domain.semi_axes.x(), c.domain.semi_axes.y(), c.domain.semi_axes.z()}},
                   {"perturbation", c.domain.perturbation}};
    if (c.domain.collar_width) j["domain"]["collar_width"] = *c.domain.collar_width;
    j["field"] = {{"family", c.field.family},
                  {"profile", c.field.profile},
                  {"axis", {c.field.axis.x(), c.field.axis.y(), c.field.axis.z()}},
                  {"band_half_width", c.field.band_half_width},
                  {"band_ramp", c.field.band_ramp},
                  {"shift", c.field.shift},
                  {"eps_tan", c.field.eps_tan}};
    j["coefficients"] = {{"family", c.coefficients.family}, {"eps", c.coefficients.eps}, {"width", c.coefficients.width}};
    j["problems"] = c.problems;
    j["p"] = c.p;
    j["q"] = c.q;
    j["grid_levels"] = c.grid_levels;
    j["neighborhoods"] = {c.rho[0], c.rho[1], c.rho[2]};
    j["pipeline"] = {{"n_per_r", c.pipeline.tube.n_per_r},
                     {"r", c.pipeline.r},
                     {"e_samples", c.pipeline.e_samples},
                     {"blend_tolerance", c.pipeline.blend_tolerance},
                     {"passes", c.pipeline.passes},
                     {"boundary_points", c.pipeline.boundary_points},
                     {"calibration_levels", c.pipeline.calibration_levels},
                     {"probe_trials", c.pipeline.probe_trials},
                     {"max_tubes", c.pipeline.max_tubes},
                     {"cap_rtol", c.pipeline.cap.rtol},
                     {"cap_max_iterations", c.pipeline.cap.max_iterations},
                     {"direct_limit", c.pipeline.regular.direct_limit}};
    j["tolerances"] = {{"interior", c.interior_tolerance}, {"boundary", c.boundary_tolerance}, {"error", c.error_tolerance}};
    j["analysis"] = {{"field_samples", c.field_samples},
                     {"picard_pairs", c.picard_pairs},
                     {"theta_levels", c.theta_levels},
                     {"study_per_r", c.study_per_r}};
    j["seed"] = c.seed;
    j["output"] = c.output;
    j["dump"] = c.dump;
    return j.dump(2);
}

Scenario build_scenario(const RunConfig& cfg) {
    Scenario s;
    s.domain = make_domain(cfg.domain);
    s.field = std::make_shared<BoundaryField>(cfg.field, s.domain);
    s.L = extend_field(s.field);
    s.a = std::make_shared<Coefficients>(cfg.coefficients);
    auto E = std::make_shared<TangencySet>(tangency_set(*s.field, cfg.field.eps_tan, cfg.pipeline.e_samples));
    s.E = E;
    s.nb = std::make_shared<Neighborhoods>(*E, *s.domain, cfg.rho);
    return s;
}

Discretization discretize(const Scenario& sc, int level) {
    Discretization d;
    d.grid = build_grid(*sc.domain, 1.0 / level);
    d.regions = build_regions(d.grid, *sc.domain, sc.nb.get());
    return d;
}

ManufacturedInstance manufactured_instance(const Scenario& sc, const Discretization& d, const std::string& solution,
                                           double p, double q) {
    ManufacturedInstance mi;
    mi.m = manufactured_problem(analytic_solution(solution), sc.a, sc.field);
    DiscreteProblem& P = mi.problem;
    P.domain = sc.domain;
    P.field = sc.field;
    P.L = sc.L;
    P.a = sc.a;
    P.f = mi.m.f;
    P.grad_f = mi.m.grad_f;
    P.phi = mi.m.phi;
    P.p = p;
    P.q = q;
    P.E = sc.E;
    P.nb = sc.nb;
    mi.exact = sample(d.grid, mi.m.exact.value);
    P.mean_target = weighted_mean(d.grid, mi.exact, d.regions.omega0);
    return mi;
}

}  // namespace poincare
