#include "poincare/report.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>

#include "json.hpp"

namespace poincare {

namespace {

using json = nlohmann::json;

json num(double v) {
    if (std::isfinite(v)) return v;
    return fmt(v);
}

json vec(const Vec3& v) { return json::array({num(v.x()), num(v.y()), num(v.z())}); }

const char* case_name(CapCase c) {
    switch (c) {
        case CapCase::A: return "A";
        case CapCase::B: return "B";
        case CapCase::C: return "C";
    }
    return "?";
}

json estimate_json(const EstimateReport& e) {
    return {{"q", num(e.q)},
            {"u_w2q", num(e.u_w2q)},
            {"u_lq", num(e.u_lq)},
            {"f_norm", num(e.f_norm)},
            {"phi_norm", num(e.phi_norm)},
            {"f_lq", num(e.f_lq)},
            {"phi_plain", num(e.phi_plain)},
            {"u_w2q_away", num(e.u_w2q_away)},
            {"u_w2q_n2", num(e.u_w2q_n2)},
            {"ratio5", num(e.ratio5)},
            {"ratio7", num(e.ratio7)},
            {"ratio8", num(e.ratio8)},
            {"ratio23", num(e.ratio23)},
            {"violation", e.violation},
            {"bookkeeping",
             {{"u_w2q_cover", num(e.u_w2q_cover)},
              {"u_w2q_n2_minus_cover", num(e.u_w2q_n2_minus_cover)},
              {"u_w1q_n", num(e.u_w1q_n)},
              {"dL_w1q_n", num(e.dL_w1q_n)},
              {"eps_interp", num(e.eps_interp)}}}};
}

json info_json(const LinearSolveInfo& i) {
    return {{"method", i.method}, {"iterations", i.iterations}, {"relative_residual", num(i.relative_residual)}};
}

}  // namespace

NormReport norm_report(const Grid& grid, const RegionMasks& regions, const GridField& u, const EstimateReport& e) {
    NormReport n;
    n.q = e.q;
    n.w0 = sobolev_norm(grid, u, 0, e.q, regions.omega);
    n.w1 = sobolev_norm(grid, u, 1, e.q, regions.omega);
    n.w2 = sobolev_norm(grid, u, 2, e.q, regions.omega);
    n.f_norm = e.f_norm;
    n.phi_norm = e.phi_norm;
    return n;
}

std::vector<Gate> solve_gates(const RunConfig& cfg, const SolveReport& rep, const double* error_max) {
    std::vector<Gate> g;
    g.push_back({"interior_residual", rep.residuals.interior_rel, cfg.interior_tolerance,
                 rep.residuals.interior_rel <= cfg.interior_tolerance});
    g.push_back({"boundary_residual", rep.residuals.boundary_rel, cfg.boundary_tolerance,
                 rep.residuals.boundary_rel <= cfg.boundary_tolerance});
    double cap = 0.0;
    for (const TubeReport& t : rep.tubes) cap = std::max(cap, t.max_cap_residual);
    g.push_back({"cap_residual", cap, 1e-7, cap <= 1e-7});
    g.push_back({"estimate_finite", rep.estimate.violation ? 1.0 : 0.0, 0.0, !rep.estimate.violation});
    if (error_max) g.push_back({"error_max", *error_max, cfg.error_tolerance, *error_max <= cfg.error_tolerance});
    return g;
}

bool all_pass(const std::vector<Gate>& gates) {
    for (const Gate& g : gates)
        if (!g.pass) return false;
    return true;
}

int exit_code(ErrorCode code) {
    switch (code) {
        case ErrorCode::gate_failure: return 1;
        case ErrorCode::config: return 2;
        case ErrorCode::certification:
        case ErrorCode::degenerate_boundary:
        case ErrorCode::trajectory_escape: return 3;
        case ErrorCode::non_convergence:
        case ErrorCode::solver_breakdown: return 4;
        case ErrorCode::cover_failure:
        case ErrorCode::radius_too_large: return 5;
        case ErrorCode::blend_mismatch: return 6;
        case ErrorCode::invalid_argument:
        case ErrorCode::outside_collar: return 7;
    }
    return 7;
}

std::string fmt(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

std::string norm_report_json(const NormReport& n) {
    json j = {{"q", num(n.q)},           {"w0", num(n.w0)},           {"w1", num(n.w1)},
              {"w2", num(n.w2)},         {"f_norm", num(n.f_norm)},   {"phi_norm", num(n.phi_norm)}};
    return j.dump(2);
}

std::string solve_report_json(const RunConfig& cfg, const std::string& problem, int level, const SolveReport& rep,
                              const NormReport& norms, const std::vector<Gate>& gates, const double* error_max) {
    json j;
    j["problem"] = problem;
    j["level"] = level;
    j["h"] = 1.0 / level;
    j["p"] = cfg.p;
    j["q"] = cfg.q;
    j["regular_only"] = rep.regular_only;
    j["norms"] = json::parse(norm_report_json(norms));
    j["estimate"] = estimate_json(rep.estimate);
    if (error_max) j["error_max"] = num(*error_max);
    j["residuals"] = {{"interior_max", num(rep.residuals.interior_max)},
                      {"interior_rel", num(rep.residuals.interior_rel)},
                      {"boundary_max", num(rep.residuals.boundary_max)},
                      {"boundary_rel", num(rep.residuals.boundary_rel)},
                      {"source_shift", num(rep.residuals.source_shift)}};
    j["linear"] = {{"regular", info_json(rep.regular_info)}, {"consistency", info_json(rep.consistency_info)}};
    json ladder = json::array();
    for (double v : rep.qprime_ladder) ladder.push_back(num(v));
    j["qprime_ladder"] = ladder;
    if (!rep.regular_only) {
        const Calibration& c = rep.calibration;
        json radii = json::array(), theta = json::array();
        for (double v : c.radii) radii.push_back(num(v));
        for (double v : c.theta) theta.push_back(num(v));
        j["calibration"] = {{"anchor", vec(c.anchor)}, {"r_geo", num(c.r_geo)}, {"c", num(c.c)},
                            {"r2", num(c.r2)},         {"r0", num(c.r0)},       {"r", num(c.r)},
                            {"radii", radii},          {"theta", theta}};
        j["tubes"] = rep.tubes.size();
        j["e_samples"] = rep.e_samples;
        j["blended_nodes"] = rep.blended_nodes;
        j["fixed_ghosts"] = rep.fixed_ghosts;
        j["blend_mismatch"] = num(rep.blend_mismatch);
        j["consistency_change"] = num(rep.consistency_change);
        j["C_step_max"] = num(rep.C_step_max);
        j["C_fit_max"] = num(rep.C_fit_max);
    }
    json gj = json::array();
    for (const Gate& g : gates) gj.push_back({{"name", g.name}, {"value", num(g.value)}, {"limit", num(g.limit)}, {"pass", g.pass}});
    j["gates"] = gj;
    j["timing"] = {{"regular", rep.seconds_regular}, {"tubes", rep.seconds_tubes}, {"consistency", rep.seconds_consistency}};
    j["config"] = json::parse(config_json(cfg));
    return j.dump(2);
}

std::string field_report_json(const RunConfig& cfg, const FieldAnalysis& fa) {
    json j;
    j["regular"] = fa.regular;
    if (!fa.notice.empty()) j["notice"] = fa.notice;
    j["decomposition"] = {{"samples", fa.stats.samples},
                          {"min_gamma", num(fa.stats.min_gamma)},
                          {"max_gamma", num(fa.stats.max_gamma)},
                          {"max_unit_defect", num(fa.stats.max_unit_defect)},
                          {"max_tau_normal", num(fa.stats.max_tau_normal)},
                          {"max_pythagoras", num(fa.stats.max_pythagoras)}};
    json comps = json::array();
    for (const ComponentSummary& c : fa.components) comps.push_back({{"label", c.label}, {"points", c.points}, {"area", num(c.area)}});
    j["tangency"] = {{"points", fa.e_points}, {"area", num(fa.e_area)}, {"components", comps}};
    json wit = json::array();
    for (const Vec3& w : fa.neutrality.witnesses) wit.push_back(vec(w));
    j["neutrality"] = {{"neutral", fa.neutrality.neutral}, {"min_gamma", num(fa.neutrality.min_gamma)}, {"witnesses", wit}};
    json cert = {{"ok", fa.certificate.ok()},
                 {"kappa0", num(fa.certificate.kappa0)},
                 {"kappa", num(fa.certificate.kappa)},
                 {"transversality", num(fa.certificate.transversality)},
                 {"e_trajectories", fa.certificate.e_trajectories},
                 {"collar_trajectories", fa.certificate.collar_trajectories}};
    if (fa.certificate.violation) {
        const Violation& v = *fa.certificate.violation;
        cert["violation"] = {{"kind", v.kind}, {"witness", vec(v.witness)}, {"arclength", num(v.arclength)}};
    }
    j["certificate"] = cert;
    j["extension"] = {{"samples", fa.extension.samples},
                      {"e_samples", fa.extension.e_samples},
                      {"unit_defect", num(fa.extension.unit_defect)},
                      {"boundary_defect", num(fa.extension.boundary_defect)},
                      {"tangency_defect", num(fa.extension.tangency_defect)},
                      {"transversality_c0", num(fa.extension.transversality)}};
    j["picard"] = {{"pairs", fa.picard.pairs},
                   {"violations", fa.picard.violations},
                   {"lipschitz", num(fa.picard.lipschitz)},
                   {"worst_ratio", num(fa.picard.worst_ratio)}};
    j["ellipticity"] = {{"lambda", num(fa.ellipticity.lambda)},
                        {"asymmetry", num(fa.ellipticity.asymmetry)},
                        {"samples", fa.ellipticity.samples}};
    j["seconds"] = fa.seconds;
    j["config"] = json::parse(config_json(cfg));
    return j.dump(2);
}

std::string march_trace_csv(const SolveReport& rep) {
    std::ostringstream os;
    os << "tube,j,T,zeta,C_step,C_fit,case,unknowns,iterations,rate,residual,earlier_change\n";
    for (const TubeReport& t : rep.tubes) {
        const MarchTrace& tr = t.trace;
        for (std::size_t j = 0; j < tr.zeta.size(); ++j) {
            os << t.id << ',' << j << ',' << fmt(tr.T[j]) << ',' << fmt(tr.zeta[j]) << ',' << fmt(tr.C_step) << ','
               << fmt(tr.C_fit);
            if (j < tr.steps.size()) {
                const MarchStep& s = tr.steps[j];
                os << ',' << case_name(s.kind) << ',' << s.unknowns << ',' << s.iterations << ',' << fmt(s.rate) << ','
                   << fmt(s.residual) << ',' << fmt(s.earlier_change);
            } else {
                os << ",,,,,,";
            }
            os << '\n';
        }
    }
    return os.str();
}

std::string tubes_csv(const SolveReport& rep) {
    std::ostringstream os;
    os << "tube,x,y,z,r,T_max,lattice_nodes,samples_covered,grid_nodes,K,v_w2q,ratio23,recon_defect,C_step,C_fit,"
          "steps_hold,max_earlier_change,max_cap_residual,max_iterations\n";
    for (const TubeReport& t : rep.tubes) {
        os << t.id << ',' << fmt(t.anchor.x()) << ',' << fmt(t.anchor.y()) << ',' << fmt(t.anchor.z()) << ','
           << fmt(t.r) << ',' << fmt(t.T_max) << ',' << t.lattice_nodes << ',' << t.samples_covered << ','
           << t.grid_nodes << ',' << fmt(t.K) << ',' << fmt(t.v_w2q) << ',' << fmt(t.ratio23) << ','
           << fmt(t.recon_defect) << ',' << fmt(t.trace.C_step) << ',' << fmt(t.trace.C_fit) << ','
           << (t.trace.steps_hold ? 1 : 0) << ',' << fmt(t.max_earlier_change) << ',' << fmt(t.max_cap_residual)
           << ',' << t.max_iterations << '\n';
    }
    return os.str();
}

std::string estimate_csv(const std::vector<double>& h, const std::vector<EstimateReport>& est) {
    std::ostringstream os;
    os << "h,ratio5,ratio7,ratio8,ratio23,violation\n";
    for (std::size_t i = 0; i < h.size() && i < est.size(); ++i)
        os << fmt(h[i]) << ',' << fmt(est[i].ratio5) << ',' << fmt(est[i].ratio7) << ',' << fmt(est[i].ratio8) << ','
           << fmt(est[i].ratio23) << ',' << (est[i].violation ? 1 : 0) << '\n';
    return os.str();
}

std::string residuals_csv(const SolveReport& rep) {
    std::ostringstream os;
    os << "quantity,value\n";
    os << "interior_max," << fmt(rep.residuals.interior_max) << '\n';
    os << "interior_rel," << fmt(rep.residuals.interior_rel) << '\n';
    os << "boundary_max," << fmt(rep.residuals.boundary_max) << '\n';
    os << "boundary_rel," << fmt(rep.residuals.boundary_rel) << '\n';
    os << "source_shift," << fmt(rep.residuals.source_shift) << '\n';
    os << "regular_linear_residual," << fmt(rep.regular_info.relative_residual) << '\n';
    os << "regular_iterations," << rep.regular_info.iterations << '\n';
    if (!rep.regular_only) {
        double cap = 0.0;
        for (const TubeReport& t : rep.tubes) cap = std::max(cap, t.max_cap_residual);
        os << "consistency_linear_residual," << fmt(rep.consistency_info.relative_residual) << '\n';
        os << "consistency_iterations," << rep.consistency_info.iterations << '\n';
        os << "max_cap_residual," << fmt(cap) << '\n';
        os << "blend_mismatch," << fmt(rep.blend_mismatch) << '\n';
        os << "consistency_change," << fmt(rep.consistency_change) << '\n';
    }
    return os.str();
}

std::string tangency_csv(const TangencySet& E, const Certificate& cert) {
    std::ostringstream os;
    os << "x,y,z,gamma,component,kappa0,kappa\n";
    for (std::size_t i = 0; i < E.points.size(); ++i) {
        const Vec3& p = E.points[i];
        os << fmt(p.x()) << ',' << fmt(p.y()) << ',' << fmt(p.z()) << ',' << fmt(E.gammas[i]) << ',' << E.component[i]
           << ',' << fmt(cert.kappa0) << ',' << fmt(cert.kappa) << '\n';
    }
    return os.str();
}

std::string sweep_csv_header() { return "problem,level,h,ratio5,ratio7,ratio8,ratio23,violation,error_max,interior_rel,boundary_rel,tubes,blend_mismatch\n"; }

std::string sweep_csv_row(const SweepRow& r) {
    std::ostringstream os;
    os << r.problem << ',' << r.level << ',' << fmt(r.h) << ',' << fmt(r.estimate.ratio5) << ','
       << fmt(r.estimate.ratio7) << ',' << fmt(r.estimate.ratio8) << ',' << fmt(r.estimate.ratio23) << ','
       << (r.estimate.violation ? 1 : 0) << ',' << fmt(r.error_max) << ',' << fmt(r.residuals.interior_rel) << ','
       << fmt(r.residuals.boundary_rel) << ',' << r.tubes << ',' << fmt(r.blend_mismatch) << '\n';
    return os.str();
}

std::string theta_csv(const ThetaSweep& ts) {
    std::ostringstream os;
    os << "r,theta,ratio_to_half\n";
    for (std::size_t i = 0; i < ts.radii.size(); ++i)
        os << fmt(ts.radii[i]) << ',' << fmt(ts.theta[i]) << ',' << (i < ts.ratio.size() ? fmt(ts.ratio[i]) : "") << '\n';
    return os.str();
}

std::string convergence_csv_header() { return "problem,level,h,error_max,error_w22,order_max,order_w22,ratio7,regular_only\n"; }

std::string convergence_csv_row(const ConvergenceRow& r) {
    std::ostringstream os;
    os << r.problem << ',' << r.level << ',' << fmt(r.h) << ',' << fmt(r.error_max) << ',' << fmt(r.error_w22) << ','
       << fmt(r.order_max) << ',' << fmt(r.order_w22) << ',' << fmt(r.ratio7) << ',' << (r.regular_only ? 1 : 0) << '\n';
    return os.str();
}

std::string halving_csv(const std::vector<HalvingRow>& rows) {
    std::ostringstream os;
    os << "n_per_r,spacing,defect,order,max_earlier_change,max_cap_residual,steps_hold,C_step,C_fit\n";
    for (const HalvingRow& r : rows)
        os << r.n_per_r << ',' << fmt(r.spacing) << ',' << fmt(r.defect) << ',' << fmt(r.order) << ','
           << fmt(r.max_earlier_change) << ',' << fmt(r.max_cap_residual) << ',' << (r.steps_hold ? 1 : 0) << ','
           << fmt(r.C_step) << ',' << fmt(r.C_fit) << '\n';
    return os.str();
}

void write_dump(const std::string& path, const Grid& grid, const GridField& u, bool binary) {
    if (binary) {
        if (grid.nx > 65535 || grid.ny > 65535 || grid.nz > 65535)
            throw Error(ErrorCode::invalid_argument, "grid too large for the dump header");
        std::ofstream out(path, std::ios::binary);
        if (!out) throw Error(ErrorCode::invalid_argument, "cannot write " + path);
        char header[16] = {'P', 'N', 'C', 'R'};
        std::uint16_t dims[4] = {static_cast<std::uint16_t>(grid.nx), static_cast<std::uint16_t>(grid.ny),
                                 static_cast<std::uint16_t>(grid.nz), 0};
        float h = static_cast<float>(grid.h);
        std::memcpy(header + 4, dims, 8);
        std::memcpy(header + 12, &h, 4);
        out.write(header, 16);
        std::vector<double> values(grid.kind.size(), std::numeric_limits<double>::quiet_NaN());
        for (std::size_t a = 0; a < grid.n_active(); ++a) values[grid.node_of[a]] = u[a];
        out.write(reinterpret_cast<const char*>(values.data()), static_cast<std::streamsize>(values.size() * sizeof(double)));
    } else {
        std::ofstream out(path);
        if (!out) throw Error(ErrorCode::invalid_argument, "cannot write " + path);
        out << "# PNCR " << grid.nx << ' ' << grid.ny << ' ' << grid.nz << ' ' << fmt(grid.h) << '\n';
        for (std::size_t a = 0; a < grid.n_active(); ++a) {
            Vec3 x = grid.position(a);
            out << fmt(x.x()) << ' ' << fmt(x.y()) << ' ' << fmt(x.z()) << ' ' << fmt(u[a]) << '\n';
        }
    }
}

Dump read_dump(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::invalid_argument, "cannot read " + path);
    char header[16];
    if (!in.read(header, 16) || std::memcmp(header, "PNCR", 4) != 0)
        throw Error(ErrorCode::invalid_argument, path + " is not a PNCR dump");
    Dump d;
    std::uint16_t dims[4];
    std::memcpy(dims, header + 4, 8);
    std::memcpy(&d.h, header + 12, 4);
    d.nx = dims[0];
    d.ny = dims[1];
    d.nz = dims[2];
    d.values.resize(static_cast<std::size_t>(d.nx) * d.ny * d.nz);
    if (!in.read(reinterpret_cast<char*>(d.values.data()), static_cast<std::streamsize>(d.values.size() * sizeof(double))))
        throw Error(ErrorCode::invalid_argument, path + " is truncated");
    return d;
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::invalid_argument, "cannot write " + path);
    out << text;
}

}  // namespace poincare
