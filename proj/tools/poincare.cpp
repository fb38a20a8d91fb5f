#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include "CLI11.hpp"
#include "json.hpp"
#include "poincare/report.hpp"

namespace fs = std::filesystem;
using namespace poincare;
using json = nlohmann::json;

namespace {

struct Common {
    std::string config;
    std::string out;
    std::optional<unsigned> seed;
    std::optional<int> level;
    bool force = false;
};

RunConfig load(const Common& c) {
    RunConfig cfg = load_config(c.config);
    if (c.seed) {
        cfg.seed = *c.seed;
        cfg.pipeline.seed = *c.seed;
    }
    if (c.level) {
        if (*c.level < 2) throw Error(ErrorCode::config, "--grid-level must be at least 2");
        cfg.grid_levels = {*c.level};
    }
    return cfg;
}

fs::path out_dir(const Common& c, const RunConfig& cfg) {
    fs::path p = c.out.empty() ? fs::path(cfg.output) : fs::path(c.out);
    fs::create_directories(p);
    return p;
}

void say(const std::string& s) { std::cout << s << '\n'; }

int analyze_field_cmd(const Common& c) {
    RunConfig cfg = load(c);
    Scenario sc = build_scenario(cfg);
    FieldAnalysis fa = analyze_field(cfg, sc);
    fs::path dir = out_dir(c, cfg);
    write_text((dir / "field_report.json").string(), field_report_json(cfg, fa) + "\n");
    write_text((dir / "tangency.csv").string(), tangency_csv(*sc.E, fa.certificate));
    if (fa.regular) say("notice: " + fa.notice);
    say("neutral " + std::string(fa.neutrality.neutral ? "yes" : "no") + ", E points " + std::to_string(fa.e_points) +
        ", kappa0 " + fmt(fa.certificate.kappa0) + ", kappa " + fmt(fa.certificate.kappa));
    say("picard pairs " + std::to_string(fa.picard.pairs) + ", violations " + std::to_string(fa.picard.violations));
    if (!fa.neutrality.neutral) {
        std::cerr << "certification: gamma changes sign on the boundary\n";
        return 3;
    }
    if (!fa.certificate.ok()) {
        std::cerr << "certification: " << fa.certificate.violation->kind << " trajectory\n";
        return 3;
    }
    return 0;
}

int solve_cmd(const Common& c) {
    RunConfig cfg = load(c);
    Scenario sc = build_scenario(cfg);
    if (!c.force && !sc.E->empty()) {
        NeutralityVerdict nv = classify_neutrality(*sc.field, cfg.field.eps_tan, cfg.pipeline.e_samples);
        if (!nv.neutral) {
            std::cerr << "certification: gamma changes sign on the boundary (use --force to run anyway)\n";
            return 3;
        }
        Certificate cert = certify_nontrapping(*sc.L, *sc.E, CertifyOptions{});
        if (!cert.ok()) {
            std::cerr << "certification: " << cert.violation->kind << " trajectory (use --force to run anyway)\n";
            return 3;
        }
    }
    const int level = cfg.grid_levels.back();
    Discretization d = discretize(sc, level);
    std::vector<ManufacturedInstance> inst;
    inst.reserve(cfg.problems.size());
    for (const std::string& name : cfg.problems) inst.push_back(manufactured_instance(sc, d, name, cfg.p, cfg.q));
    std::vector<DegenerateJob> jobs;
    for (const ManufacturedInstance& mi : inst) jobs.push_back({&mi.problem, &d.grid, &d.regions});
    std::vector<SolveReport> reps = solve_degenerate_batch(jobs, cfg.pipeline);
    fs::path dir = out_dir(c, cfg);
    bool ok = true;
    for (std::size_t i = 0; i < reps.size(); ++i) {
        const SolveReport& rep = reps[i];
        double err = 0.0, m = 0.0;
        for (std::size_t a = 0; a < rep.u.size(); ++a) {
            err = std::max(err, std::abs(rep.u[a] - inst[i].exact[a]));
            m = std::max(m, std::abs(inst[i].exact[a]));
        }
        if (m > 0.0) err /= m;
        std::vector<Gate> gates = solve_gates(cfg, rep, &err);
        NormReport norms = norm_report(d.grid, d.regions, rep.u, rep.estimate);
        fs::path pd = dir / cfg.problems[i];
        fs::create_directories(pd);
        write_text((pd / "report.json").string(), solve_report_json(cfg, cfg.problems[i], level, rep, norms, gates, &err) + "\n");
        write_text((pd / "norms.json").string(), norm_report_json(norms) + "\n");
        write_text((pd / "estimate.csv").string(), estimate_csv({d.grid.h}, {rep.estimate}));
        write_text((pd / "residuals.csv").string(), residuals_csv(rep));
        write_text((pd / "march_trace.csv").string(), march_trace_csv(rep));
        write_text((pd / "tubes.csv").string(), tubes_csv(rep));
        if (cfg.dump == "binary") write_dump((pd / "solution.pncr").string(), d.grid, rep.u, true);
        if (cfg.dump == "text") write_dump((pd / "solution.txt").string(), d.grid, rep.u, false);
        bool pass = all_pass(gates);
        ok = ok && pass;
        std::string line = cfg.problems[i] + ": error " + fmt(err) + ", ratio5 " + fmt(rep.estimate.ratio5) +
                           (rep.regular_only ? ", regular only" : ", tubes " + std::to_string(rep.tubes.size()));
        for (const Gate& g : gates)
            if (!g.pass) line += ", FAILED " + g.name + " " + fmt(g.value) + " > " + fmt(g.limit);
        say(line);
    }
    return ok ? 0 : 1;
}

int verify_estimate_cmd(const Common& c) {
    RunConfig cfg = load(c);
    if (cfg.grid_levels.size() < 2 || cfg.problems.size() < 2)
        throw Error(ErrorCode::config, "verify-estimate needs at least two grid levels and two problems");
    Scenario sc = build_scenario(cfg);
    fs::path dir = out_dir(c, cfg);
    std::ofstream csv(dir / "sweep.csv", std::ios::binary);
    csv << sweep_csv_header() << std::flush;
    std::vector<SweepRow> rows = estimate_sweep(cfg, sc, [&](const SweepRow& r) {
        csv << sweep_csv_row(r) << std::flush;
        say(r.problem + " h=1/" + std::to_string(r.level) + ": ratio5 " + fmt(r.estimate.ratio5));
    });
    SweepSummary s = summarize_sweep(rows, cfg.grid_levels);
    json summary;
    summary["ratio5_min"] = s.ratio5_min;
    summary["ratio5_max"] = s.ratio5_max;
    summary["spread"] = s.spread;
    summary["level_max"] = s.level_max;
    summary["increasing"] = s.increasing;
    summary["violation"] = s.violation;
    bool ok = s.spread <= 3.0 && !s.increasing && !s.violation;
    if (!sc.E->empty()) {
        ThetaSweep ts = theta_sweep(cfg, sc);
        write_text((dir / "theta.csv").string(), theta_csv(ts));
        summary["theta_c"] = ts.c;
        summary["theta_r2"] = ts.r2;
        ok = ok && ts.r2 >= 0.9;
        say("theta ~ " + fmt(ts.c) + " r, R^2 " + fmt(ts.r2));
    } else {
        summary["notice"] = "regular problem: no contraction sweep";
    }
    summary["pass"] = ok;
    write_text((dir / "summary.json").string(), summary.dump(2) + "\n");
    say("ratio5 spread " + fmt(s.spread) + (s.increasing ? ", increasing under refinement" : ""));
    return ok ? 0 : 1;
}

int convergence_cmd(const Common& c) {
    RunConfig cfg = load(c);
    Scenario sc = build_scenario(cfg);
    fs::path dir = out_dir(c, cfg);
    std::ofstream csv(dir / "convergence.csv", std::ios::binary);
    csv << convergence_csv_header() << std::flush;
    convergence_study(cfg, sc, [&](const ConvergenceRow& r) {
        csv << convergence_csv_row(r) << std::flush;
        say(r.problem + " h=1/" + std::to_string(r.level) + ": error " + fmt(r.error_max) + ", W22 error " +
            fmt(r.error_w22) + (r.order_w22 != 0.0 ? ", order " + fmt(r.order_w22) : ""));
    });
    if (!sc.E->empty()) {
        double r = study_radius(cfg, sc);
        std::vector<HalvingRow> hv = reconstruction_study(cfg, sc, cfg.grid_levels.front(), r);
        write_text((dir / "halving.csv").string(), halving_csv(hv));
        for (const HalvingRow& h : hv)
            say("tube lattice " + std::to_string(h.n_per_r) + " per r: defect " + fmt(h.defect) +
                (h.order != 0.0 ? ", order " + fmt(h.order) : ""));
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Oblique derivative problem runner"};
    app.require_subcommand(1);
    Common c;
    auto add = [&](CLI::App* sub, bool solve) {
        sub->add_option("--config", c.config, "run configuration (JSON)")->required();
        sub->add_option("--out", c.out, "output directory");
        sub->add_option("--seed", c.seed, "random seed");
        sub->add_option("--grid-level", c.level, "solve on h = 1/k only");
        if (solve) sub->add_flag("--force", c.force, "skip the certification gate");
    };
    CLI::App* af = app.add_subcommand("analyze-field", "certify the boundary field");
    CLI::App* so = app.add_subcommand("solve", "solve the configured problems");
    CLI::App* ve = app.add_subcommand("verify-estimate", "ratio sweep over problems and grids");
    CLI::App* cs = app.add_subcommand("convergence-study", "errors and orders under refinement");
    add(af, false);
    add(so, true);
    add(ve, false);
    add(cs, false);
    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }
    try {
        if (af->parsed()) return analyze_field_cmd(c);
        if (so->parsed()) return solve_cmd(c);
        if (ve->parsed()) return verify_estimate_cmd(c);
        return convergence_cmd(c);
    } catch (const Error& e) {
        std::cerr << to_string(e.code()) << ": " << e.what() << '\n';
        return exit_code(e.code());
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 7;
    }
}
