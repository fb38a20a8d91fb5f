#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "poincare/analysis.hpp"

namespace poincare {

/// Discrete W^{k,q}(Omega) norms, k = 0..2, with the data norms.
struct NormReport {
    double q = 2.0;
    double w0 = 0.0, w1 = 0.0, w2 = 0.0;
    double f_norm = 0.0;    // F^q(Omega, N)
    double phi_norm = 0.0;  // Phi^q(dOmega, N)
};
NormReport norm_report(const Grid& grid, const RegionMasks& regions, const GridField& u, const EstimateReport& e);

struct Gate {
    std::string name;
    double value = 0.0;
    double limit = 0.0;
    bool pass = false;
};
/// Residual gates of a solve; the error gate is added when an exact solution is known.
std::vector<Gate> solve_gates(const RunConfig& cfg, const SolveReport& rep, const double* error_max);
bool all_pass(const std::vector<Gate>& gates);

/// 0 success, 1 gate failure, 2 config, 3 certification, 4 solver, 5 cover, 6 blend, 7 internal.
int exit_code(ErrorCode code);

/// %.10g with inf / nan spelled out; the only number format used in tables.
std::string fmt(double v);

std::string norm_report_json(const NormReport& n);
std::string solve_report_json(const RunConfig& cfg, const std::string& problem, int level, const SolveReport& rep,
                              const NormReport& norms, const std::vector<Gate>& gates, const double* error_max);
std::string field_report_json(const RunConfig& cfg, const FieldAnalysis& fa);

std::string march_trace_csv(const SolveReport& rep);  // tube, j, T, zeta, C_step, ...
std::string tubes_csv(const SolveReport& rep);
std::string estimate_csv(const std::vector<double>& h, const std::vector<EstimateReport>& est);
std::string residuals_csv(const SolveReport& rep);
std::string tangency_csv(const TangencySet& E, const Certificate& cert);
std::string sweep_csv_header();
std::string sweep_csv_row(const SweepRow& row);
std::string theta_csv(const ThetaSweep& ts);
std::string convergence_csv_header();
std::string convergence_csv_row(const ConvergenceRow& row);
std::string halving_csv(const std::vector<HalvingRow>& rows);

/// Lattice dump: 16-byte header "PNCR", uint16 nx, ny, nz, uint16 0, float32 h, then nx*ny*nz float64
/// values in lattice order with NaN off the active set. The text form lists "x y z value" per active node.
void write_dump(const std::string& path, const Grid& grid, const GridField& u, bool binary);
struct Dump {
    std::uint16_t nx = 0, ny = 0, nz = 0;
    float h = 0.0f;
    std::vector<double> values;
};
Dump read_dump(const std::string& path);

void write_text(const std::string& path, const std::string& text);

}  // namespace poincare
