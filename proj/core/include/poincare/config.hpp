#pragma once

#include <array>
#include <memory>
#include <string>
#include <vector>

#include "poincare/pipeline.hpp"

namespace poincare {

struct RunConfig {
    DomainSpec domain;
    FieldSpec field;
    CoefficientSpec coefficients;
    std::vector<std::string> problems;  // manufactured solution ids
    double p = 2.0;
    double q = 2.0;
    std::vector<int> grid_levels;       // h = 1 / level, increasing
    std::array<double, 3> rho{0.1, 0.7, 0.8};
    PipelineOptions pipeline;
    unsigned seed = 1;
    std::string output = "out";
    std::string dump = "binary";        // binary | text | none
    // gates
    double interior_tolerance = 1e-6;   // relative residual of L u = f
    double boundary_tolerance = 0.5;    // relative residual of the oblique condition
    double error_tolerance = 0.05;      // relative max error against the manufactured solution
    // analysis
    std::size_t field_samples = 10000;
    std::size_t picard_pairs = 100;
    int theta_levels = 4;               // radii r0/2 ... r0/2^levels in the contraction sweep
    std::vector<int> study_per_r{3, 6};  // lattice nodes per radius for the halving study
};

/// Parses and validates; errors carry ErrorCode::config and point at the line or field.
RunConfig parse_config(const std::string& text, const std::string& source = "<config>");
RunConfig load_config(const std::string& path);
void validate(const RunConfig& cfg);
/// Normalized JSON text of a config (echoed into reports).
std::string config_json(const RunConfig& cfg);

/// Shared geometric objects of one configuration.
struct Scenario {
    std::shared_ptr<const Domain> domain;
    std::shared_ptr<const BoundaryField> field;
    std::shared_ptr<const ExtendedField> L;
    std::shared_ptr<const Coefficients> a;
    std::shared_ptr<const TangencySet> E;
    std::shared_ptr<const Neighborhoods> nb;
};
Scenario build_scenario(const RunConfig& cfg);

/// A grid with its region masks.
struct Discretization {
    Grid grid;
    RegionMasks regions;
};
Discretization discretize(const Scenario& sc, int level);

/// Manufactured instance of (1); the mean over Omega_0 is pinned to the exact one.
struct ManufacturedInstance {
    Manufactured m;
    DiscreteProblem problem;
    GridField exact;
};
ManufacturedInstance manufactured_instance(const Scenario& sc, const Discretization& d, const std::string& solution,
                                           double p, double q);

}  // namespace poincare
