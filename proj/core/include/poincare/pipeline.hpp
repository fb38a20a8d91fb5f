#pragma once

#include <array>
#include <string>
#include <vector>

#include "poincare/march.hpp"
#include "poincare/norms.hpp"
#include "poincare/regular.hpp"

namespace poincare {

/// Inverse of the tube lattice map near a point: nearest lattice node plus Newton steps on the
/// trilinear interpolant of the lattice positions.
class TubeLocator {
public:
    explicit TubeLocator(const Tube& tube);
    TubeCoords locate(const Vec3& x) const;
    /// Trilinear corner ids and weights at tube coordinates; false if a corner is missing.
    bool corners(const TubeCoords& c, std::array<std::size_t, 8>& ids, std::array<double, 8>& w) const;
    Vec3 lo() const { return lo_; }
    Vec3 hi() const { return hi_; }

private:
    const Tube* tube_;
    PointIndex index_;
    std::vector<std::size_t> ids_;
    Vec3 lo_, hi_;
};

struct PipelineOptions {
    double eps_tan = 1e-8;
    std::size_t e_samples = 4001;
    TubeOptions tube;
    CapOptions cap;
    double r = 0.0;            // tube radius; 0 calibrates
    double r_start = 0.4;      // start of the geometric radius search
    int calibration_levels = 4;
    int probe_trials = 3;
    unsigned seed = 1;
    double blend_tolerance = 0.25;  // relative disagreement of overlapping tubes
    std::size_t max_tubes = 4000;
    std::size_t boundary_points = 600;
    int passes = 1;                 // tube sweeps, each starting from the previous solution
    double ghost_smoothing = 3.0;   // refit radius of blended ghost data in units of max(r, h); 0 disables
    RegularOptions regular;
};

struct Calibration {
    Vec3 anchor = Vec3::Zero();
    double r_geo = 0.0;
    double c = 0.0;   // theta ~ c r
    double r2 = 0.0;  // linear model fit quality
    double r0 = 0.0;
    double r = 0.0;
    std::vector<double> radii, theta;
};

/// theta at the T = 0 cap of the tube through the anchor.
double pilot_theta(std::shared_ptr<const ExtendedField> L, const Neighborhoods& nb, const Coefficients& a,
                   const Vec3& anchor, double r, const PipelineOptions& opts);

/// theta ~ c r through the origin with R^2.
void fit_linear_law(const std::vector<double>& radii, const std::vector<double>& theta, double& c, double& r2);

Calibration calibrate_radius(std::shared_ptr<const ExtendedField> L, const Neighborhoods& nb, const Coefficients& a,
                             const Vec3& anchor, const PipelineOptions& opts);

/// Greedy farthest-point anchors on E until the half-radius tubes hold every sample.
struct Cover {
    std::vector<Tube> tubes;
    std::vector<std::size_t> anchor_sample;
    std::vector<std::size_t> covered_by;  // per tube: samples first covered by it
};
Cover cover_tangency(std::shared_ptr<const ExtendedField> L, const Neighborhoods& nb, const TangencySet& E, double r,
                     const PipelineOptions& opts);

struct EstimateReport {
    double q = 2.0;
    double u_w2q = 0.0;       // over Omega
    double u_lq = 0.0;
    double f_norm = 0.0;      // F^q(Omega, N)
    double phi_norm = 0.0;    // Phi^q(dOmega, N)
    double f_lq = 0.0;
    double phi_plain = 0.0;   // W^{1-1/q,q}(dOmega)
    double u_w2q_away = 0.0;  // over Omega minus N'
    double u_w2q_n2 = 0.0;    // over N''
    double ratio5 = 0.0;
    double ratio7 = 0.0;
    double ratio8 = 0.0;
    double ratio23 = 0.0;     // max over tubes
    bool violation = false;   // zero denominator under a nonzero numerator
    // bookkeeping of the patching step, report only
    double u_w2q_cover = 0.0;         // over the union of half-radius tubes
    double u_w2q_n2_minus_cover = 0.0;
    double u_w1q_n = 0.0;
    double dL_w1q_n = 0.0;
    double eps_interp = 0.0;          // ||u||_{W^{1,q}(N'')} / ||u||_{W^{2,q}(N'')}
};

/// 0/0 is 0; x/0 with x > 0 is +inf and sets the flag.
double guarded_ratio(double num, double den, bool& violation);

EstimateReport estimate_report(const DiscreteProblem& problem, const Grid& grid, const RegionMasks& regions,
                               const GridField& u, double q, std::size_t boundary_points,
                               const std::vector<char>* cover = nullptr);

struct TubeReport {
    int id = 0;
    Vec3 anchor = Vec3::Zero();
    double r = 0.0;
    double T_max = 0.0;
    std::size_t lattice_nodes = 0;
    std::size_t samples_covered = 0;
    std::size_t grid_nodes = 0;  // grid nodes with mu > 0
    double K = 0.0;
    double v_w2q = 0.0;          // ||V||_{W^{2,q}(T_r)}
    double ratio23 = 0.0;
    double recon_defect = 0.0;
    double max_earlier_change = 0.0;
    double max_cap_residual = 0.0;
    int max_iterations = 0;
    MarchTrace trace;
};

struct SolveReport {
    GridField u, u_regular, u_blend;
    bool regular_only = false;
    Calibration calibration;
    std::vector<TubeReport> tubes;
    std::size_t e_samples = 0;
    std::size_t blended_nodes = 0;
    std::size_t fixed_ghosts = 0;     // ghost rows taking tube data
    double blend_mismatch = 0.0;   // max relative disagreement of overlapping tubes
    double consistency_change = 0.0;  // max |u - u_blend| / max |u_blend| on inside nodes
    ResidualReport residuals;
    LinearSolveInfo regular_info, consistency_info;
    EstimateReport estimate;
    std::vector<double> qprime_ladder;
    double C_step_max = 0.0;
    double C_fit_max = 0.0;
    double seconds_regular = 0.0, seconds_tubes = 0.0, seconds_consistency = 0.0;
    double regular_slack = 0.0;  // compatibility constant of the regular solve
};

struct DegenerateJob {
    const DiscreteProblem* problem = nullptr;
    const Grid* grid = nullptr;
    const RegionMasks* regions = nullptr;
};

/// Several problems sharing L, E and the neighbourhoods; each tube and its caps are built once.
std::vector<SolveReport> solve_degenerate_batch(const std::vector<DegenerateJob>& jobs, const PipelineOptions& opts);

SolveReport solve_degenerate(const DiscreteProblem& problem, const Grid& grid, const RegionMasks& regions,
                             const PipelineOptions& opts);

/// One tube through an anchor, data sampled from u_base; K as in the full pipeline.
TubeReport solve_tube(const DiscreteProblem& problem, const Grid& grid, const RegionMasks& regions,
                      const GridField& u_base, const Vec3& anchor, double r, const PipelineOptions& opts);

}  // namespace poincare
