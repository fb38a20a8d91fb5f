#pragma once

#include <functional>
#include <string>
#include <vector>

#include "poincare/config.hpp"

namespace poincare {

/// |L| = 1 on the collar, L = ell on the boundary, L = tau on E.
struct ExtensionCheck {
    std::size_t samples = 0;
    std::size_t e_samples = 0;
    double unit_defect = 0.0;
    double boundary_defect = 0.0;
    double tangency_defect = 0.0;
    double transversality = 0.0;  // margin c0 on the inner boundary
};
ExtensionCheck extension_check(const Scenario& sc, std::size_t samples, unsigned seed);

/// Random pairs in the collar flowed by L for time 0.2 d0.
PicardReport picard_check(const Scenario& sc, std::size_t pairs, unsigned seed, double tol = 1e-6);

struct ComponentSummary {
    std::string label;
    std::size_t points = 0;
    double area = 0.0;
};

struct FieldAnalysis {
    bool regular = false;
    std::string notice;
    FieldStats stats;
    NeutralityVerdict neutrality;
    std::size_t e_points = 0;
    double e_area = 0.0;
    std::vector<ComponentSummary> components;
    Certificate certificate;
    ExtensionCheck extension;
    PicardReport picard;
    EllipticityReport ellipticity;
    double seconds = 0.0;
};
FieldAnalysis analyze_field(const RunConfig& cfg, const Scenario& sc);

/// theta at r0/2, r0/4, ... for the tube through the middle E sample.
struct ThetaSweep {
    Vec3 anchor = Vec3::Zero();
    double r_geo = 0.0;
    double r0 = 0.0;
    std::vector<double> radii, theta;
    std::vector<double> ratio;  // theta(r) / theta(r/2)
    double c = 0.0, r2 = 0.0;
};
ThetaSweep theta_sweep(const RunConfig& cfg, const Scenario& sc);

struct SweepRow {
    std::string problem;
    int level = 0;
    double h = 0.0;
    EstimateReport estimate;
    double error_max = 0.0;  // relative max error against the manufactured solution
    ResidualReport residuals;
    std::size_t tubes = 0;
    double blend_mismatch = 0.0;
};

/// One batch per grid level; on_row fires as rows complete so partial tables survive a failure.
std::vector<SweepRow> estimate_sweep(const RunConfig& cfg, const Scenario& sc,
                                     const std::function<void(const SweepRow&)>& on_row = {});

struct SweepSummary {
    double ratio5_min = 0.0, ratio5_max = 0.0;
    double spread = 0.0;            // max / min
    std::vector<double> level_max;  // max ratio5 per grid level
    bool increasing = false;        // level_max strictly increasing under refinement
    bool violation = false;
};
SweepSummary summarize_sweep(const std::vector<SweepRow>& rows, const std::vector<int>& levels);

struct ConvergenceRow {
    std::string problem;
    int level = 0;
    double h = 0.0;
    double error_max = 0.0;  // relative
    double error_w22 = 0.0;  // relative discrete W^{2,2}
    double order_max = 0.0;  // against the previous level, 0 on the first
    double order_w22 = 0.0;
    double ratio7 = 0.0;
    bool regular_only = false;
};
std::vector<ConvergenceRow> convergence_study(const RunConfig& cfg, const Scenario& sc,
                                              const std::function<void(const ConvergenceRow&)>& on_row = {});

/// ||dU/dxi - V||_{L^q} of one tube at several lattice resolutions.
struct HalvingRow {
    int n_per_r = 0;
    double spacing = 0.0;
    double defect = 0.0;
    double order = 0.0;
    double max_earlier_change = 0.0;
    double max_cap_residual = 0.0;
    bool steps_hold = false;
    double C_step = 0.0, C_fit = 0.0;
};
std::vector<HalvingRow> reconstruction_study(const RunConfig& cfg, const Scenario& sc, int level, double r);

/// Two tubes on one L-trajectory; the second anchor is flowed by `shift` along L.
struct Remark6 {
    Vec3 anchor1 = Vec3::Zero(), anchor2 = Vec3::Zero();
    double C1 = 0.0, C2 = 0.0;
    double C_fit1 = 0.0, C_fit2 = 0.0;
    double relative_gap = 0.0;  // |C1 - C2| / max(C1, C2)
};
Remark6 remark6_check(const RunConfig& cfg, const Scenario& sc, int level, double r, double shift);

/// Radius used by the single-tube studies: the configured one or the calibrated one.
double study_radius(const RunConfig& cfg, const Scenario& sc);

}  // namespace poincare
