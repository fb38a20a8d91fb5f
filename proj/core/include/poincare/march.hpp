#pragma once

#include <vector>

#include "poincare/cap.hpp"

namespace poincare {

struct MarchStep {
    double T = 0.0;
    CapCase kind = CapCase::A;
    std::size_t unknowns = 0;
    int iterations = 0;
    double rate = 0.0;
    double residual = 0.0;
    double earlier_change = 0.0;  // max |V_after - V_before| on xi <= T
};

/// zeta(T_j) = ||D^2 V||_{L^q(P_{r,T_j})}, T_j = j r, j = 0..m.
struct MarchTrace {
    double r = 0.0;
    double q = 2.0;
    double K = 0.0;
    int m = 0;
    std::vector<double> T, zeta;
    std::vector<MarchStep> steps;
    double C_step = 0.0;  // smallest C with zeta_{j+1} <= C (K + zeta_j) for every j
    double C_fit = 0.0;   // least squares through the same pairs
    double bound = 0.0;   // K sum_{j=1}^m C_step^j
    bool steps_hold = false;
    bool bound_holds = false;
    bool monotone = false;
};

/// K sum_{j=1}^m C^j
double iteration_bound(double C, double K, int m);

/// Smallest admissible C and the least-squares C for the pairs (zeta_j, zeta_{j+1}).
void fit_step_constant(const std::vector<double>& zeta, double K, double& C_max, double& C_ls);

struct MarchOptions {
    CapOptions cap;
    double q = 2.0;
};

struct TubeMarch {
    LatticeField V;
    MarchTrace trace;
};

/// The caps at T = 0, r, 2r, ... up to the first Case C; they depend on the tube and operator only.
std::vector<Cap> march_caps(const Tube& tube, const TubeOperator& op);

/// xi-marching by caps of height r; Dirichlet data from V_data below T and from Phi outside Omega.
TubeMarch march_tube(const Tube& tube, const TubeOperator& op, const TransformedProblem& tp, double K,
                     const MarchOptions& opts);
TubeMarch march_tube(const Tube& tube, const std::vector<Cap>& caps, const TubeOperator& op,
                     const TransformedProblem& tp, double K, const MarchOptions& opts);

/// One Dirichlet solve on the whole tube (the marching oracle).
LatticeField one_shot(const Tube& tube, const TubeOperator& op, const TransformedProblem& tp, const CapOptions& opts);

/// U(x', xi) = U(x', 0) + int_0^xi V dt on the body (trapezoid).
LatticeField reconstruct_U(const Tube& tube, const LatticeField& V, const LocalizedProblem& loc);

/// ||dU/dxi - V||_{L^q} over T_r, dU/dxi by central differences.
double reconstruction_defect(const Tube& tube, const TubeOperator& op, const LatticeField& U, const LatticeField& V,
                             double q);

std::vector<char> body_mask(const Tube& tube, double T_below);

}  // namespace poincare
