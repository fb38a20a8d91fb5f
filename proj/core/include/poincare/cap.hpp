#pragma once

#include <array>
#include <memory>
#include <vector>

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include "poincare/problem.hpp"
#include "poincare/tube.hpp"

namespace poincare {

/// Coefficients of L in tube coordinates y = (a, b, xi): L' = G^{mn} d_mn + beta^m d_m,
/// and the xi-commutator data P = -d_xi G, Q = -d_xi beta.
struct TubeOperator {
    const Tube* tube = nullptr;
    std::vector<Mat3> G, P;
    std::vector<Vec3> beta, Q;
    std::vector<Mat3> J;                 // columns X_a, X_b, X_xi
    std::vector<std::array<Vec3, 6>> X2; // X_aa, X_bb, X_xx, X_ab, X_ax, X_bx
    std::vector<double> det;             // Jacobian determinant
    std::vector<char> ok;                // coefficients available
};

/// Chain rule with lattice differences of the tube positions.
TubeOperator transform_operator(const Tube& tube, const Coefficients& a);

/// U = mu u, F from (10), V = dU/dxi and the x'-data entering F1, all on the lattice.
struct LocalizedProblem {
    MuCutoff mu;
    std::vector<double> u;            // u(X)
    std::vector<double> U, V, F;      // mu u, mu du/dL, localized source
    std::vector<double> Phi;          // boundary datum of (10) evaluated at projections (mu phi), 0 if unknown
    std::vector<Eigen::Vector2d> Ua;  // x'-gradient of U
    std::vector<Eigen::Vector3d> Uab; // x'-Hessian of U (aa, bb, ab)
    std::vector<double> du_dL;        // du/dL at X
    std::vector<Vec3> grad_u;         // grad u at X
    std::vector<char> have;           // 0 none, 1 values, 2 values and x'-derivatives
};

/// Samples u (value, gradient, Hessian) from a grid field at the lattice positions.
LocalizedProblem localize(const Tube& tube, const TubeOperator& op, const GridSampler& u, const ScalarFn& f,
                          const ScalarFn& phi, const MuCutoff& mu);

/// Right-hand side pieces of (14)-(15) with the first-order V terms kept on the operator side:
/// M V = rhs1 + int_0^xi D2(xi) V dt,  M = L' - D1.
struct TransformedProblem {
    const Tube* tube = nullptr;
    const TubeOperator* op = nullptr;
    std::vector<double> rhs1;  // dF/dxi + D1'U + D2'U(x', 0)
    std::vector<double> V_data;
    std::vector<double> Phi;
    bool zero_memory = false;  // D2 == 0
};

TransformedProblem transform_to_tube(const Tube& tube, const TubeOperator& op, const LocalizedProblem& loc);

enum class CapCase { A, B, C };

/// The cap Omega_r around xi = T with its Dirichlet system.
struct Cap {
    double T = 0.0;
    CapCase kind = CapCase::A;
    EtaCutoff eta;
    int k_lo = 0, k_hi = 0;       // lattice xi range touched by the cap
    std::vector<int> unknown;     // lattice id -> unknown index or -1
    std::vector<int> node_of;     // unknown index -> lattice id
    std::vector<char> in_region;  // lattice nodes of Omega_r (interior or boundary)
    Eigen::SparseMatrix<double> M;
    std::shared_ptr<Eigen::SparseLU<Eigen::SparseMatrix<double>>> lu;
    // Stencil coupling to known boundary values: b -= sum coef * value.
    std::vector<std::vector<std::pair<int, double>>> boundary_coupling;
    std::size_t size() const { return node_of.size(); }
};

CapCase classify_cap(const Tube& tube, double T);
Cap build_cap(const Tube& tube, const TubeOperator& op, double T, CapCase kind);

/// Lattice field over the whole tube; values outside the cap act as data.
using LatticeField = std::vector<double>;

/// int_T^xi eta(xi)/eta(t) D2(xi) w(x', t) dt on the cap unknowns (trapezoid in t).
Eigen::VectorXd volterra_source(const Cap& cap, const TransformedProblem& tp, const LatticeField& w);

/// F2 = eta F1 + L1 V + eta int_0^T D2 V dt on the cap unknowns; history holds V for xi < T.
Eigen::VectorXd cap_source(const Cap& cap, const TransformedProblem& tp, const LatticeField& history);

/// Dirichlet values of Omega_r: eta mu phi outside Omega, history below T, 0 elsewhere.
LatticeField cap_boundary(const Cap& cap, const TransformedProblem& tp, const LatticeField& history);

/// One application of the map: solve M z = F2 + volterra(w), z = boundary data off the cap.
LatticeField fixpoint_map(const Cap& cap, const TransformedProblem& tp, const Eigen::VectorXd& F2,
                          const LatticeField& boundary, const LatticeField& w);

/// ||u||_s + r ||Du||_s + r^2 ||D^2u||_s over the cap nodes (lattice derivatives, volume = det h^3).
double scaled_norm(const Cap& cap, const TransformedProblem& tp, const LatticeField& w, double s, double r);
/// D^2 part only, over a node mask.
double hessian_lq(const Tube& tube, const TubeOperator& op, const LatticeField& w, double q,
                  const std::vector<char>& mask);

/// Sum of the L^q norms of w and its lattice derivatives up to `order`, over a node mask.
double lattice_sobolev(const Tube& tube, const TubeOperator& op, const LatticeField& w, int order, double q,
                       const std::vector<char>& mask);

struct CapSolve {
    LatticeField V;  // solution on the cap (with boundary data elsewhere in range)
    int iterations = 0;
    double rate = 0.0;       // geometric mean of successive increment ratios
    double residual = 0.0;   // relative residual of (18)
    std::vector<double> increments;
};

struct CapOptions {
    double s = 2.0;
    double rtol = 1e-8;
    int max_iterations = 100;
};

CapSolve solve_cap(const Cap& cap, const TransformedProblem& tp, const LatticeField& history, const CapOptions& opts);

struct ContractionProbe {
    double theta = 0.0;
    std::vector<double> ratios;
};

/// Random pairs and power iteration on the difference map w -> F w1 - F w2.
ContractionProbe contraction_probe(const Cap& cap, const TransformedProblem& tp, double s, int trials,
                                   unsigned seed);

}  // namespace poincare
