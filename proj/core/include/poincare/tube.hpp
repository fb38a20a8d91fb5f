#pragma once

#include <memory>
#include <vector>

#include "poincare/tangency.hpp"

namespace poincare {

/// Quintic smoothstep 6s^5 - 15s^4 + 10s^3 clamped to [0, 1], with derivatives.
double smoothstep5(double s);
double smoothstep5_d1(double s);
double smoothstep5_d2(double s);

/// Radial cutoff in the base disc: 1 on B_{r/2}, 0 off B_{3r/4}; constant along trajectories.
struct MuCutoff {
    double r = 1.0;
    bool unit = false;  // formal mu == 1
    double value(double a, double b) const;
    Eigen::Vector2d gradient(double a, double b) const;
    Eigen::Matrix2d hessian(double a, double b) const;
};

/// Profile in xi: 1 on (-inf, T+r], strictly decreasing on (T+r, T+2r), 0 from T+2r on.
struct EtaCutoff {
    double T = 0.0;
    double r = 1.0;
    bool unit = false;  // Case B: no cutoff
    double value(double xi) const;
    double d1(double xi) const;
    double d2(double xi) const;
};

MuCutoff cutoff_mu(double r);
EtaCutoff cutoff_eta(double T, double r);

struct TubeOptions {
    int n_per_r = 4;          // lattice nodes per radius
    double pad_factor = 3.0;  // lattice margin after the last exit, in units of r
    int pre_pad = 2;          // lattice nodes before the base
    int substeps = 5;         // RK4 steps per lattice spacing
    double budget = 20.0;     // arclength budget for exit searches
    double j_min = 1e-3;      // smallest admissible Jacobian determinant
    double base_fraction = 0.5;
};

struct TubeCoords {
    double a = 0.0;
    double b = 0.0;
    double xi = 0.0;
    bool ok = false;
};

/// Trajectory tube: lattice (a, b, xi) with X(a, b, xi) = psi(t_minus + xi; x0 + a e1 + b e2).
class Tube {
public:
    Vec3 x0, e1, e2, l0;
    double r = 0.0;
    double t_minus = 0.0;
    double t_plus = 0.0;
    double T_max = 0.0;
    double h = 0.0;       // lattice spacing r / n_per_r
    int n_per_r = 4;
    int half = 5;         // columns span indices 0 .. 2*half
    int nxi = 0;
    double xi_lo = 0.0;
    int substeps = 5;
    double j_min = 0.0;
    double j_max = 0.0;

    std::vector<Vec3> X;             // lattice positions
    std::vector<char> valid;         // position available
    std::vector<char> inside;        // position in Omega
    std::vector<double> column_exit; // forward exit xi per column (NaN if none)

    std::shared_ptr<const DirectionField> field;
    std::shared_ptr<const Domain> domain;

    int na() const { return 2 * half + 1; }
    std::size_t idx(int i, int j, int k) const {
        return (static_cast<std::size_t>(k) * na() + j) * na() + i;
    }
    std::size_t size() const { return static_cast<std::size_t>(na()) * na() * nxi; }
    double a(int i) const { return (i - half) * h; }
    double xi(int k) const { return xi_lo + k * h; }
    int xi_index(double xi_value) const;
    bool in_disc(int i, int j, double radius) const;
    /// Node of T_r: disc column, position in Omega, xi in (0, t_plus - t_minus).
    bool in_body(int i, int j, int k) const;
    /// Lattice node with xi < T inside T_r.
    bool in_P(int i, int j, int k, double T) const { return in_body(i, j, k) && xi(k) < T; }

    Vec3 tube_point(double a, double b, double xi) const;
    TubeCoords coordinates(const Vec3& x, bool polish = true) const;
    /// Physical Jacobian columns (X_a, X_b, X_xi) by lattice differences.
    Mat3 jacobian(int i, int j, int k) const;
};

/// Builds the lattice for an arbitrary direction field; t_plus is raised to cover the last exit.
Tube build_tube_raw(std::shared_ptr<const DirectionField> L, std::shared_ptr<const Domain> domain,
                    const Vec3& x0, double r, double t_minus, double t_plus, const TubeOptions& opts);

/// Full construction: exit times, lattice, and the containment checks B'_r in N'' \ N', T_r in N''.
Tube build_tube(std::shared_ptr<const ExtendedField> L, const Neighborhoods& nb, const Vec3& x0, double r,
                const TubeOptions& opts);

/// Largest r (by halving then bisection) for which build_tube succeeds.
double geometric_radius(std::shared_ptr<const ExtendedField> L, const Neighborhoods& nb, const Vec3& x0,
                        double r_start, const TubeOptions& opts);

}  // namespace poincare
