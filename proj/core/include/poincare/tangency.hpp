#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "poincare/field.hpp"
#include "poincare/point_index.hpp"

namespace poincare {

struct TangencyComponent {
    std::vector<std::size_t> members;
    std::string label;  // transversal-crossing | contains-tau-arcs | massive-measure
    double area = 0.0;
    std::size_t refined_count = 0;
};

/// Boundary samples with |gamma| <= eps_tan, grouped into components.
struct TangencySet {
    std::vector<Vec3> points;
    std::vector<Vec3> normals;
    std::vector<double> gammas;
    std::vector<double> weights;
    std::vector<int> component;
    std::vector<TangencyComponent> components;
    double eps_tan = 1e-8;
    double spacing = 0.0;  // mean sample spacing on the boundary
    std::string notice;
    bool empty() const { return points.empty(); }
    double area() const;
};

TangencySet tangency_set(const BoundaryField& field, double eps_tan, std::size_t samples);

struct NeutralityVerdict {
    bool neutral = true;
    double min_gamma = 0.0;
    std::vector<Vec3> witnesses;
};

NeutralityVerdict classify_neutrality(const BoundaryField& field, double eps_tan, std::size_t samples);

struct CertifyOptions {
    double budget = 20.0;            // arclength budget per trajectory
    double step = 0.0;               // 0: collar width / 20
    std::size_t max_e_samples = 400;
    double collar_cell = 0.0;        // 0: collar width / 2
    double close_tol = 1e-6;
};

struct Violation {
    std::string kind;  // trapped | closed | escaped
    Vec3 witness;
    double arclength = 0.0;
};

struct Certificate {
    double kappa0 = 0.0;
    double kappa = 0.0;
    double transversality = 0.0;  // min L . n over inner-region boundary samples
    std::size_t e_trajectories = 0;
    std::size_t collar_trajectories = 0;
    std::optional<Violation> violation;
    bool ok() const { return !violation.has_value(); }
};

/// Arclength of the tau-arc through z inside E, forward plus backward.
struct ArcResult {
    double forward = 0.0;
    double backward = 0.0;
    std::optional<Violation> violation;
};
ArcResult tangency_arc(const ExtendedField& L, const Vec3& z, double eps_tan, double budget, double step,
                       double close_tol);

Certificate certify_nontrapping(const ExtendedField& L, const TangencySet& E, const CertifyOptions& opts);

/// Minimal L . nu over points at depth d0 below the boundary samples.
double transversality_margin(const ExtendedField& L, const BoundarySamples& samples);

/// N' in N'' in N as sublevel sets of distance to E intersected with the collar.
class Neighborhoods {
public:
    Neighborhoods() = default;
    Neighborhoods(const TangencySet& E, const Domain& domain, std::array<double, 3> rho);

    double rho(int k) const { return rho_[k - 1]; }
    double dist_to_E(const Vec3& x) const;
    bool in(const Vec3& x, int k) const;
    /// Smallest k with x in N_k, 0 if none.
    int level(const Vec3& x) const;
    bool empty() const { return index_.empty(); }
    const Domain& domain() const { return *domain_; }

private:
    std::array<double, 3> rho_{};
    PointIndex index_;
    const Domain* domain_ = nullptr;
};

struct ExitTimes {
    double t_minus = 0.0;
    double t_plus = 0.0;
};

/// Backward time into N'' \ N' and forward exit time from the closed domain.
/// The base is placed where the distance to E first reaches rho1 + base_fraction (rho2 - rho1).
ExitTimes exit_times(const ExtendedField& L, const Vec3& x0, const Neighborhoods& nb, double step,
                     double budget, double base_fraction = 0.5);

/// Forward time for the trajectory from x to leave E (|gamma| > eps).
double band_exit_time(const DirectionField& F, const BoundaryField& field, const Vec3& x, double eps_tan,
                      double step, double budget);

}  // namespace poincare
