#pragma once

#include <functional>
#include <memory>
#include <string>

#include "poincare/geometry.hpp"

namespace poincare {

struct FieldSpec {
    std::string family = "meridional";  // normal | meridional | rotational
    std::string profile = "band";       // one | square | linear | shifted_square | band
    Vec3 axis = Vec3(0, 0, 1);
    double band_half_width = 0.25;
    double band_ramp = 0.5;
    double shift = 0.5;
    double eps_tan = 1e-8;
};

struct Decomposition {
    Vec3 tau;
    double gamma;
};

/// Splits a unit field value into tangential part and normal component.
Decomposition decompose(const Vec3& ell, const Vec3& nu);

/// Unit boundary field ell = sqrt(1 - gamma^2) t + gamma nu built from a tangent family and a gamma profile.
class BoundaryField {
public:
    BoundaryField(FieldSpec spec, std::shared_ptr<const Domain> domain);

    double profile(double z) const;
    Vec3 ell(const Vec3& y) const { return ell_with_normal(y, domain_->normal_unchecked(y)); }
    Vec3 ell_with_normal(const Vec3& y, const Vec3& nu) const;
    double gamma(const Vec3& y) const;
    Vec3 tau(const Vec3& y) const;
    /// Unnormalized tangent generator: axis projection (meridional) or axis x nu (rotational).
    Vec3 tangential_generator(const Vec3& y, const Vec3& nu) const;

    bool is_regular() const { return spec_.family == "normal" || spec_.profile == "one"; }
    const FieldSpec& spec() const { return spec_; }
    const Domain& domain() const { return *domain_; }
    std::shared_ptr<const Domain> domain_ptr() const { return domain_; }
    double eps_tan() const { return spec_.eps_tan; }

private:
    Vec3 unit_tangent(const Vec3& nu) const;
    FieldSpec spec_;
    std::shared_ptr<const Domain> domain_;
};

struct FieldStats {
    double min_gamma = 0.0;
    double max_gamma = 0.0;
    double max_unit_defect = 0.0;   // | |ell| - 1 |
    double max_tau_normal = 0.0;    // |tau . nu|
    double max_pythagoras = 0.0;    // | |tau|^2 + gamma^2 - 1 |
    std::size_t samples = 0;
};

FieldStats field_stats(const BoundaryField& field, const BoundarySamples& samples);

/// Vector field in R^3 with finite-difference derivatives.
class DirectionField {
public:
    virtual ~DirectionField() = default;
    virtual Vec3 value(const Vec3& x) const = 0;
    /// J(i,k) = d value_i / d x_k by central differences.
    Mat3 jacobian(const Vec3& x, double h) const;
};

class ConstantDirection final : public DirectionField {
public:
    explicit ConstantDirection(Vec3 v) : v_(v.normalized()) {}
    Vec3 value(const Vec3&) const override { return v_; }

private:
    Vec3 v_;
};

/// Wraps any callable as a direction field.
class CallableField final : public DirectionField {
public:
    explicit CallableField(std::function<Vec3(const Vec3&)> f) : f_(std::move(f)) {}
    Vec3 value(const Vec3& x) const override { return f_(x); }

private:
    std::function<Vec3(const Vec3&)> f_;
};

/// L(x) = normalize(ell(y(x)) + d(x)^2 nu(y(x))) on the collar.
class ExtendedField final : public DirectionField {
public:
    explicit ExtendedField(std::shared_ptr<const BoundaryField> field);
    Vec3 value(const Vec3& x) const override;
    const BoundaryField& boundary_field() const { return *field_; }
    const Domain& domain() const { return field_->domain(); }
    std::shared_ptr<const BoundaryField> field_ptr() const { return field_; }

private:
    std::shared_ptr<const BoundaryField> field_;
};

/// Unnormalized tangential generator of the boundary family, extended by projection.
class GeneratorField final : public DirectionField {
public:
    explicit GeneratorField(std::shared_ptr<const BoundaryField> field) : field_(std::move(field)) {}
    Vec3 value(const Vec3& x) const override;

private:
    std::shared_ptr<const BoundaryField> field_;
};

std::shared_ptr<const ExtendedField> extend_field(std::shared_ptr<const BoundaryField> field);

struct FlowResult {
    Vec3 point;
    double time = 0.0;
    double arclength = 0.0;
    int steps = 0;
};

/// Fixed-step RK4 for dx/dt = F(x); arclength integrated alongside.
FlowResult trajectory(const DirectionField& F, const Vec3& x, double t, double max_step);

/// Single RK4 step of size dt; ds receives the arclength increment.
Vec3 rk4_step(const DirectionField& F, const Vec3& x, double dt, double* ds = nullptr);

struct EventResult {
    bool found = false;
    Vec3 point;
    double time = 0.0;       // signed
    double arclength = 0.0;
    int steps = 0;
};

/// Integrates in the sign of `direction` until `stop` turns true or |t| exceeds t_max.
/// The crossing is located by bisection on the partial step to 1e-10.
EventResult integrate_until(const DirectionField& F, const Vec3& x, double direction, double t_max,
                            double step, const std::function<bool(const Vec3&)>& stop);

/// Largest spectral norm of the finite-difference Jacobian over the points.
double lipschitz_probe(const DirectionField& F, const std::vector<Vec3>& points, double delta);

struct PicardReport {
    std::size_t pairs = 0;
    std::size_t violations = 0;
    double lipschitz = 0.0;
    double worst_ratio = 0.0;  // max of lhs / rhs
};

/// Checks |psi(t;x') - psi(t;x'')| <= exp(|t| Lip) |x' - x''| + tol on pairs.
PicardReport picard_screen(const DirectionField& F, const std::vector<std::pair<Vec3, Vec3>>& pairs,
                           double t, double lipschitz, double step, double tol);

}  // namespace poincare
