#include <algorithm>
#include <cmath>
#include <numbers>

#include "poincare/field.hpp"

namespace poincare {

Decomposition decompose(const Vec3& ell, const Vec3& nu) {
    if (std::abs(ell.norm() - 1.0) > 1e-8 || std::abs(nu.norm() - 1.0) > 1e-8)
        throw Error(ErrorCode::invalid_argument, "decompose expects unit vectors");
    double g = ell.dot(nu);
    return {ell - g * nu, g};
}

namespace {

double band_angle(double z, double half_width, double ramp) {
    double s = std::clamp((std::abs(z) - half_width) / ramp, 0.0, 1.0);
    return 0.5 * std::numbers::pi * s * s * (3.0 - 2.0 * s);
}

}  // namespace

BoundaryField::BoundaryField(FieldSpec spec, std::shared_ptr<const Domain> domain)
    : spec_(std::move(spec)), domain_(std::move(domain)) {
    static const char* families[] = {"normal", "meridional", "rotational"};
    static const char* profiles[] = {"one", "square", "linear", "shifted_square", "band"};
    if (std::find(std::begin(families), std::end(families), spec_.family) == std::end(families))
        throw Error(ErrorCode::config, "unknown field family '" + spec_.family + "'");
    if (std::find(std::begin(profiles), std::end(profiles), spec_.profile) == std::end(profiles))
        throw Error(ErrorCode::config, "unknown gamma profile '" + spec_.profile + "'");
    if (spec_.axis.norm() < 1e-12) throw Error(ErrorCode::config, "field axis must be nonzero");
    spec_.axis.normalize();
    if (!(spec_.band_ramp > 0.0) || spec_.band_half_width < 0.0)
        throw Error(ErrorCode::config, "band profile needs half_width >= 0 and ramp > 0");
    if (!(spec_.eps_tan > 0.0)) throw Error(ErrorCode::config, "eps_tan must be positive");
}

double BoundaryField::profile(double z) const {
    if (spec_.family == "normal") return 1.0;
    const std::string& p = spec_.profile;
    if (p == "one") return 1.0;
    if (p == "square") return z * z;
    if (p == "linear") return z;
    if (p == "shifted_square") {
        double t = std::max(0.0, z - spec_.shift);
        return t * t;
    }
    return std::sin(band_angle(z, spec_.band_half_width, spec_.band_ramp));
}

Vec3 BoundaryField::unit_tangent(const Vec3& nu) const {
    Vec3 t = tangential_generator(nu, nu);
    double n = t.norm();
    if (n > 1e-12) return t / n;
    Vec3 e = std::abs(nu.x()) < 0.9 ? Vec3::UnitX() : Vec3::UnitY();
    return nu.cross(e).normalized();
}

Vec3 BoundaryField::tangential_generator(const Vec3&, const Vec3& nu) const {
    const Vec3& a = spec_.axis;
    if (spec_.family == "rotational") return a.cross(nu);
    return a - a.dot(nu) * nu;
}

Vec3 BoundaryField::ell_with_normal(const Vec3&, const Vec3& nu) const {
    if (spec_.family == "normal") return nu;
    double z = nu.dot(spec_.axis);
    double g, c;
    if (spec_.profile == "band") {
        double th = band_angle(z, spec_.band_half_width, spec_.band_ramp);
        g = std::sin(th);
        c = std::cos(th);
    } else {
        g = std::clamp(profile(z), -1.0, 1.0);
        c = std::sqrt(std::max(0.0, 1.0 - g * g));
    }
    return c * unit_tangent(nu) + g * nu;
}

double BoundaryField::gamma(const Vec3& y) const {
    Vec3 nu = domain_->normal_unchecked(y);
    return ell_with_normal(y, nu).dot(nu);
}

Vec3 BoundaryField::tau(const Vec3& y) const {
    Vec3 nu = domain_->normal_unchecked(y);
    Vec3 l = ell_with_normal(y, nu);
    return l - l.dot(nu) * nu;
}

FieldStats field_stats(const BoundaryField& field, const BoundarySamples& samples) {
    FieldStats s;
    s.samples = samples.size();
    s.min_gamma = 1.0;
    s.max_gamma = -1.0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const Vec3& nu = samples.normals[i];
        Vec3 l = field.ell_with_normal(samples.points[i], nu);
        double g = l.dot(nu);
        Vec3 t = l - g * nu;
        s.min_gamma = std::min(s.min_gamma, g);
        s.max_gamma = std::max(s.max_gamma, g);
        s.max_unit_defect = std::max(s.max_unit_defect, std::abs(l.norm() - 1.0));
        s.max_tau_normal = std::max(s.max_tau_normal, std::abs(t.dot(nu)));
        s.max_pythagoras = std::max(s.max_pythagoras, std::abs(t.squaredNorm() + g * g - 1.0));
    }
    return s;
}

ExtendedField::ExtendedField(std::shared_ptr<const BoundaryField> field) : field_(std::move(field)) {}

Vec3 ExtendedField::value(const Vec3& x) const {
    const Domain& dom = field_->domain();
    Projection p = dom.project(x);
    const double d0 = dom.collar_width();
    const double margin = std::min(0.5 * (dom.reach_estimate() - d0), 0.25 * d0);
    if (p.distance > d0 + margin)
        throw Error(ErrorCode::outside_collar, "L is defined on the collar (plus a thin margin) only");
    Vec3 v = field_->ell_with_normal(p.point, p.normal) + p.distance * p.distance * p.normal;
    return v.normalized();
}

Vec3 GeneratorField::value(const Vec3& x) const {
    Projection p = field_->domain().project(x);
    return field_->tangential_generator(p.point, p.normal);
}

std::shared_ptr<const ExtendedField> extend_field(std::shared_ptr<const BoundaryField> field) {
    return std::make_shared<ExtendedField>(std::move(field));
}

}  // namespace poincare
