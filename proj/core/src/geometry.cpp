#include "poincare/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace poincare {

const char* to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::invalid_argument: return "invalid_argument";
        case ErrorCode::outside_collar: return "outside_collar";
        case ErrorCode::non_convergence: return "non_convergence";
        case ErrorCode::degenerate_boundary: return "degenerate_boundary";
        case ErrorCode::trajectory_escape: return "trajectory_escape";
        case ErrorCode::certification: return "certification";
        case ErrorCode::radius_too_large: return "radius_too_large";
        case ErrorCode::solver_breakdown: return "solver_breakdown";
        case ErrorCode::gate_failure: return "gate_failure";
        case ErrorCode::cover_failure: return "cover_failure";
        case ErrorCode::blend_mismatch: return "blend_mismatch";
        case ErrorCode::config: return "config";
    }
    return "unknown";
}

namespace {

struct NewtonResult {
    Vec3 y;
    bool converged;
    int iterations;
};

// Newton on the Lagrange conditions y - x + lambda*grad(y) = 0, level(y) = 0.
NewtonResult lagrange_newton(const Domain& dom, const Vec3& x, Vec3 y, double scale) {
    Vec3 g = dom.level_gradient(y);
    double lambda = (x - y).dot(g) / std::max(g.squaredNorm(), 1e-300);
    auto residual = [&](const Vec3& yy, double lam, Eigen::Matrix<double, 4, 1>& out) {
        Vec3 gg = dom.level_gradient(yy);
        out.head<3>() = yy - x + lam * gg;
        out(3) = dom.level(yy) / std::max(gg.norm(), 1e-300);
        return out.norm();
    };
    Eigen::Matrix<double, 4, 1> F;
    double fn = residual(y, lambda, F);
    const double tol = 1e-13 * scale;
    for (int it = 1; it <= 60; ++it) {
        if (fn <= tol) return {y, true, it - 1};
        g = dom.level_gradient(y);
        Eigen::Matrix4d J = Eigen::Matrix4d::Zero();
        J.topLeftCorner<3, 3>() = Mat3::Identity() + lambda * dom.level_hessian(y);
        J.topRightCorner<3, 1>() = g;
        double gn = std::max(g.norm(), 1e-300);
        J.bottomLeftCorner<1, 3>() = g.transpose() / gn;
        Eigen::Matrix<double, 4, 1> Fn = F;
        Fn(3) = dom.level(y) / gn;
        Eigen::Matrix<double, 4, 1> step = J.fullPivLu().solve(-Fn);
        double alpha = 1.0;
        bool accepted = false;
        for (int k = 0; k < 40; ++k) {
            Vec3 yt = y + alpha * step.head<3>();
            double lt = lambda + alpha * step(3);
            Eigen::Matrix<double, 4, 1> Ft;
            double ft = residual(yt, lt, Ft);
            if (ft < fn || ft <= tol) {
                y = yt;
                lambda = lt;
                F = Ft;
                fn = ft;
                accepted = true;
                break;
            }
            alpha *= 0.5;
        }
        if (!accepted) return {y, fn <= 1e3 * tol, it};
    }
    return {y, fn <= tol, 60};
}

}  // namespace

Vec3 Domain::boundary_point_along(const Vec3& direction) const {
    const Vec3 c = center();
    const Vec3 d = direction.normalized();
    Box b = bounding_box();
    double t_hi = 2.0 * (b.hi - b.lo).norm();
    double t_lo = 0.0;
    if (level(c) >= 0.0) throw Error(ErrorCode::invalid_argument, "domain center is not interior");
    for (int i = 0; i < 200 && t_hi - t_lo > 1e-15 * (1.0 + t_hi); ++i) {
        double tm = 0.5 * (t_lo + t_hi);
        if (level(c + tm * d) < 0.0) t_lo = tm; else t_hi = tm;
    }
    double t = 0.5 * (t_lo + t_hi);
    for (int i = 0; i < 3; ++i) {
        Vec3 p = c + t * d;
        double dd = level_gradient(p).dot(d);
        if (std::abs(dd) < 1e-300) break;
        t -= level(p) / dd;
    }
    return c + t * d;
}

Vec3 Domain::normal_unchecked(const Vec3& y) const {
    return level_gradient(y).normalized();
}

Mat3 Domain::shape_operator(const Vec3& y) const {
    Vec3 g = level_gradient(y);
    Vec3 n = g.normalized();
    Mat3 P = Mat3::Identity() - n * n.transpose();
    return P * level_hessian(y) * P / g.norm();
}

Projection Domain::project(const Vec3& x) const {
    const double scale = std::max(diameter_, 1.0);
    std::vector<Vec3> seeds;
    Vec3 rel = x - center();
    if (rel.norm() > 1e-12 * scale) seeds.push_back(boundary_point_along(rel));
    if (!seeds_.empty()) {
        std::size_t best = 0;
        double bd = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < seeds_.size(); ++i) {
            double dd = (seeds_[i] - x).squaredNorm();
            if (dd < bd) { bd = dd; best = i; }
        }
        seeds.push_back(seeds_[best]);
    }
    if (seeds.empty()) seeds.push_back(boundary_point_along(Vec3(0, 0, 1)));

    Projection out{Vec3::Zero(), Vec3::Zero(), std::numeric_limits<double>::infinity(), 0};
    int total = 0;
    bool any = false;
    for (const Vec3& s : seeds) {
        NewtonResult r = lagrange_newton(*this, x, s, scale);
        total += r.iterations;
        if (!r.converged) continue;
        double d = (r.y - x).norm();
        if (d < out.distance) {
            out.point = r.y;
            out.distance = d;
            any = true;
        }
    }
    out.iterations = total;
    if (!any) {
        throw Error(ErrorCode::non_convergence,
                    "projection did not converge after " + std::to_string(total) + " iterations");
    }
    out.normal = normal_unchecked(out.point);
    return out;
}

BoundarySamples Domain::sample_boundary(std::size_t count) const {
    BoundarySamples s;
    s.points.reserve(count);
    s.normals.reserve(count);
    s.weights.reserve(count);
    const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
    const double n = static_cast<double>(count);
    for (std::size_t k = 0; k < count; ++k) {
        double z = 1.0 - (2.0 * static_cast<double>(k) + 1.0) / n;
        double rho = std::sqrt(std::max(0.0, 1.0 - z * z));
        double phi = golden * static_cast<double>(k);
        Vec3 w(rho * std::cos(phi), rho * std::sin(phi), z);
        Vec3 p = boundary_point_along(w);
        Vec3 nu = normal_unchecked(p);
        double r = (p - center()).norm();
        s.points.push_back(p);
        s.normals.push_back(nu);
        s.weights.push_back(4.0 * std::numbers::pi / n * r * r / w.dot(nu));
    }
    return s;
}

void Domain::calibrate(std::optional<double> collar_override) {
    BoundarySamples s = sample_boundary(4001);
    double kmax = 0.0;
    double rmin = std::numeric_limits<double>::infinity();
    double rmax = 0.0;
    area_ = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        Eigen::SelfAdjointEigenSolver<Mat3> es(shape_operator(s.points[i]));
        kmax = std::max(kmax, es.eigenvalues().cwiseAbs().maxCoeff());
        double r = (s.points[i] - center()).norm();
        rmin = std::min(rmin, r);
        rmax = std::max(rmax, r);
        area_ += s.weights[i];
    }
    reach_ = kmax > 0.0 ? 1.0 / kmax : std::numeric_limits<double>::infinity();
    inradius_ = rmin;
    diameter_ = 2.0 * rmax;
    d0_ = collar_override.value_or(0.15 * inradius_);
    if (!(d0_ > 0.0) || d0_ >= reach_) {
        throw Error(ErrorCode::invalid_argument,
                    "collar width " + std::to_string(d0_) + " must lie in (0, reach=" +
                        std::to_string(reach_) + ")");
    }
    BoundarySamples coarse = sample_boundary(801);
    seeds_ = std::move(coarse.points);
}

// ---------------------------------------------------------------- Ball

Ball::Ball(double radius, Vec3 center) : R_(radius), c_(std::move(center)) {
    if (!(radius > 0.0)) throw Error(ErrorCode::invalid_argument, "ball radius must be positive");
}

double Ball::level(const Vec3& x) const { return ((x - c_).squaredNorm() - R_ * R_) / (2.0 * R_); }
Vec3 Ball::level_gradient(const Vec3& x) const { return (x - c_) / R_; }
Mat3 Ball::level_hessian(const Vec3&) const { return Mat3::Identity() / R_; }

Box Ball::bounding_box() const {
    return {c_ - Vec3::Constant(R_), c_ + Vec3::Constant(R_)};
}

Projection Ball::project(const Vec3& x) const {
    Vec3 v = x - c_;
    double r = v.norm();
    Vec3 n = r > 0.0 ? Vec3(v / r) : Vec3(0, 0, 1);
    return {c_ + R_ * n, n, std::abs(r - R_), 0};
}

// ----------------------------------------------------------- Ellipsoid

Ellipsoid::Ellipsoid(Vec3 semi_axes, Vec3 center) : a_(std::move(semi_axes)), c_(std::move(center)) {
    if ((a_.array() <= 0.0).any()) throw Error(ErrorCode::invalid_argument, "semi-axes must be positive");
}

double Ellipsoid::level(const Vec3& x) const {
    return ((x - c_).array() / a_.array()).square().sum() - 1.0;
}
Vec3 Ellipsoid::level_gradient(const Vec3& x) const {
    return (2.0 * (x - c_).array() / a_.array().square()).matrix();
}
Mat3 Ellipsoid::level_hessian(const Vec3&) const {
    return (2.0 / a_.array().square()).matrix().asDiagonal();
}
Box Ellipsoid::bounding_box() const { return {c_ - a_, c_ + a_}; }

// ------------------------------------------------------ PerturbedBall

PerturbedBall::PerturbedBall(double radius, double eps, Vec3 center)
    : R_(radius), eps_(eps), c_(std::move(center)) {
    if (!(radius > 0.0)) throw Error(ErrorCode::invalid_argument, "radius must be positive");
    if (eps < 0.0 || eps * radius * radius > 0.2)
        throw Error(ErrorCode::invalid_argument, "perturbation must lie in [0, 0.2/R^2]");
}

double PerturbedBall::level(const Vec3& x) const {
    Vec3 v = x - c_;
    double q = v.array().pow(4).sum();
    return v.squaredNorm() - R_ * R_ + eps_ * (q - std::pow(R_, 4));
}
Vec3 PerturbedBall::level_gradient(const Vec3& x) const {
    Vec3 v = x - c_;
    return 2.0 * v + 4.0 * eps_ * v.array().cube().matrix();
}
Mat3 PerturbedBall::level_hessian(const Vec3& x) const {
    Vec3 v = x - c_;
    Vec3 d = (2.0 + 12.0 * eps_ * v.array().square()).matrix();
    return d.asDiagonal();
}
Box PerturbedBall::bounding_box() const {
    double e = 1.1 * R_ * (1.0 + eps_ * R_ * R_);
    return {c_ - Vec3::Constant(e), c_ + Vec3::Constant(e)};
}

// ---------------------------------------------------------- free ops

std::shared_ptr<const Domain> make_domain(const DomainSpec& spec) {
    std::shared_ptr<Domain> d;
    if (spec.kind == "ball") {
        d = std::make_shared<Ball>(spec.radius, spec.center);
    } else if (spec.kind == "ellipsoid") {
        d = std::make_shared<Ellipsoid>(spec.semi_axes, spec.center);
    } else if (spec.kind == "perturbed_ball") {
        d = std::make_shared<PerturbedBall>(spec.radius, spec.perturbation, spec.center);
    } else {
        throw Error(ErrorCode::config, "unknown domain kind '" + spec.kind + "'");
    }
    d->calibrate(spec.collar_width);
    return d;
}

double signed_distance(const Domain& domain, const Vec3& x) {
    Box b = domain.bounding_box();
    Vec3 m = Vec3::Constant(0.5 * domain.diameter());
    if (!Box{b.lo - m, b.hi + m}.contains(x))
        throw Error(ErrorCode::invalid_argument, "point outside the bounding box");
    double d = domain.project(x).distance;
    return domain.inside(x) ? -d : d;
}

Projection nearest_point(const Domain& domain, const Vec3& x) {
    Projection p = domain.project(x);
    if (p.distance > domain.collar_width() * (1.0 + 1e-12)) {
        throw Error(ErrorCode::outside_collar,
                    "point at distance " + std::to_string(p.distance) + " lies outside the collar d0=" +
                        std::to_string(domain.collar_width()));
    }
    return p;
}

Vec3 outward_normal(const Domain& domain, const Vec3& x) {
    Vec3 g = domain.level_gradient(x);
    double gn = g.norm();
    if (gn < 1e-10) throw Error(ErrorCode::degenerate_boundary, "vanishing level gradient on the boundary");
    if (std::abs(domain.level(x)) / gn > 1e-8 * std::max(domain.diameter(), 1.0))
        throw Error(ErrorCode::invalid_argument, "point is not on the boundary");
    return g / gn;
}

bool Collar::in_collar(const Vec3& x) const { return domain->project(x).distance <= d0; }

bool Collar::in_inner_region(const Vec3& x) const {
    return domain->inside(x) && domain->project(x).distance > d0;
}

Vec3 squared_distance_gradient(const Domain& domain, const Vec3& x, double h) {
    Vec3 g;
    for (int i = 0; i < 3; ++i) {
        Vec3 e = Vec3::Unit(i) * h;
        double fp = std::pow(domain.project(x + e).distance, 2);
        double fm = std::pow(domain.project(x - e).distance, 2);
        g(i) = (fp - fm) / (2.0 * h);
    }
    return g;
}

SmoothnessProbeReport squared_distance_smoothness_probe(const Domain& domain,
                                                        const std::vector<Vec3>& boundary_points,
                                                        double h) {
    SmoothnessProbeReport rep;
    rep.samples = boundary_points.size();
    auto d2 = [&](const Vec3& p) { return std::pow(domain.project(p).distance, 2); };
    const double d0 = domain.collar_width();
    for (const Vec3& y : boundary_points) {
        Vec3 nu = domain.normal_unchecked(y);
        rep.max_boundary_gradient = std::max(rep.max_boundary_gradient, squared_distance_gradient(domain, y, h).norm());
        double f0 = d2(y);
        double out = (-3.0 * f0 + 4.0 * d2(y + h * nu) - d2(y + 2.0 * h * nu)) / (2.0 * h);
        double in = (3.0 * f0 - 4.0 * d2(y - h * nu) + d2(y - 2.0 * h * nu)) / (2.0 * h);
        rep.max_jump = std::max(rep.max_jump, std::abs(out - in));
        // Lipschitz quotient of grad d^2 along the normal line through the collar.
        std::vector<double> offsets{-0.5 * d0, -0.25 * d0, -0.1 * d0, 0.0, 0.1 * d0, 0.25 * d0, 0.5 * d0};
        std::vector<Vec3> grads;
        for (double s : offsets) grads.push_back(squared_distance_gradient(domain, y + s * nu, h));
        for (std::size_t i = 1; i < offsets.size(); ++i) {
            double q = (grads[i] - grads[i - 1]).norm() / (offsets[i] - offsets[i - 1]);
            rep.lipschitz_estimate = std::max(rep.lipschitz_estimate, q);
        }
    }
    return rep;
}

}  // namespace poincare
