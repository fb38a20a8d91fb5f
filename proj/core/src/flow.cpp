#include <algorithm>
#include <cmath>
#include <random>

#include "poincare/field.hpp"

namespace poincare {

Mat3 DirectionField::jacobian(const Vec3& x, double h) const {
    Mat3 J;
    for (int k = 0; k < 3; ++k) {
        Vec3 e = Vec3::Unit(k) * h;
        J.col(k) = (value(x + e) - value(x - e)) / (2.0 * h);
    }
    return J;
}

Vec3 rk4_step(const DirectionField& F, const Vec3& x, double dt, double* ds) {
    Vec3 k1 = F.value(x);
    Vec3 k2 = F.value(x + 0.5 * dt * k1);
    Vec3 k3 = F.value(x + 0.5 * dt * k2);
    Vec3 k4 = F.value(x + dt * k3);
    if (ds) *ds = std::abs(dt) / 6.0 * (k1.norm() + 2.0 * k2.norm() + 2.0 * k3.norm() + k4.norm());
    return x + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

FlowResult trajectory(const DirectionField& F, const Vec3& x, double t, double max_step) {
    if (!(max_step > 0.0)) throw Error(ErrorCode::invalid_argument, "step must be positive");
    FlowResult r{x, t, 0.0, 0};
    if (t == 0.0) return r;
    int n = std::max(1, static_cast<int>(std::ceil(std::abs(t) / max_step - 1e-12)));
    double dt = t / n;
    Vec3 y = x;
    for (int i = 0; i < n; ++i) {
        double ds = 0.0;
        y = rk4_step(F, y, dt, &ds);
        r.arclength += ds;
    }
    r.point = y;
    r.steps = n;
    return r;
}

EventResult integrate_until(const DirectionField& F, const Vec3& x, double direction, double t_max,
                            double step, const std::function<bool(const Vec3&)>& stop) {
    EventResult r;
    r.point = x;
    if (stop(x)) {
        r.found = true;
        return r;
    }
    const double sgn = direction < 0.0 ? -1.0 : 1.0;
    double elapsed = 0.0;
    Vec3 y = x;
    while (elapsed < t_max) {
        double h = std::min(step, t_max - elapsed);
        double ds = 0.0;
        Vec3 next = rk4_step(F, y, sgn * h, &ds);
        ++r.steps;
        if (stop(next)) {
            double lo = 0.0, hi = h;
            while (hi - lo > 1e-10) {
                double mid = 0.5 * (lo + hi);
                if (stop(rk4_step(F, y, sgn * mid))) hi = mid; else lo = mid;
            }
            double dsh = 0.0;
            r.point = rk4_step(F, y, sgn * hi, &dsh);
            r.arclength += dsh;
            r.time = sgn * (elapsed + hi);
            r.found = true;
            return r;
        }
        y = next;
        r.arclength += ds;
        elapsed += h;
    }
    r.point = y;
    r.time = sgn * elapsed;
    return r;
}

double lipschitz_probe(const DirectionField& F, const std::vector<Vec3>& points, double delta) {
    double lip = 0.0;
    for (const Vec3& x : points) {
        try {
            Eigen::JacobiSVD<Mat3> svd(F.jacobian(x, delta));
            lip = std::max(lip, svd.singularValues()(0));
        } catch (const Error&) {
            // points whose stencil leaves the definition region are skipped
        }
    }
    return lip;
}

PicardReport picard_screen(const DirectionField& F, const std::vector<std::pair<Vec3, Vec3>>& pairs,
                           double t, double lipschitz, double step, double tol) {
    PicardReport rep;
    rep.lipschitz = lipschitz;
    for (const auto& [a, b] : pairs) {
        Vec3 pa = trajectory(F, a, t, step).point;
        Vec3 pb = trajectory(F, b, t, step).point;
        double lhs = (pa - pb).norm();
        double rhs = std::exp(std::abs(t) * lipschitz) * (a - b).norm();
        ++rep.pairs;
        if (lhs > rhs + tol) ++rep.violations;
        if (rhs > 0.0) rep.worst_ratio = std::max(rep.worst_ratio, lhs / rhs);
    }
    return rep;
}

}  // namespace poincare
