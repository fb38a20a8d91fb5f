#include <cmath>
#include <random>

#include <Eigen/Eigenvalues>

#include "poincare/problem.hpp"

namespace poincare {

Coefficients::Coefficients(CoefficientSpec spec) : spec_(std::move(spec)) {
    if (spec_.family != "identity" && spec_.family != "bump")
        throw Error(ErrorCode::config, "unknown coefficient family: " + spec_.family);
    if (spec_.family == "bump" && !(std::abs(spec_.eps) < 0.5))
        throw Error(ErrorCode::config, "bump amplitude must satisfy |eps| < 0.5");
    if (!(spec_.width > 0.0)) throw Error(ErrorCode::config, "bump width must be positive");
}

const Mat3& Coefficients::shape() {
    static const Mat3 M = (Mat3() << 1.0, 0.3, 0.1, 0.3, 0.8, 0.2, 0.1, 0.2, 0.6).finished();
    return M;
}

double Coefficients::bump(const Vec3& x) const {
    double s = x.z() / spec_.width;
    double t = 1.0 - s * s;
    return t > 0.0 ? t * t : 0.0;
}

Vec3 Coefficients::bump_gradient(const Vec3& x) const {
    double s = x.z() / spec_.width;
    double t = 1.0 - s * s;
    if (t <= 0.0) return Vec3::Zero();
    return Vec3(0.0, 0.0, -4.0 * t * s / spec_.width);
}

Mat3 Coefficients::value(const Vec3& x) const {
    if (constant()) return Mat3::Identity();
    return Mat3::Identity() + spec_.eps * bump(x) * shape();
}

Mat3 Coefficients::derivative(const Vec3& x, const Vec3& v) const {
    if (constant()) return Mat3::Zero();
    return spec_.eps * bump_gradient(x).dot(v) * shape();
}

EllipticityReport ellipticity_probe(const Coefficients& a, const std::vector<Vec3>& points, unsigned seed) {
    EllipticityReport rep;
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd;
    double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
    for (const Vec3& x : points) {
        Mat3 A = a.value(x);
        rep.asymmetry = std::max(rep.asymmetry, (A - A.transpose()).cwiseAbs().maxCoeff());
        Eigen::SelfAdjointEigenSolver<Mat3> es(0.5 * (A + A.transpose()), Eigen::EigenvaluesOnly);
        lo = std::min(lo, es.eigenvalues().minCoeff());
        hi = std::max(hi, es.eigenvalues().maxCoeff());
        Vec3 v(nd(rng), nd(rng), nd(rng));
        v.normalize();
        double q = v.dot(A * v);
        lo = std::min(lo, q);
        hi = std::max(hi, q);
        ++rep.samples;
    }
    if (!(lo > 0.0)) throw Error(ErrorCode::invalid_argument, "coefficients are not elliptic");
    rep.lambda = std::max(hi, 1.0 / lo);
    return rep;
}

namespace {

AnalyticField make(const std::string& name, ScalarFn v, VectorFn g, MatrixFn h) {
    return AnalyticField{name, std::move(v), std::move(g), std::move(h)};
}

Mat3 sym(double xx, double yy, double zz, double xy, double xz, double yz) {
    Mat3 H;
    H << xx, xy, xz, xy, yy, yz, xz, yz, zz;
    return H;
}

}  // namespace

std::vector<std::string> analytic_solution_names() {
    return {"const", "x1sq_minus_x2sq", "r2", "sin_exp", "harmonic_cubic", "x1x2x3", "exp_cos", "x3", "quartic"};
}

AnalyticField analytic_solution(const std::string& name) {
    if (name == "const")
        return make(name, [](const Vec3&) { return 1.0; }, [](const Vec3&) { return Vec3::Zero().eval(); },
                    [](const Vec3&) { return Mat3::Zero().eval(); });
    if (name == "x1sq_minus_x2sq")
        return make(
            name, [](const Vec3& x) { return x.x() * x.x() - x.y() * x.y(); },
            [](const Vec3& x) { return Vec3(2 * x.x(), -2 * x.y(), 0); },
            [](const Vec3&) { return sym(2, -2, 0, 0, 0, 0); });
    if (name == "r2")
        return make(
            name, [](const Vec3& x) { return x.squaredNorm(); }, [](const Vec3& x) { return (2.0 * x).eval(); },
            [](const Vec3&) { return (2.0 * Mat3::Identity()).eval(); });
    if (name == "sin_exp")
        return make(
            name, [](const Vec3& x) { return std::sin(x.x()) * std::exp(x.y()); },
            [](const Vec3& x) {
                double e = std::exp(x.y());
                return Vec3(std::cos(x.x()) * e, std::sin(x.x()) * e, 0);
            },
            [](const Vec3& x) {
                double e = std::exp(x.y()), s = std::sin(x.x()), c = std::cos(x.x());
                return sym(-s * e, s * e, 0, c * e, 0, 0);
            });
    if (name == "harmonic_cubic")
        return make(
            name, [](const Vec3& x) { return x.x() * x.x() * x.x() - 3 * x.x() * x.y() * x.y(); },
            [](const Vec3& x) {
                return Vec3(3 * x.x() * x.x() - 3 * x.y() * x.y(), -6 * x.x() * x.y(), 0);
            },
            [](const Vec3& x) { return sym(6 * x.x(), -6 * x.x(), 0, -6 * x.y(), 0, 0); });
    if (name == "x1x2x3")
        return make(
            name, [](const Vec3& x) { return x.x() * x.y() * x.z(); },
            [](const Vec3& x) { return Vec3(x.y() * x.z(), x.x() * x.z(), x.x() * x.y()); },
            [](const Vec3& x) { return sym(0, 0, 0, x.z(), x.y(), x.x()); });
    if (name == "exp_cos")
        return make(
            name, [](const Vec3& x) { return std::exp(x.z()) * std::cos(x.x()); },
            [](const Vec3& x) {
                double e = std::exp(x.z());
                return Vec3(-std::sin(x.x()) * e, 0, std::cos(x.x()) * e);
            },
            [](const Vec3& x) {
                double e = std::exp(x.z()), s = std::sin(x.x()), c = std::cos(x.x());
                return sym(-c * e, 0, c * e, 0, -s * e, 0);
            });
    if (name == "x3")
        return make(
            name, [](const Vec3& x) { return x.z(); }, [](const Vec3&) { return Vec3(0, 0, 1); },
            [](const Vec3&) { return Mat3::Zero().eval(); });
    if (name == "quartic")
        return make(
            name, [](const Vec3& x) { return std::pow(x.x(), 4) + x.y() * x.y() * x.z(); },
            [](const Vec3& x) { return Vec3(4 * std::pow(x.x(), 3), 2 * x.y() * x.z(), x.y() * x.y()); },
            [](const Vec3& x) { return sym(12 * x.x() * x.x(), 2 * x.z(), 0, 0, 0, 2 * x.y()); });
    throw Error(ErrorCode::config, "unknown manufactured solution: " + name);
}

Manufactured manufactured_problem(const AnalyticField& u, std::shared_ptr<const Coefficients> a,
                                  std::shared_ptr<const BoundaryField> ell) {
    Manufactured m;
    m.exact = u;
    auto hess = u.hessian;
    m.f = [a, hess](const Vec3& x) { return (a->value(x).cwiseProduct(hess(x))).sum(); };
    auto grad = u.gradient;
    m.phi = [ell, grad](const Vec3& y) { return ell->ell(y).dot(grad(y)); };
    auto f = m.f;
    m.grad_f = [f](const Vec3& x) {
        const double d = 1e-4;
        Vec3 g;
        for (int k = 0; k < 3; ++k) {
            Vec3 e = Vec3::Zero();
            e[k] = d;
            g[k] = (f(x + e) - f(x - e)) / (2 * d);
        }
        return g;
    };
    return m;
}

}  // namespace poincare
