#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "poincare/grid.hpp"

namespace poincare {

using ScalarFn = std::function<double(const Vec3&)>;
using VectorFn = std::function<Vec3(const Vec3&)>;
using MatrixFn = std::function<Mat3(const Vec3&)>;

/// a(x) = I + eps * b(x) * M with a Lipschitz bump b supported near the equatorial band.
struct CoefficientSpec {
    std::string family = "identity";  // identity | bump
    double eps = 0.0;
    double width = 0.6;  // bump half-width in x3
};

class Coefficients {
public:
    explicit Coefficients(CoefficientSpec spec = {});
    Mat3 value(const Vec3& x) const;
    /// Directional derivative of a along v (analytic).
    Mat3 derivative(const Vec3& x, const Vec3& v) const;
    bool constant() const { return spec_.family == "identity" || spec_.eps == 0.0; }
    const CoefficientSpec& spec() const { return spec_; }
    double bump(const Vec3& x) const;
    Vec3 bump_gradient(const Vec3& x) const;
    static const Mat3& shape();

private:
    CoefficientSpec spec_;
};

struct EllipticityReport {
    double lambda = 1.0;  // smallest lambda with lambda^-1 |v|^2 <= a v.v <= lambda |v|^2
    double asymmetry = 0.0;
    std::size_t samples = 0;
};

/// Checks (2) at the given points with random unit directions as well as eigenvalues.
EllipticityReport ellipticity_probe(const Coefficients& a, const std::vector<Vec3>& points, unsigned seed);

struct AnalyticField {
    std::string name;
    ScalarFn value;
    VectorFn gradient;
    MatrixFn hessian;
};

/// Catalog: const, x1sq_minus_x2sq, r2, sin_exp, harmonic_cubic, x1x2x3, exp_cos, x3, quartic.
AnalyticField analytic_solution(const std::string& name);
std::vector<std::string> analytic_solution_names();

struct Manufactured {
    AnalyticField exact;
    ScalarFn f;
    ScalarFn phi;  // evaluated at boundary points
    VectorFn grad_f;
};

Manufactured manufactured_problem(const AnalyticField& u, std::shared_ptr<const Coefficients> a,
                                  std::shared_ptr<const BoundaryField> ell);

/// Everything the solvers need about one instance of (1).
struct DiscreteProblem {
    std::shared_ptr<const Domain> domain;
    std::shared_ptr<const BoundaryField> field;
    std::shared_ptr<const ExtendedField> L;
    std::shared_ptr<const Coefficients> a;
    ScalarFn f;
    VectorFn grad_f;  // may be empty; then differenced
    ScalarFn phi;
    double p = 2.0;
    double q = 2.0;
    std::shared_ptr<const TangencySet> E;
    std::shared_ptr<const Neighborhoods> nb;
    double mean_target = 0.0;  // pinned mean over Omega_0
};

}  // namespace poincare
