#pragma once

#include <vector>

#include "poincare/problem.hpp"

namespace poincare {

/// Grid derivatives of one field at every active node.
struct NodeDerivatives {
    std::vector<Vec3> grad;
    std::vector<Mat3> hess;
};
NodeDerivatives node_derivatives(const Grid& grid, const GridField& u, const std::vector<char>& mask);

double lq_norm(const Grid& grid, const GridField& v, double q, const std::vector<char>& region);

/// (sum_{|alpha| <= k} ||D^alpha u||_q^q)^{1/q}; the six distinct second derivatives for k = 2.
double sobolev_norm(const Grid& grid, const GridField& u, int k, double q, const std::vector<char>& region);
double sobolev_norm(const Grid& grid, const GridField& u, const NodeDerivatives& du, int k, double q,
                    const std::vector<char>& region);

/// Quadrature on the boundary with a tangent frame per point.
struct BoundaryQuadrature {
    std::vector<Vec3> points;
    std::vector<Vec3> normals;
    std::vector<double> weights;
    std::vector<Vec3> t1, t2;
    std::size_t size() const { return points.size(); }
};
BoundaryQuadrature boundary_quadrature(const Domain& domain, std::size_t n);

/// Surface gradient of a callable on the boundary by projected central differences.
Vec3 surface_gradient(const Domain& domain, const ScalarFn& phi, const Vec3& y, const Vec3& t1, const Vec3& t2,
                      double step = 1e-4);

/// L^q part plus Gagliardo seminorm of order s on the masked quadrature points. For s > 1 the
/// seminorm of order s - 1 is applied to the surface gradient and its L^q norm is added.
double fractional_boundary_norm(const Domain& domain, const BoundaryQuadrature& bq, const ScalarFn& phi, double s,
                                double q, const std::vector<char>* mask = nullptr);

/// Seminorm only (for tests).
double gagliardo_seminorm(const BoundaryQuadrature& bq, const std::vector<Eigen::VectorXd>& values, double s,
                          double q, const std::vector<char>* mask, const std::vector<double>* self_gradient);

/// ||f||_{L^q(Omega)} + ||df/dL||_{L^q(N)} from node values.
double f_norm(const Grid& grid, const GridField& f, const GridField& df_dL, double q,
              const std::vector<char>& omega, const std::vector<char>& n);
/// ||phi||_{W^{1-1/q,q}(dOmega)} + ||phi||_{W^{2-1/q,q}(dOmega cap N)}.
double phi_norm(const Domain& domain, const BoundaryQuadrature& bq, const ScalarFn& phi, double q,
                const std::vector<char>& in_n);

/// min{q, np/(n-p)} for p < n, else q.
double qprime(double p, double q, int n);
/// q'_0 = qprime(p, q), q'_{k+1} = qprime(q'_k, q) until q is reached.
std::vector<double> qprime_ladder(double p, double q, int n);

}  // namespace poincare
