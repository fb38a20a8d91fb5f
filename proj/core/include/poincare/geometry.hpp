#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "poincare/errors.hpp"

namespace poincare {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

struct Box {
    Vec3 lo;
    Vec3 hi;
    bool contains(const Vec3& x) const {
        return (x.array() >= lo.array()).all() && (x.array() <= hi.array()).all();
    }
};

struct DomainSpec {
    std::string kind = "ball";  // ball | ellipsoid | perturbed_ball
    double radius = 1.0;
    Vec3 center = Vec3::Zero();
    Vec3 semi_axes = Vec3(1.0, 1.0, 1.0);
    double perturbation = 0.05;
    std::optional<double> collar_width;  // d0 override
};

struct Projection {
    Vec3 point;       // y(x) on the boundary
    Vec3 normal;      // outward unit normal at y(x)
    double distance;  // d(x) >= 0
    int iterations;
};

/// Boundary quadrature set: points, outward normals and surface area weights.
struct BoundarySamples {
    std::vector<Vec3> points;
    std::vector<Vec3> normals;
    std::vector<double> weights;
    std::size_t size() const { return points.size(); }
};

/// Smooth bounded domain Omega = {level < 0}, star-shaped with respect to center().
class Domain {
public:
    virtual ~Domain() = default;

    virtual double level(const Vec3& x) const = 0;
    virtual Vec3 level_gradient(const Vec3& x) const = 0;
    virtual Mat3 level_hessian(const Vec3& x) const = 0;
    virtual Box bounding_box() const = 0;
    virtual std::string kind() const = 0;
    virtual Vec3 center() const = 0;

    /// Nearest boundary point; valid for any x, no collar restriction.
    virtual Projection project(const Vec3& x) const;

    bool inside(const Vec3& x) const { return level(x) < 0.0; }
    Vec3 boundary_point_along(const Vec3& direction) const;
    Vec3 normal_unchecked(const Vec3& y) const;
    Mat3 shape_operator(const Vec3& y) const;  // tangential Hessian / |grad|

    double collar_width() const { return d0_; }
    double reach_estimate() const { return reach_; }
    double inradius() const { return inradius_; }
    double diameter() const { return diameter_; }
    double boundary_area() const { return area_; }

    /// Fibonacci-direction sampling of the boundary with area weights.
    BoundarySamples sample_boundary(std::size_t count) const;

    /// Computes reach, inradius, diameter, area and validates d0 < reach.
    void calibrate(std::optional<double> collar_override);

protected:
    double d0_ = 0.0;
    double reach_ = 0.0;
    double inradius_ = 0.0;
    double diameter_ = 0.0;
    double area_ = 0.0;
    std::vector<Vec3> seeds_;  // coarse boundary samples for projection seeding
};

class Ball final : public Domain {
public:
    Ball(double radius, Vec3 center);
    double level(const Vec3& x) const override;
    Vec3 level_gradient(const Vec3& x) const override;
    Mat3 level_hessian(const Vec3& x) const override;
    Box bounding_box() const override;
    std::string kind() const override { return "ball"; }
    Vec3 center() const override { return c_; }
    Projection project(const Vec3& x) const override;
    double radius() const { return R_; }

private:
    double R_;
    Vec3 c_;
};

class Ellipsoid final : public Domain {
public:
    Ellipsoid(Vec3 semi_axes, Vec3 center);
    double level(const Vec3& x) const override;
    Vec3 level_gradient(const Vec3& x) const override;
    Mat3 level_hessian(const Vec3& x) const override;
    Box bounding_box() const override;
    std::string kind() const override { return "ellipsoid"; }
    Vec3 center() const override { return c_; }

private:
    Vec3 a_;
    Vec3 c_;
};

/// |x|^2 - R^2 + eps (x1^4 + x2^4 + x3^4 - R^4), relative to the center.
class PerturbedBall final : public Domain {
public:
    PerturbedBall(double radius, double eps, Vec3 center);
    double level(const Vec3& x) const override;
    Vec3 level_gradient(const Vec3& x) const override;
    Mat3 level_hessian(const Vec3& x) const override;
    Box bounding_box() const override;
    std::string kind() const override { return "perturbed_ball"; }
    Vec3 center() const override { return c_; }

private:
    double R_;
    double eps_;
    Vec3 c_;
};

std::shared_ptr<const Domain> make_domain(const DomainSpec& spec);

double signed_distance(const Domain& domain, const Vec3& x);
Projection nearest_point(const Domain& domain, const Vec3& x);
Vec3 outward_normal(const Domain& domain, const Vec3& x);

/// Membership in the collar Gamma = {d <= d0} and in the inner region Omega_0.
struct Collar {
    const Domain* domain;
    double d0;
    bool in_collar(const Vec3& x) const;
    bool in_inner_region(const Vec3& x) const;
};

struct SmoothnessProbeReport {
    double max_boundary_gradient = 0.0;  // |grad d^2| on the boundary
    double max_jump = 0.0;               // one-sided gradient mismatch across the boundary
    double lipschitz_estimate = 0.0;     // of grad d^2 over the samples
    std::size_t samples = 0;
};

/// Finite-difference probe of the C^{1,1} regularity of d^2 across the boundary.
SmoothnessProbeReport squared_distance_smoothness_probe(const Domain& domain,
                                                        const std::vector<Vec3>& boundary_points,
                                                        double h);

Vec3 squared_distance_gradient(const Domain& domain, const Vec3& x, double h);

}  // namespace poincare
