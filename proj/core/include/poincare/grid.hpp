#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include "poincare/tangency.hpp"

namespace poincare {

enum class NodeKind : std::uint8_t { exterior, inside, ghost };

/// Values over the active (inside + ghost) nodes of a grid.
using GridField = std::vector<double>;

/// Uniform Cartesian grid with nodes at integer multiples of h.
class Grid {
public:
    double h = 0.0;
    Eigen::Vector3i lo_index;  // node (0,0,0) sits at h * lo_index
    int nx = 0, ny = 0, nz = 0;
    std::vector<NodeKind> kind;        // per lattice node
    std::vector<int> active_of;        // lattice node -> active index or -1
    std::vector<std::size_t> node_of;  // active index -> lattice node
    std::vector<double> weight;        // per active: cut-cell volume
    std::vector<double> distance;      // per active: d(x)
    std::vector<Vec3> foot;            // per active: y(x)
    std::vector<Vec3> foot_normal;     // per active: nu(y(x))
    std::size_t n_inside = 0;
    std::size_t n_ghost = 0;

    std::size_t n_active() const { return node_of.size(); }
    std::size_t lattice_id(int i, int j, int k) const {
        return (static_cast<std::size_t>(k) * ny + j) * nx + i;
    }
    Eigen::Vector3i ijk(std::size_t id) const {
        int i = static_cast<int>(id % nx);
        int j = static_cast<int>((id / nx) % ny);
        int k = static_cast<int>(id / (static_cast<std::size_t>(nx) * ny));
        return {i, j, k};
    }
    Vec3 lattice_position(int i, int j, int k) const {
        return h * Vec3(i + lo_index.x(), j + lo_index.y(), k + lo_index.z());
    }
    Vec3 position(std::size_t active) const {
        Eigen::Vector3i c = ijk(node_of[active]);
        return lattice_position(c.x(), c.y(), c.z());
    }
    bool is_inside(std::size_t active) const { return kind[node_of[active]] == NodeKind::inside; }
    /// Active index of the neighbour at lattice offset, -1 if absent.
    int neighbor(std::size_t active, int di, int dj, int dk) const;
    /// Active index of the lattice node at (i,j,k) or -1.
    int active_at(int i, int j, int k) const;
    /// Lattice coordinates (fractional) of a point.
    Vec3 lattice_coords(const Vec3& x) const {
        return x / h - lo_index.cast<double>();
    }
    double volume() const;
};

/// Classifies nodes and computes cut-cell weights; requires h <= d0 / 4.
Grid build_grid(const Domain& domain, double h);

struct RegionMasks {
    std::vector<char> omega;   // weight > 0
    std::vector<char> omega0;  // inside with d > d0
    std::vector<char> n1, n2, n3;
    std::vector<char> away;    // omega minus N'
    const std::vector<char>& neighborhood(int k) const { return k == 1 ? n1 : (k == 2 ? n2 : n3); }
};

RegionMasks build_regions(const Grid& grid, const Domain& domain, const Neighborhoods* nb);

std::size_t count(const std::vector<char>& mask);

/// Weighted quadratic least-squares fit around a point.
struct FitStencil {
    std::vector<int> nodes;  // active indices
    Eigen::MatrixXd coef;    // 10 x nodes: value, grad(3), hessian (xx, yy, zz, xy, xz, yz)
    double value(const GridField& u) const;
    Vec3 gradient(const GridField& u) const;
    Mat3 hessian(const GridField& u) const;
};

FitStencil quadratic_fit(const Grid& grid, const Vec3& p);

/// Value, gradient and Hessian of a grid field at arbitrary points, from per-node quadratic fits
/// blended trilinearly as Taylor expansions.
class GridSampler {
public:
    GridSampler(const Grid& grid, const GridField& u);
    struct Jet {
        double value;
        Vec3 gradient;
        Mat3 hessian;
    };
    Jet at(const Vec3& x) const;
    const Jet& node_jet(std::size_t active) const;

private:
    const Grid* grid_;
    const GridField* u_;
    mutable std::vector<std::optional<Jet>> cache_;
};

/// Finite-difference derivatives at active nodes with one-sided fallbacks.
Vec3 grid_gradient(const Grid& grid, const GridField& u, std::size_t a);
Mat3 grid_hessian(const Grid& grid, const GridField& u, std::size_t a);

}  // namespace poincare
