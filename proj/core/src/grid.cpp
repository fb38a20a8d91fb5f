#include "poincare/grid.hpp"

#include <cmath>

namespace poincare {

int Grid::active_at(int i, int j, int k) const {
    if (i < 0 || j < 0 || k < 0 || i >= nx || j >= ny || k >= nz) return -1;
    return active_of[lattice_id(i, j, k)];
}

int Grid::neighbor(std::size_t active, int di, int dj, int dk) const {
    Eigen::Vector3i c = ijk(node_of[active]);
    return active_at(c.x() + di, c.y() + dj, c.z() + dk);
}

double Grid::volume() const {
    double v = 0.0;
    for (double w : weight) v += w;
    return v;
}

Grid build_grid(const Domain& domain, double h) {
    if (!(h > 0.0)) throw Error(ErrorCode::invalid_argument, "grid spacing must be positive");
    const double d0 = domain.collar_width();
    if (h > d0 / 4.0 * (1.0 + 1e-12))
        throw Error(ErrorCode::invalid_argument, "grid too coarse for the collar: need h <= d0/4");
    Grid g;
    g.h = h;
    Box bb = domain.bounding_box();
    Eigen::Vector3i lo, hi;
    for (int d = 0; d < 3; ++d) {
        lo[d] = static_cast<int>(std::floor(bb.lo[d] / h)) - 2;
        hi[d] = static_cast<int>(std::ceil(bb.hi[d] / h)) + 2;
    }
    g.lo_index = lo;
    g.nx = hi.x() - lo.x() + 1;
    g.ny = hi.y() - lo.y() + 1;
    g.nz = hi.z() - lo.z() + 1;
    const std::size_t n = static_cast<std::size_t>(g.nx) * g.ny * g.nz;
    std::vector<double> level(n);
    for (int k = 0; k < g.nz; ++k)
        for (int j = 0; j < g.ny; ++j)
            for (int i = 0; i < g.nx; ++i) level[g.lattice_id(i, j, k)] = domain.level(g.lattice_position(i, j, k));

    g.kind.assign(n, NodeKind::exterior);
    for (std::size_t id = 0; id < n; ++id)
        if (level[id] < 0.0) g.kind[id] = NodeKind::inside;
    // Ghosts: outside nodes with an inside face or edge neighbour.
    for (int k = 0; k < g.nz; ++k)
        for (int j = 0; j < g.ny; ++j)
            for (int i = 0; i < g.nx; ++i) {
                std::size_t id = g.lattice_id(i, j, k);
                if (g.kind[id] == NodeKind::inside) continue;
                bool near = false;
                for (int dk = -1; dk <= 1 && !near; ++dk)
                    for (int dj = -1; dj <= 1 && !near; ++dj)
                        for (int di = -1; di <= 1 && !near; ++di) {
                            int m = std::abs(di) + std::abs(dj) + std::abs(dk);
                            if (m == 0 || m == 3) continue;
                            int a = i + di, b = j + dj, c = k + dk;
                            if (a < 0 || b < 0 || c < 0 || a >= g.nx || b >= g.ny || c >= g.nz) continue;
                            if (g.kind[g.lattice_id(a, b, c)] == NodeKind::inside) near = true;
                        }
                if (near) g.kind[id] = NodeKind::ghost;
            }

    g.active_of.assign(n, -1);
    for (std::size_t id = 0; id < n; ++id) {
        if (g.kind[id] == NodeKind::exterior) continue;
        g.active_of[id] = static_cast<int>(g.node_of.size());
        g.node_of.push_back(id);
        if (g.kind[id] == NodeKind::inside) ++g.n_inside; else ++g.n_ghost;
    }

    const std::size_t na = g.n_active();
    g.weight.assign(na, 0.0);
    g.distance.assign(na, 0.0);
    g.foot.assign(na, Vec3::Zero());
    g.foot_normal.assign(na, Vec3::Zero());
    const double q = 0.25 * h;
    for (std::size_t a = 0; a < na; ++a) {
        Vec3 x = g.position(a);
        int hits = 0;
        for (int s = 0; s < 8; ++s) {
            Vec3 o((s & 1) ? q : -q, (s & 2) ? q : -q, (s & 4) ? q : -q);
            if (domain.level(x + o) < 0.0) ++hits;
        }
        g.weight[a] = hits / 8.0 * h * h * h;
        Projection p = domain.project(x);
        g.distance[a] = p.distance;
        g.foot[a] = p.point;
        g.foot_normal[a] = p.normal;
    }
    for (std::size_t a = 0; a < na; ++a) {
        if (g.is_inside(a)) continue;
        if (g.distance[a] > 2.0 * h)
            throw Error(ErrorCode::invalid_argument, "unresolved ghost node: boundary too coarse at this h");
    }
    return g;
}

std::size_t count(const std::vector<char>& mask) {
    std::size_t c = 0;
    for (char m : mask) c += m ? 1 : 0;
    return c;
}

RegionMasks build_regions(const Grid& grid, const Domain& domain, const Neighborhoods* nb) {
    const std::size_t na = grid.n_active();
    RegionMasks m;
    m.omega.assign(na, 0);
    m.omega0.assign(na, 0);
    m.n1.assign(na, 0);
    m.n2.assign(na, 0);
    m.n3.assign(na, 0);
    m.away.assign(na, 0);
    const double d0 = domain.collar_width();
    for (std::size_t a = 0; a < na; ++a) {
        m.omega[a] = grid.weight[a] > 0.0;
        if (grid.is_inside(a) && grid.distance[a] > d0) m.omega0[a] = 1;
        // N', N'' and N are taken inside the collar
        if (nb && !nb->empty() && grid.weight[a] > 0.0 && grid.distance[a] <= d0) {
            double dist = nb->dist_to_E(grid.position(a));
            m.n1[a] = dist <= nb->rho(1);
            m.n2[a] = dist <= nb->rho(2);
            m.n3[a] = dist <= nb->rho(3);
        }
        m.away[a] = m.omega[a] && !m.n1[a];
    }
    return m;
}

}  // namespace poincare
