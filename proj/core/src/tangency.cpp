#include <algorithm>
#include <cmath>
#include <numeric>

#include "poincare/tangency.hpp"

namespace poincare {

namespace {

struct UnionFind {
    std::vector<std::size_t> parent;
    explicit UnionFind(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
    std::size_t find(std::size_t i) {
        while (parent[i] != i) i = parent[i] = parent[parent[i]];
        return i;
    }
    void unite(std::size_t a, std::size_t b) {
        a = find(a);
        b = find(b);
        if (a != b) parent[std::max(a, b)] = std::min(a, b);
    }
};

double gamma_at(const ExtendedField& L, const Vec3& x) {
    Projection p = L.domain().project(x);
    return L.boundary_field().ell_with_normal(p.point, p.normal).dot(p.normal);
}

}  // namespace

double TangencySet::area() const {
    return std::accumulate(weights.begin(), weights.end(), 0.0);
}

TangencySet tangency_set(const BoundaryField& field, double eps_tan, std::size_t samples) {
    const Domain& dom = field.domain();
    TangencySet E;
    E.eps_tan = eps_tan;
    BoundarySamples s = dom.sample_boundary(samples);
    for (std::size_t i = 0; i < s.size(); ++i) {
        double g = field.ell_with_normal(s.points[i], s.normals[i]).dot(s.normals[i]);
        if (std::abs(g) <= eps_tan) {
            E.points.push_back(s.points[i]);
            E.normals.push_back(s.normals[i]);
            E.gammas.push_back(g);
            E.weights.push_back(s.weights[i]);
        }
    }
    E.spacing = std::sqrt(dom.boundary_area() / static_cast<double>(samples));
    if (E.empty()) {
        E.notice = "problem is regular; degenerate pipeline unnecessary";
        return E;
    }

    const double link = 2.5 * E.spacing;
    PointIndex index(E.points, link);
    UnionFind uf(E.points.size());
    for (std::size_t i = 0; i < E.points.size(); ++i) {
        index.for_each_near(E.points[i], [&](std::size_t j) {
            if ((E.points[i] - E.points[j]).norm() <= link) uf.unite(i, j);
        });
    }
    E.component.assign(E.points.size(), -1);
    for (std::size_t i = 0; i < E.points.size(); ++i) {
        std::size_t root = uf.find(i);
        if (E.component[root] < 0) {
            E.component[root] = static_cast<int>(E.components.size());
            E.components.emplace_back();
        }
        int c = E.component[root];
        E.component[i] = c;
        E.components[c].members.push_back(i);
        E.components[c].area += E.weights[i];
    }

    // Refinement: a patch of positive measure gains samples in proportion to the sample count.
    BoundarySamples fine = dom.sample_boundary(4 * samples + 1);
    for (std::size_t i = 0; i < fine.size(); ++i) {
        double g = field.ell_with_normal(fine.points[i], fine.normals[i]).dot(fine.normals[i]);
        if (std::abs(g) > eps_tan) continue;
        double best = link;
        int comp = -1;
        index.for_each_near(fine.points[i], [&](std::size_t j) {
            double d = (fine.points[i] - E.points[j]).norm();
            if (d <= best) {
                best = d;
                comp = E.component[j];
            }
        });
        if (comp >= 0) ++E.components[comp].refined_count;
    }

    for (auto& c : E.components) {
        std::size_t n = c.members.size();
        if (n >= 8 && c.refined_count >= 3 * n) {
            c.label = "massive-measure";
            continue;
        }
        c.label = "transversal-crossing";
        if (n >= 3) {
            Vec3 mean = Vec3::Zero();
            for (auto i : c.members) mean += E.points[i];
            mean /= static_cast<double>(n);
            Mat3 cov = Mat3::Zero();
            Vec3 tau_mean = Vec3::Zero();
            for (auto i : c.members) {
                Vec3 d = E.points[i] - mean;
                cov += d * d.transpose();
                tau_mean += field.tau(E.points[i]);
            }
            Eigen::SelfAdjointEigenSolver<Mat3> es(cov);
            Vec3 dir = es.eigenvectors().col(2);
            if (tau_mean.norm() > 0.0 && std::abs(dir.dot(tau_mean.normalized())) > 0.7)
                c.label = "contains-tau-arcs";
        }
    }
    return E;
}

NeutralityVerdict classify_neutrality(const BoundaryField& field, double eps_tan, std::size_t samples) {
    NeutralityVerdict v;
    v.min_gamma = 1.0;
    BoundarySamples s = field.domain().sample_boundary(samples);
    for (std::size_t i = 0; i < s.size(); ++i) {
        double g = field.ell_with_normal(s.points[i], s.normals[i]).dot(s.normals[i]);
        v.min_gamma = std::min(v.min_gamma, g);
        if (g < -eps_tan) v.witnesses.push_back(s.points[i]);
    }
    v.neutral = v.witnesses.empty();
    return v;
}

ArcResult tangency_arc(const ExtendedField& L, const Vec3& z, double eps_tan, double budget, double step,
                       double close_tol) {
    ArcResult out;
    const Vec3 n0 = L.value(z);
    auto in_e = [&](const Vec3& x) { return std::abs(gamma_at(L, x)) <= eps_tan; };
    for (double sgn : {1.0, -1.0}) {
        auto sigma = [&](const Vec3& x) { return sgn * (x - z).dot(n0); };
        Vec3 y = z;
        double travelled = 0.0;
        bool done = false;
        while (travelled < budget) {
            double ds = 0.0;
            Vec3 next = rk4_step(L, y, sgn * step, &ds);
            if (!in_e(next)) {
                double lo = 0.0, hi = step;
                while (hi - lo > 1e-10) {
                    double mid = 0.5 * (lo + hi);
                    if (in_e(rk4_step(L, y, sgn * mid))) lo = mid; else hi = mid;
                }
                double dsp = 0.0;
                rk4_step(L, y, sgn * hi, &dsp);
                travelled += dsp;
                done = true;
                break;
            }
            if (travelled > 4.0 * step && sigma(y) < 0.0 && sigma(next) >= 0.0) {
                double lo = 0.0, hi = step;
                while (hi - lo > 1e-12) {
                    double mid = 0.5 * (lo + hi);
                    if (sigma(rk4_step(L, y, sgn * mid)) < 0.0) lo = mid; else hi = mid;
                }
                Vec3 c = rk4_step(L, y, sgn * hi);
                if ((c - z).norm() <= close_tol) {
                    out.violation = Violation{"closed", z, travelled};
                    return out;
                }
            }
            y = next;
            travelled += ds;
        }
        if (!done) {
            out.violation = Violation{"trapped", z, travelled};
            return out;
        }
        (sgn > 0 ? out.forward : out.backward) = travelled;
    }
    return out;
}

double transversality_margin(const ExtendedField& L, const BoundarySamples& samples) {
    const double d0 = L.domain().collar_width();
    double m = 1.0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        Vec3 x = samples.points[i] - d0 * samples.normals[i];
        Projection p = L.domain().project(x);
        m = std::min(m, L.value(x).dot(p.normal));
    }
    return m;
}

Certificate certify_nontrapping(const ExtendedField& L, const TangencySet& E, const CertifyOptions& opts) {
    if (E.empty()) throw Error(ErrorCode::invalid_argument, "certification needs a nonempty tangency set");
    const Domain& dom = L.domain();
    const double d0 = dom.collar_width();
    const double step = opts.step > 0.0 ? opts.step : d0 / 20.0;
    Certificate cert;

    std::size_t stride = std::max<std::size_t>(1, E.points.size() / std::max<std::size_t>(1, opts.max_e_samples));
    for (std::size_t i = 0; i < E.points.size(); i += stride) {
        ArcResult arc = tangency_arc(L, E.points[i], E.eps_tan, opts.budget, step, opts.close_tol);
        ++cert.e_trajectories;
        if (arc.violation) {
            cert.violation = arc.violation;
            return cert;
        }
        cert.kappa0 = std::max(cert.kappa0, arc.forward + arc.backward);
    }

    // Every collar cell is reached from the inner-region boundary: integrate backward until d >= d0 inside.
    const double cell = opts.collar_cell > 0.0 ? opts.collar_cell : d0 / 2.0;
    Box b = dom.bounding_box();
    Vec3 lo = b.lo - Vec3::Constant(d0);
    Vec3 hi = b.hi + Vec3::Constant(d0);
    Eigen::Vector3i n = ((hi - lo) / cell).array().ceil().cast<int>();
    auto reached = [&](const Vec3& x) { return dom.inside(x) && dom.project(x).distance >= d0; };
    for (int i = 0; i <= n.x(); ++i)
        for (int j = 0; j <= n.y(); ++j)
            for (int k = 0; k <= n.z(); ++k) {
                Vec3 x = lo + cell * Vec3(i, j, k);
                Projection p = dom.project(x);
                if (p.distance > d0 || (dom.inside(x) && p.distance >= d0)) continue;
                ++cert.collar_trajectories;
                try {
                    EventResult r = integrate_until(L, x, -1.0, opts.budget, step, reached);
                    if (!r.found) {
                        cert.violation = Violation{"trapped", x, r.arclength};
                        return cert;
                    }
                    cert.kappa = std::max(cert.kappa, r.arclength);
                } catch (const Error&) {
                    cert.violation = Violation{"escaped", x, 0.0};
                    return cert;
                }
            }
    cert.transversality = transversality_margin(L, dom.sample_boundary(2001));
    return cert;
}

Neighborhoods::Neighborhoods(const TangencySet& E, const Domain& domain, std::array<double, 3> rho)
    : rho_(rho), domain_(&domain) {
    if (!(rho[0] > 0.0 && rho[0] < rho[1] && rho[1] < rho[2]))
        throw Error(ErrorCode::config, "neighborhood radii must be positive and strictly increasing");
    if (!E.empty()) index_ = PointIndex(E.points, rho[2]);
}

double Neighborhoods::dist_to_E(const Vec3& x) const {
    if (index_.empty()) return std::numeric_limits<double>::infinity();
    return index_.nearest_distance(x);
}

bool Neighborhoods::in(const Vec3& x, int k) const {
    if (index_.empty()) return false;
    if (domain_->level(x) > 0.0) return false;
    if (dist_to_E(x) > rho_[k - 1]) return false;
    return domain_->project(x).distance <= domain_->collar_width();
}

int Neighborhoods::level(const Vec3& x) const {
    if (index_.empty() || domain_->level(x) > 0.0) return 0;
    double d = dist_to_E(x);
    if (d > rho_[2] || domain_->project(x).distance > domain_->collar_width()) return 0;
    if (d <= rho_[0]) return 1;
    if (d <= rho_[1]) return 2;
    return 3;
}

ExitTimes exit_times(const ExtendedField& L, const Vec3& x0, const Neighborhoods& nb, double step,
                     double budget, double base_fraction) {
    const Domain& dom = L.domain();
    ExitTimes t;
    auto outside = [&](const Vec3& x) { return dom.level(x) > 0.0 && dom.project(x).distance > 1e-10; };
    EventResult fwd = integrate_until(L, x0, 1.0, budget, step, outside);
    if (!fwd.found) throw Error(ErrorCode::certification, "forward trajectory does not exit the domain");
    t.t_plus = fwd.time;
    const double mid = nb.rho(1) + base_fraction * (nb.rho(2) - nb.rho(1));
    auto based = [&](const Vec3& x) { return dom.inside(x) && nb.dist_to_E(x) >= mid; };
    EventResult bwd = integrate_until(L, x0, -1.0, budget, step, based);
    if (!bwd.found) throw Error(ErrorCode::certification, "backward trajectory does not reach N'' \\ N'");
    t.t_minus = bwd.time;
    return t;
}

double band_exit_time(const DirectionField& F, const BoundaryField& field, const Vec3& x, double eps_tan,
                      double step, double budget) {
    const Domain& dom = field.domain();
    auto left = [&](const Vec3& p) {
        Projection pr = dom.project(p);
        return std::abs(field.ell_with_normal(pr.point, pr.normal).dot(pr.normal)) > eps_tan;
    };
    EventResult r = integrate_until(F, x, 1.0, budget, step, left);
    if (!r.found) throw Error(ErrorCode::certification, "trajectory does not leave the tangency set");
    return r.time;
}

}  // namespace poincare
