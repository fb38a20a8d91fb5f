#include "poincare/march.hpp"

#include <algorithm>
#include <cmath>

namespace poincare {

double iteration_bound(double C, double K, int m) {
    double s = 0.0, p = 1.0;
    for (int j = 1; j <= m; ++j) {
        p *= C;
        s += p;
    }
    return K * s;
}

void fit_step_constant(const std::vector<double>& zeta, double K, double& C_max, double& C_ls) {
    C_max = 0.0;
    double num = 0.0, den = 0.0;
    for (std::size_t j = 0; j + 1 < zeta.size(); ++j) {
        double x = K + zeta[j];
        if (!(x > 0.0)) continue;
        C_max = std::max(C_max, zeta[j + 1] / x);
        num += zeta[j + 1] * x;
        den += x * x;
    }
    C_ls = den > 0.0 ? num / den : 0.0;
}

std::vector<char> body_mask(const Tube& tube, double T_below) {
    std::vector<char> m(tube.size(), 0);
    for (int k = 0; k < tube.nxi; ++k)
        for (int j = 0; j < tube.na(); ++j)
            for (int i = 0; i < tube.na(); ++i)
                if (tube.in_P(i, j, k, T_below)) m[tube.idx(i, j, k)] = 1;
    return m;
}

std::vector<Cap> march_caps(const Tube& tube, const TubeOperator& op) {
    std::vector<Cap> caps;
    for (int j = 0;; ++j) {
        double T = j * tube.r;
        CapCase kind = classify_cap(tube, T);
        if (kind == CapCase::C) break;
        caps.push_back(build_cap(tube, op, T, kind));
        if (j > 10000) throw Error(ErrorCode::non_convergence, "marching does not reach T_max");
    }
    return caps;
}

TubeMarch march_tube(const Tube& tube, const TubeOperator& op, const TransformedProblem& tp, double K,
                     const MarchOptions& opts) {
    return march_tube(tube, march_caps(tube, op), op, tp, K, opts);
}

TubeMarch march_tube(const Tube& tube, const std::vector<Cap>& caps, const TubeOperator& op,
                     const TransformedProblem& tp, double K, const MarchOptions& opts) {
    const double r = tube.r;
    TubeMarch out;
    MarchTrace& tr = out.trace;
    tr.r = r;
    tr.q = opts.q;
    tr.K = K;
    tr.m = std::max(1, static_cast<int>(std::ceil(tube.T_max / r - 1e-9)));
    LatticeField V = tp.V_data;
    for (const Cap& cap : caps) {
        const double T = cap.T;
        const CapCase kind = cap.kind;
        CapSolve cs = solve_cap(cap, tp, V, opts.cap);
        const int kT = tube.xi_index(T);
        const int kend = kind == CapCase::B ? tube.nxi : kT + tube.n_per_r;
        LatticeField before = V;
        for (int id : cap.node_of) {
            int k = static_cast<int>(id / (static_cast<std::size_t>(tube.na()) * tube.na()));
            if (k > kT && k <= kend) V[id] = cs.V[id];
        }
        MarchStep st;
        st.T = T;
        st.kind = kind;
        st.unknowns = cap.size();
        st.iterations = cs.iterations;
        st.rate = cs.rate;
        st.residual = cs.residual;
        for (std::size_t id = 0; id < V.size(); ++id) {
            int k = static_cast<int>(id / (static_cast<std::size_t>(tube.na()) * tube.na()));
            if (k <= kT) st.earlier_change = std::max(st.earlier_change, std::abs(V[id] - before[id]));
        }
        tr.steps.push_back(st);
    }
    for (int j = 0; j <= tr.m; ++j) {
        double T = j * r;
        tr.T.push_back(T);
        tr.zeta.push_back(hessian_lq(tube, op, V, opts.q, body_mask(tube, T)));
    }
    fit_step_constant(tr.zeta, K, tr.C_step, tr.C_fit);
    tr.bound = iteration_bound(tr.C_step, K, tr.m);
    tr.steps_hold = true;
    tr.monotone = true;
    for (std::size_t j = 0; j + 1 < tr.zeta.size(); ++j) {
        if (tr.zeta[j + 1] > tr.C_step * (K + tr.zeta[j]) * (1.0 + 1e-12)) tr.steps_hold = false;
        if (tr.zeta[j + 1] < tr.zeta[j]) tr.monotone = false;
    }
    tr.bound_holds = tr.zeta.back() <= tr.bound * (1.0 + 1e-12);
    out.V = std::move(V);
    return out;
}

LatticeField one_shot(const Tube& tube, const TubeOperator& op, const TransformedProblem& tp, const CapOptions& opts) {
    Cap cap = build_cap(tube, op, 0.0, CapCase::B);
    CapSolve cs = solve_cap(cap, tp, tp.V_data, opts);
    LatticeField V = tp.V_data;
    const int k0 = tube.xi_index(0.0);
    for (int id : cap.node_of) {
        int k = static_cast<int>(id / (static_cast<std::size_t>(tube.na()) * tube.na()));
        if (k > k0) V[id] = cs.V[id];
    }
    return V;
}

LatticeField reconstruct_U(const Tube& tube, const LatticeField& V, const LocalizedProblem& loc) {
    LatticeField U = loc.U;
    const int k0 = tube.xi_index(0.0);
    for (int j = 0; j < tube.na(); ++j)
        for (int i = 0; i < tube.na(); ++i) {
            std::size_t base = tube.idx(i, j, k0);
            if (!tube.valid[base]) continue;
            double acc = loc.U[base];
            for (int k = k0 + 1; k < tube.nxi; ++k) {
                std::size_t id = tube.idx(i, j, k), dn = tube.idx(i, j, k - 1);
                if (!tube.valid[id]) break;
                acc += 0.5 * tube.h * (V[id] + V[dn]);
                U[id] = acc;
            }
        }
    return U;
}

double reconstruction_defect(const Tube& tube, const TubeOperator& op, const LatticeField& U, const LatticeField& V,
                             double q) {
    const double vol = tube.h * tube.h * tube.h;
    double acc = 0.0;
    for (int k = 1; k + 1 < tube.nxi; ++k)
        for (int j = 0; j < tube.na(); ++j)
            for (int i = 0; i < tube.na(); ++i) {
                if (!tube.in_body(i, j, k)) continue;
                std::size_t id = tube.idx(i, j, k);
                std::size_t up = tube.idx(i, j, k + 1), dn = tube.idx(i, j, k - 1);
                if (!tube.valid[up] || !op.ok[id]) continue;
                double d = (U[up] - U[dn]) / (2.0 * tube.h) - V[id];
                acc += op.det[id] * vol * std::pow(std::abs(d), q);
            }
    return std::pow(acc, 1.0 / q);
}

}  // namespace poincare
