#pragma once

/// @file solver.hpp
/// Stationary solver for the discrete generalized Stokes system
///   -div A(D u) + grad pi = -div G,   div u = 0
/// on the staggered grid, plus right-hand-side lifting, homogeneous
/// sub-ball solves and a Picard loop for the convective problem.
///
/// Scheme: damped Newton on the kappa-regularized stress, with continuation
/// in the regularization floor for degenerate laws (kappa = 0, p < 2). Each
/// Newton step is a linear saddle-point problem solved by augmented-
/// Lagrangian Uzawa iteration around a sparse direct factorization of the
/// penalized velocity block. Dirichlet boundaries pin the normal faces and
/// reflect tangential ghosts (zero wall slip); periodic boxes pin one face
/// per component to fix the translation gauge.

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "genstokes/constitutive.hpp"
#include "genstokes/field.hpp"
#include "genstokes/operators.hpp"

namespace genstokes {

using SpMat = Eigen::SparseMatrix<double>;
using DVec = Eigen::VectorXd;

struct SolverConfig {
    Grid grid{8, 1.0, BoundaryKind::Periodic};
    StressLaw law{NFunctionModel::power_law_additive(1.0, 0.0, 2.0)};
    std::optional<TensorField> rhs_G;
    std::optional<VectorField> rhs_f;
    std::optional<VectorField> boundary_data;  ///< pinned-face values (Dirichlet / masked)
    double newton_tol = 1e-9;
    int max_newton = 50;
    double kappa_floor = 1e-8;
    double uzawa_rho = 1.0;
    bool convective = false;
};

class SolveError : public std::runtime_error {
  public:
    SolveError(const std::string& msg, std::vector<double> hist = {})
        : std::runtime_error(msg), residual_history(std::move(hist)) {}
    std::vector<double> residual_history;
};

struct SolveResult {
    VectorField u;
    ScalarField pi;
    TensorField du;      ///< solver-consistent symmetric gradient
    TensorField stress;  ///< A(D u) under the effective (floored) law
    std::vector<double> residual_history;
    int iterations = 0;
    double energy = 0.0;           ///< sum phi(|Du|) h^2 - <G, Du> over active cells
    double kappa_effective = 0.0;
    std::vector<char> active_cells;  ///< cells the solve constrained (all, or a ball)
};

namespace stokes_detail {

// ---------------------------------------------------------------------------
// Degrees of freedom
// ---------------------------------------------------------------------------

struct DofMap {
    Grid grid;
    std::vector<int> u1_dof, u2_dof;  // face -> free index, -1 pinned
    std::vector<int> press_dof;       // cell -> constrained index, -1 inactive
    std::vector<char> active;         // divergence-constrained cells
    int n_vel = 0;
    int n_press = 0;
    // Discrete kernel of (D, C) on full periodic boxes: the two translations
    // and, for even n, the row/column alternating modes that the node-averaged
    // 12-component annihilates. Constrained to zero through Lagrange borders.
    std::vector<DVec> null_modes;

    DofMap(const Grid& g, const std::vector<char>* mask) : grid(g) {
        active.assign(static_cast<std::size_t>(g.cells()), 1);
        if (mask) active = *mask;
        auto cell_in = [&](int i, int j) -> bool {
            if (g.periodic()) return active[static_cast<std::size_t>(g.cell_index(g.wrap(i), g.wrap(j)))] != 0;
            if (i < 0 || i >= g.n || j < 0 || j >= g.n) return false;
            return active[static_cast<std::size_t>(g.cell_index(i, j))] != 0;
        };

        u1_dof.assign(static_cast<std::size_t>(g.u1_count()), -1);
        u2_dof.assign(static_cast<std::size_t>(g.u2_count()), -1);
        press_dof.assign(static_cast<std::size_t>(g.cells()), -1);

        for (int j = 0; j < g.u1_ny(); ++j)
            for (int i = 0; i < g.u1_nx(); ++i) {
                if (!g.periodic() && (i == 0 || i == g.n)) continue;  // boundary faces
                if (cell_in(i - 1, j) && cell_in(i, j)) {
                    u1_dof[static_cast<std::size_t>(g.u1_index(i, j))] = n_vel++;
                }
            }
        for (int j = 0; j < g.u2_ny(); ++j)
            for (int i = 0; i < g.u2_nx(); ++i) {
                if (!g.periodic() && (j == 0 || j == g.n)) continue;
                if (cell_in(i, j - 1) && cell_in(i, j)) {
                    u2_dof[static_cast<std::size_t>(g.u2_index(i, j))] = n_vel++;
                }
            }
        for (int c = 0; c < g.cells(); ++c) {
            if (active[static_cast<std::size_t>(c)]) press_dof[static_cast<std::size_t>(c)] = n_press++;
        }
        if (n_vel == 0) throw std::invalid_argument("solver: no free velocity unknowns");

        if (g.periodic() && !mask) {
            anchor1 = u1_dof[static_cast<std::size_t>(g.u1_index(0, 0))];
            anchor2 = u2_dof[static_cast<std::size_t>(g.u2_index(0, 0))];
        }
    }

    bool is_anchor(int dof) const { return dof == anchor1 || dof == anchor2; }
};

// ---------------------------------------------------------------------------
// Operator assembly
// ---------------------------------------------------------------------------

struct AssembledOps {
    SpMat D;     // 3*cells x n_vel
    DVec d_aff;  // pinned-face contribution to D u
    SpMat C;     // n_press x n_vel
    DVec c_aff;
    SpMat Ct;
    SpMat CtC;
    DVec w2;  // Frobenius weights (1,2,1) per cell row
};

/// Builds D (symmetric gradient to cell tensors) and C (divergence on the
/// active cells) with the pinned-face values folded into affine vectors.
inline AssembledOps assemble_ops(const DofMap& dofs, const VectorField& pinned) {
    const Grid& g = dofs.grid;
    const double inv_h = 1.0 / g.h;
    AssembledOps ops;
    const int nc = g.cells();
    ops.d_aff = DVec::Zero(3 * nc);
    ops.c_aff = DVec::Zero(dofs.n_press);
    ops.w2 = DVec::Ones(3 * nc);
    for (int c = 0; c < nc; ++c) ops.w2[3 * c + 1] = 2.0;

    std::vector<Eigen::Triplet<double>> td, tc;
    td.reserve(static_cast<std::size_t>(nc) * 20);
    tc.reserve(static_cast<std::size_t>(dofs.n_press) * 4);

    auto add_u1 = [&](int row, int i, int j, double coef, DVec& aff,
                      std::vector<Eigen::Triplet<double>>& trip) {
        int ii = i, jj = j;
        if (g.periodic()) {
            ii = g.wrap(i);
            jj = g.wrap(j);
        }
        const int dof = dofs.u1_dof[static_cast<std::size_t>(g.u1_index(ii, jj))];
        if (dof >= 0) {
            trip.emplace_back(row, dof, coef);
        } else {
            aff[row] += coef * pinned.u1(ii, jj);
        }
    };
    auto add_u2 = [&](int row, int i, int j, double coef, DVec& aff,
                      std::vector<Eigen::Triplet<double>>& trip) {
        int ii = i, jj = j;
        if (g.periodic()) {
            ii = g.wrap(i);
            jj = g.wrap(j);
        }
        const int dof = dofs.u2_dof[static_cast<std::size_t>(g.u2_index(ii, jj))];
        if (dof >= 0) {
            trip.emplace_back(row, dof, coef);
        } else {
            aff[row] += coef * pinned.u2(ii, jj);
        }
    };

    // d(u1)/dy at node (ni, nj); Dirichlet walls reflect a zero-slip ghost.
    auto add_dy_u1 = [&](int row, int ni, int nj, double w) {
        if (g.periodic()) {
            add_u1(row, ni, nj, w * inv_h, ops.d_aff, td);
            add_u1(row, ni, nj - 1, -w * inv_h, ops.d_aff, td);
        } else if (nj == 0) {
            add_u1(row, ni, 0, 2.0 * w * inv_h, ops.d_aff, td);
        } else if (nj == g.n) {
            add_u1(row, ni, g.n - 1, -2.0 * w * inv_h, ops.d_aff, td);
        } else {
            add_u1(row, ni, nj, w * inv_h, ops.d_aff, td);
            add_u1(row, ni, nj - 1, -w * inv_h, ops.d_aff, td);
        }
    };
    auto add_dx_u2 = [&](int row, int ni, int nj, double w) {
        if (g.periodic()) {
            add_u2(row, ni, nj, w * inv_h, ops.d_aff, td);
            add_u2(row, ni - 1, nj, -w * inv_h, ops.d_aff, td);
        } else if (ni == 0) {
            add_u2(row, 0, nj, 2.0 * w * inv_h, ops.d_aff, td);
        } else if (ni == g.n) {
            add_u2(row, g.n - 1, nj, -2.0 * w * inv_h, ops.d_aff, td);
        } else {
            add_u2(row, ni, nj, w * inv_h, ops.d_aff, td);
            add_u2(row, ni - 1, nj, -w * inv_h, ops.d_aff, td);
        }
    };

    for (int j = 0; j < g.n; ++j) {
        for (int i = 0; i < g.n; ++i) {
            const int c = g.cell_index(i, j);
            add_u1(3 * c + 0, i + 1, j, inv_h, ops.d_aff, td);
            add_u1(3 * c + 0, i, j, -inv_h, ops.d_aff, td);
            add_u2(3 * c + 2, i, j + 1, inv_h, ops.d_aff, td);
            add_u2(3 * c + 2, i, j, -inv_h, ops.d_aff, td);
            for (int dj = 0; dj <= 1; ++dj)
                for (int di = 0; di <= 1; ++di) {
                    add_dy_u1(3 * c + 1, i + di, j + dj, 0.125);
                    add_dx_u2(3 * c + 1, i + di, j + dj, 0.125);
                }
        }
    }

    for (int j = 0; j < g.n; ++j) {
        for (int i = 0; i < g.n; ++i) {
            const int pc = dofs.press_dof[static_cast<std::size_t>(g.cell_index(i, j))];
            if (pc < 0) continue;
            add_u1(pc, i + 1, j, inv_h, ops.c_aff, tc);
            add_u1(pc, i, j, -inv_h, ops.c_aff, tc);
            add_u2(pc, i, j + 1, inv_h, ops.c_aff, tc);
            add_u2(pc, i, j, -inv_h, ops.c_aff, tc);
        }
    }

    ops.D.resize(3 * nc, dofs.n_vel);
    ops.D.setFromTriplets(td.begin(), td.end());
    ops.D.makeCompressed();
    ops.C.resize(dofs.n_press, dofs.n_vel);
    ops.C.setFromTriplets(tc.begin(), tc.end());
    ops.C.makeCompressed();
    ops.Ct = ops.C.transpose();
    ops.CtC = (ops.Ct * ops.C).pruned();
    ops.CtC.makeCompressed();
    return ops;
}

// Scatter the free unknowns back into a full vector field on the grid.
inline VectorField scatter(const DofMap& dofs, const VectorField& pinned, const DVec& x) {
    VectorField out = pinned;
    const Grid& g = dofs.grid;
    for (int j = 0; j < g.u1_ny(); ++j)
        for (int i = 0; i < g.u1_nx(); ++i) {
            const int dof = dofs.u1_dof[static_cast<std::size_t>(g.u1_index(i, j))];
            if (dof >= 0) out.u1(i, j) = x[dof];
        }
    for (int j = 0; j < g.u2_ny(); ++j)
        for (int i = 0; i < g.u2_nx(); ++i) {
            const int dof = dofs.u2_dof[static_cast<std::size_t>(g.u2_index(i, j))];
            if (dof >= 0) out.u2(i, j) = x[dof];
        }
    return out;
}

inline DVec gather(const DofMap& dofs, const VectorField& u) {
    DVec x = DVec::Zero(dofs.n_vel);
    const Grid& g = dofs.grid;
    for (int j = 0; j < g.u1_ny(); ++j)
        for (int i = 0; i < g.u1_nx(); ++i) {
            const int dof = dofs.u1_dof[static_cast<std::size_t>(g.u1_index(i, j))];
            if (dof >= 0) x[dof] = u.u1(i, j);
        }
    for (int j = 0; j < g.u2_ny(); ++j)
        for (int i = 0; i < g.u2_nx(); ++i) {
            const int dof = dofs.u2_dof[static_cast<std::size_t>(g.u2_index(i, j))];
            if (dof >= 0) x[dof] = u.u2(i, j);
        }
    return x;
}

inline DVec tensor_to_vec(const TensorField& t) {
    const int nc = t.grid().cells();
    DVec v(3 * nc);
    for (int c = 0; c < nc; ++c) {
        const SymMat2& m = t.data()[static_cast<std::size_t>(c)];
        v[3 * c + 0] = m.a11;
        v[3 * c + 1] = m.a12;
        v[3 * c + 2] = m.a22;
    }
    return v;
}

inline TensorField vec_to_tensor(const Grid& g, const DVec& v) {
    TensorField t(g);
    for (int c = 0; c < g.cells(); ++c) {
        t.data()[static_cast<std::size_t>(c)] = {v[3 * c + 0], v[3 * c + 1], v[3 * c + 2]};
    }
    return t;
}

// Stress of every cell tensor, as a 3*nc vector.
inline DVec stress_vec(const StressLaw& law, const DVec& du) {
    DVec a(du.size());
    const int nc = static_cast<int>(du.size()) / 3;
    for (int c = 0; c < nc; ++c) {
        const SymMat2 q{du[3 * c], du[3 * c + 1], du[3 * c + 2]};
        const SymMat2 s = stress(law, q);
        a[3 * c] = s.a11;
        a[3 * c + 1] = s.a12;
        a[3 * c + 2] = s.a22;
    }
    return a;
}

// ---------------------------------------------------------------------------
// Linearized stress block  W2 M(Q) = m W2 + (m'/t) (W2 q)(W2 q)^T
// ---------------------------------------------------------------------------

inline SpMat stress_jacobian_block(const StressLaw& law, const DVec& du, double& mean_viscosity) {
    const int nc = static_cast<int>(du.size()) / 3;
    std::vector<Eigen::Triplet<double>> tb;
    tb.reserve(static_cast<std::size_t>(nc) * 9);
    const double w[3] = {1.0, 2.0, 1.0};
    double msum = 0.0;
    for (int c = 0; c < nc; ++c) {
        const SymMat2 q{du[3 * c], du[3 * c + 1], du[3 * c + 2]};
        const double t = q.norm();
        const double m = law.model.prime_over_t(t);
        msum += m;
        for (int k = 0; k < 3; ++k) tb.emplace_back(3 * c + k, 3 * c + k, m * w[k]);
        if (t > 1e-150) {
            const double mp = law.model.prime_over_t_derivative(t);
            const double qv[3] = {q.a11, q.a12, q.a22};
            const double coef = mp / t;
            for (int r = 0; r < 3; ++r)
                for (int k = 0; k < 3; ++k) {
                    tb.emplace_back(3 * c + r, 3 * c + k, coef * w[r] * qv[r] * w[k] * qv[k]);
                }
        }
    }
    mean_viscosity = msum / nc;
    SpMat b(3 * nc, 3 * nc);
    b.setFromTriplets(tb.begin(), tb.end());
    b.makeCompressed();
    return b;
}

// Remove anchor rows/columns and put 1 on their diagonal.
inline SpMat apply_anchors(const SpMat& a, const DofMap& dofs) {
    if (dofs.anchor1 < 0 && dofs.anchor2 < 0) return a;
    std::vector<Eigen::Triplet<double>> t;
    t.reserve(static_cast<std::size_t>(a.nonZeros()) + 2);
    for (int k = 0; k < a.outerSize(); ++k) {
        for (SpMat::InnerIterator it(a, k); it; ++it) {
            if (dofs.is_anchor(static_cast<int>(it.row())) ||
                dofs.is_anchor(static_cast<int>(it.col()))) {
                continue;
            }
            t.emplace_back(it.row(), it.col(), it.value());
        }
    }
    if (dofs.anchor1 >= 0) t.emplace_back(dofs.anchor1, dofs.anchor1, 1.0);
    if (dofs.anchor2 >= 0) t.emplace_back(dofs.anchor2, dofs.anchor2, 1.0);
    SpMat out(a.rows(), a.cols());
    out.setFromTriplets(t.begin(), t.end());
    out.makeCompressed();
    return out;
}

inline void zero_anchors(DVec& v, const DofMap& dofs) {
    if (dofs.anchor1 >= 0) v[dofs.anchor1] = 0.0;
    if (dofs.anchor2 >= 0) v[dofs.anchor2] = 0.0;
}

inline void project_mean(DVec& p) {
    if (p.size() > 0) p.array() -= p.mean();
}

// ---------------------------------------------------------------------------
// Direct bordered saddle solve (constant viscosity); also heals an
// incompatible divergence target through the border multiplier.
// ---------------------------------------------------------------------------

struct LinearSaddle {
    DVec x;   // velocity dofs
    DVec pi;  // active-cell pressures, zero mean
};

inline LinearSaddle solve_linear_saddle(const DofMap& dofs, const AssembledOps& ops,
                                        double viscosity, const DVec& rhs_u, const DVec& g) {
    const int nv = dofs.n_vel, np = dofs.n_press;
    const int N = nv + np + 1;
    // K = viscosity * D^T W2 D
    SpMat W2D = ops.D;
    for (int k = 0; k < W2D.outerSize(); ++k)
        for (SpMat::InnerIterator it(W2D, k); it; ++it) {
            it.valueRef() *= viscosity * ops.w2[it.row()];
        }
    SpMat K = (SpMat(ops.D.transpose()) * W2D).pruned();
    K = apply_anchors(K, dofs);

    std::vector<Eigen::Triplet<double>> t;
    t.reserve(static_cast<std::size_t>(K.nonZeros() + 2 * ops.C.nonZeros()) + 2 * np);
    for (int k = 0; k < K.outerSize(); ++k)
        for (SpMat::InnerIterator it(K, k); it; ++it) {
            t.emplace_back(it.row(), it.col(), it.value());
        }
    for (int k = 0; k < ops.C.outerSize(); ++k)
        for (SpMat::InnerIterator it(ops.C, k); it; ++it) {
            const int row = static_cast<int>(it.row()), col = static_cast<int>(it.col());
            t.emplace_back(nv + row, col, it.value());  // C
            if (!dofs.is_anchor(col)) {
                t.emplace_back(col, nv + row, -it.value());  // -C^T
            }
        }
    for (int r = 0; r < np; ++r) {
        t.emplace_back(nv + r, nv + np, 1.0);  // border column e
        t.emplace_back(nv + np, nv + r, 1.0);  // border row e^T
    }
    SpMat A(N, N);
    A.setFromTriplets(t.begin(), t.end());
    A.makeCompressed();

    DVec b = DVec::Zero(N);
    b.head(nv) = rhs_u;
    zero_anchors(b, dofs);
    b.segment(nv, np) = g;

    Eigen::SparseLU<SpMat> lu;
    lu.compute(A);
    if (lu.info() != Eigen::Success) {
        throw SolveError("linear Stokes solve: sparse factorization failed");
    }
    const DVec sol = lu.solve(b);
    LinearSaddle out;
    out.x = sol.head(nv);
    out.pi = sol.segment(nv, np);
    project_mean(out.pi);
    return out;
}

// ---------------------------------------------------------------------------
// Augmented-Lagrangian Uzawa for one Newton step
// ---------------------------------------------------------------------------

struct UzawaOut {
    DVec dx;
    DVec dpi;
    int iterations = 0;
};

inline UzawaOut uzawa_step(const Eigen::SparseLU<SpMat>& lu, const AssembledOps& ops,
                           const DofMap& dofs, double rho, const DVec& rhs_u, DVec g,
                           double tol_c) {
    if (g.size() > 0) g.array() -= g.mean();  // compatibility projection
    UzawaOut out;
    out.dpi = DVec::Zero(dofs.n_press);
    double prev_res = kInf;
    int stagnant = 0;
    for (int it = 0; it < 400; ++it) {
        DVec b = rhs_u + ops.Ct * (out.dpi + rho * g);
        zero_anchors(b, dofs);
        out.dx = lu.solve(b);
        DVec res = ops.C * out.dx - g;
        out.dpi -= rho * res;
        project_mean(out.dpi);
        out.iterations = it + 1;
        const double rn = res.size() > 0 ? res.lpNorm<Eigen::Infinity>() : 0.0;
        if (rn <= tol_c) return out;
        stagnant = (rn > 0.9 * prev_res) ? stagnant + 1 : 0;
        if (stagnant >= 12) {
            throw SolveError("pressure iteration stagnating (discrete inf-sup trouble)");
        }
        prev_res = rn;
    }
    throw SolveError("Uzawa iteration exceeded 400 sweeps without meeting tolerance");
}

// ---------------------------------------------------------------------------
// Newton driver
// ---------------------------------------------------------------------------

struct NewtonState {
    DVec x;
    DVec pi;
};

struct Residual {
    DVec r_u;
    DVec r_div;
    double nr_u = 0.0;
    double nr_div_inf = 0.0;
    double combined = 0.0;
};

inline Residual eval_residual(const AssembledOps& ops, const StressLaw& law, const DVec& g_vec,
                              const NewtonState& s, double scale_u, double scale_div) {
    Residual r;
    const DVec du = ops.D * s.x + ops.d_aff;
    const DVec a = stress_vec(law, du);
    r.r_u = ops.D.transpose() * (ops.w2.array() * (a - g_vec).array()).matrix() - ops.Ct * s.pi;
    r.r_div = ops.C * s.x + ops.c_aff;
    r.nr_u = r.r_u.norm();
    r.nr_div_inf = r.r_div.size() > 0 ? r.r_div.lpNorm<Eigen::Infinity>() : 0.0;
    const double a_ = r.nr_u / scale_u;
    const double b_ = (r.r_div.size() > 0 ? r.r_div.norm() : 0.0) / scale_div;
    r.combined = std::sqrt(a_ * a_ + b_ * b_);
    return r;
}

/// One Newton stage at a fixed effective law. Appends to `history`.
inline int newton_stage(const DofMap& dofs, const AssembledOps& ops, const StressLaw& law_eff,
                        const DVec& g_vec, const SolverConfig& cfg, NewtonState& s,
                        std::vector<double>& history) {
    const DVec rhs_g = ops.D.transpose() * (ops.w2.array() * g_vec.array()).matrix();
    DVec du = ops.D * s.x + ops.d_aff;
    const DVec a0 = stress_vec(law_eff, du);
    const double scale_u = std::max({rhs_g.norm(), (ops.D.transpose() * (ops.w2.array() * a0.array()).matrix()).norm(), 1e-300});
    const double scale_div = std::max(du.norm() / dofs.grid.h, 1e-300);

    Residual r = eval_residual(ops, law_eff, g_vec, s, scale_u, scale_div);
    history.push_back(r.combined);

    auto converged = [&](const Residual& res, const DVec& du_now) {
        const double du_inf = du_now.size() > 0 ? du_now.lpNorm<Eigen::Infinity>() : 0.0;
        return res.nr_u <= cfg.newton_tol * scale_u &&
               res.nr_div_inf <= cfg.newton_tol * std::max(du_inf, 1e-300);
    };

    int it = 0;
    for (; it < cfg.max_newton; ++it) {
        du = ops.D * s.x + ops.d_aff;
        if (converged(r, du)) return it;

        double mean_visc = 0.0;
        const SpMat B = stress_jacobian_block(law_eff, du, mean_visc);
        SpMat K = (SpMat(ops.D.transpose()) * (B * ops.D)).pruned();
        const double rho = cfg.uzawa_rho * 100.0 * std::max(mean_visc, 1e-300);
        SpMat A = K + rho * ops.CtC;
        A = apply_anchors(A, dofs);
        Eigen::SparseLU<SpMat> lu;
        lu.compute(A);
        if (lu.info() != Eigen::Success) {
            throw SolveError("Newton step: sparse factorization failed", history);
        }

        const double du_inf = du.size() > 0 ? du.lpNorm<Eigen::Infinity>() : 0.0;
        const double tol_c = std::max(1e-13, 1e-11 * std::max(du_inf, r.nr_div_inf));
        DVec rhs_u = -r.r_u;
        zero_anchors(rhs_u, dofs);
        const UzawaOut step = uzawa_step(lu, ops, dofs, rho, rhs_u, -r.r_div, tol_c);

        // Backtracking line search on the combined residual norm.
        double alpha = 1.0;
        bool accepted = false;
        for (int ls = 0; ls <= 20; ++ls) {
            NewtonState trial{s.x + alpha * step.dx, s.pi + alpha * step.dpi};
            project_mean(trial.pi);
            const Residual rt = eval_residual(ops, law_eff, g_vec, trial, scale_u, scale_div);
            if (rt.combined <= (1.0 - 1e-4 * alpha) * r.combined) {
                s = trial;
                r = rt;
                accepted = true;
                break;
            }
            alpha *= 0.5;
        }
        history.push_back(r.combined);
        if (!accepted) {
            if (converged(r, ops.D * s.x + ops.d_aff)) return it + 1;
            throw SolveError("Newton line search stalled", history);
        }
    }
    du = ops.D * s.x + ops.d_aff;
    if (converged(r, du)) return it;
    throw SolveError("Newton did not converge within max_newton iterations", history);
}

/// Continuation floors: halve from 1e-1 down to the target for degenerate
/// laws, otherwise a single stage at max(kappa, kappa_floor).
inline std::vector<double> continuation_floors(const StressLaw& law, double target_floor) {
    std::vector<double> floors;
    const NFunctionModel& m = law.model;
    const bool degenerate =
        m.kind != NFunctionKind::ArcSinh && m.kappa == 0.0 && m.p < 2.0;
    if (degenerate) {
        for (double f = 1e-1; f > target_floor; f *= 0.5) floors.push_back(f);
    }
    floors.push_back(target_floor);
    return floors;
}

struct NonlinearOut {
    NewtonState state;
    std::vector<double> history;
    int iterations = 0;
    StressLaw law_eff;
};

inline NonlinearOut nonlinear_solve(const DofMap& dofs, const AssembledOps& ops,
                                    const StressLaw& law, const TensorField& G,
                                    const SolverConfig& cfg,
                                    const NewtonState* warm = nullptr) {
    const DVec g_vec = tensor_to_vec(G);
    NonlinearOut out;
    out.law_eff = law.with_kappa_floor(cfg.kappa_floor);

    NewtonState s;
    if (warm) {
        s = *warm;
    } else {
        s.x = DVec::Zero(dofs.n_vel);
        s.pi = DVec::Zero(dofs.n_press);
        const DVec rhs_g = ops.D.transpose() * (ops.w2.array() * g_vec.array()).matrix();
        const double pinned_scale = ops.d_aff.lpNorm<Eigen::Infinity>();
        if (rhs_g.norm() > 0.0 || pinned_scale > 0.0) {
            // Newtonian initialization at a viscosity matched to the data scale.
            double gbar = 0.0;
            for (int c = 0; c < G.grid().cells(); ++c) {
                gbar += G.data()[static_cast<std::size_t>(c)].norm();
            }
            gbar /= G.grid().cells();
            const StressLaw floored = law.with_kappa_floor(std::max(cfg.kappa_floor, 1e-8));
            double tbar = 1.0;
            if (gbar > 0.0) tbar = inverse_phi_prime(floored.model, gbar);
            tbar = std::clamp(tbar, 1e-8, 1e8);
            const double visc = std::max(floored.model.prime_over_t(tbar), 1e-300);
            const LinearSaddle init = solve_linear_saddle(dofs, ops, visc, rhs_g, -ops.c_aff);
            s.x = init.x;
            s.pi = init.pi * 1.0;
        }
    }

    for (double floor : continuation_floors(law, cfg.kappa_floor)) {
        const StressLaw law_f = law.with_kappa_floor(floor);
        out.iterations += newton_stage(dofs, ops, law_f, g_vec, cfg, s, out.history);
    }
    out.state = std::move(s);
    return out;
}

inline SolveResult package_result(const DofMap& dofs, const AssembledOps& ops,
                                  const VectorField& pinned, const StressLaw& law_eff,
                                  const TensorField& G, const NonlinearOut& nl) {
    const Grid& g = dofs.grid;
    SolveResult res;
    res.u = scatter(dofs, pinned, nl.state.x);
    res.pi = ScalarField(g);
    for (int c = 0; c < g.cells(); ++c) {
        const int pc = dofs.press_dof[static_cast<std::size_t>(c)];
        if (pc >= 0) res.pi.data()[static_cast<std::size_t>(c)] = nl.state.pi[pc];
    }
    const DVec du = ops.D * nl.state.x + ops.d_aff;
    res.du = vec_to_tensor(g, du);
    res.stress = vec_to_tensor(g, stress_vec(law_eff, du));
    res.residual_history = nl.history;
    res.iterations = nl.iterations;
    res.kappa_effective = law_eff.model.kind == NFunctionKind::ArcSinh ? 0.0 : law_eff.model.kappa;
    res.active_cells = dofs.active;

    double energy = 0.0;
    for (int c = 0; c < g.cells(); ++c) {
        if (!dofs.active[static_cast<std::size_t>(c)]) continue;
        const SymMat2 q = res.du.data()[static_cast<std::size_t>(c)];
        energy += law_eff.model.value(q.norm()) - G.data()[static_cast<std::size_t>(c)].dot(q);
    }
    res.energy = energy * g.h * g.h;
    return res;
}

}  // namespace stokes_detail

// ---------------------------------------------------------------------------
// Public entry points
// ---------------------------------------------------------------------------

/// Writes a vector load as -div G with G symmetric: solves the Newtonian
/// Stokes problem -div Dw + grad sigma = f (zero trace on Dirichlet boxes,
/// mean-free data on periodic ones) and returns G = Dw - sigma I.
inline TensorField lift_rhs(const VectorField& f, const Grid& grid) {
    using namespace stokes_detail;
    if (!f.grid().same_layout(grid)) throw std::invalid_argument("lift_rhs: grid mismatch");
    const DofMap dofs(grid, nullptr);
    const VectorField pinned(grid);
    const AssembledOps ops = assemble_ops(dofs, pinned);

    DVec rhs = DVec::Zero(dofs.n_vel);
    VectorField fproj = f;
    if (grid.periodic()) {
        double m1 = 0.0, m2 = 0.0;
        for (double v : fproj.data1()) m1 += v;
        for (double v : fproj.data2()) m2 += v;
        m1 /= static_cast<double>(fproj.data1().size());
        m2 /= static_cast<double>(fproj.data2().size());
        for (double& v : fproj.data1()) v -= m1;
        for (double& v : fproj.data2()) v -= m2;
    }
    rhs = gather(dofs, fproj);
    zero_anchors(rhs, dofs);

    const LinearSaddle sol = solve_linear_saddle(dofs, ops, 1.0, rhs, DVec::Zero(dofs.n_press));
    const DVec dw = ops.D * sol.x + ops.d_aff;
    TensorField G = vec_to_tensor(grid, dw);
    for (int c = 0; c < grid.cells(); ++c) {
        const int pc = dofs.press_dof[static_cast<std::size_t>(c)];
        const double sigma = pc >= 0 ? sol.pi[pc] : 0.0;
        G.data()[static_cast<std::size_t>(c)].a11 -= sigma;
        G.data()[static_cast<std::size_t>(c)].a22 -= sigma;
    }
    return G;
}

/// Direct (one factorization) solve of the Newtonian problem with constant
/// viscosity; the reference the nonlinear path is compared against at p = 2.
inline SolveResult solve_linear_stokes(const Grid& grid, double viscosity, const TensorField& G,
                                       const std::optional<VectorField>& boundary_data = {}) {
    using namespace stokes_detail;
    const DofMap dofs(grid, nullptr);
    const VectorField pinned = boundary_data.value_or(VectorField(grid));
    const AssembledOps ops = assemble_ops(dofs, pinned);
    const DVec g_vec = tensor_to_vec(G);
    DVec rhs = ops.D.transpose() * (ops.w2.array() * g_vec.array()).matrix();
    zero_anchors(rhs, dofs);
    const LinearSaddle sol = solve_linear_saddle(dofs, ops, viscosity, rhs, -ops.c_aff);

    NonlinearOut nl;
    nl.state.x = sol.x;
    nl.state.pi = sol.pi;
    nl.law_eff = StressLaw{NFunctionModel::power_law_additive(viscosity, 0.0, 2.0)};
    nl.iterations = 1;
    return package_result(dofs, ops, pinned, nl.law_eff, G, nl);
}

/// Damped-Newton solve of the generalized Stokes system.
inline SolveResult solve_stokes(const SolverConfig& cfg) {
    using namespace stokes_detail;
    if (cfg.rhs_G && cfg.rhs_f) {
        throw std::invalid_argument("solve_stokes: give the load as G or as f, not both");
    }
    TensorField G = cfg.rhs_G ? *cfg.rhs_G
                              : (cfg.rhs_f ? lift_rhs(*cfg.rhs_f, cfg.grid) : TensorField(cfg.grid));
    if (!G.grid().same_layout(cfg.grid)) throw std::invalid_argument("solve_stokes: grid mismatch");

    const DofMap dofs(cfg.grid, nullptr);
    const VectorField pinned = cfg.boundary_data.value_or(VectorField(cfg.grid));
    const AssembledOps ops = assemble_ops(dofs, pinned);
    const NonlinearOut nl = nonlinear_solve(dofs, ops, cfg.law, G, cfg);
    return package_result(dofs, ops, pinned, nl.law_eff, G, nl);
}

/// Homogeneous companion solve on a discrete ball: G = 0 inside B, velocity
/// pinned to the outer solution on every face not interior to B.
inline SolveResult solve_homogeneous(const SolverConfig& cfg, const SolveResult& outer,
                                     const Ball& ball) {
    using namespace stokes_detail;
    const Grid& g = cfg.grid;
    std::vector<char> mask(static_cast<std::size_t>(g.cells()), 0);
    for (auto [i, j] : cells_in_ball(g, ball)) {
        mask[static_cast<std::size_t>(g.cell_index(i, j))] = 1;
    }
    const DofMap dofs(g, &mask);
    const AssembledOps ops = assemble_ops(dofs, outer.u);
    const TensorField G0(g);

    NewtonState warm;
    warm.x = gather(dofs, outer.u);
    warm.pi = DVec::Zero(dofs.n_press);
    for (int c = 0; c < g.cells(); ++c) {
        const int pc = dofs.press_dof[static_cast<std::size_t>(c)];
        if (pc >= 0) warm.pi[pc] = outer.pi.data()[static_cast<std::size_t>(c)];
    }
    project_mean(warm.pi);

    const NonlinearOut nl = nonlinear_solve(dofs, ops, cfg.law, G0, cfg, &warm);
    return package_result(dofs, ops, outer.u, nl.law_eff, G0, nl);
}

/// Picard iteration for the stationary convective problem: the quadratic
/// term is moved to the right-hand side as u (x) u and the generalized
/// Stokes solve is repeated until the velocity settles.
inline SolveResult solve_navier_stokes(const SolverConfig& cfg) {
    using namespace stokes_detail;
    const Indices ix = estimate_indices(cfg.law.model);
    if (!(ix.p_lower > 1.5)) {
        throw std::invalid_argument(
            "solve_navier_stokes: lower growth index " + std::to_string(ix.p_lower) +
            " violates the convective growth condition (needs an exponent above 3/2)");
    }
    TensorField G = cfg.rhs_G ? *cfg.rhs_G
                              : (cfg.rhs_f ? lift_rhs(*cfg.rhs_f, cfg.grid) : TensorField(cfg.grid));

    const DofMap dofs(cfg.grid, nullptr);
    const VectorField pinned = cfg.boundary_data.value_or(VectorField(cfg.grid));
    const AssembledOps ops = assemble_ops(dofs, pinned);

    NonlinearOut nl = nonlinear_solve(dofs, ops, cfg.law, G, cfg);
    SolveResult cur = package_result(dofs, ops, pinned, nl.law_eff, G, nl);

    double prev_diff = kInf;
    int growth_streak = 0;
    for (int picard = 0; picard < 40; ++picard) {
        const auto [c1, c2] = vector_at_centers(cur.u);
        TensorField Geff = G;
        for (int c = 0; c < cfg.grid.cells(); ++c) {
            const Vec2 v{c1.data()[static_cast<std::size_t>(c)], c2.data()[static_cast<std::size_t>(c)]};
            Geff.data()[static_cast<std::size_t>(c)] += sym_outer(v, v);
        }
        NewtonState warm = nl.state;
        NonlinearOut nl_next = nonlinear_solve(dofs, ops, cfg.law, Geff, cfg, &warm);
        SolveResult next = package_result(dofs, ops, pinned, nl_next.law_eff, Geff, nl_next);

        double diff = 0.0, base = 0.0;
        for (std::size_t k = 0; k < next.u.data1().size(); ++k) {
            diff += (next.u.data1()[k] - cur.u.data1()[k]) * (next.u.data1()[k] - cur.u.data1()[k]);
            base += cur.u.data1()[k] * cur.u.data1()[k];
        }
        for (std::size_t k = 0; k < next.u.data2().size(); ++k) {
            diff += (next.u.data2()[k] - cur.u.data2()[k]) * (next.u.data2()[k] - cur.u.data2()[k]);
            base += cur.u.data2()[k] * cur.u.data2()[k];
        }
        diff = std::sqrt(diff);
        base = std::sqrt(base);
        cur = std::move(next);
        nl = std::move(nl_next);
        cur.iterations = picard + 1;
        if (diff <= cfg.newton_tol * std::max(base, 1e-300)) return cur;
        growth_streak = (diff > prev_diff) ? growth_streak + 1 : 0;
        if (growth_streak >= 3) {
            throw SolveError("Picard iteration diverging; reduce the data amplitude",
                             cur.residual_history);
        }
        prev_diff = diff;
    }
    throw SolveError("Picard iteration did not settle in 40 sweeps", cur.residual_history);
}

}  // namespace genstokes
