#pragma once

/// @file operators.hpp
/// Discrete differential operators on the staggered grid and ball-restricted
/// reductions. On periodic grids divergence_tensor is the exact negative
/// adjoint of sym_gradient under the h^2-weighted pairings, so summation by
/// parts holds to machine precision. On Dirichlet grids the wall rows use
/// first-order one-sided node values; interior cells are second order.

#include <stdexcept>
#include <vector>

#include "genstokes/field.hpp"

namespace genstokes {

namespace detail {

// Node value of d(u1)/dy at node (i,j); one-sided at Dirichlet walls.
inline double dy_u1_node(const VectorField& u, int i, int j) {
    const Grid& g = u.grid();
    if (g.periodic()) {
        return (u.u1_wrapped(i, j) - u.u1_wrapped(i, j - 1)) / g.h;
    }
    const int jj = std::min(std::max(j, 1), g.n - 1);  // u1 rows are 0..n-1
    return (u.u1(i, jj) - u.u1(i, jj - 1)) / g.h;
}

// Node value of d(u2)/dx at node (i,j); one-sided at Dirichlet walls.
inline double dx_u2_node(const VectorField& u, int i, int j) {
    const Grid& g = u.grid();
    if (g.periodic()) {
        return (u.u2_wrapped(i, j) - u.u2_wrapped(i - 1, j)) / g.h;
    }
    const int ii = std::min(std::max(i, 1), g.n - 1);
    return (u.u2(ii, j) - u.u2(ii - 1, j)) / g.h;
}

}  // namespace detail

/// Symmetric gradient (D u)(x) = (grad u + grad u^T)/2 at cell centers.
inline TensorField sym_gradient(const VectorField& u) {
    const Grid& g = u.grid();
    TensorField out(g);
    const bool per = g.periodic();
    for (int j = 0; j < g.n; ++j) {
        for (int i = 0; i < g.n; ++i) {
            const double d11 = per ? (u.u1_wrapped(i + 1, j) - u.u1_wrapped(i, j)) / g.h
                                   : (u.u1(i + 1, j) - u.u1(i, j)) / g.h;
            const double d22 = per ? (u.u2_wrapped(i, j + 1) - u.u2_wrapped(i, j)) / g.h
                                   : (u.u2(i, j + 1) - u.u2(i, j)) / g.h;
            double d12 = 0.0;
            for (int dj = 0; dj <= 1; ++dj)
                for (int di = 0; di <= 1; ++di) {
                    d12 += 0.5 * (detail::dy_u1_node(u, i + di, j + dj) +
                                  detail::dx_u2_node(u, i + di, j + dj));
                }
            out.at(i, j) = {d11, 0.25 * d12, d22};
        }
    }
    return out;
}

/// Antisymmetric part (W u)_{12} as a scalar field at cell centers.
inline ScalarField skew_gradient(const VectorField& u) {
    const Grid& g = u.grid();
    ScalarField out(g);
    for (int j = 0; j < g.n; ++j) {
        for (int i = 0; i < g.n; ++i) {
            double w = 0.0;
            for (int dj = 0; dj <= 1; ++dj)
                for (int di = 0; di <= 1; ++di) {
                    w += 0.5 * (detail::dy_u1_node(u, i + di, j + dj) -
                                detail::dx_u2_node(u, i + di, j + dj));
                }
            out.at(i, j) = 0.25 * w;
        }
    }
    return out;
}

/// Divergence of a velocity field at cell centers.
inline ScalarField divergence_vec(const VectorField& u) {
    const Grid& g = u.grid();
    ScalarField out(g);
    const bool per = g.periodic();
    for (int j = 0; j < g.n; ++j) {
        for (int i = 0; i < g.n; ++i) {
            const double d1 = per ? (u.u1_wrapped(i + 1, j) - u.u1_wrapped(i, j))
                                  : (u.u1(i + 1, j) - u.u1(i, j));
            const double d2 = per ? (u.u2_wrapped(i, j + 1) - u.u2_wrapped(i, j))
                                  : (u.u2(i, j + 1) - u.u2(i, j));
            out.at(i, j) = (d1 + d2) / g.h;
        }
    }
    return out;
}

namespace detail {

// Average of the 12-component over the four cells sharing node (i,j);
// clamped replication at Dirichlet walls.
inline double node_avg_12(const TensorField& t, int i, int j) {
    const Grid& g = t.grid();
    double s = 0.0;
    for (int dj = -1; dj <= 0; ++dj)
        for (int di = -1; di <= 0; ++di) {
            int ci = i + di, cj = j + dj;
            if (g.periodic()) {
                ci = g.wrap(ci);
                cj = g.wrap(cj);
            } else {
                ci = std::min(std::max(ci, 0), g.n - 1);
                cj = std::min(std::max(cj, 0), g.n - 1);
            }
            s += t.at(ci, cj).a12;
        }
    return 0.25 * s;
}

}  // namespace detail

/// Divergence of a symmetric tensor field, returned on the faces. Built as
/// the negative adjoint of sym_gradient, row by row.
inline VectorField divergence_tensor(const TensorField& t) {
    const Grid& g = t.grid();
    VectorField out(g);
    const bool per = g.periodic();
    for (int j = 0; j < g.u1_ny(); ++j) {
        for (int i = 0; i < g.u1_nx(); ++i) {
            double g11;
            if (per) {
                g11 = (t.at(g.wrap(i), j).a11 - t.at(g.wrap(i - 1), j).a11) / g.h;
            } else {
                const int ci = std::min(std::max(i, 1), g.n - 1);
                g11 = (t.at(ci, j).a11 - t.at(ci - 1, j).a11) / g.h;
            }
            const double m_hi = detail::node_avg_12(t, i, j + 1);
            const double m_lo = detail::node_avg_12(t, i, j);
            out.u1(i, j) = g11 + (m_hi - m_lo) / g.h;
        }
    }
    for (int j = 0; j < g.u2_ny(); ++j) {
        for (int i = 0; i < g.u2_nx(); ++i) {
            double g22;
            if (per) {
                g22 = (t.at(i, g.wrap(j)).a22 - t.at(i, g.wrap(j - 1)).a22) / g.h;
            } else {
                const int cj = std::min(std::max(j, 1), g.n - 1);
                g22 = (t.at(i, cj).a22 - t.at(i, cj - 1).a22) / g.h;
            }
            const double m_hi = detail::node_avg_12(t, i + 1, j);
            const double m_lo = detail::node_avg_12(t, i, j);
            out.u2(i, j) = g22 + (m_hi - m_lo) / g.h;
        }
    }
    return out;
}

/// Discrete pressure gradient on the faces (periodic wrap; zero on Dirichlet
/// boundary faces).
inline VectorField gradient_scalar(const ScalarField& p) {
    const Grid& g = p.grid();
    VectorField out(g);
    for (int j = 0; j < g.u1_ny(); ++j)
        for (int i = 0; i < g.u1_nx(); ++i) {
            if (g.periodic()) {
                out.u1(i, j) = (p.at(g.wrap(i), j) - p.at(g.wrap(i - 1), j)) / g.h;
            } else if (i > 0 && i < g.n) {
                out.u1(i, j) = (p.at(i, j) - p.at(i - 1, j)) / g.h;
            }
        }
    for (int j = 0; j < g.u2_ny(); ++j)
        for (int i = 0; i < g.u2_nx(); ++i) {
            if (g.periodic()) {
                out.u2(i, j) = (p.at(i, g.wrap(j)) - p.at(i, g.wrap(j - 1))) / g.h;
            } else if (j > 0 && j < g.n) {
                out.u2(i, j) = (p.at(i, j) - p.at(i, j - 1)) / g.h;
            }
        }
    return out;
}

/// Face values averaged to cell centers, as two scalar fields.
inline std::pair<ScalarField, ScalarField> vector_at_centers(const VectorField& u) {
    const Grid& g = u.grid();
    ScalarField c1(g), c2(g);
    const bool per = g.periodic();
    for (int j = 0; j < g.n; ++j)
        for (int i = 0; i < g.n; ++i) {
            const double a = per ? u.u1_wrapped(i, j) : u.u1(i, j);
            const double b = per ? u.u1_wrapped(i + 1, j) : u.u1(i + 1, j);
            const double c = per ? u.u2_wrapped(i, j) : u.u2(i, j);
            const double d = per ? u.u2_wrapped(i, j + 1) : u.u2(i, j + 1);
            c1.at(i, j) = 0.5 * (a + b);
            c2.at(i, j) = 0.5 * (c + d);
        }
    return {c1, c2};
}

// ---------------------------------------------------------------------------
// Inner products (h^2-weighted, Frobenius weight 2 on the off-diagonal)
// ---------------------------------------------------------------------------

inline double inner(const ScalarField& a, const ScalarField& b) {
    double s = 0.0;
    for (std::size_t k = 0; k < a.data().size(); ++k) s += a.data()[k] * b.data()[k];
    return s * a.grid().h * a.grid().h;
}

inline double inner(const TensorField& a, const TensorField& b) {
    double s = 0.0;
    for (std::size_t k = 0; k < a.data().size(); ++k) s += a.data()[k].dot(b.data()[k]);
    return s * a.grid().h * a.grid().h;
}

inline double inner(const VectorField& a, const VectorField& b) {
    double s = 0.0;
    for (std::size_t k = 0; k < a.data1().size(); ++k) s += a.data1()[k] * b.data1()[k];
    for (std::size_t k = 0; k < a.data2().size(); ++k) s += a.data2()[k] * b.data2()[k];
    return s * a.grid().h * a.grid().h;
}

template <class Field>
double l2_norm(const Field& f) {
    return std::sqrt(inner(f, f));
}

// ---------------------------------------------------------------------------
// Ball reductions
// ---------------------------------------------------------------------------

inline double ball_mean(const ScalarField& f, const Ball& b) {
    const auto cells = cells_in_ball(f.grid(), b);
    double s = 0.0;
    for (auto [i, j] : cells) s += f.at(i, j);
    return s / static_cast<double>(cells.size());
}

inline SymMat2 ball_mean(const TensorField& f, const Ball& b) {
    const auto cells = cells_in_ball(f.grid(), b);
    SymMat2 s{};
    for (auto [i, j] : cells) s += f.at(i, j);
    return s * (1.0 / static_cast<double>(cells.size()));
}

/// Vector fields are interpolated to cell centers before averaging.
inline Vec2 ball_mean(const VectorField& f, const Ball& b) {
    const auto [c1, c2] = vector_at_centers(f);
    const auto cells = cells_in_ball(f.grid(), b);
    Vec2 s{};
    for (auto [i, j] : cells) s = s + Vec2{c1.at(i, j), c2.at(i, j)};
    return s * (1.0 / static_cast<double>(cells.size()));
}

/// The cells of a ball together with the values restricted to them.
template <class Value>
struct BallPatch {
    Ball ball;
    std::vector<std::pair<int, int>> cells;
    std::vector<Value> values;
};

inline BallPatch<double> restrict_to_ball(const ScalarField& f, const Ball& b) {
    BallPatch<double> patch{b, cells_in_ball(f.grid(), b), {}};
    patch.values.reserve(patch.cells.size());
    for (auto [i, j] : patch.cells) patch.values.push_back(f.at(i, j));
    return patch;
}

inline BallPatch<SymMat2> restrict_to_ball(const TensorField& f, const Ball& b) {
    BallPatch<SymMat2> patch{b, cells_in_ball(f.grid(), b), {}};
    patch.values.reserve(patch.cells.size());
    for (auto [i, j] : patch.cells) patch.values.push_back(f.at(i, j));
    return patch;
}

}  // namespace genstokes
