#pragma once

/// @file field.hpp
/// Uniform planar grids with MAC staggering, the scalar/vector/tensor fields
/// living on them, discrete balls, and CSV serialization.
///
/// Layout: velocity component 1 sits on vertical cell faces, component 2 on
/// horizontal cell faces; scalars and symmetric tensors sit at cell centers.
/// On periodic grids every face array is n x n (wrapping); on Dirichlet grids
/// the normal face arrays carry the boundary faces, so u1 is (n+1) x n and
/// u2 is n x (n+1).

#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "genstokes/sym2.hpp"

namespace genstokes {

enum class BoundaryKind { Dirichlet, Periodic };

inline const char* to_string(BoundaryKind b) {
    return b == BoundaryKind::Periodic ? "periodic" : "dirichlet";
}

struct Grid {
    int n = 8;               ///< cells per side
    double length = 1.0;     ///< box side length
    Vec2 origin{0.0, 0.0};
    BoundaryKind boundary = BoundaryKind::Periodic;
    double h = 0.125;        ///< spacing, length / n

    Grid() = default;
    Grid(int n_, double length_, BoundaryKind b, Vec2 origin_ = {0.0, 0.0})
        : n(n_), length(length_), origin(origin_), boundary(b), h(length_ / n_) {
        if (n < 8) throw std::invalid_argument("Grid: need n >= 8");
        if (!(length > 0.0)) throw std::invalid_argument("Grid: need length > 0");
    }

    bool periodic() const { return boundary == BoundaryKind::Periodic; }

    int cells() const { return n * n; }
    int cell_index(int i, int j) const { return j * n + i; }
    int wrap(int i) const { return ((i % n) + n) % n; }

    // face array extents
    int u1_nx() const { return periodic() ? n : n + 1; }
    int u1_ny() const { return n; }
    int u2_nx() const { return n; }
    int u2_ny() const { return periodic() ? n : n + 1; }
    int u1_count() const { return u1_nx() * u1_ny(); }
    int u2_count() const { return u2_nx() * u2_ny(); }
    int u1_index(int i, int j) const { return j * u1_nx() + i; }
    int u2_index(int i, int j) const { return j * u2_nx() + i; }

    Vec2 cell_center(int i, int j) const {
        return {origin.x + (i + 0.5) * h, origin.y + (j + 0.5) * h};
    }
    Vec2 u1_pos(int i, int j) const { return {origin.x + i * h, origin.y + (j + 0.5) * h}; }
    Vec2 u2_pos(int i, int j) const { return {origin.x + (i + 0.5) * h, origin.y + j * h}; }
    Vec2 node_pos(int i, int j) const { return {origin.x + i * h, origin.y + j * h}; }

    bool same_layout(const Grid& o) const {
        return n == o.n && length == o.length && boundary == o.boundary &&
               origin.x == o.origin.x && origin.y == o.origin.y;
    }
};

// ---------------------------------------------------------------------------
// Fields
// ---------------------------------------------------------------------------

class ScalarField {
  public:
    ScalarField() = default;
    explicit ScalarField(const Grid& g) : grid_(g), v_(static_cast<std::size_t>(g.cells()), 0.0) {}

    static ScalarField sample(const Grid& g, const std::function<double(Vec2)>& f) {
        ScalarField out(g);
        for (int j = 0; j < g.n; ++j)
            for (int i = 0; i < g.n; ++i) out.at(i, j) = f(g.cell_center(i, j));
        return out;
    }

    const Grid& grid() const { return grid_; }
    double& at(int i, int j) { return v_[static_cast<std::size_t>(grid_.cell_index(i, j))]; }
    double at(int i, int j) const { return v_[static_cast<std::size_t>(grid_.cell_index(i, j))]; }
    const std::vector<double>& data() const { return v_; }
    std::vector<double>& data() { return v_; }

    double mean() const {
        double s = 0.0;
        for (double x : v_) s += x;
        return s / static_cast<double>(v_.size());
    }

  private:
    Grid grid_;
    std::vector<double> v_;
};

class VectorField {
  public:
    VectorField() = default;
    explicit VectorField(const Grid& g)
        : grid_(g),
          u1_(static_cast<std::size_t>(g.u1_count()), 0.0),
          u2_(static_cast<std::size_t>(g.u2_count()), 0.0) {}

    /// Sample analytic components at the staggered face positions.
    static VectorField sample(const Grid& g, const std::function<double(Vec2)>& f1,
                              const std::function<double(Vec2)>& f2) {
        VectorField out(g);
        for (int j = 0; j < g.u1_ny(); ++j)
            for (int i = 0; i < g.u1_nx(); ++i) out.u1(i, j) = f1(g.u1_pos(i, j));
        for (int j = 0; j < g.u2_ny(); ++j)
            for (int i = 0; i < g.u2_nx(); ++i) out.u2(i, j) = f2(g.u2_pos(i, j));
        return out;
    }

    const Grid& grid() const { return grid_; }
    double& u1(int i, int j) { return u1_[static_cast<std::size_t>(grid_.u1_index(i, j))]; }
    double u1(int i, int j) const { return u1_[static_cast<std::size_t>(grid_.u1_index(i, j))]; }
    double& u2(int i, int j) { return u2_[static_cast<std::size_t>(grid_.u2_index(i, j))]; }
    double u2(int i, int j) const { return u2_[static_cast<std::size_t>(grid_.u2_index(i, j))]; }

    /// Face value with periodic wrapping (periodic grids only).
    double u1_wrapped(int i, int j) const { return u1(grid_.wrap(i), grid_.wrap(j)); }
    double u2_wrapped(int i, int j) const { return u2(grid_.wrap(i), grid_.wrap(j)); }

    const std::vector<double>& data1() const { return u1_; }
    const std::vector<double>& data2() const { return u2_; }
    std::vector<double>& data1() { return u1_; }
    std::vector<double>& data2() { return u2_; }

  private:
    Grid grid_;
    std::vector<double> u1_, u2_;
};

class TensorField {
  public:
    TensorField() = default;
    explicit TensorField(const Grid& g) : grid_(g), v_(static_cast<std::size_t>(g.cells())) {}

    static TensorField sample(const Grid& g, const std::function<SymMat2(Vec2)>& f) {
        TensorField out(g);
        for (int j = 0; j < g.n; ++j)
            for (int i = 0; i < g.n; ++i) out.at(i, j) = f(g.cell_center(i, j));
        return out;
    }

    const Grid& grid() const { return grid_; }
    SymMat2& at(int i, int j) { return v_[static_cast<std::size_t>(grid_.cell_index(i, j))]; }
    const SymMat2& at(int i, int j) const {
        return v_[static_cast<std::size_t>(grid_.cell_index(i, j))];
    }
    const std::vector<SymMat2>& data() const { return v_; }
    std::vector<SymMat2>& data() { return v_; }

  private:
    Grid grid_;
    std::vector<SymMat2> v_;
};

// ---------------------------------------------------------------------------
// Balls
// ---------------------------------------------------------------------------

struct Ball {
    Vec2 center;
    double radius = 0.0;

    Ball scaled(double lambda) const { return {center, radius * lambda}; }
};

/// Cell indices whose centers lie in the ball. Enforces the resolution
/// cutoff radius >= 2h and a nonempty intersection.
inline std::vector<std::pair<int, int>> cells_in_ball(const Grid& g, const Ball& b) {
    if (!(b.radius >= 2.0 * g.h)) {
        throw std::invalid_argument("ball radius below the 2h resolution cutoff");
    }
    std::vector<std::pair<int, int>> out;
    const int i_lo = std::max(0, static_cast<int>((b.center.x - b.radius - g.origin.x) / g.h) - 1);
    const int i_hi = std::min(g.n - 1, static_cast<int>((b.center.x + b.radius - g.origin.x) / g.h) + 1);
    const int j_lo = std::max(0, static_cast<int>((b.center.y - b.radius - g.origin.y) / g.h) - 1);
    const int j_hi = std::min(g.n - 1, static_cast<int>((b.center.y + b.radius - g.origin.y) / g.h) + 1);
    for (int j = j_lo; j <= j_hi; ++j) {
        for (int i = i_lo; i <= i_hi; ++i) {
            if ((g.cell_center(i, j) - b.center).norm() <= b.radius) out.emplace_back(i, j);
        }
    }
    if (out.empty()) throw std::invalid_argument("ball outside grid");
    return out;
}

// ---------------------------------------------------------------------------
// CSV serialization
// ---------------------------------------------------------------------------

namespace detail {

inline std::string fmt17(double x) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

inline std::string grid_header(const Grid& g) {
    std::ostringstream os;
    os << "# grid n=" << g.n << " length=" << fmt17(g.length) << " ox=" << fmt17(g.origin.x)
       << " oy=" << fmt17(g.origin.y) << " bc=" << to_string(g.boundary) << "\n";
    return os.str();
}

inline Grid parse_grid_header(const std::string& line) {
    int n = 0;
    double length = 0, ox = 0, oy = 0;
    char bc[32] = {0};
    if (std::sscanf(line.c_str(), "# grid n=%d length=%lf ox=%lf oy=%lf bc=%31s", &n, &length,
                    &ox, &oy, bc) != 5) {
        throw std::runtime_error("field CSV: bad grid header");
    }
    const BoundaryKind b =
        std::string(bc) == "periodic" ? BoundaryKind::Periodic : BoundaryKind::Dirichlet;
    return Grid(n, length, b, {ox, oy});
}

}  // namespace detail

inline void write_csv(std::ostream& os, const ScalarField& f) {
    os << detail::grid_header(f.grid());
    os << "i,j,x,y,value\n";
    const Grid& g = f.grid();
    for (int j = 0; j < g.n; ++j)
        for (int i = 0; i < g.n; ++i) {
            const Vec2 c = g.cell_center(i, j);
            os << i << ',' << j << ',' << detail::fmt17(c.x) << ',' << detail::fmt17(c.y) << ','
               << detail::fmt17(f.at(i, j)) << '\n';
        }
}

inline void write_csv(std::ostream& os, const TensorField& f) {
    os << detail::grid_header(f.grid());
    os << "i,j,x,y,a11,a12,a22\n";
    const Grid& g = f.grid();
    for (int j = 0; j < g.n; ++j)
        for (int i = 0; i < g.n; ++i) {
            const Vec2 c = g.cell_center(i, j);
            const SymMat2& m = f.at(i, j);
            os << i << ',' << j << ',' << detail::fmt17(c.x) << ',' << detail::fmt17(c.y) << ','
               << detail::fmt17(m.a11) << ',' << detail::fmt17(m.a12) << ','
               << detail::fmt17(m.a22) << '\n';
        }
}

/// Vector fields are staggered, so rows are per face with a component tag.
inline void write_csv(std::ostream& os, const VectorField& f) {
    os << detail::grid_header(f.grid());
    os << "component,i,j,x,y,value\n";
    const Grid& g = f.grid();
    for (int j = 0; j < g.u1_ny(); ++j)
        for (int i = 0; i < g.u1_nx(); ++i) {
            const Vec2 c = g.u1_pos(i, j);
            os << "u1," << i << ',' << j << ',' << detail::fmt17(c.x) << ','
               << detail::fmt17(c.y) << ',' << detail::fmt17(f.u1(i, j)) << '\n';
        }
    for (int j = 0; j < g.u2_ny(); ++j)
        for (int i = 0; i < g.u2_nx(); ++i) {
            const Vec2 c = g.u2_pos(i, j);
            os << "u2," << i << ',' << j << ',' << detail::fmt17(c.x) << ','
               << detail::fmt17(c.y) << ',' << detail::fmt17(f.u2(i, j)) << '\n';
        }
}

inline ScalarField read_scalar_csv(std::istream& is) {
    std::string line;
    if (!std::getline(is, line)) throw std::runtime_error("field CSV: empty stream");
    ScalarField f(detail::parse_grid_header(line));
    std::getline(is, line);  // column header
    while (std::getline(is, line)) {
        int i, j;
        double x, y, v;
        if (std::sscanf(line.c_str(), "%d,%d,%lf,%lf,%lf", &i, &j, &x, &y, &v) == 5) {
            f.at(i, j) = v;
        }
    }
    return f;
}

inline TensorField read_tensor_csv(std::istream& is) {
    std::string line;
    if (!std::getline(is, line)) throw std::runtime_error("field CSV: empty stream");
    TensorField f(detail::parse_grid_header(line));
    std::getline(is, line);
    while (std::getline(is, line)) {
        int i, j;
        double x, y, a11, a12, a22;
        if (std::sscanf(line.c_str(), "%d,%d,%lf,%lf,%lf,%lf,%lf", &i, &j, &x, &y, &a11, &a12,
                        &a22) == 7) {
            f.at(i, j) = {a11, a12, a22};
        }
    }
    return f;
}

inline VectorField read_vector_csv(std::istream& is) {
    std::string line;
    if (!std::getline(is, line)) throw std::runtime_error("field CSV: empty stream");
    VectorField f(detail::parse_grid_header(line));
    std::getline(is, line);
    while (std::getline(is, line)) {
        char comp[8] = {0};
        int i, j;
        double x, y, v;
        if (std::sscanf(line.c_str(), "%7[^,],%d,%d,%lf,%lf,%lf", comp, &i, &j, &x, &y, &v) == 6) {
            if (comp[1] == '1') {
                f.u1(i, j) = v;
            } else {
                f.u2(i, j) = v;
            }
        }
    }
    return f;
}

template <class Field>
void write_csv_file(const std::string& path, const Field& f) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open " + path);
    write_csv(os, f);
}

}  // namespace genstokes
