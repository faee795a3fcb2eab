#pragma once

#include <cmath>

namespace genstokes {

/// Symmetric 2x2 matrix stored as (a11, a12, a22); a21 is implied.
struct SymMat2 {
    double a11 = 0.0;
    double a12 = 0.0;
    double a22 = 0.0;

    static SymMat2 identity() { return {1.0, 0.0, 1.0}; }
    static SymMat2 diag(double d1, double d2) { return {d1, 0.0, d2}; }

    double trace() const { return a11 + a22; }

    /// Frobenius norm, counting the off-diagonal twice.
    double norm() const { return std::sqrt(a11 * a11 + 2.0 * a12 * a12 + a22 * a22); }

    /// Frobenius double contraction A : B.
    double dot(const SymMat2& o) const {
        return a11 * o.a11 + 2.0 * a12 * o.a12 + a22 * o.a22;
    }

    SymMat2 operator+(const SymMat2& o) const { return {a11 + o.a11, a12 + o.a12, a22 + o.a22}; }
    SymMat2 operator-(const SymMat2& o) const { return {a11 - o.a11, a12 - o.a12, a22 - o.a22}; }
    SymMat2 operator*(double s) const { return {a11 * s, a12 * s, a22 * s}; }
    SymMat2& operator+=(const SymMat2& o) {
        a11 += o.a11;
        a12 += o.a12;
        a22 += o.a22;
        return *this;
    }

    /// R Q R^T for the rotation by angle theta.
    SymMat2 rotated(double theta) const {
        const double c = std::cos(theta), s = std::sin(theta);
        // R = [c -s; s c]
        const double b11 = c * (a11 * c - a12 * s) - s * (a12 * c - a22 * s);
        const double b12 = c * (a11 * s + a12 * c) - s * (a12 * s + a22 * c);
        const double b22 = s * (a11 * s + a12 * c) + c * (a12 * s + a22 * c);
        return {b11, b12, b22};
    }
};

inline SymMat2 operator*(double s, const SymMat2& m) { return m * s; }

struct Vec2 {
    double x = 0.0;
    double y = 0.0;
    Vec2 operator+(const Vec2& o) const { return {x + o.x, y + o.y}; }
    Vec2 operator-(const Vec2& o) const { return {x - o.x, y - o.y}; }
    Vec2 operator*(double s) const { return {x * s, y * s}; }
    double dot(const Vec2& o) const { return x * o.x + y * o.y; }
    double norm() const { return std::hypot(x, y); }
};

/// Symmetric part of the outer product u (x) v.
inline SymMat2 sym_outer(const Vec2& u, const Vec2& v) {
    return {u.x * v.x, 0.5 * (u.x * v.y + u.y * v.x), u.y * v.y};
}

}  // namespace genstokes
