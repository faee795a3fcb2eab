#pragma once

// Small numerical toolkit shared by the library: sampling grids, adaptive
// quadrature, monotone root finding, least-squares fits, a deterministic
// RNG and a config hash.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string_view>
#include <vector>

namespace genstokes {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// ---------------------------------------------------------------------------
// Sampling grids
// ---------------------------------------------------------------------------

/// n points log-spaced on [lo, hi], endpoints included. Requires lo, hi > 0.
inline std::vector<double> log_space(double lo, double hi, int n) {
    if (!(lo > 0.0) || !(hi > lo) || n < 2) {
        throw std::invalid_argument("log_space: need 0 < lo < hi and n >= 2");
    }
    std::vector<double> out(static_cast<std::size_t>(n));
    const double la = std::log(lo), lb = std::log(hi);
    for (int i = 0; i < n; ++i) {
        out[static_cast<std::size_t>(i)] = std::exp(la + (lb - la) * i / (n - 1));
    }
    out.front() = lo;
    out.back() = hi;
    return out;
}

inline std::vector<double> lin_space(double lo, double hi, int n) {
    if (n < 2) throw std::invalid_argument("lin_space: n >= 2");
    std::vector<double> out(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        out[static_cast<std::size_t>(i)] = lo + (hi - lo) * i / (n - 1);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Adaptive Simpson quadrature
// ---------------------------------------------------------------------------

namespace detail {

template <class F>
double simpson_rec(F& f, double a, double b, double fa, double fm, double fb,
                   double whole, double eps, int depth) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    const double flm = f(lm), frm = f(rm);
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    const double delta = left + right - whole;
    if (depth <= 0 || std::abs(delta) <= 15.0 * eps) {
        return left + right + delta / 15.0;
    }
    return simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * eps, depth - 1) +
           simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * eps, depth - 1);
}

}  // namespace detail

template <class F>
double adaptive_simpson(F&& f, double a, double b, double abs_tol, int max_depth = 42) {
    if (a == b) return 0.0;
    const double m = 0.5 * (a + b);
    const double fa = f(a), fm = f(m), fb = f(b);
    const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    return detail::simpson_rec(f, a, b, fa, fm, fb, whole, abs_tol, max_depth);
}

/// Quadrature with tolerance tied to the magnitude of the result:
/// a coarse pass sets the scale, then abs tol = 1e-12 * max(1, |coarse|).
template <class F>
double integrate_scaled(F&& f, double a, double b) {
    if (a == b) return 0.0;
    double coarse = 0.0;
    const int panels = 16;
    const double h = (b - a) / panels;
    for (int i = 0; i < panels; ++i) {
        const double x0 = a + i * h, x1 = x0 + h, xm = 0.5 * (x0 + x1);
        coarse += h / 6.0 * (f(x0) + 4.0 * f(xm) + f(x1));
    }
    const double eps = 1e-12 * std::max(1.0, std::abs(coarse));
    return adaptive_simpson(f, a, b, eps);
}

// ---------------------------------------------------------------------------
// Monotone root finding
// ---------------------------------------------------------------------------

/// Solve g(t) = s for a nondecreasing g with g(0) <= s, t >= 0. Brackets by
/// doubling from `hint`, then bisects to ~1e-14 relative width.
template <class G>
double invert_increasing(G&& g, double s, double hint = 1.0) {
    if (!(s >= 0.0) || !std::isfinite(s)) {
        throw std::domain_error("invert_increasing: target must be finite and >= 0");
    }
    if (s == 0.0) return 0.0;
    double lo = 0.0;
    double hi = (hint > 0.0 && std::isfinite(hint)) ? hint : 1.0;
    int guard = 0;
    while (g(hi) < s) {
        lo = hi;
        hi *= 2.0;
        if (++guard > 2100) {
            throw std::runtime_error("invert_increasing: bracket doubling failed");
        }
    }
    for (int it = 0; it < 300 && (hi - lo) > 5e-15 * hi; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (g(mid) < s) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

// ---------------------------------------------------------------------------
// Least squares
// ---------------------------------------------------------------------------

struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r_squared = 1.0;
};

inline LineFit fit_line(const std::vector<double>& xs, const std::vector<double>& ys) {
    const std::size_t n = xs.size();
    if (n != ys.size() || n < 2) {
        throw std::invalid_argument("fit_line: need two or more (x, y) pairs");
    }
    double sx = 0, sy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        sx += xs[i];
        sy += ys[i];
    }
    const double mx = sx / n, my = sy / n;
    double sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (xs[i] - mx) * (xs[i] - mx);
        sxy += (xs[i] - mx) * (ys[i] - my);
    }
    if (sxx == 0.0) throw std::invalid_argument("fit_line: degenerate abscissae");
    LineFit fit;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    double ss_res = 0, ss_tot = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double pred = fit.intercept + fit.slope * xs[i];
        ss_res += (ys[i] - pred) * (ys[i] - pred);
        ss_tot += (ys[i] - my) * (ys[i] - my);
    }
    fit.r_squared = (ss_tot > 0.0) ? 1.0 - ss_res / ss_tot : 1.0;
    return fit;
}

/// Least squares in log-log coordinates; all xs, ys must be positive.
inline LineFit fit_loglog(const std::vector<double>& xs, const std::vector<double>& ys) {
    std::vector<double> lx(xs.size()), ly(ys.size());
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (!(xs[i] > 0.0) || !(ys[i] > 0.0)) {
            throw std::invalid_argument("fit_loglog: data must be positive");
        }
        lx[i] = std::log(xs[i]);
        ly[i] = std::log(ys[i]);
    }
    return fit_line(lx, ly);
}

// ---------------------------------------------------------------------------
// Deterministic RNG (splitmix64)
// ---------------------------------------------------------------------------

class Rng {
  public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    /// Uniform in [0, 1).
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Log-uniform magnitude in [lo, hi], lo, hi > 0.
    double log_uniform(double lo, double hi) {
        return std::exp(uniform(std::log(lo), std::log(hi)));
    }

    /// Derive an independent stream, e.g. per sweep point.
    Rng fork(std::uint64_t salt) {
        return Rng(next_u64() ^ (0x632be59bd9b4e019ULL * (salt + 1)));
    }

  private:
    std::uint64_t state_;
};

// ---------------------------------------------------------------------------
// Hashing
// ---------------------------------------------------------------------------

inline std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

}  // namespace genstokes
