#pragma once

/// @file nfunc.hpp
/// Calculus of the N-functions that drive the constitutive laws: evaluation,
/// derivatives, convex (Legendre) conjugation, the shifted family, growth
/// indices and sampled verification of the structural inequalities.
///
/// Four concrete families are provided, each defined through its derivative
/// phi'(t) and integrated in closed form where possible:
///   power-law (additive)   phi'(t) = nu (kappa + t)^(p-2) t
///   power-law (quadratic)  phi'(t) = nu (kappa^2 + t^2)^((p-2)/2) t
///   Carreau                phi'(t) = mu_inf t + nu (kappa + t)^(p-2) t
///   arcsinh                phi'(t) = mu_inf t + nu arcsinh(t)

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "genstokes/numerics.hpp"

namespace genstokes {

enum class NFunctionKind { PowerLawAdditive, PowerLawQuadratic, Carreau, ArcSinh };

inline const char* to_string(NFunctionKind k) {
    switch (k) {
        case NFunctionKind::PowerLawAdditive: return "power_law_additive";
        case NFunctionKind::PowerLawQuadratic: return "power_law_quadratic";
        case NFunctionKind::Carreau: return "carreau";
        case NFunctionKind::ArcSinh: return "arcsinh";
    }
    return "?";
}

namespace detail {

// Core of the additive power-law antiderivative:
//   F(p, x) = \int_0^x (1 + s)^(p-2) s ds,   x = t / kappa.
// Closed form  F = ((1+x)^p - 1)/p - ((1+x)^(p-1) - 1)/(p-1)  cancels
// catastrophically for small x (F ~ x^2/2), so a binomial series is used
// below x = 1/2.
inline double additive_core(double p, double x) {
    if (x <= 0.0) return 0.0;
    if (x > 0.5) {
        const double l = std::log1p(x);
        return std::expm1(p * l) / p - std::expm1((p - 1.0) * l) / (p - 1.0);
    }
    double coef = 1.0;  // binomial(p-2, k)
    double xpow = x * x;
    double sum = 0.0;
    for (int k = 0; k < 400; ++k) {
        const double term = coef * xpow / (k + 2);
        sum += term;
        if (std::abs(term) <= 1e-17 * std::abs(sum)) break;
        coef *= (p - 2.0 - k) / (k + 1.0);
        xpow *= x;
    }
    return sum;
}

// t * asinh(t) - sqrt(1 + t^2) + 1, the antiderivative of asinh.
inline double asinh_antiderivative(double t) {
    if (t == 0.0) return 0.0;
    return t * std::asinh(t) - t * t / (1.0 + std::sqrt(1.0 + t * t));
}

inline void require_finite_nonneg(double t, const char* who) {
    if (!std::isfinite(t) || t < 0.0) {
        throw std::domain_error(std::string(who) + ": argument must be finite and >= 0");
    }
}

}  // namespace detail

/// One of the built-in N-function families. Satisfies the NFunc concept
/// (value / prime / second) so the generic routines below apply to it.
struct NFunctionModel {
    NFunctionKind kind = NFunctionKind::PowerLawAdditive;
    double nu = 1.0;      ///< coefficient of the power-law / arcsinh part
    double kappa = 0.0;   ///< degeneracy shift (power-law and Carreau)
    double p = 2.0;       ///< growth exponent, in (1, inf)
    double mu_inf = 0.0;  ///< Newtonian part (Carreau and arcsinh)

    static NFunctionModel power_law_additive(double nu, double kappa, double p) {
        NFunctionModel m{NFunctionKind::PowerLawAdditive, nu, kappa, p, 0.0};
        m.validate();
        return m;
    }
    static NFunctionModel power_law_quadratic(double nu, double kappa, double p) {
        NFunctionModel m{NFunctionKind::PowerLawQuadratic, nu, kappa, p, 0.0};
        m.validate();
        return m;
    }
    static NFunctionModel carreau(double mu_inf, double nu, double kappa, double p) {
        NFunctionModel m{NFunctionKind::Carreau, nu, kappa, p, mu_inf};
        m.validate();
        return m;
    }
    static NFunctionModel arcsinh(double mu_inf, double nu) {
        NFunctionModel m{NFunctionKind::ArcSinh, nu, 0.0, 2.0, mu_inf};
        m.validate();
        return m;
    }

    void validate() const {
        const bool power = kind != NFunctionKind::ArcSinh;
        if (power) {
            if (!(nu > 0.0)) throw std::invalid_argument("N-function: nu must be > 0");
            if (!(kappa >= 0.0)) throw std::invalid_argument("N-function: kappa must be >= 0");
            if (!(p > 1.0) || !std::isfinite(p)) {
                throw std::invalid_argument("N-function: p must lie in (1, inf)");
            }
            if (kind == NFunctionKind::Carreau && !(mu_inf >= 0.0)) {
                throw std::invalid_argument("Carreau: mu_inf must be >= 0");
            }
        } else {
            if (!(mu_inf > 0.0)) throw std::invalid_argument("arcsinh: mu_inf must be > 0");
            if (!(nu >= 0.0)) throw std::invalid_argument("arcsinh: nu must be >= 0");
        }
    }

    /// phi(t), closed form for every family.
    double value(double t) const {
        detail::require_finite_nonneg(t, "phi");
        switch (kind) {
            case NFunctionKind::PowerLawAdditive:
                if (kappa == 0.0) return nu * std::pow(t, p) / p;
                return nu * std::pow(kappa, p) * detail::additive_core(p, t / kappa);
            case NFunctionKind::PowerLawQuadratic: {
                if (kappa == 0.0) return nu * std::pow(t, p) / p;
                const double x = t / kappa;
                const double l = (x < 1e150) ? std::log1p(x * x) : 2.0 * std::log(x);
                return nu * std::pow(kappa, p) * std::expm1(0.5 * p * l) / p;
            }
            case NFunctionKind::Carreau: {
                const double add = (kappa == 0.0)
                                       ? nu * std::pow(t, p) / p
                                       : nu * std::pow(kappa, p) * detail::additive_core(p, t / kappa);
                return 0.5 * mu_inf * t * t + add;
            }
            case NFunctionKind::ArcSinh:
                return 0.5 * mu_inf * t * t + nu * detail::asinh_antiderivative(t);
        }
        return 0.0;
    }

    /// phi'(t).
    double prime(double t) const {
        detail::require_finite_nonneg(t, "phi_prime");
        if (t == 0.0) return 0.0;
        switch (kind) {
            case NFunctionKind::PowerLawAdditive:
                return nu * std::pow(kappa + t, p - 2.0) * t;
            case NFunctionKind::PowerLawQuadratic:
                if (kappa == 0.0) return nu * std::pow(t, p - 1.0);
                return nu * std::pow(kappa * kappa + t * t, 0.5 * (p - 2.0)) * t;
            case NFunctionKind::Carreau: {
                const double add = (kappa == 0.0) ? nu * std::pow(t, p - 1.0)
                                                  : nu * std::pow(kappa + t, p - 2.0) * t;
                return mu_inf * t + add;
            }
            case NFunctionKind::ArcSinh:
                return mu_inf * t + nu * std::asinh(t);
        }
        return 0.0;
    }

    /// phi''(t). Degenerate power laws (kappa = 0, p < 2) blow up at the
    /// origin; that case reports the singularity instead of a value.
    double second(double t) const {
        detail::require_finite_nonneg(t, "phi_second");
        switch (kind) {
            case NFunctionKind::PowerLawAdditive:
            case NFunctionKind::Carreau: {
                const double newtonian = (kind == NFunctionKind::Carreau) ? mu_inf : 0.0;
                if (kappa == 0.0) {
                    if (t == 0.0) {
                        if (p < 2.0) throw std::domain_error("phi_second: singular at origin");
                        return newtonian + (p == 2.0 ? nu : 0.0);
                    }
                    return newtonian + nu * (p - 1.0) * std::pow(t, p - 2.0);
                }
                return newtonian + nu * std::pow(kappa + t, p - 3.0) * (kappa + (p - 1.0) * t);
            }
            case NFunctionKind::PowerLawQuadratic: {
                if (kappa == 0.0) {
                    if (t == 0.0) {
                        if (p < 2.0) throw std::domain_error("phi_second: singular at origin");
                        return p == 2.0 ? nu : 0.0;
                    }
                    return nu * (p - 1.0) * std::pow(t, p - 2.0);
                }
                const double s2 = kappa * kappa + t * t;
                return nu * std::pow(s2, 0.5 * (p - 4.0)) * (kappa * kappa + (p - 1.0) * t * t);
            }
            case NFunctionKind::ArcSinh:
                return mu_inf + nu / std::sqrt(1.0 + t * t);
        }
        return 0.0;
    }

    /// phi'(t)/t, the viscosity quotient, evaluated without the 0/0 at the
    /// origin. For kappa = 0, p < 2 the quotient diverges as t -> 0; callers
    /// in the stress map never evaluate it at exactly t = 0 in that regime.
    double prime_over_t(double t) const {
        detail::require_finite_nonneg(t, "phi_prime_over_t");
        switch (kind) {
            case NFunctionKind::PowerLawAdditive:
                return nu * std::pow(kappa + t, p - 2.0);
            case NFunctionKind::PowerLawQuadratic:
                if (kappa == 0.0) return nu * std::pow(t, p - 2.0);
                return nu * std::pow(kappa * kappa + t * t, 0.5 * (p - 2.0));
            case NFunctionKind::Carreau: {
                const double add = (kappa == 0.0) ? nu * std::pow(t, p - 2.0)
                                                  : nu * std::pow(kappa + t, p - 2.0);
                return mu_inf + add;
            }
            case NFunctionKind::ArcSinh: {
                if (t < 1e-4) return mu_inf + nu * (1.0 - t * t / 6.0);
                return mu_inf + nu * std::asinh(t) / t;
            }
        }
        return 0.0;
    }

    /// d/dt [phi'(t)/t], used by the solver Jacobian.
    double prime_over_t_derivative(double t) const {
        detail::require_finite_nonneg(t, "phi_prime_over_t_derivative");
        switch (kind) {
            case NFunctionKind::PowerLawAdditive:
                return nu * (p - 2.0) * std::pow(kappa + t, p - 3.0);
            case NFunctionKind::PowerLawQuadratic:
                if (kappa == 0.0) return nu * (p - 2.0) * std::pow(t, p - 3.0);
                return nu * (p - 2.0) * std::pow(kappa * kappa + t * t, 0.5 * (p - 4.0)) * t;
            case NFunctionKind::Carreau:
                if (kappa == 0.0) return nu * (p - 2.0) * std::pow(t, p - 3.0);
                return nu * (p - 2.0) * std::pow(kappa + t, p - 3.0);
            case NFunctionKind::ArcSinh: {
                if (t < 1e-3) return nu * (-t / 3.0 + 0.3 * t * t * t);
                const double d = t / std::sqrt(1.0 + t * t) - std::asinh(t);
                return nu * d / (t * t);
            }
        }
        return 0.0;
    }

    /// Linear growth scale at infinity: phi(t) >= c t^r holds for every
    /// r below this exponent.
    double growth_exponent_at_infinity() const {
        switch (kind) {
            case NFunctionKind::PowerLawAdditive:
            case NFunctionKind::PowerLawQuadratic:
                return p;
            case NFunctionKind::Carreau:
                return (mu_inf > 0.0) ? std::max(p, 2.0) : p;
            case NFunctionKind::ArcSinh:
                return 2.0;
        }
        return 2.0;
    }
};

template <class F>
concept NFunc = requires(const F f, double t) {
    { f.value(t) } -> std::convertible_to<double>;
    { f.prime(t) } -> std::convertible_to<double>;
    { f.second(t) } -> std::convertible_to<double>;
};

// ---------------------------------------------------------------------------
// Spec-named operations (thin wrappers over the model members)
// ---------------------------------------------------------------------------

inline double phi(const NFunctionModel& m, double t) { return m.value(t); }
inline double phi_prime(const NFunctionModel& m, double t) { return m.prime(t); }
inline double phi_second(const NFunctionModel& m, double t) { return m.second(t); }

// ---------------------------------------------------------------------------
// Inversion and conjugation, generic over any NFunc
// ---------------------------------------------------------------------------

/// Right inverse of the derivative: the t with f.prime(t) = s.
template <NFunc F>
double inverse_prime(const F& f, double s) {
    if (!(s >= 0.0) || !std::isfinite(s)) {
        throw std::domain_error("inverse_prime: argument must be finite and >= 0");
    }
    if (s == 0.0) return 0.0;
    return invert_increasing([&f](double t) { return f.prime(t); }, s);
}

/// inverse_prime with the closed forms the built-in families admit.
inline double inverse_phi_prime(const NFunctionModel& m, double s) {
    if (!(s >= 0.0) || !std::isfinite(s)) {
        throw std::domain_error("inverse_phi_prime: argument must be finite and >= 0");
    }
    if (s == 0.0) return 0.0;
    switch (m.kind) {
        case NFunctionKind::PowerLawAdditive:
        case NFunctionKind::PowerLawQuadratic:
            if (m.kappa == 0.0) return std::pow(s / m.nu, 1.0 / (m.p - 1.0));
            if (m.p == 2.0) return s / m.nu;
            break;
        case NFunctionKind::Carreau:
            if (m.p == 2.0) return s / (m.mu_inf + m.nu);
            if (m.kappa == 0.0 && m.mu_inf == 0.0) return std::pow(s / m.nu, 1.0 / (m.p - 1.0));
            break;
        case NFunctionKind::ArcSinh:
            break;
    }
    return inverse_prime(m, s);
}

/// Legendre transform phi*(s) = s t* - phi(t*) at t* = (phi')^{-1}(s).
template <NFunc F>
double conjugate_value(const F& f, double s) {
    if (!(s >= 0.0) || !std::isfinite(s)) {
        throw std::domain_error("conjugate: argument must be finite and >= 0");
    }
    if (s == 0.0) return 0.0;
    double tstar;
    if constexpr (std::is_same_v<F, NFunctionModel>) {
        tstar = inverse_phi_prime(f, s);
    } else {
        tstar = inverse_prime(f, s);
    }
    return s * tstar - f.value(tstar);
}

/// phi*(s) with closed forms where the family admits one.
inline double conjugate(const NFunctionModel& m, double s) {
    if (!(s >= 0.0) || !std::isfinite(s)) {
        throw std::domain_error("conjugate: argument must be finite and >= 0");
    }
    if (s == 0.0) return 0.0;
    const bool pure_power =
        (m.kind == NFunctionKind::PowerLawAdditive || m.kind == NFunctionKind::PowerLawQuadratic ||
         (m.kind == NFunctionKind::Carreau && m.mu_inf == 0.0)) &&
        m.kappa == 0.0;
    if (pure_power) {
        const double pc = m.p / (m.p - 1.0);
        return std::pow(s, pc) / (pc * std::pow(m.nu, pc - 1.0));
    }
    const bool linear_prime =
        (m.p == 2.0 && m.kind != NFunctionKind::ArcSinh);
    if (linear_prime) {
        const double slope = (m.kind == NFunctionKind::Carreau) ? m.mu_inf + m.nu : m.nu;
        return 0.5 * s * s / slope;
    }
    return conjugate_value(m, s);
}

/// The conjugate function as an evaluable N-function. Its derivative is the
/// numeric inverse of the base derivative, so conjugating it again exercises
/// the full involution numerically.
template <NFunc F>
class NumericConjugate {
  public:
    explicit NumericConjugate(F base) : base_(std::move(base)) {}

    double value(double s) const {
        if constexpr (std::is_same_v<F, NFunctionModel>) {
            return conjugate(base_, s);
        } else {
            return conjugate_value(base_, s);
        }
    }
    double prime(double s) const {
        if constexpr (std::is_same_v<F, NFunctionModel>) {
            return inverse_phi_prime(base_, s);
        } else {
            return inverse_prime(base_, s);
        }
    }
    double second(double s) const {
        const double t = prime(s);
        return 1.0 / base_.second(t);
    }

    const F& base() const { return base_; }

  private:
    F base_;
};

// ---------------------------------------------------------------------------
// Shifted N-functions
// ---------------------------------------------------------------------------

/// The shifted family phi_a, defined by phi_a'(t)/t = phi'(a+t)/(a+t).
///
/// Additive power-law and Carreau shifts collapse exactly onto the same
/// family with kappa replaced by kappa + a (and the quadratic kind with
/// kappa = 0 collapses onto the additive kind); those evaluate in closed
/// form. The remaining kinds integrate phi_a' by adaptive Simpson.
class ShiftedNFunction {
  public:
    ShiftedNFunction(NFunctionModel base, double a) : base_(base), a_(a) {
        if (!(a >= 0.0) || !std::isfinite(a)) {
            throw std::domain_error("shift: a must be finite and >= 0");
        }
        if (a_ == 0.0) {
            collapsed_ = true;
            eff_ = base_;
        } else {
            switch (base_.kind) {
                case NFunctionKind::PowerLawAdditive:
                case NFunctionKind::Carreau:
                    collapsed_ = true;
                    eff_ = base_;
                    eff_.kappa = base_.kappa + a_;
                    break;
                case NFunctionKind::PowerLawQuadratic:
                    if (base_.kappa == 0.0) {
                        collapsed_ = true;
                        eff_ = base_;
                        eff_.kind = NFunctionKind::PowerLawAdditive;
                        eff_.kappa = a_;
                    }
                    break;
                case NFunctionKind::ArcSinh:
                    break;
            }
        }
    }

    double value(double t) const {
        if (collapsed_) return eff_.value(t);
        detail::require_finite_nonneg(t, "shifted phi");
        if (t == 0.0) return 0.0;
        return integrate_scaled([this](double s) { return prime(s); }, 0.0, t);
    }

    double prime(double t) const {
        if (collapsed_) return eff_.prime(t);
        detail::require_finite_nonneg(t, "shifted phi_prime");
        if (t == 0.0) return 0.0;
        return base_.prime(a_ + t) * t / (a_ + t);
    }

    double second(double t) const {
        if (collapsed_) return eff_.second(t);
        detail::require_finite_nonneg(t, "shifted phi_second");
        const double u = a_ + t;
        return base_.second(u) * t / u + base_.prime(u) * a_ / (u * u);
    }

    double conjugate_of(double s) const {
        if (collapsed_) return conjugate(eff_, s);
        return conjugate_value(*this, s);
    }

    const NFunctionModel& base() const { return base_; }
    double shift() const { return a_; }
    bool closed_form() const { return collapsed_; }

  private:
    NFunctionModel base_;
    double a_ = 0.0;
    bool collapsed_ = false;
    NFunctionModel eff_{};
};

inline ShiftedNFunction shift(const NFunctionModel& m, double a) {
    return ShiftedNFunction(m, a);
}

/// (phi*)_b(t): the conjugate shifted by b. Evaluated through the exact
/// substitution sigma = (phi')^{-1}(u), which turns
///   \int_b^{b+t} (phi')^{-1}(u) (u-b)/u du
/// into a quadrature of closed-form quantities only:
///   \int_{s_b}^{s_t} sigma (phi'(sigma) - b)/phi'(sigma) phi''(sigma) dsigma.
inline double shifted_conjugate_value(const NFunctionModel& m, double b, double t) {
    detail::require_finite_nonneg(t, "shifted conjugate");
    detail::require_finite_nonneg(b, "shifted conjugate (shift)");
    if (t == 0.0) return 0.0;
    if (b == 0.0) return conjugate(m, t);
    const double sb = inverse_phi_prime(m, b);
    const double st = inverse_phi_prime(m, b + t);
    auto integrand = [&](double sigma) {
        const double fp = m.prime(sigma);
        return sigma * (fp - b) / fp * m.second(sigma);
    };
    return integrate_scaled(integrand, sb, st);
}

// ---------------------------------------------------------------------------
// Growth indices
// ---------------------------------------------------------------------------

/// Lower/upper growth exponents of the doubling-type inequality
/// phi(s t) <= K1 max(s^p_lower, s^q_upper) phi(t), plus the clamped
/// exponents p_bar = min(p_lower, 2), q_bar = max(q_upper, 2) and their
/// conjugates.
struct Indices {
    double p_lower = 2.0;
    double q_upper = 2.0;
    double K1 = 1.0;
    double p_bar = 2.0;
    double q_bar = 2.0;
    double p_bar_conj = 2.0;
    double q_bar_conj = 2.0;
    bool analytic = false;  ///< exponents from the family, not the lattice
};

namespace detail {

inline std::vector<double> index_lattice() { return log_space(1e-4, 1e4, 73); }

template <class Value>
void lattice_exponents(const Value& val, double& p_lower, double& q_upper) {
    const auto grid = index_lattice();
    p_lower = kInf;
    q_upper = -kInf;
    for (double t : grid) {
        const double ft = val(t);
        if (!(ft > 0.0)) continue;
        for (double s : grid) {
            const double ls = std::log(s);
            if (std::abs(ls) < 1e-6) continue;
            const double e = (std::log(val(s * t)) - std::log(ft)) / ls;
            p_lower = std::min(p_lower, e);
            q_upper = std::max(q_upper, e);
        }
    }
}

template <class Value>
double lattice_K1(const Value& val, double p_lower, double q_upper) {
    const auto grid = index_lattice();
    double k1 = 1.0;
    for (double t : grid) {
        const double ft = val(t);
        if (!(ft > 0.0)) continue;
        for (double s : grid) {
            const double envelope = std::max(std::pow(s, p_lower), std::pow(s, q_upper));
            k1 = std::max(k1, val(s * t) / (envelope * ft));
        }
    }
    return k1;
}

inline void fill_bars(Indices& ix) {
    ix.p_bar = std::min(ix.p_lower, 2.0);
    ix.q_bar = std::max(ix.q_upper, 2.0);
    ix.p_bar_conj = ix.p_bar / (ix.p_bar - 1.0);
    ix.q_bar_conj = ix.q_bar / (ix.q_bar - 1.0);
}

}  // namespace detail

/// Lattice-only estimate, usable for any evaluable N-function.
template <NFunc F>
Indices estimate_indices_sampled(const F& f) {
    Indices ix;
    auto val = [&f](double t) { return f.value(t); };
    detail::lattice_exponents(val, ix.p_lower, ix.q_upper);
    ix.K1 = detail::lattice_K1(val, ix.p_lower, ix.q_upper);
    if (!(ix.K1 <= 1e6)) {
        throw std::domain_error("estimate_indices: no K1 <= 1e6 on the lattice (doubling fails)");
    }
    detail::fill_bars(ix);
    return ix;
}

/// Growth indices of a built-in model; analytic per family where the
/// exponents are known, with K1 always measured on the lattice.
inline Indices estimate_indices(const NFunctionModel& m) {
    Indices ix;
    ix.analytic = true;
    switch (m.kind) {
        case NFunctionKind::PowerLawAdditive:
        case NFunctionKind::PowerLawQuadratic:
            if (m.kappa == 0.0) {
                ix.p_lower = ix.q_upper = m.p;
            } else {
                ix.p_lower = std::min(m.p, 2.0);
                ix.q_upper = std::max(m.p, 2.0);
            }
            break;
        case NFunctionKind::Carreau:
            if (m.mu_inf > 0.0) {
                ix.p_lower = std::min(m.p, 2.0);
                ix.q_upper = std::max(m.p, 2.0);
            } else if (m.kappa == 0.0) {
                ix.p_lower = ix.q_upper = m.p;
            } else {
                ix.p_lower = std::min(m.p, 2.0);
                ix.q_upper = std::max(m.p, 2.0);
            }
            break;
        case NFunctionKind::ArcSinh: {
            ix.analytic = false;
            auto val = [&m](double t) { return m.value(t); };
            detail::lattice_exponents(val, ix.p_lower, ix.q_upper);
            break;
        }
    }
    auto val = [&m](double t) { return m.value(t); };
    ix.K1 = detail::lattice_K1(val, ix.p_lower, ix.q_upper);
    if (!(ix.K1 <= 1e6)) {
        throw std::domain_error("estimate_indices: no K1 <= 1e6 on the lattice (doubling fails)");
    }
    detail::fill_bars(ix);
    return ix;
}

/// Measured doubling constant sup phi(2t)/phi(t) over a log lattice.
template <NFunc F>
double delta2_constant(const F& f, double t_min = 1e-6, double t_max = 1e6, int n = 241) {
    double sup = 0.0;
    for (double t : log_space(t_min, t_max, n)) {
        const double ft = f.value(t);
        if (ft > 0.0) sup = std::max(sup, f.value(2.0 * t) / ft);
    }
    return sup;
}

// ---------------------------------------------------------------------------
// Structural inequality verification
// ---------------------------------------------------------------------------

struct RatioInterval {
    double lo = kInf;
    double hi = -kInf;

    void absorb(double r) {
        lo = std::min(lo, r);
        hi = std::max(hi, r);
    }
    bool empty() const { return !(lo <= hi); }
    double spread() const { return (empty() || lo <= 0.0) ? kInf : hi / lo; }
};

struct SampleSpec {
    double t_min = 1e-6;
    double t_max = 1e6;
    int points_per_decade = 20;
    std::vector<double> deltas = {1.0, 0.5, 0.1, 0.01};
    std::vector<double> shifts = {0.0, 1e-2, 1.0, 1e2};
    int young_points = 49;  ///< per axis for the Young sweeps

    std::vector<double> t_lattice() const {
        const int decades = static_cast<int>(std::round(std::log10(t_max / t_min)));
        return log_space(t_min, t_max, decades * points_per_decade + 1);
    }
};

struct StructuralReport {
    bool pass = true;
    RatioInterval lower_chain;     ///< phi(t) / ((t/2) phi'(t/2)), must be >= 1
    RatioInterval upper_chain;     ///< phi(t) / (t phi'(t)), must be <= 1
    RatioInterval conj_chain_lo;   ///< phi(phi*(t)/t) / phi*(t), must be <= 1
    RatioInterval conj_chain_hi;   ///< phi(2 phi*(t)/t) / phi*(t), must be >= 1
    RatioInterval conj_of_prime;   ///< phi*(phi'(t)) / phi(t), bounded both ways
    double young1_min_margin = kInf;  ///< min RHS/LHS of ts <= K^qbar d^(1-qbar) phi + d phi*
    double young2_min_margin = kInf;  ///< min RHS/LHS of ts <= d phi + K^(pbar'-1) d^(1-pbar') phi*
    RatioInterval shift_dual;      ///< (phi_a)*(t) / (phi*)_{phi'(a)}(t)
    double delta2_phi = 0.0;
    double delta2_conj = 0.0;
    double delta2_shifted_max = 0.0;  ///< worst doubling constant over the shift sample
    double young_K = 1.0;             ///< the K the Young checks used
    double almost_monotone_constant = kInf;  ///< best sampled constant for phi''
    Indices indices;
};

/// Pointwise verification of the textbook inequalities on finite lattices.
/// Violations lower `pass`; nothing throws.
inline StructuralReport verify_structural_inequalities(const NFunctionModel& m,
                                                       const SampleSpec& spec = {}) {
    constexpr double slack = 1.0 + 1e-9;
    StructuralReport rep;
    rep.indices = estimate_indices(m);

    const auto ts = spec.t_lattice();

    // (t/2) phi'(t/2) <= phi(t) <= t phi'(t)
    for (double t : ts) {
        const double f = m.value(t);
        const double lo = 0.5 * t * m.prime(0.5 * t);
        const double hi = t * m.prime(t);
        if (lo > 0.0) rep.lower_chain.absorb(f / lo);
        if (hi > 0.0) rep.upper_chain.absorb(f / hi);
    }
    if (!(rep.lower_chain.lo * slack >= 1.0) || !(rep.upper_chain.hi <= slack)) rep.pass = false;

    // phi(phi*(t)/t) <= phi*(t) <= phi(2 phi*(t)/t) and phi*(phi'(t)) ~ phi(t)
    for (double t : ts) {
        const double c = conjugate(m, t);
        if (c > 0.0) {
            rep.conj_chain_lo.absorb(m.value(c / t) / c);
            rep.conj_chain_hi.absorb(m.value(2.0 * c / t) / c);
        }
        const double f = m.value(t);
        if (f > 0.0) rep.conj_of_prime.absorb(conjugate(m, m.prime(t)) / f);
    }
    if (!(rep.conj_chain_lo.hi <= slack) || !(rep.conj_chain_hi.lo * slack >= 1.0)) {
        rep.pass = false;
    }

    // Young, with K covering the measured type constants of phi and phi*.
    {
        const NumericConjugate<NFunctionModel> conj_fn(m);
        double k_conj = 1.0;
        {
            auto val = [&conj_fn](double s) { return conj_fn.value(s); };
            k_conj = detail::lattice_K1(val, rep.indices.q_bar_conj, rep.indices.p_bar_conj);
        }
        const double K = std::max({1.0, rep.indices.K1, k_conj});
        rep.young_K = K;
        const double qb = rep.indices.q_bar;
        const double pbc = rep.indices.p_bar_conj;
        const auto axis = log_space(spec.t_min, spec.t_max, spec.young_points);
        for (double t : axis) {
            const double ft = m.value(t);
            for (double s : axis) {
                const double fs = conjugate(m, s);
                const double lhs = t * s;
                for (double d : spec.deltas) {
                    const double rhs1 = std::pow(K, qb) * std::pow(d, 1.0 - qb) * ft + d * fs;
                    const double rhs2 = d * ft + std::pow(K, pbc - 1.0) * std::pow(d, 1.0 - pbc) * fs;
                    rep.young1_min_margin = std::min(rep.young1_min_margin, rhs1 / lhs);
                    rep.young2_min_margin = std::min(rep.young2_min_margin, rhs2 / lhs);
                }
            }
        }
        if (!(rep.young1_min_margin * slack >= 1.0) || !(rep.young2_min_margin * slack >= 1.0)) {
            rep.pass = false;
        }
        rep.delta2_conj = delta2_constant(conj_fn, 1e-3, 1e3, 61);
    }

    // Shift duality (phi_a)* ~ (phi*)_{phi'(a)}, plus doubling of the shifts.
    {
        const auto t_sub = log_space(1e-3, 1e3, 31);
        for (double a : spec.shifts) {
            const ShiftedNFunction fa(m, a);
            const double b = m.prime(a);
            for (double t : t_sub) {
                const double route_a = fa.conjugate_of(t);
                const double route_b = shifted_conjugate_value(m, b, t);
                if (route_b > 0.0) rep.shift_dual.absorb(route_a / route_b);
            }
            rep.delta2_shifted_max =
                std::max(rep.delta2_shifted_max, delta2_constant(fa, 1e-3, 1e3, 31));
        }
        if (!(rep.shift_dual.spread() <= 10.0)) rep.pass = false;
    }

    rep.delta2_phi = delta2_constant(m);

    // Best sampled almost-monotone constant for phi''.
    {
        double run_max = 0.0, run_min = kInf;
        double c_inc = 1.0, c_dec = 1.0;
        for (double t : ts) {
            const double f2 = m.second(t);
            run_max = std::max(run_max, f2);
            run_min = std::min(run_min, f2);
            if (f2 > 0.0) {
                c_inc = std::max(c_inc, run_max / f2);  // violations of "increasing"
                c_dec = std::max(c_dec, f2 / run_min);  // violations of "decreasing"
            }
        }
        rep.almost_monotone_constant = std::min(c_inc, c_dec);
    }

    return rep;
}

}  // namespace genstokes
