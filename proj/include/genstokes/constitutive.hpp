#pragma once

/// @file constitutive.hpp
/// The radial stress maps A(Q) = phi'(|Q|) Q/|Q| and V(Q), their inverses,
/// and sampled probes for the monotonicity/growth bounds and the natural
/// distance equivalences that relate A, V and the shifted N-functions.

#include <vector>

#include "genstokes/nfunc.hpp"
#include "genstokes/numerics.hpp"
#include "genstokes/sym2.hpp"

namespace genstokes {

/// FullNorm uses |Q|, SymNorm uses |Q^sym|. On symmetric arguments the two
/// coincide; the enum records which law a configuration meant.
enum class StressForm { FullNorm, SymNorm };

struct StressLaw {
    NFunctionModel model;
    StressForm form = StressForm::FullNorm;

    /// The kappa-regularized law the solver iterates on.
    StressLaw with_kappa_floor(double floor) const {
        StressLaw out = *this;
        if (out.model.kind != NFunctionKind::ArcSinh) {
            out.model.kappa = std::max(out.model.kappa, floor);
        }
        return out;
    }
};

/// A(Q); the quotient phi'(t)/t is evaluated directly so the origin needs no
/// special-casing beyond A(0) = 0.
inline SymMat2 stress(const StressLaw& law, const SymMat2& q) {
    const double t = q.norm();
    if (t == 0.0) return {};
    return law.model.prime_over_t(t) * q;
}

/// V(Q) = sqrt(phi'(|Q|) |Q|) Q/|Q| = sqrt(phi'(t)/t) Q.
inline SymMat2 v_map(const StressLaw& law, const SymMat2& q) {
    const double t = q.norm();
    if (t == 0.0) return {};
    return std::sqrt(law.model.prime_over_t(t)) * q;
}

/// The Q with A(Q) = S.
inline SymMat2 stress_inverse(const StressLaw& law, const SymMat2& s) {
    const double m = s.norm();
    if (m == 0.0) return {};
    const double t = inverse_phi_prime(law.model, m);
    return (t / m) * s;
}

// ---------------------------------------------------------------------------
// Equivalence probes
// ---------------------------------------------------------------------------

/// Raw quantities and the six equivalence ratios for one pair (P, Q):
/// the monotonicity product against |V(P)-V(Q)|^2, the shifted N-function of
/// the increment, the dual-shifted conjugate of the stress increment, the
/// energy identities at Q, and the derivative form of the stress increment.
struct HammerRecord {
    // raw quantities
    double mono = 0.0;       ///< (A(P)-A(Q)) : (P-Q)
    double v_dist = 0.0;     ///< |V(P)-V(Q)|^2
    double shift_val = 0.0;  ///< phi_{|Q|}(|P-Q|)
    double dual_val = 0.0;   ///< (phi*)_{|A(Q)|}(|A(P)-A(Q)|)
    double aq_dot_q = 0.0;   ///< A(Q) : Q
    double vq_sq = 0.0;      ///< |V(Q)|^2
    double phi_q = 0.0;      ///< phi(|Q|)
    double shift_prime = 0.0;  ///< (phi_{|Q|})'(|P-Q|)
    double da_norm = 0.0;      ///< |A(P)-A(Q)|

    // the six equivalence ratios
    double r_mono_v = 0.0;     ///< mono / v_dist
    double r_mono_shift = 0.0; ///< mono / shift_val
    double r_mono_dual = 0.0;  ///< mono / dual_val
    double r_aq_v = 0.0;       ///< aq_dot_q / vq_sq
    double r_v_phi = 0.0;      ///< vq_sq / phi_q
    double r_da_prime = 0.0;   ///< da_norm / shift_prime

    // both conjugate-shift routes, for the duality lemma probe
    double dual_route_shift_conj = 0.0;  ///< (phi_{|Q|})*(|A(P)-A(Q)|)
    double r_dual_routes = 0.0;          ///< shift-then-conjugate / conjugate-then-shift
};

inline HammerRecord hammer_probe(const StressLaw& law, const SymMat2& p, const SymMat2& q) {
    HammerRecord rec;
    const NFunctionModel& m = law.model;
    const SymMat2 ap = stress(law, p), aq = stress(law, q);
    const SymMat2 dp = p - q, da = ap - aq;
    const double tq = q.norm();

    rec.mono = da.dot(dp);
    const SymMat2 dv = v_map(law, p) - v_map(law, q);
    rec.v_dist = dv.dot(dv);
    rec.da_norm = da.norm();

    const ShiftedNFunction fq(m, tq);
    rec.shift_val = fq.value(dp.norm());
    rec.shift_prime = fq.prime(dp.norm());
    rec.dual_val = shifted_conjugate_value(m, aq.norm(), rec.da_norm);
    rec.dual_route_shift_conj = fq.conjugate_of(rec.da_norm);

    rec.aq_dot_q = aq.dot(q);
    const SymMat2 vq = v_map(law, q);
    rec.vq_sq = vq.dot(vq);
    rec.phi_q = m.value(tq);

    auto ratio = [](double a, double b) { return (b != 0.0) ? a / b : 0.0; };
    rec.r_mono_v = ratio(rec.mono, rec.v_dist);
    rec.r_mono_shift = ratio(rec.mono, rec.shift_val);
    rec.r_mono_dual = ratio(rec.mono, rec.dual_val);
    rec.r_aq_v = ratio(rec.aq_dot_q, rec.vq_sq);
    rec.r_v_phi = ratio(rec.vq_sq, rec.phi_q);
    rec.r_da_prime = ratio(rec.da_norm, rec.shift_prime);
    rec.r_dual_routes = ratio(rec.dual_route_shift_conj, rec.dual_val);
    return rec;
}

/// Sampled extremes of the two growth-bound ratios
///   (A(P)-A(Q)):(P-Q) / (phi''(|P|+|Q|) |P-Q|^2)   (lower, c)
///   |A(P)-A(Q)| / (phi''(|P|+|Q|) |P-Q|)           (upper, C)
struct AssumptionAReport {
    double c_est = kInf;
    double C_est = 0.0;
    int samples = 0;
    bool pass = false;
};

inline AssumptionAReport check_assumption_A(const StressLaw& law,
                                            const std::vector<std::pair<SymMat2, SymMat2>>& pairs) {
    AssumptionAReport rep;
    for (const auto& [p, q] : pairs) {
        if (p.norm() == 0.0) continue;
        const SymMat2 dp = p - q;
        const double dist = dp.norm();
        if (dist == 0.0) continue;
        const double f2 = law.model.second(p.norm() + q.norm());
        const SymMat2 da = stress(law, p) - stress(law, q);
        rep.c_est = std::min(rep.c_est, da.dot(dp) / (f2 * dist * dist));
        rep.C_est = std::max(rep.C_est, da.norm() / (f2 * dist));
        ++rep.samples;
    }
    rep.pass = rep.samples > 0 && rep.c_est > 0.0 && std::isfinite(rep.C_est);
    return rep;
}

// ---------------------------------------------------------------------------
// Sampling
// ---------------------------------------------------------------------------

/// Random symmetric matrix: entries uniform on [-10, 10] half the time,
/// a log-uniform magnitude in [1e-6, 1e6] on a random direction otherwise,
/// so both degenerate and large regimes get exercised.
inline SymMat2 random_sym(Rng& rng) {
    SymMat2 q{rng.uniform(-10.0, 10.0), rng.uniform(-10.0, 10.0), rng.uniform(-10.0, 10.0)};
    if (rng.uniform() < 0.5) return q;
    const double n = q.norm();
    if (n == 0.0) return SymMat2::identity();
    return q * (rng.log_uniform(1e-6, 1e6) / n);
}

inline std::vector<std::pair<SymMat2, SymMat2>> sample_pairs(Rng& rng, int count) {
    std::vector<std::pair<SymMat2, SymMat2>> out;
    out.reserve(static_cast<std::size_t>(count));
    while (static_cast<int>(out.size()) < count) {
        const SymMat2 p = random_sym(rng), q = random_sym(rng);
        if ((p - q).norm() == 0.0 || p.norm() == 0.0) continue;
        out.emplace_back(p, q);
    }
    return out;
}

}  // namespace genstokes
