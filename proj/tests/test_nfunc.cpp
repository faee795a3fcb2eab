#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "genstokes/nfunc.hpp"

using namespace genstokes;

namespace {

// Independent oracle: phi(t) as adaptive quadrature of phi'.
double phi_by_quadrature(const NFunctionModel& m, double t) {
    return adaptive_simpson([&m](double s) { return m.prime(s); }, 0.0, t,
                            1e-15 * std::max(m.value(t), 1e-12));
}

// Independent oracle: phi'' by central finite differences of phi'.
double phi_second_by_fd(const NFunctionModel& m, double t) {
    const double h = 1e-6 * std::max(t, 1.0);
    return (m.prime(t + h) - m.prime(t - h)) / (2.0 * h);
}

// Independent oracle: Legendre transform by brute-force maximization of
// s t - phi(t) over a dense log grid with local refinement.
double conjugate_by_bruteforce(const NFunctionModel& m, double s) {
    double best = 0.0, best_t = 0.0;
    for (double t : log_space(1e-8, 1e8, 3201)) {
        const double v = s * t - m.value(t);
        if (v > best) {
            best = v;
            best_t = t;
        }
    }
    if (best_t > 0.0) {
        for (double t : lin_space(best_t * 0.98, best_t * 1.02, 4001)) {
            best = std::max(best, s * t - m.value(t));
        }
    }
    return best;
}

const NFunctionModel kModels[] = {
    NFunctionModel::power_law_additive(1.0, 0.0, 1.5),
    NFunctionModel::power_law_additive(1.0, 0.0, 2.0),
    NFunctionModel::power_law_additive(1.0, 0.0, 3.0),
    NFunctionModel::power_law_additive(1.0, 1.0, 1.5),
    NFunctionModel::power_law_additive(2.0, 1.0, 3.0),
    NFunctionModel::power_law_quadratic(1.0, 0.0, 3.0),
    NFunctionModel::power_law_quadratic(1.0, 1.0, 1.5),
    NFunctionModel::power_law_quadratic(0.5, 2.0, 2.5),
    NFunctionModel::carreau(1.0, 1.0, 1.0, 2.0),
    NFunctionModel::carreau(1.0, 1.0, 0.0, 1.5),
    NFunctionModel::carreau(0.5, 2.0, 1.0, 3.0),
    NFunctionModel::arcsinh(1.0, 1.0),
    NFunctionModel::arcsinh(2.0, 0.5),
};

}  // namespace

TEST_CASE("phi closed forms match the quadrature of phi'") {
    for (const auto& m : kModels) {
        for (double t : {1e-4, 1e-2, 0.5, 1.0, 3.0, 17.0, 500.0}) {
            const double ref = phi_by_quadrature(m, t);
            REQUIRE(m.value(t) == Catch::Approx(ref).epsilon(1e-9));
        }
    }
}

TEST_CASE("phi spot values") {
    REQUIRE(phi(NFunctionModel::power_law_additive(1, 0, 2), 3.0) == Catch::Approx(4.5));
    REQUIRE(phi(NFunctionModel::power_law_additive(1, 0, 3), 2.0) == Catch::Approx(8.0 / 3.0));
    // Carreau p=2 collapses the power factor: phi = mu t^2/2 + nu t^2/2.
    REQUIRE(phi(NFunctionModel::carreau(1, 1, 1, 2), 1.0) == Catch::Approx(1.0));
}

TEST_CASE("phi is an N-function: convex, monotone derivative, zero at zero") {
    for (const auto& m : kModels) {
        REQUIRE(m.value(0.0) == 0.0);
        REQUIRE(m.prime(0.0) == 0.0);
        double prev_prime = 0.0;
        for (double t : log_space(1e-6, 1e6, 121)) {
            const double fp = m.prime(t);
            REQUIRE(fp > 0.0);
            REQUIRE(fp >= prev_prime * (1.0 - 1e-12));
            prev_prime = fp;
            // midpoint convexity on a sampled pair
            const double s = 0.3 * t;
            const double mid = m.value(0.5 * (s + t));
            REQUIRE(mid <= 0.5 * (m.value(s) + m.value(t)) + 1e-12 * m.value(t));
        }
    }
}

TEST_CASE("phi'(t) ~ t phi''(t) stays in a fixed window") {
    for (const auto& m : kModels) {
        double lo = kInf, hi = 0.0;
        for (double t : log_space(1e-6, 1e6, 241)) {
            const double ratio = m.prime(t) / (t * m.second(t));
            lo = std::min(lo, ratio);
            hi = std::max(hi, ratio);
        }
        REQUIRE(lo > 0.0);
        REQUIRE(std::isfinite(hi));
        REQUIRE(hi / lo < 100.0);
    }
}

TEST_CASE("phi_prime and phi_second spot values and the finite-difference oracle") {
    REQUIRE(phi_prime(NFunctionModel::power_law_additive(1, 0, 2), 5.0) == Catch::Approx(5.0));
    REQUIRE(phi_prime(NFunctionModel::power_law_additive(1, 1, 3), 2.0) == Catch::Approx(6.0));
    REQUIRE(phi_second(NFunctionModel::power_law_additive(1, 0, 1.5), 4.0) ==
            Catch::Approx(0.25));

    for (const auto& m : kModels) {
        for (double t : {0.3, 1.0, 7.0, 120.0}) {
            REQUIRE(m.second(t) == Catch::Approx(phi_second_by_fd(m, t)).epsilon(1e-5));
        }
    }
}

TEST_CASE("phi_second reports the degenerate singularity at the origin") {
    const auto degenerate = NFunctionModel::power_law_additive(1, 0, 1.5);
    REQUIRE_THROWS_AS(degenerate.second(0.0), std::domain_error);
    REQUIRE_THROWS_WITH(degenerate.second(0.0), Catch::Matchers::ContainsSubstring("singular"));
    // kappa > 0 or p >= 2 stay finite
    REQUIRE(NFunctionModel::power_law_additive(1, 1, 1.5).second(0.0) == Catch::Approx(1.0));
    REQUIRE(NFunctionModel::power_law_additive(1, 0, 2).second(0.0) == Catch::Approx(1.0));
}

TEST_CASE("domain errors on bad arguments") {
    const auto m = NFunctionModel::power_law_additive(1, 0, 2);
    REQUIRE_THROWS_AS(m.value(-1.0), std::domain_error);
    REQUIRE_THROWS_AS(m.value(std::numeric_limits<double>::quiet_NaN()), std::domain_error);
    REQUIRE_THROWS_AS(conjugate(m, -2.0), std::domain_error);
    REQUIRE_THROWS_AS(inverse_phi_prime(m, -1.0), std::domain_error);
}

TEST_CASE("inverse_phi_prime spot values") {
    REQUIRE(inverse_phi_prime(NFunctionModel::power_law_additive(1, 0, 3), 9.0) ==
            Catch::Approx(3.0));
    REQUIRE(inverse_phi_prime(NFunctionModel::carreau(1, 1, 1, 2), 4.0) == Catch::Approx(2.0));
    for (const auto& m : kModels) REQUIRE(inverse_phi_prime(m, 0.0) == 0.0);
}

TEST_CASE("inverse round-trip to 1e-10 relative over twelve decades") {
    for (const auto& m : kModels) {
        for (double t : log_space(1e-6, 1e6, 97)) {
            const double back = inverse_phi_prime(m, m.prime(t));
            REQUIRE(back == Catch::Approx(t).epsilon(1e-10));
        }
    }
}

TEST_CASE("conjugate spot values and the brute-force Legendre oracle") {
    REQUIRE(conjugate(NFunctionModel::power_law_additive(1, 0, 2), 3.0) == Catch::Approx(4.5));
    // p = 3: phi* = (2/3) s^(3/2); frozen against the brute-force oracle
    const auto p3 = NFunctionModel::power_law_additive(1, 0, 3);
    REQUIRE(conjugate(p3, 8.0) == Catch::Approx(15.084944665313015).epsilon(1e-12));
    REQUIRE(conjugate_by_bruteforce(p3, 8.0) == Catch::Approx(15.084944665313015).epsilon(1e-6));
    for (const auto& m : kModels) {
        REQUIRE(conjugate(m, 0.0) == 0.0);
        for (double s : {0.3, 2.0, 40.0}) {
            REQUIRE(conjugate(m, s) == Catch::Approx(conjugate_by_bruteforce(m, s)).epsilon(1e-6));
        }
    }
}

TEST_CASE("conjugate involution through the numerically inverted derivative") {
    for (const auto& m : kModels) {
        const NumericConjugate<NFunctionModel> star(m);
        for (double t : log_space(1e-3, 1e3, 61)) {
            const double twice = conjugate_value(star, t);
            const double direct = m.value(t);
            REQUIRE(std::abs(twice - direct) / std::max(direct, 1e-300) < 1e-8);
        }
    }
}

TEST_CASE("homogeneity: doubling nu and mu_inf doubles phi exactly") {
    for (const auto& m : kModels) {
        NFunctionModel doubled = m;
        doubled.nu *= 2.0;
        doubled.mu_inf *= 2.0;
        for (double t : log_space(1e-5, 1e5, 41)) {
            REQUIRE(doubled.value(t) == 2.0 * m.value(t));
            REQUIRE(doubled.prime(t) == 2.0 * m.prime(t));
        }
    }
}

TEST_CASE("shift: definition identity and collapse rules") {
    // phi_a'(t) (a + t) = phi'(a + t) t
    for (const auto& m : kModels) {
        for (double a : {0.0, 1e-3, 1.0, 50.0}) {
            const ShiftedNFunction fa(m, a);
            for (double t : log_space(1e-4, 1e4, 33)) {
                REQUIRE(fa.prime(t) * (a + t) ==
                        Catch::Approx(m.prime(a + t) * t).epsilon(1e-13));
            }
        }
    }
    // a = 0 reproduces the base exactly
    for (const auto& m : kModels) {
        const ShiftedNFunction f0(m, 0.0);
        for (double t : {0.1, 1.0, 10.0}) {
            REQUIRE(f0.value(t) == m.value(t));
            REQUIRE(f0.prime(t) == m.prime(t));
        }
    }
    // p = 2 additive laws are shift-invariant: phi'(t)/t is constant
    {
        const auto m2 = NFunctionModel::power_law_additive(1, 0, 2);
        const ShiftedNFunction f7(m2, 7.0);
        for (double t : {0.2, 1.0, 9.0}) REQUIRE(f7.value(t) == Catch::Approx(m2.value(t)));
    }
    // additive shift collapses onto kappa + a: phi_1'(2) = phi'(3) * 2/3 = 6
    {
        const auto p3 = NFunctionModel::power_law_additive(1, 0, 3);
        const ShiftedNFunction f1(p3, 1.0);
        REQUIRE(f1.closed_form());
        REQUIRE(f1.prime(2.0) == Catch::Approx(6.0));
    }
}

TEST_CASE("shifted value agrees with quadrature of the shifted derivative") {
    for (const auto& m : kModels) {
        for (double a : {0.5, 3.0}) {
            const ShiftedNFunction fa(m, a);
            for (double t : {0.2, 1.0, 12.0}) {
                const double ref = adaptive_simpson([&fa](double s) { return fa.prime(s); }, 0.0,
                                                    t, 1e-13 * std::max(1.0, fa.value(t)));
                REQUIRE(fa.value(t) == Catch::Approx(ref).epsilon(1e-9));
            }
        }
    }
}

TEST_CASE("shifted second derivative stays comparable to phi''(a + t)") {
    for (const auto& m : kModels) {
        for (double a : {1e-2, 1.0, 1e2}) {
            const ShiftedNFunction fa(m, a);
            double lo = kInf, hi = 0.0;
            for (double t : log_space(1e-4, 1e4, 65)) {
                const double r = fa.second(t) / m.second(a + t);
                lo = std::min(lo, r);
                hi = std::max(hi, r);
            }
            REQUIRE(lo > 0.0);
            REQUIRE(hi / lo < 100.0);
        }
    }
}

TEST_CASE("estimate_indices: analytic exponents and bar arithmetic") {
    {
        const auto ix = estimate_indices(NFunctionModel::power_law_additive(1, 0, 2));
        REQUIRE(ix.p_lower == 2.0);
        REQUIRE(ix.q_upper == 2.0);
        REQUIRE(ix.p_bar == 2.0);
        REQUIRE(ix.q_bar == 2.0);
    }
    {
        const auto ix = estimate_indices(NFunctionModel::power_law_additive(1, 0, 1.5));
        REQUIRE(ix.p_bar == 1.5);
        REQUIRE(ix.q_bar == 2.0);
        REQUIRE(ix.q_bar_conj == Catch::Approx(2.0));
        REQUIRE(ix.p_bar_conj == Catch::Approx(3.0));
    }
    {
        const auto ix = estimate_indices(NFunctionModel::carreau(1, 1, 1, 3));
        REQUIRE(ix.p_lower == 2.0);
        REQUIRE(ix.q_upper == 3.0);
    }
}

TEST_CASE("estimate_indices: lattice oracle confirms the analytic spans") {
    // the sampled exponent estimator, run blind, must land inside the
    // analytic window
    for (const auto& m : kModels) {
        const auto ix = estimate_indices(m);
        double pl, qu;
        auto val = [&m](double t) { return m.value(t); };
        genstokes::detail::lattice_exponents(val, pl, qu);
        REQUIRE(pl >= ix.p_lower - 0.05);
        REQUIRE(qu <= ix.q_upper + 0.05);
        REQUIRE(ix.K1 >= 1.0);
        REQUIRE(ix.K1 <= 1e6);
    }
}

TEST_CASE("type inequality holds on the lattice with the reported K1") {
    for (const auto& m : kModels) {
        const auto ix = estimate_indices(m);
        for (double t : log_space(1e-4, 1e4, 25)) {
            for (double s : log_space(1e-4, 1e4, 25)) {
                const double envelope =
                    std::max(std::pow(s, ix.p_lower), std::pow(s, ix.q_upper));
                REQUIRE(m.value(s * t) <= ix.K1 * envelope * m.value(t) * (1.0 + 1e-9));
            }
        }
    }
}

TEST_CASE("shift consistency: shifted indices stay within the clamped window") {
    for (const auto& m : {NFunctionModel::power_law_additive(1, 0, 1.5),
                          NFunctionModel::power_law_additive(1, 0, 3),
                          NFunctionModel::carreau(1, 1, 1, 3)}) {
        const auto base = estimate_indices(m);
        for (double a : {0.1, 1.0, 10.0}) {
            const ShiftedNFunction fa(m, a);
            const auto ix = estimate_indices_sampled(fa);
            REQUIRE(ix.p_lower >= base.p_bar - 0.05);
            REQUIRE(ix.q_upper <= base.q_bar + 0.05);
        }
    }
}

TEST_CASE("structural inequalities hold for every built-in model") {
    for (const auto& m : kModels) {
        const auto rep = verify_structural_inequalities(m);
        INFO(to_string(m.kind) << " p=" << m.p << " kappa=" << m.kappa);
        CHECK(rep.pass);
        REQUIRE(rep.lower_chain.lo >= 1.0 - 1e-9);
        REQUIRE(rep.upper_chain.hi <= 1.0 + 1e-9);
        REQUIRE(rep.conj_chain_lo.hi <= 1.0 + 1e-9);
        REQUIRE(rep.conj_chain_hi.lo >= 1.0 - 1e-9);
        REQUIRE(rep.young1_min_margin >= 1.0 - 1e-9);
        REQUIRE(rep.young2_min_margin >= 1.0 - 1e-9);
        REQUIRE(rep.conj_of_prime.spread() < 50.0);
        REQUIRE(rep.shift_dual.spread() <= 10.0);
        REQUIRE(std::isfinite(rep.delta2_phi));
        REQUIRE(std::isfinite(rep.delta2_conj));
        REQUIRE(std::isfinite(rep.delta2_shifted_max));
    }
}

TEST_CASE("structural report: ratio bounds are scale-free under nu doubling") {
    const auto m = NFunctionModel::power_law_additive(1, 1, 3);
    NFunctionModel m2 = m;
    m2.nu *= 2.0;
    const auto r1 = verify_structural_inequalities(m);
    const auto r2 = verify_structural_inequalities(m2);
    REQUIRE(r1.conj_of_prime.lo == Catch::Approx(r2.conj_of_prime.lo).epsilon(1e-9));
    REQUIRE(r1.conj_of_prime.hi == Catch::Approx(r2.conj_of_prime.hi).epsilon(1e-9));
    REQUIRE(r1.lower_chain.lo == Catch::Approx(r2.lower_chain.lo).epsilon(1e-9));
}

TEST_CASE("structural spot checks") {
    // p=2: phi*(phi'(t)) = phi(t) exactly, ratio 1
    const auto m2 = NFunctionModel::power_law_additive(1, 0, 2);
    for (double t : {0.3, 1.0, 5.0}) {
        REQUIRE(conjugate(m2, m2.prime(t)) == Catch::Approx(m2.value(t)).epsilon(1e-12));
    }
    // Young at t = s = delta = 1, K >= 1: 1 <= K^2 * 0.5 + 0.5
    const auto ix = estimate_indices(m2);
    REQUIRE(1.0 <= std::pow(std::max(ix.K1, 1.0), ix.q_bar) * m2.value(1.0) +
                       conjugate(m2, 1.0) + 1e-12);
    // p=3 chain at t=2: 1*phi'(1) = 1 <= phi(2) = 8/3 <= 2*phi'(2) = 8
    const auto p3 = NFunctionModel::power_law_additive(1, 0, 3);
    REQUIRE(0.5 * 2.0 * p3.prime(1.0) == Catch::Approx(1.0));
    REQUIRE(p3.value(2.0) == Catch::Approx(8.0 / 3.0));
    REQUIRE(2.0 * p3.prime(2.0) == Catch::Approx(8.0));
    REQUIRE(1.0 <= p3.value(2.0));
    REQUIRE(p3.value(2.0) <= 8.0);
}

TEST_CASE("delta2 of phi, its conjugate and the shifted family is bounded") {
    for (const auto& m : kModels) {
        REQUIRE(delta2_constant(m) < 64.0);  // 2^q for q <= 3, with margin
        const NumericConjugate<NFunctionModel> star(m);
        REQUIRE(delta2_constant(star, 1e-3, 1e3, 41) < 64.0);
    }
}

TEST_CASE("shifted conjugate substitution rule matches the generic transform") {
    for (const auto& m : kModels) {
        for (double b : {0.5, 4.0}) {
            // (phi*)_b via the sigma-substitution against direct quadrature
            // of (phi*)_b' with the numerically inverted derivative.
            for (double t : {0.4, 2.0, 20.0}) {
                const double fast = shifted_conjugate_value(m, b, t);
                const double slow = integrate_scaled(
                    [&](double tau) {
                        return inverse_phi_prime(m, b + tau) * tau / (b + tau);
                    },
                    0.0, t);
                REQUIRE(fast == Catch::Approx(slow).epsilon(1e-8));
            }
        }
    }
}
