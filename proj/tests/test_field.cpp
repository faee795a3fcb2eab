#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <sstream>

#include "genstokes/field.hpp"
#include "genstokes/numerics.hpp"
#include "genstokes/operators.hpp"

using namespace genstokes;

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

Grid periodic_grid(int n) { return Grid(n, kTwoPi, BoundaryKind::Periodic); }
Grid dirichlet_grid(int n) { return Grid(n, 1.0, BoundaryKind::Dirichlet, {-0.5, -0.5}); }

// Random zero-mean trigonometric vector field (periodic, smooth).
VectorField random_smooth_field(const Grid& g, Rng& rng) {
    double a1 = rng.uniform(-1, 1), b1 = rng.uniform(-1, 1);
    double a2 = rng.uniform(-1, 1), b2 = rng.uniform(-1, 1);
    int k1 = 1 + static_cast<int>(rng.uniform() * 3);
    int k2 = 1 + static_cast<int>(rng.uniform() * 3);
    return VectorField::sample(
        g, [=](Vec2 x) { return a1 * std::sin(k1 * x.x) + b1 * std::cos(k2 * x.y); },
        [=](Vec2 x) { return a2 * std::cos(k2 * x.x) + b2 * std::sin(k1 * x.y); });
}

TensorField random_smooth_tensor(const Grid& g, Rng& rng) {
    double a = rng.uniform(-1, 1), b = rng.uniform(-1, 1), c = rng.uniform(-1, 1);
    int k = 1 + static_cast<int>(rng.uniform() * 3);
    return TensorField::sample(g, [=](Vec2 x) {
        return SymMat2{a * std::sin(k * x.x), b * std::cos(k * (x.x + x.y)), c * std::sin(k * x.y)};
    });
}

double max_interior_error(const TensorField& got, const TensorField& want, int margin) {
    const Grid& g = got.grid();
    double e = 0.0;
    for (int j = margin; j < g.n - margin; ++j)
        for (int i = margin; i < g.n - margin; ++i) {
            e = std::max(e, (got.at(i, j) - want.at(i, j)).norm());
        }
    return e;
}

}  // namespace

TEST_CASE("sym_gradient kills rigid rotation") {
    const Grid g = dirichlet_grid(32);
    const auto u = VectorField::sample(g, [](Vec2 x) { return x.y; }, [](Vec2 x) { return -x.x; });
    const auto d = sym_gradient(u);
    for (int j = 0; j < g.n; ++j)
        for (int i = 0; i < g.n; ++i) REQUIRE(d.at(i, j).norm() < 1e-13);
}

TEST_CASE("sym_gradient of a pure stretch is diag(1,-1)") {
    const Grid g = dirichlet_grid(32);
    const auto u = VectorField::sample(g, [](Vec2 x) { return x.x; }, [](Vec2 x) { return -x.y; });
    const auto d = sym_gradient(u);
    for (int j = 0; j < g.n; ++j)
        for (int i = 0; i < g.n; ++i) {
            REQUIRE(d.at(i, j).a11 == Catch::Approx(1.0).margin(1e-12));
            REQUIRE(d.at(i, j).a22 == Catch::Approx(-1.0).margin(1e-12));
            REQUIRE(std::abs(d.at(i, j).a12) < 1e-12);
        }
}

TEST_CASE("sym_gradient of a shear wave converges at second order") {
    // u = (sin y, 0): a12 = cos(y)/2
    double prev_err = 0.0;
    for (int level = 0; level < 3; ++level) {
        const int n = 16 << level;
        const Grid g = periodic_grid(n);
        const auto u =
            VectorField::sample(g, [](Vec2 x) { return std::sin(x.y); }, [](Vec2) { return 0.0; });
        const auto want = TensorField::sample(
            g, [](Vec2 x) { return SymMat2{0.0, 0.5 * std::cos(x.y), 0.0}; });
        const double err = max_interior_error(sym_gradient(u), want, 0);
        if (level > 0) {
            const double factor = prev_err / err;
            REQUIRE(factor > 3.2);
            REQUIRE(factor < 4.8);
        }
        prev_err = err;
    }
}

TEST_CASE("skew_gradient cases") {
    const Grid g = dirichlet_grid(32);
    // rigid rotation -> W12 = 1
    const auto rot =
        VectorField::sample(g, [](Vec2 x) { return x.y; }, [](Vec2 x) { return -x.x; });
    const auto w = skew_gradient(rot);
    for (int j = 0; j < g.n; ++j)
        for (int i = 0; i < g.n; ++i) REQUIRE(w.at(i, j) == Catch::Approx(1.0).margin(1e-12));

    // constant field -> 0
    const auto c = VectorField::sample(g, [](Vec2) { return 0.7; }, [](Vec2) { return -0.3; });
    const auto wc = skew_gradient(c);
    for (double v : wc.data()) REQUIRE(std::abs(v) < 1e-14);

    // gradient flow of psi = sin x sin y -> 0 up to O(h^2)
    const Grid gp = periodic_grid(64);
    const auto gradpsi = VectorField::sample(
        gp, [](Vec2 x) { return std::cos(x.x) * std::sin(x.y); },
        [](Vec2 x) { return std::sin(x.x) * std::cos(x.y); });
    const auto wg = skew_gradient(gradpsi);
    double emax = 0.0;
    for (double v : wg.data()) emax = std::max(emax, std::abs(v));
    REQUIRE(emax < 5e-3);  // O(h^2) at n = 64
}

TEST_CASE("divergence examples") {
    const Grid g = dirichlet_grid(32);
    const auto rot =
        VectorField::sample(g, [](Vec2 x) { return x.y; }, [](Vec2 x) { return -x.x; });
    for (double v : divergence_vec(rot).data()) REQUIRE(std::abs(v) < 1e-13);

    const auto cst = TensorField::sample(g, [](Vec2) { return SymMat2{1.0, 2.0, -1.0}; });
    const auto divc = divergence_tensor(cst);
    for (int j = 0; j < g.u1_ny(); ++j)
        for (int i = 1; i < g.n; ++i) REQUIRE(std::abs(divc.u1(i, j)) < 1e-12);

    // G = diag(x, 0) -> div G = (1, 0) in the interior
    const auto lin = TensorField::sample(g, [](Vec2 x) { return SymMat2{x.x, 0.0, 0.0}; });
    const auto divl = divergence_tensor(lin);
    for (int j = 1; j < g.n - 1; ++j)
        for (int i = 2; i < g.n - 1; ++i) {
            REQUIRE(divl.u1(i, j) == Catch::Approx(1.0).margin(1e-11));
        }
}

TEST_CASE("summation by parts on periodic grids, 100 random pairs") {
    const Grid g = periodic_grid(24);
    Rng rng(2024);
    for (int rep = 0; rep < 100; ++rep) {
        const auto v = random_smooth_field(g, rng);
        const auto t = random_smooth_tensor(g, rng);
        const double lhs = inner(divergence_tensor(t), v);
        const double rhs = -inner(t, sym_gradient(v));
        const double scale = l2_norm(t) * l2_norm(sym_gradient(v)) + 1e-300;
        REQUIRE(std::abs(lhs - rhs) <= 1e-12 * scale);
    }
}

TEST_CASE("pressure gradient is dual to the velocity divergence (periodic)") {
    const Grid g = periodic_grid(24);
    Rng rng(7);
    for (int rep = 0; rep < 20; ++rep) {
        const auto v = random_smooth_field(g, rng);
        double a = rng.uniform(-1, 1);
        const auto p = ScalarField::sample(
            g, [a](Vec2 x) { return a * std::sin(x.x) * std::cos(2 * x.y); });
        const double lhs = inner(gradient_scalar(p), v);
        const double rhs = -inner(p, divergence_vec(v));
        REQUIRE(std::abs(lhs - rhs) <= 1e-12 * (l2_norm(p) * l2_norm(divergence_vec(v)) + 1.0));
    }
}

TEST_CASE("ball_mean basics") {
    const Grid g = dirichlet_grid(64);
    const Ball b{{0.0, 0.0}, 0.4};

    const auto c = ScalarField::sample(g, [](Vec2) { return 3.25; });
    REQUIRE(ball_mean(c, b) == Catch::Approx(3.25));

    // odd function: mean ~ 0 up to discretization asymmetry <= h
    const auto x1 = ScalarField::sample(g, [](Vec2 x) { return x.x; });
    REQUIRE(std::abs(ball_mean(x1, b)) <= g.h);

    // f = x^2 over a ball of radius R: exact mean R^2/4
    const auto sq = ScalarField::sample(g, [](Vec2 x) { return x.x * x.x; });
    REQUIRE(ball_mean(sq, b) == Catch::Approx(0.4 * 0.4 / 4.0).margin(0.4 * g.h));
}

TEST_CASE("ball validation errors") {
    const Grid g = dirichlet_grid(32);
    REQUIRE_THROWS_AS(cells_in_ball(g, Ball{{0.0, 0.0}, 0.5 * g.h}), std::invalid_argument);
    REQUIRE_THROWS_WITH(cells_in_ball(g, Ball{{50.0, 50.0}, 0.2}),
                        Catch::Matchers::ContainsSubstring("outside"));
}

TEST_CASE("restrict_to_ball carries exactly the member cells") {
    const Grid g = dirichlet_grid(32);
    const auto f = ScalarField::sample(g, [](Vec2 x) { return x.x + 2.0 * x.y; });
    const Ball b{{0.1, -0.1}, 0.3};
    const auto patch = restrict_to_ball(f, b);
    REQUIRE(patch.cells.size() == cells_in_ball(g, b).size());
    for (std::size_t k = 0; k < patch.cells.size(); ++k) {
        auto [i, j] = patch.cells[k];
        REQUIRE(patch.values[k] == f.at(i, j));
        REQUIRE((g.cell_center(i, j) - b.center).norm() <= b.radius);
    }
}

TEST_CASE("CSV round trip is lossless") {
    const Grid g = dirichlet_grid(16);
    Rng rng(99);
    auto s = ScalarField(g);
    for (double& v : s.data()) v = rng.uniform(-1e3, 1e3) * std::pow(10.0, rng.uniform(-12, 3));
    std::stringstream ss;
    write_csv(ss, s);
    const auto s2 = read_scalar_csv(ss);
    REQUIRE(s2.grid().same_layout(g));
    for (std::size_t k = 0; k < s.data().size(); ++k) REQUIRE(s.data()[k] == s2.data()[k]);

    auto v = VectorField(g);
    for (double& x : v.data1()) x = rng.uniform(-5, 5);
    for (double& x : v.data2()) x = rng.uniform(-5, 5);
    std::stringstream sv;
    write_csv(sv, v);
    const auto v2 = read_vector_csv(sv);
    for (std::size_t k = 0; k < v.data1().size(); ++k) REQUIRE(v.data1()[k] == v2.data1()[k]);
    for (std::size_t k = 0; k < v.data2().size(); ++k) REQUIRE(v.data2()[k] == v2.data2()[k]);

    auto t = TensorField(g);
    for (auto& m : t.data()) m = {rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(-2, 2)};
    std::stringstream st;
    write_csv(st, t);
    const auto t2 = read_tensor_csv(st);
    for (std::size_t k = 0; k < t.data().size(); ++k) {
        REQUIRE(t.data()[k].a11 == t2.data()[k].a11);
        REQUIRE(t.data()[k].a12 == t2.data()[k].a12);
        REQUIRE(t.data()[k].a22 == t2.data()[k].a22);
    }
}

TEST_CASE("grid refinement drops sym_gradient error by about 4x") {
    // u = (sin y, sin x) on the periodic box
    std::vector<double> errs;
    for (int n : {16, 32, 64}) {
        const Grid g = periodic_grid(n);
        const auto u = VectorField::sample(
            g, [](Vec2 x) { return std::sin(x.y); }, [](Vec2 x) { return std::sin(x.x); });
        const auto want = TensorField::sample(g, [](Vec2 x) {
            return SymMat2{0.0, 0.5 * (std::cos(x.y) + std::cos(x.x)), 0.0};
        });
        errs.push_back(max_interior_error(sym_gradient(u), want, 0));
    }
    for (std::size_t k = 1; k < errs.size(); ++k) {
        const double factor = errs[k - 1] / errs[k];
        REQUIRE(factor > 3.2);   // 4x within 20%
        REQUIRE(factor < 4.8);
    }
}
