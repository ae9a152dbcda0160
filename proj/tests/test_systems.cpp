#include <doctest.h>

#include <cmath>
#include <random>

#include "rsadp/errors.hpp"
#include "rsadp/systems.hpp"

using namespace rsadp;

namespace {

Vec random_state(std::mt19937_64& rng, std::size_t n, double r) {
    std::uniform_real_distribution<double> u(-r, r);
    Vec x(n);
    for (auto& v : x) v = u(rng);
    return x;
}

}  // namespace

TEST_CASE("builtin lookup") {
    for (const auto& name : builtin_names()) CHECK(builtin(name).name == name);
    CHECK_THROWS_AS(builtin("cartpole"), NotFoundError);
}

TEST_CASE("benchmark drift and input map") {
    const SystemModel m = builtin("benchmark2");
    CHECK(m.disturbance_dim == 0);
    const Vec f = m.drift(Vec{0.0, 1.0});
    CHECK(f[0] == doctest::Approx(1.0));
    CHECK(f[1] == doctest::Approx(4.0));
    CHECK(m.d_bound(Vec{1.0, 1.0}) == 0.0);
    CHECK(m.l_bound(Vec{1.0, 1.0}) == 0.0);
}

TEST_CASE("pendulum bounds at [1,1]") {
    const SystemModel m = builtin("pendulum");
    CHECK(m.d_bound(Vec{1.0, 1.0}) == doctest::Approx(1.0));
    CHECK(m.l_bound(Vec{1.0, 1.0}) == doctest::Approx(0.8));
}

TEST_CASE("manipulator has no matched disturbance") {
    const SystemModel m = builtin("manipulator2dof");
    std::mt19937_64 rng(1);
    for (int k = 0; k < 50; ++k) CHECK(m.l_bound(random_state(rng, 4, 1.0)) == 0.0);
}

TEST_CASE("unmatched_map examples") {
    const SystemModel pend = builtin("pendulum");
    const Mat h = unmatched_map(pend, Vec{0.3, -0.7});
    CHECK(std::abs(h(0, 0) - 1.0) < 1e-14);
    CHECK(std::abs(h(1, 0)) < 1e-14);

    // Fully matched channel: k = g.
    SystemModel matched = pend;
    matched.input_map = [](const Vec&) { return Mat{{0.0}, {1.0}}; };
    matched.disturbance_map = matched.input_map;
    CHECK(unmatched_map(matched, Vec{1.0, 1.0}).max_abs() < 1e-15);

    const SystemModel arm = builtin("manipulator2dof");
    std::mt19937_64 rng(2);
    for (int k = 0; k < 20; ++k) {
        const Vec x = random_state(rng, 4, 1.0);
        CHECK((unmatched_map(arm, x) - arm.disturbance_map(x)).max_abs() < 1e-12);
    }
    CHECK(unmatched_map(builtin("benchmark2"), Vec{1.0, 1.0}).cols() == 0);
}

TEST_CASE("auxiliary_deriv examples") {
    for (const auto& name : builtin_names()) {
        const SystemModel m = builtin(name);
        const Vec dx = auxiliary_deriv(m, Vec(m.state_dim), Vec(m.input_dim), Vec(m.disturbance_dim));
        CHECK(dx.norm() == 0.0);
    }
    const SystemModel bench = builtin("benchmark2");
    const Vec b = auxiliary_deriv(bench, Vec{1.0, 1.0}, Vec{0.0}, Vec{});
    const double c = std::cos(2.0) + 2.0;
    CHECK(std::abs(b[0]) < 1e-15);
    CHECK(std::abs(b[1] - (-0.5 - 0.5 * (1.0 - c * c))) < 1e-14);
    CHECK(std::abs(b[1] - 0.25430) < 1e-5);

    const SystemModel pend = builtin("pendulum");
    const Vec p = auxiliary_deriv(pend, Vec{2.0, -2.0}, Vec{0.0}, Vec{1.0});
    CHECK(std::abs(p[0] + 1.0) < 1e-14);
    CHECK(std::abs(p[1] - (-4.9 * std::sin(2.0) + 0.4)) < 1e-14);
    CHECK(std::abs(p[1] + 4.05556) < 1e-5);

    CHECK_THROWS_AS(auxiliary_deriv(pend, Vec{1.0}, Vec{0.0}, Vec{0.0}), ContractError);
    CHECK_THROWS_AS(auxiliary_deriv(pend, Vec{1.0, 1.0}, Vec{0.0}, Vec{}), ContractError);
}

TEST_CASE("true_deriv examples") {
    for (const auto& name : builtin_names()) {
        const SystemModel m = builtin(name);
        const Vec dx = true_deriv(m, Vec(m.state_dim), Vec(m.input_dim), sample_disturbance(m, 3));
        CHECK(dx.norm() == 0.0);
    }
    const SystemModel pend = builtin("pendulum");
    const DisturbanceParams p{{std::sqrt(2.0) / 2.0, 2.0}, 0};
    const Vec dx = true_deriv(pend, Vec{1.0, 0.0}, Vec{0.0}, p);
    CHECK(dx[0] == 0.0);
    CHECK(std::abs(dx[1] + 4.9 * std::sin(1.0)) < 1e-15);
    CHECK_THROWS_AS(true_deriv(pend, Vec{1.0, 0.0}, Vec{}, p), ContractError);
}

TEST_CASE("disturbance draws are reproducible and inside their ranges") {
    for (const auto& name : builtin_names()) {
        const SystemModel m = builtin(name);
        for (std::uint64_t seed = 0; seed < 50; ++seed) {
            const DisturbanceParams p = sample_disturbance(m, seed);
            CHECK(p.values == sample_disturbance(m, seed).values);
            REQUIRE(p.values.size() == m.disturbance_ranges.size());
            for (std::size_t i = 0; i < p.values.size(); ++i) {
                CHECK(p.values[i] >= m.disturbance_ranges[i].lower);
                CHECK(p.values[i] <= m.disturbance_ranges[i].upper);
            }
        }
    }
}

TEST_CASE("disturbances respect their declared bounds") {
    std::mt19937_64 rng(9);
    for (const char* name : {"pendulum", "manipulator2dof"}) {
        const SystemModel m = builtin(name);
        for (int k = 0; k < 1000; ++k) {
            const Vec x = random_state(rng, m.state_dim, 3.0);
            const DisturbanceParams p = sample_disturbance(m, static_cast<std::uint64_t>(k));
            const Vec d = m.disturbance(x, p);
            CHECK(d.norm() <= m.d_bound(x) + 1e-12);
            const Vec matched = pinv_full_column_rank(m.input_map(x)) * (m.disturbance_map(x) * d);
            CHECK(matched.norm() <= m.l_bound(x) + 1e-12);
        }
    }
}

TEST_CASE("matched plus unmatched parts recompose k d") {
    std::mt19937_64 rng(4);
    for (const char* name : {"pendulum", "manipulator2dof"}) {
        const SystemModel m = builtin(name);
        for (int k = 0; k < 1000; ++k) {
            const Vec x = random_state(rng, m.state_dim, 2.0);
            const Vec d = m.disturbance(x, sample_disturbance(m, static_cast<std::uint64_t>(k)));
            const Mat g = m.input_map(x);
            const Vec kd = m.disturbance_map(x) * d;
            const Vec sum = g * (pinv_full_column_rank(g) * kd) + unmatched_map(m, x) * d;
            CHECK((sum - kd).norm_inf() < 1e-10);
        }
    }
}

TEST_CASE("auxiliary_deriv recomposes f + g u + h v") {
    std::mt19937_64 rng(6);
    for (const auto& name : builtin_names()) {
        const SystemModel m = builtin(name);
        for (int k = 0; k < 200; ++k) {
            const Vec x = random_state(rng, m.state_dim, 1.5);
            const Vec u = random_state(rng, m.input_dim, 2.0);
            const Vec v = random_state(rng, m.disturbance_dim, 2.0);
            Vec expect = m.drift(x) + m.input_map(x) * u;
            if (m.disturbance_dim) expect += unmatched_map(m, x) * v;
            CHECK(auxiliary_deriv(m, x, u, v) == expect);
        }
    }
}

TEST_CASE("manipulator inertia matrix is positive definite and overridable") {
    const SystemModel a = builtin("manipulator2dof");
    ModelOptions heavy;
    heavy.inertia.p1 = 6.0;
    const SystemModel b = builtin("manipulator2dof", heavy);
    const Vec x{0.3, 0.4, 0.0, 0.0};
    CHECK(a.input_map(x)(2, 0) != b.input_map(x)(2, 0));
    // Lower 2x2 block of g is M^-1, which must be symmetric positive definite.
    std::mt19937_64 rng(8);
    for (int k = 0; k < 100; ++k) {
        const Mat g = a.input_map(random_state(rng, 4, 3.2));
        const Mat minv{{g(2, 0), g(2, 1)}, {g(3, 0), g(3, 1)}};
        CHECK(std::abs(minv(0, 1) - minv(1, 0)) < 1e-12);
        CHECK(minv(0, 0) > 0.0);
        CHECK(minv(0, 0) * minv(1, 1) - minv(0, 1) * minv(1, 0) > 0.0);
    }
}
