#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "rsadp/errors.hpp"
#include "rsadp/numerics.hpp"

using namespace rsadp;

namespace {

Mat random_mat(std::mt19937_64& rng, std::size_t r, std::size_t c, double lo = -1.0, double hi = 1.0) {
    std::uniform_real_distribution<double> u(lo, hi);
    Mat m(r, c);
    for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) m(i, j) = u(rng);
    return m;
}

Mat random_sym(std::mt19937_64& rng, std::size_t n) {
    const Mat a = random_mat(rng, n, n);
    return 0.5 * (a + a.transpose());
}

// Integrate xdot = -x over [0, 1].
double decay_error(double h) {
    const Derivative f = [](double, const Vec& x) { return -1.0 * x; };
    Vec x{1.0};
    const int n = static_cast<int>(std::lround(1.0 / h));
    for (int k = 0; k < n; ++k) x = rk4_step(f, x, k * h, h);
    return std::abs(x[0] - std::exp(-1.0));
}

// Closed-form eigenvalues of a symmetric 3x3 (trigonometric solution of the cubic).
std::array<double, 3> eig3_closed(const Mat& a) {
    const double p1 = a(0, 1) * a(0, 1) + a(0, 2) * a(0, 2) + a(1, 2) * a(1, 2);
    const double q = (a(0, 0) + a(1, 1) + a(2, 2)) / 3.0;
    const double p2 = (a(0, 0) - q) * (a(0, 0) - q) + (a(1, 1) - q) * (a(1, 1) - q) + (a(2, 2) - q) * (a(2, 2) - q) + 2 * p1;
    const double p = std::sqrt(p2 / 6.0);
    Mat b = (1.0 / p) * (a - q * Mat::identity(3));
    const double detb = b(0, 0) * (b(1, 1) * b(2, 2) - b(1, 2) * b(2, 1)) - b(0, 1) * (b(1, 0) * b(2, 2) - b(1, 2) * b(2, 0)) +
                        b(0, 2) * (b(1, 0) * b(2, 1) - b(1, 1) * b(2, 0));
    const double r = std::clamp(detb / 2.0, -1.0, 1.0);
    const double phi = std::acos(r) / 3.0;
    const double e1 = q + 2 * p * std::cos(phi);
    const double e3 = q + 2 * p * std::cos(phi + 2.0 * std::numbers::pi / 3.0);
    const double e2 = 3 * q - e1 - e3;
    std::array<double, 3> e{e1, e2, e3};
    std::sort(e.begin(), e.end());
    return e;
}

}  // namespace

TEST_CASE("Vec and Mat basics") {
    const Vec a{1.0, 2.0, 2.0};
    CHECK(a.norm() == doctest::Approx(3.0));
    CHECK(a.norm_inf() == 2.0);
    CHECK(a.dot(Vec{1.0, 0.0, -1.0}) == doctest::Approx(-1.0));
    const Mat m{{1, 2}, {3, 4}};
    CHECK(m.transpose()(0, 1) == 3.0);
    const Vec mx = m * Vec{1.0, 1.0};
    CHECK(mx == Vec{3.0, 7.0});
    CHECK_THROWS_AS((Mat{{1, 2}, {3}}), ContractError);
    CHECK_THROWS_AS(solve(Mat{{1, 2}, {2, 4}}, Vec{1.0, 1.0}), SingularInputError);
    const Mat inv = inverse(m);
    CHECK((m * inv - Mat::identity(2)).max_abs() < 1e-14);
}

TEST_CASE("rk4_step examples") {
    const Derivative zero = [](double, const Vec& x) { return Vec(x.size()); };
    CHECK(rk4_step(zero, Vec{1.0}, 0.0, 0.1) == Vec{1.0});

    const Derivative decay = [](double, const Vec& x) { return -1.0 * x; };
    Vec x{1.0};
    for (int k = 0; k < 10; ++k) x = rk4_step(decay, x, 0.1 * k, 0.1);
    CHECK(std::abs(x[0] - 0.367879) < 1e-6);

    const Derivative osc = [](double, const Vec& s) { return Vec{s[1], -s[0]}; };
    Vec y{1.0, 0.0};
    const double h = 0.01;
    const int n = static_cast<int>(std::floor(std::numbers::pi / h));
    for (int k = 0; k < n; ++k) y = rk4_step(osc, y, k * h, h);
    y = rk4_step(osc, y, n * h, std::numbers::pi - n * h);  // land exactly on t = pi
    CHECK(std::abs(y[0] + 1.0) < 1e-6);
    CHECK(std::abs(y[1]) < 1e-6);
}

TEST_CASE("rk4_step rejects bad steps and reports the diverging stage") {
    const Derivative decay = [](double, const Vec& x) { return -1.0 * x; };
    CHECK_THROWS_AS(rk4_step(decay, Vec{1.0}, 0.0, 0.0), ContractError);
    CHECK_THROWS_AS(rk4_step(decay, Vec{1.0}, 0.0, -0.1), ContractError);

    const Derivative nan_first = [](double, const Vec&) { return Vec{std::nan("")}; };
    try {
        (void)rk4_step(nan_first, Vec{1.0}, 2.0, 0.1);
        FAIL("expected divergence");
    } catch (const IntegrationDivergedError& e) {
        CHECK(e.stage() == 1);
        CHECK(e.time() == 2.0);
    }
    // Finite at x = 0, infinite once the stage state moves.
    const Derivative blow = [](double, const Vec& x) { return Vec{x[0] == 0.0 ? 1.0 : HUGE_VAL}; };
    try {
        (void)rk4_step(blow, Vec{0.0}, 0.0, 0.1);
        FAIL("expected divergence");
    } catch (const IntegrationDivergedError& e) {
        CHECK(e.stage() == 2);
    }
}

TEST_CASE("rk4 observed order on exponential decay") {
    const double e1 = decay_error(0.1), e2 = decay_error(0.05), e3 = decay_error(0.025);
    CHECK(std::log2(e1 / e2) >= 3.9);
    CHECK(std::log2(e2 / e3) >= 3.9);
}

TEST_CASE("pinv_full_column_rank examples") {
    const Mat p1 = pinv_full_column_rank(Mat{{0}, {1}});
    CHECK((p1 - Mat{{0, 1}}).max_abs() < 1e-15);
    const Mat p2 = pinv_full_column_rank(Mat{{0}, {0.25}});
    CHECK((p2 - Mat{{0, 4}}).max_abs() < 1e-12);
    CHECK((pinv_full_column_rank(Mat::identity(2)) - Mat::identity(2)).max_abs() < 1e-15);
    CHECK_THROWS_AS(pinv_full_column_rank(Mat{{1, 2}, {2, 4}, {3, 6}}), SingularInputError);
    CHECK_THROWS_AS(pinv_full_column_rank(Mat{{0}, {0}}), SingularInputError);
}

TEST_CASE("pinv satisfies the Moore-Penrose identities") {
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t c = 1 + trial % 3;
        const std::size_t r = c + trial % 4;
        const Mat g = random_mat(rng, r, c);
        const Mat p = pinv_full_column_rank(g);
        const Mat gp = g * p, pg = p * g;
        CHECK((g * p * g - g).max_abs() < 1e-9);
        CHECK((p * g * p - p).max_abs() < 1e-9);
        CHECK((gp - gp.transpose()).max_abs() < 1e-9);
        CHECK((pg - pg.transpose()).max_abs() < 1e-9);
    }
}

TEST_CASE("sym_eig_min examples") {
    CHECK(sym_eig_min(Mat::identity(3)) == doctest::Approx(1.0));
    CHECK(sym_eig_min(Mat::diag(Vec{2.0, 5.0})) == doctest::Approx(2.0));
    CHECK(std::abs(sym_eig_min(Mat{{2, 1}, {1, 2}}) - 1.0) < 1e-12);
    CHECK_THROWS_AS(sym_eig_min(Mat{{1, 2}, {0, 1}}), ContractError);
}

TEST_CASE("Jacobi eigenvalues match characteristic polynomial roots") {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 200; ++trial) {
        const Mat a = random_sym(rng, 2);
        const double mid = 0.5 * (a(0, 0) + a(1, 1));
        const double rad = std::hypot(0.5 * (a(0, 0) - a(1, 1)), a(0, 1));
        const SymEigen e = sym_eig(a);
        CHECK(std::abs(e.values[0] - (mid - rad)) < 1e-10);
        CHECK(std::abs(e.values[1] - (mid + rad)) < 1e-10);
    }
    for (int trial = 0; trial < 200; ++trial) {
        const Mat a = random_sym(rng, 3);
        const auto roots = eig3_closed(a);
        const SymEigen e = sym_eig(a);
        for (int i = 0; i < 3; ++i) CHECK(std::abs(e.values[i] - roots[i]) < 1e-10);
        // Eigenvectors: A V = V diag(lambda), V orthonormal.
        CHECK((a * e.vectors - e.vectors * Mat::diag(e.values)).max_abs() < 1e-10);
        CHECK((e.vectors.transpose() * e.vectors - Mat::identity(3)).max_abs() < 1e-10);
    }
}

TEST_CASE("sym_eig_min is bounded by Rayleigh quotients") {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> n01;
    for (int trial = 0; trial < 20; ++trial) {
        const Mat a = random_sym(rng, 5);
        const double lmin = sym_eig_min(a);
        for (int k = 0; k < 100; ++k) {
            Vec v(5);
            for (std::size_t i = 0; i < 5; ++i) v[i] = n01(rng);
            CHECK(lmin <= v.dot(a * v) / v.dot(v) + 1e-12);
        }
    }
}

TEST_CASE("matrix_rank examples and invariances") {
    CHECK(matrix_rank(Mat(3, 3)) == 0);
    CHECK(matrix_rank(Mat::identity(3)) == 3);
    CHECK(matrix_rank(Mat{{1, 0}, {2, 0}, {3, 0}}) == 1);
    CHECK(matrix_rank(Mat{{1, 0}, {1e-12, 0}}, 1e-9) == 1);

    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> scale(0.5, 4.0);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t rows = 2 + trial % 4, cols = 1 + trial % 4;
        Mat m = random_mat(rng, rows, cols);
        if (trial % 3 == 0)  // make one row dependent
            for (std::size_t c = 0; c < cols; ++c) m(rows - 1, c) = 2.0 * m(0, c);
        const std::size_t base = matrix_rank(m);

        std::vector<std::size_t> perm(rows);
        for (std::size_t i = 0; i < rows; ++i) perm[i] = i;
        std::shuffle(perm.begin(), perm.end(), rng);
        Mat permuted(rows, cols), scaled(rows, cols);
        for (std::size_t i = 0; i < rows; ++i) {
            const double s = (trial % 2 ? -1.0 : 1.0) * scale(rng);
            for (std::size_t c = 0; c < cols; ++c) {
                permuted(i, c) = m(perm[i], c);
                scaled(i, c) = s * m(i, c);
            }
        }
        CHECK(matrix_rank(permuted) == base);
        CHECK(matrix_rank(scaled) == base);
    }
}
