#include "rsadp/systems.hpp"

#include <cmath>
#include <random>
#include <sstream>

#include "rsadp/errors.hpp"

namespace rsadp {

namespace {

void check_dims(const SystemModel& model, const Vec& x, const Vec& u, std::size_t r_expected, std::size_t r_given,
                const char* op) {
    if (x.size() != model.state_dim || u.size() != model.input_dim || r_given != r_expected) {
        std::ostringstream os;
        os << op << ": dimension mismatch for model '" << model.name << "' (x " << x.size() << "/" << model.state_dim
           << ", u " << u.size() << "/" << model.input_dim << ", disturbance " << r_given << "/" << r_expected << ")";
        throw ContractError(os.str());
    }
}

SystemModel make_benchmark() {
    SystemModel m;
    m.name = "benchmark2";
    m.state_dim = 2;
    m.input_dim = 1;
    m.disturbance_dim = 0;
    m.drift = [](const Vec& x) {
        const double c = std::cos(2.0 * x[0]) + 2.0;
        return Vec{-x[0] + x[1], -0.5 * x[0] - 0.5 * x[1] * (1.0 - c * c)};
    };
    m.input_map = [](const Vec& x) { return Mat{{0.0}, {std::cos(2.0 * x[0]) + 2.0}}; };
    m.disturbance_map = [](const Vec&) { return Mat(2, 0); };
    m.disturbance = [](const Vec&, const DisturbanceParams&) { return Vec{}; };
    m.d_bound = [](const Vec&) { return 0.0; };
    m.l_bound = [](const Vec&) { return 0.0; };
    return m;
}

SystemModel make_pendulum() {
    SystemModel m;
    m.name = "pendulum";
    m.state_dim = 2;
    m.input_dim = 1;
    m.disturbance_dim = 1;
    m.drift = [](const Vec& x) { return Vec{x[1], -4.9 * std::sin(x[0]) - 0.2 * x[1]}; };
    m.input_map = [](const Vec&) { return Mat{{0.0}, {0.25}}; };
    m.disturbance_map = [](const Vec&) { return Mat{{1.0}, {-0.2}}; };
    // d(x) = w1 x1 sin(w2 x2)
    m.disturbance = [](const Vec& x, const DisturbanceParams& p) {
        return Vec{p.values.at(0) * x[0] * std::sin(p.values.at(1) * x[1])};
    };
    m.d_bound = [](const Vec& x) { return std::sqrt(2.0) / 2.0 * x.norm(); };
    m.l_bound = [](const Vec& x) { return 0.4 * std::sqrt(2.0) * x.norm(); };
    const double half_sqrt2 = std::sqrt(2.0) / 2.0;
    m.disturbance_ranges = {{"omega1", -half_sqrt2, half_sqrt2}, {"omega2", -2.0, 2.0}};
    return m;
}

// x = [q1, q2, dq1, dq2];  M(q) ddq + C(q, dq) dq = tau.
SystemModel make_manipulator(const ManipulatorInertia& in) {
    auto inertia_inverse = [in](const Vec& x) {
        const double c2 = std::cos(x[1]);
        const double m11 = in.p1 + 2.0 * in.p3 * c2;
        const double m12 = in.p2 + in.p3 * c2;
        const double m22 = in.p2;
        const double det = m11 * m22 - m12 * m12;
        if (!(std::abs(det) > 1e-12)) throw SingularInputError("manipulator: inertia matrix is singular");
        return Mat{{m22 / det, -m12 / det}, {-m12 / det, m11 / det}};
    };

    SystemModel m;
    m.name = "manipulator2dof";
    m.state_dim = 4;
    m.input_dim = 2;
    m.disturbance_dim = 2;
    m.drift = [in, inertia_inverse](const Vec& x) {
        const double s2 = std::sin(x[1]);
        const Mat coriolis{{-in.p3 * x[3] * s2, -in.p3 * (x[2] + x[3]) * s2}, {in.p3 * x[2] * s2, 0.0}};
        const Vec acc = inertia_inverse(x) * (-(coriolis * Vec{x[2], x[3]}));
        return Vec{x[2], x[3], acc[0], acc[1]};
    };
    m.input_map = [inertia_inverse](const Vec& x) {
        const Mat minv = inertia_inverse(x);
        Mat g(4, 2);
        for (std::size_t r = 0; r < 2; ++r)
            for (std::size_t c = 0; c < 2; ++c) g(2 + r, c) = minv(r, c);
        return g;
    };
    m.disturbance_map = [](const Vec&) { return Mat{{1.0, 0.0}, {0.0, 1.0}, {0.0, 0.0}, {0.0, 0.0}}; };
    m.disturbance = [](const Vec& x, const DisturbanceParams& p) {
        return Vec{p.values.at(0) * x[0] * std::sin(x[1]), p.values.at(1) * x[1] * std::cos(x[0])};
    };
    m.d_bound = [](const Vec& x) { return x.norm(); };
    m.l_bound = [](const Vec&) { return 0.0; };
    m.disturbance_ranges = {{"delta1", -1.0, 1.0}, {"delta2", -1.0, 1.0}};
    return m;
}

}  // namespace

SystemModel builtin(std::string_view name, const ModelOptions& options) {
    if (name == "benchmark2") return make_benchmark();
    if (name == "pendulum") return make_pendulum();
    if (name == "manipulator2dof") return make_manipulator(options.inertia);
    throw NotFoundError("unknown model '" + std::string(name) + "'");
}

std::vector<std::string> builtin_names() { return {"benchmark2", "pendulum", "manipulator2dof"}; }

DisturbanceParams sample_disturbance(const SystemModel& model, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    DisturbanceParams p;
    p.seed = seed;
    for (const auto& range : model.disturbance_ranges) {
        std::uniform_real_distribution<double> dist(range.lower, range.upper);
        p.values.push_back(dist(rng));
    }
    return p;
}

Mat unmatched_map(const SystemModel& model, const Vec& x) {
    const Mat g = model.input_map(x);
    const Mat k = model.disturbance_map(x);
    if (k.cols() == 0) return Mat(model.state_dim, 0);
    const Mat projector = Mat::identity(model.state_dim) - g * pinv_full_column_rank(g);
    return projector * k;
}

Vec auxiliary_deriv(const SystemModel& model, const Vec& x, const Vec& u, const Vec& v) {
    check_dims(model, x, u, model.disturbance_dim, v.size(), "auxiliary_deriv");
    Vec dx = model.drift(x) + model.input_map(x) * u;
    if (!v.empty()) dx += unmatched_map(model, x) * v;
    return dx;
}

Vec true_deriv(const SystemModel& model, const Vec& x, const Vec& u, const DisturbanceParams& params) {
    check_dims(model, x, u, model.disturbance_dim, model.disturbance_dim, "true_deriv");
    Vec dx = model.drift(x) + model.input_map(x) * u;
    if (model.disturbance_dim > 0) dx += model.disturbance_map(x) * model.disturbance(x, params);
    return dx;
}

}  // namespace rsadp
