#pragma once

// Control-affine plants  x' = f(x) + g(x) u + k(x) d(x)  and their
// disturbance-free auxiliary form  x' = f(x) + g(x) u + h(x) v.

#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "rsadp/numerics.hpp"

namespace rsadp {

/// Closed sampling interval for one disturbance parameter.
struct ParamRange {
    std::string name;
    double lower = 0.0;
    double upper = 0.0;
};

/// Frozen realization of a model's disturbance parameters.
struct DisturbanceParams {
    std::vector<double> values;
    std::uint64_t seed = 0;
};

struct SystemModel {
    std::string name;
    std::size_t state_dim = 0;
    std::size_t input_dim = 0;
    std::size_t disturbance_dim = 0;

    std::function<Vec(const Vec&)> drift;            // f(x), length n
    std::function<Mat(const Vec&)> input_map;        // g(x), n x m
    std::function<Mat(const Vec&)> disturbance_map;  // k(x), n x r
    std::function<Vec(const Vec&, const DisturbanceParams&)> disturbance;  // d(x), length r
    std::function<double(const Vec&)> d_bound;       // ||d(x)|| <= d_M(x)
    std::function<double(const Vec&)> l_bound;       // ||g^+ k d|| <= l_M(x)

    std::vector<ParamRange> disturbance_ranges;
};

/// Two-link arm inertia constants. The defaults are a common benchmark set,
/// not values taken from any particular experiment.
struct ManipulatorInertia {
    double p1 = 3.473;
    double p2 = 0.196;
    double p3 = 0.242;
};

struct ModelOptions {
    ManipulatorInertia inertia;
};

/// Built-in instances: "benchmark2", "pendulum", "manipulator2dof".
/// Throws NotFoundError for anything else.
SystemModel builtin(std::string_view name, const ModelOptions& options = {});
std::vector<std::string> builtin_names();

/// Uniform draw of every parameter inside its declared range.
DisturbanceParams sample_disturbance(const SystemModel& model, std::uint64_t seed);

/// h(x) = (I - g g^+) k, the part of k(x) outside the span of g(x).
Mat unmatched_map(const SystemModel& model, const Vec& x);

/// f + g u + h v. `v` must have the model's disturbance dimension.
Vec auxiliary_deriv(const SystemModel& model, const Vec& x, const Vec& u, const Vec& v);

/// f + g u + k d, with d evaluated at the frozen parameters.
Vec true_deriv(const SystemModel& model, const Vec& x, const Vec& u, const DisturbanceParams& params);

}  // namespace rsadp
