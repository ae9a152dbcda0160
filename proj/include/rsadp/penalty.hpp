#pragma once

// Cost terms of the transformed optimal control problem:
//   r(x, u, v) = l_M(x)^2 + rho d_M(x)^2 + rho v'v + W(u) + L(x)
// with W the tanh-integral input penalty (or plain u'Ru) and L a quadratic
// state cost plus distance-weighted log barriers.

#include <cstddef>
#include <vector>

#include "rsadp/numerics.hpp"
#include "rsadp/systems.hpp"

namespace rsadp {

enum class InputPenaltyMode { quadratic, saturated };

struct InputPenalty {
    InputPenaltyMode mode = InputPenaltyMode::quadratic;
    Vec r_diag;        // diagonal of R, all > 0
    double beta = 0.0; // saturation bound, saturated mode only

    static InputPenalty quadratic(Vec r_diag);
    static InputPenalty saturated(Vec r_diag, double beta);

    /// Throws ConfigError if R has a non-positive entry or beta <= 0 in saturated mode.
    void validate() const;
};

enum class BarrierKind {
    rect_abs,        // |x_i| < bound;   S = log(b^2 / (b^2 - x_i^2))
    circle,          // x_i^2 + x_j^2 < bound^2;  S = log(b^2 / (b^2 - x_i^2 - x_j^2))
    ellipse_coupled, // same disk, S = log(a / (a - x_i^2)) with a = b^2 - x_j^2
};

struct BarrierTerm {
    BarrierKind kind = BarrierKind::rect_abs;
    std::size_t i = 0;
    std::size_t j = 0;   // second coordinate for the disk forms
    double bound = 1.0;  // alpha for rect_abs, radius otherwise

    static BarrierTerm rect(std::size_t index, double alpha);
    static BarrierTerm circle(std::size_t i, std::size_t j, double radius);
    static BarrierTerm ellipse_coupled(std::size_t i, std::size_t j, double radius);

    /// Euclidean distance to the boundary; negative outside the region.
    [[nodiscard]] double distance(const Vec& x) const;
    [[nodiscard]] bool contains(const Vec& x) const { return distance(x) > 0.0; }
    /// Barrier value S(x). Throws ConstraintViolationError unless x is strictly inside.
    [[nodiscard]] double value(const Vec& x) const;
};

struct StatePenalty {
    Mat q;
    std::vector<BarrierTerm> barriers;

    /// Q must be symmetric positive definite.
    void validate() const;
};

struct RobustnessTerms {
    double rho = 1.0;
};

struct StatePenaltyBreakdown {
    double quadratic = 0.0;
    std::vector<double> barrier; // k_i S_i(x), in barrier order
    double total = 0.0;
};

struct UtilityBreakdown {
    double disturbance_bound = 0.0; // l_M^2 + rho d_M^2
    double pseudo_control = 0.0;    // rho v'v
    double input = 0.0;             // W(u)
    StatePenaltyBreakdown state;    // L(x)
    double total = 0.0;
};

/// Input penalty W(u). Saturated mode throws ConstraintViolationError
/// (index = channel) when |u_j| > beta.
double input_penalty_value(const InputPenalty& p, const Vec& u);

/// k = 1 / (1 + d^2) with d the distance to the barrier boundary.
double risk_weight(const BarrierTerm& b, const Vec& x);

StatePenaltyBreakdown state_penalty_breakdown(const StatePenalty& sp, const Vec& x);
double state_penalty_value(const StatePenalty& sp, const Vec& x);

/// l_M^2 + rho d_M^2.
double disturbance_bound_cost(const SystemModel& model, const RobustnessTerms& rt, const Vec& x);

UtilityBreakdown utility_breakdown(const StatePenalty& sp, const InputPenalty& ip, const RobustnessTerms& rt,
                                   const SystemModel& model, const Vec& x, const Vec& u, const Vec& v);
double utility(const StatePenalty& sp, const InputPenalty& ip, const RobustnessTerms& rt, const SystemModel& model,
               const Vec& x, const Vec& u, const Vec& v);

}  // namespace rsadp
