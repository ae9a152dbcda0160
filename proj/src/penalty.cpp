#include "rsadp/penalty.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "rsadp/errors.hpp"

namespace rsadp {

namespace {

constexpr double kSaturationGuard = 1e-9;
constexpr double kAtanhClamp = 1e-12;

double clamped_atanh(double s) {
    s = std::clamp(s, -1.0 + kAtanhClamp, 1.0 - kAtanhClamp);
    return 0.5 * std::log((1.0 + s) / (1.0 - s));
}

// One summand 2 beta R u atanh(u/beta) + beta^2 R log(1 - u^2/beta^2).
double saturated_term(double u, double r, double beta) {
    const double s = u / beta;
    if (std::abs(s) > 1.0 - kSaturationGuard) return 2.0 * beta * beta * r * std::numbers::ln2;
    return 2.0 * beta * r * u * clamped_atanh(s) + beta * beta * r * std::log1p(-s * s);
}

double pair_norm_sq(const Vec& x, std::size_t i, std::size_t j) { return x[i] * x[i] + x[j] * x[j]; }

}  // namespace

InputPenalty InputPenalty::quadratic(Vec r_diag) {
    InputPenalty p;
    p.mode = InputPenaltyMode::quadratic;
    p.r_diag = std::move(r_diag);
    return p;
}

InputPenalty InputPenalty::saturated(Vec r_diag, double beta) {
    InputPenalty p;
    p.mode = InputPenaltyMode::saturated;
    p.r_diag = std::move(r_diag);
    p.beta = beta;
    return p;
}

void InputPenalty::validate() const {
    for (double r : r_diag)
        if (!(r > 0.0)) throw ConfigError("input penalty: R must have positive diagonal entries");
    if (mode == InputPenaltyMode::saturated && !(beta > 0.0))
        throw ConfigError("input penalty: saturation bound beta must be positive");
}

BarrierTerm BarrierTerm::rect(std::size_t index, double alpha) {
    return BarrierTerm{BarrierKind::rect_abs, index, index, alpha};
}

BarrierTerm BarrierTerm::circle(std::size_t i, std::size_t j, double radius) {
    return BarrierTerm{BarrierKind::circle, i, j, radius};
}

BarrierTerm BarrierTerm::ellipse_coupled(std::size_t i, std::size_t j, double radius) {
    return BarrierTerm{BarrierKind::ellipse_coupled, i, j, radius};
}

double BarrierTerm::distance(const Vec& x) const {
    if (std::max(i, j) >= x.size()) throw ContractError("barrier: coordinate index out of range");
    switch (kind) {
        case BarrierKind::rect_abs:
            return bound - std::abs(x[i]);
        case BarrierKind::circle:
        case BarrierKind::ellipse_coupled:
            return bound - std::sqrt(pair_norm_sq(x, i, j));
    }
    return 0.0;
}

double BarrierTerm::value(const Vec& x) const {
    const double b2 = bound * bound;
    double gap = 0.0;
    double numerator = b2;
    switch (kind) {
        case BarrierKind::rect_abs:
            gap = b2 - x[i] * x[i];
            break;
        case BarrierKind::circle:
            gap = b2 - pair_norm_sq(x, i, j);
            break;
        case BarrierKind::ellipse_coupled:
            numerator = b2 - x[j] * x[j];
            gap = numerator - x[i] * x[i];
            break;
    }
    if (!(gap > 0.0) || !(distance(x) > 0.0)) {
        std::ostringstream os;
        os << "state left the barrier region (distance " << distance(x) << ")";
        throw ConstraintViolationError(os.str(), 0);
    }
    return std::log(numerator / gap);
}

void StatePenalty::validate() const {
    if (q.rows() != q.cols()) throw ConfigError("state penalty: Q must be square");
    if (!q.is_symmetric(1e-12)) throw ConfigError("state penalty: Q must be symmetric");
    if (!(sym_eig_min(q) > 0.0)) throw ConfigError("state penalty: Q must be positive definite");
    for (const auto& b : barriers) {
        if (!(b.bound > 0.0)) throw ConfigError("state penalty: barrier bound must be positive");
        if (std::max(b.i, b.j) >= q.rows()) throw ConfigError("state penalty: barrier index out of range");
    }
}

double input_penalty_value(const InputPenalty& p, const Vec& u) {
    if (u.size() != p.r_diag.size()) throw ContractError("input_penalty_value: input dimension mismatch");
    double total = 0.0;
    for (std::size_t j = 0; j < u.size(); ++j) {
        if (p.mode == InputPenaltyMode::quadratic) {
            total += p.r_diag[j] * u[j] * u[j];
            continue;
        }
        if (std::abs(u[j]) > p.beta) {
            std::ostringstream os;
            os << "input " << j << " = " << u[j] << " exceeds saturation bound " << p.beta;
            throw ConstraintViolationError(os.str(), j);
        }
        total += saturated_term(u[j], p.r_diag[j], p.beta);
    }
    return total;
}

double risk_weight(const BarrierTerm& b, const Vec& x) {
    const double d = b.distance(x);
    if (d < 0.0) throw ConstraintViolationError("risk_weight: state outside the barrier region", 0);
    return 1.0 / (1.0 + d * d);
}

StatePenaltyBreakdown state_penalty_breakdown(const StatePenalty& sp, const Vec& x) {
    if (x.size() != sp.q.rows()) throw ContractError("state_penalty_value: state dimension mismatch");
    StatePenaltyBreakdown out;
    out.quadratic = x.dot(sp.q * x);
    out.total = out.quadratic;
    out.barrier.reserve(sp.barriers.size());
    for (std::size_t idx = 0; idx < sp.barriers.size(); ++idx) {
        const BarrierTerm& b = sp.barriers[idx];
        if (!b.contains(x)) {
            std::ostringstream os;
            os << "state penalty: barrier " << idx << " violated (distance " << b.distance(x) << ")";
            throw ConstraintViolationError(os.str(), idx);
        }
        double s = 0.0;
        try {
            s = b.value(x);
        } catch (const ConstraintViolationError& e) {
            throw ConstraintViolationError(e.what(), idx);
        }
        const double term = risk_weight(b, x) * s;
        out.barrier.push_back(term);
        out.total += term;
    }
    return out;
}

double state_penalty_value(const StatePenalty& sp, const Vec& x) { return state_penalty_breakdown(sp, x).total; }

double disturbance_bound_cost(const SystemModel& model, const RobustnessTerms& rt, const Vec& x) {
    const double l = model.l_bound(x);
    const double d = model.d_bound(x);
    return l * l + rt.rho * d * d;
}

UtilityBreakdown utility_breakdown(const StatePenalty& sp, const InputPenalty& ip, const RobustnessTerms& rt,
                                   const SystemModel& model, const Vec& x, const Vec& u, const Vec& v) {
    UtilityBreakdown out;
    out.disturbance_bound = disturbance_bound_cost(model, rt, x);
    out.pseudo_control = v.empty() ? 0.0 : rt.rho * v.dot(v);
    out.input = input_penalty_value(ip, u);
    out.state = state_penalty_breakdown(sp, x);
    out.total = out.disturbance_bound + out.pseudo_control + out.input + out.state.total;
    return out;
}

double utility(const StatePenalty& sp, const InputPenalty& ip, const RobustnessTerms& rt, const SystemModel& model,
               const Vec& x, const Vec& u, const Vec& v) {
    return utility_breakdown(sp, ip, rt, model, x, u, v).total;
}

}  // namespace rsadp
