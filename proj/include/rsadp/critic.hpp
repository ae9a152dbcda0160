#pragma once

// Single-critic value approximation V(x) ~ W' Phi(x) with a polynomial basis,
// the greedy policies derived from its gradient, and the replay-driven
// weight update laws.

#include <span>
#include <string>
#include <vector>

#include "rsadp/numerics.hpp"
#include "rsadp/penalty.hpp"
#include "rsadp/systems.hpp"

namespace rsadp {

/// Monomial basis. Each term is an exponent tuple of length n with total
/// degree >= 2, so Phi(0) = 0 and grad Phi(0) = 0.
class Basis {
public:
    Basis() = default;
    /// Throws ConfigError on ragged terms, negative exponents or degree < 2.
    Basis(std::size_t state_dim, std::vector<std::vector<int>> terms);

    /// [x1^2, x1 x2, x2^2]
    static Basis benchmark2();
    /// [x1^2, x1 x2, x2^2, x2^3, x1 x2^2, x1^2 x2]
    static Basis pendulum6();
    /// All 10 quadratic monomials of a 4-state system, squares first.
    static Basis manipulator10();
    /// Every monomial of total degree 2 in n variables, ordered lexicographically.
    static Basis quadratic(std::size_t state_dim);

    [[nodiscard]] std::size_t state_dim() const noexcept { return n_; }
    [[nodiscard]] std::size_t size() const noexcept { return terms_.size(); }
    [[nodiscard]] const std::vector<std::vector<int>>& terms() const noexcept { return terms_; }

    friend bool operator==(const Basis&, const Basis&) = default;

private:
    std::size_t n_ = 0;
    std::vector<std::vector<int>> terms_;
};

Vec basis_eval(const Basis& b, const Vec& x);
/// N x n Jacobian of Phi.
Mat basis_grad(const Basis& b, const Vec& x);

struct CriticState {
    Basis basis;
    Vec w_hat;
    Mat gamma;          // N x N, symmetric positive definite
    double k_c = 1.0;
    double k_e = 1.0;
    double rho = 1.0;   // pseudo-control weight used by the v-policy

    /// Throws ConfigError on shape mismatch, non-SPD gamma or non-positive gains.
    void validate() const;
};

/// One Bellman regression pair: Theta = r(x, u, v), Y = grad Phi (f + g u + h v).
struct Sample {
    Vec y;
    double theta = 0.0;
};

/// Greedy u from the critic: saturated mode -beta tanh(R^-1 g' grad Phi' W / (2 beta)),
/// quadratic mode -R^-1 g' grad Phi' W / 2.
Vec policy_u(const CriticState& c, const SystemModel& model, const InputPenalty& ip, const Vec& x);
/// Greedy pseudo-control -h' grad Phi' W / (2 rho); empty when the model has no disturbance channel.
Vec policy_v(const CriticState& c, const SystemModel& model, const Vec& x);

/// Everything evaluated at a state under the current greedy policies.
struct GreedyEvaluation {
    Vec u;
    Vec v;
    Vec xdot;          // auxiliary-system derivative under (u, v)
    Sample sample;
    UtilityBreakdown cost;
};

GreedyEvaluation evaluate_greedy(const CriticState& c, const SystemModel& model, const StatePenalty& sp,
                                 const InputPenalty& ip, const RobustnessTerms& rt, const Vec& x);
Sample make_sample(const CriticState& c, const SystemModel& model, const StatePenalty& sp, const InputPenalty& ip,
                   const RobustnessTerms& rt, const Vec& x);

/// Theta + W' Y.
double bellman_error(const CriticState& c, const Sample& s);

/// -Gamma (k_c Y e + k_e sum_l Y_l e_l), residuals against the current weights.
Vec weight_rate_online(const CriticState& c, const Sample& current, std::span<const Sample> buffer);
/// As above with the replay sum averaged over the buffer length.
Vec weight_rate_offline(const CriticState& c, const Sample& current, std::span<const Sample> offline);

/// Forward-Euler step of the online law. Throws LearningDivergedError if the
/// new weights are non-finite or their norm exceeds kWeightNormLimit.
CriticState update_online(const CriticState& c, const Sample& current, std::span<const Sample> buffer, double h);
/// Forward-Euler step of the averaged offline law; `offline` must be non-empty.
CriticState update_offline(const CriticState& c, const Sample& current, std::span<const Sample> offline, double h);

inline constexpr double kWeightNormLimit = 1e6;

/// HJB residual r(x, u, v) + (grad Phi' W)' (f + g u + h v) under the greedy policies.
double hjb_residual(const CriticState& c, const SystemModel& model, const StatePenalty& sp, const InputPenalty& ip,
                    const RobustnessTerms& rt, const Vec& x);

/// 0.5 (W - W*)' Gamma^-1 (W - W*).
double weight_error_energy(const CriticState& c, const Vec& w_star);

}  // namespace rsadp
