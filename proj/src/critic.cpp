#include "rsadp/critic.hpp"

#include <cmath>
#include <numeric>
#include <sstream>

#include "rsadp/errors.hpp"

namespace rsadp {

namespace {

double ipow(double x, int e) {
    double r = 1.0;
    for (int k = 0; k < e; ++k) r *= x;
    return r;
}

Vec grad_value(const CriticState& c, const Vec& x) { return basis_grad(c.basis, x).transpose() * c.w_hat; }

void require_sample(const CriticState& c, const Sample& s) {
    if (s.y.size() != c.w_hat.size()) throw ContractError("sample regressor length does not match the basis");
}

Vec weight_rate(const CriticState& c, const Sample& current, std::span<const Sample> buffer, double buffer_scale) {
    require_sample(c, current);
    Vec acc = (c.k_c * bellman_error(c, current)) * current.y;
    Vec replay(c.w_hat.size());
    for (const Sample& s : buffer) {
        require_sample(c, s);
        replay += bellman_error(c, s) * s.y;
    }
    acc += (c.k_e * buffer_scale) * replay;
    return -(c.gamma * acc);
}

CriticState euler_step(const CriticState& c, const Vec& rate, double h) {
    if (!(h > 0.0)) throw ContractError("weight update: step size must be positive");
    CriticState next = c;
    next.w_hat += h * rate;
    if (!next.w_hat.all_finite() || next.w_hat.norm() > kWeightNormLimit) {
        std::ostringstream os;
        os << "critic weights diverged (norm " << next.w_hat.norm() << ")";
        throw LearningDivergedError(os.str());
    }
    return next;
}

}  // namespace

Basis::Basis(std::size_t state_dim, std::vector<std::vector<int>> terms) : n_(state_dim), terms_(std::move(terms)) {
    if (terms_.empty()) throw ConfigError("basis: no terms");
    for (const auto& t : terms_) {
        if (t.size() != n_) throw ConfigError("basis: exponent tuple length differs from state dimension");
        int degree = 0;
        for (int e : t) {
            if (e < 0) throw ConfigError("basis: negative exponent");
            degree += e;
        }
        if (degree < 2) throw ConfigError("basis: every term needs total degree >= 2");
    }
}

Basis Basis::benchmark2() { return Basis(2, {{2, 0}, {1, 1}, {0, 2}}); }

Basis Basis::pendulum6() { return Basis(2, {{2, 0}, {1, 1}, {0, 2}, {0, 3}, {1, 2}, {2, 1}}); }

Basis Basis::manipulator10() {
    return Basis(4, {{2, 0, 0, 0},
                     {0, 2, 0, 0},
                     {0, 0, 2, 0},
                     {0, 0, 0, 2},
                     {1, 1, 0, 0},
                     {1, 0, 1, 0},
                     {1, 0, 0, 1},
                     {0, 1, 1, 0},
                     {0, 1, 0, 1},
                     {0, 0, 1, 1}});
}

Basis Basis::quadratic(std::size_t state_dim) {
    std::vector<std::vector<int>> terms;
    for (std::size_t i = 0; i < state_dim; ++i)
        for (std::size_t j = i; j < state_dim; ++j) {
            std::vector<int> t(state_dim, 0);
            t[i] += 1;
            t[j] += 1;
            terms.push_back(std::move(t));
        }
    return Basis(state_dim, std::move(terms));
}

Vec basis_eval(const Basis& b, const Vec& x) {
    if (x.size() != b.state_dim()) throw ContractError("basis_eval: state dimension mismatch");
    Vec phi(b.size());
    for (std::size_t t = 0; t < b.size(); ++t) {
        double v = 1.0;
        for (std::size_t k = 0; k < x.size(); ++k) v *= ipow(x[k], b.terms()[t][k]);
        phi[t] = v;
    }
    return phi;
}

Mat basis_grad(const Basis& b, const Vec& x) {
    if (x.size() != b.state_dim()) throw ContractError("basis_grad: state dimension mismatch");
    Mat d(b.size(), x.size());
    for (std::size_t t = 0; t < b.size(); ++t) {
        const auto& e = b.terms()[t];
        for (std::size_t k = 0; k < x.size(); ++k) {
            if (e[k] == 0) continue;
            double v = e[k] * ipow(x[k], e[k] - 1);
            for (std::size_t o = 0; o < x.size(); ++o)
                if (o != k) v *= ipow(x[o], e[o]);
            d(t, k) = v;
        }
    }
    return d;
}

void CriticState::validate() const {
    const std::size_t n = basis.size();
    if (w_hat.size() != n) throw ConfigError("critic: initial weight length differs from basis size");
    if (gamma.rows() != n || gamma.cols() != n) throw ConfigError("critic: gamma must be N x N");
    if (!gamma.is_symmetric(1e-12) || !(sym_eig_min(gamma) > 0.0))
        throw ConfigError("critic: gamma must be symmetric positive definite");
    if (!(k_c > 0.0) || !(k_e > 0.0)) throw ConfigError("critic: k_c and k_e must be positive");
    if (!(rho > 0.0)) throw ConfigError("critic: rho must be positive");
    if (!w_hat.all_finite()) throw ConfigError("critic: initial weights must be finite");
}

Vec policy_u(const CriticState& c, const SystemModel& model, const InputPenalty& ip, const Vec& x) {
    const Vec gv = grad_value(c, x);
    const Vec proj = model.input_map(x).transpose() * gv;  // g' grad V
    if (proj.size() != ip.r_diag.size()) throw ContractError("policy_u: input dimension mismatch");
    Vec u(proj.size());
    for (std::size_t j = 0; j < u.size(); ++j) {
        const double z = proj[j] / ip.r_diag[j];
        u[j] = ip.mode == InputPenaltyMode::saturated ? -ip.beta * std::tanh(z / (2.0 * ip.beta)) : -0.5 * z;
    }
    return u;
}

Vec policy_v(const CriticState& c, const SystemModel& model, const Vec& x) {
    if (model.disturbance_dim == 0) return Vec{};
    const Vec gv = grad_value(c, x);
    return (-1.0 / (2.0 * c.rho)) * (unmatched_map(model, x).transpose() * gv);
}

GreedyEvaluation evaluate_greedy(const CriticState& c, const SystemModel& model, const StatePenalty& sp,
                                 const InputPenalty& ip, const RobustnessTerms& rt, const Vec& x) {
    GreedyEvaluation ev;
    ev.u = policy_u(c, model, ip, x);
    ev.v = policy_v(c, model, x);
    ev.xdot = auxiliary_deriv(model, x, ev.u, ev.v);
    ev.cost = utility_breakdown(sp, ip, rt, model, x, ev.u, ev.v);
    ev.sample.y = basis_grad(c.basis, x) * ev.xdot;
    ev.sample.theta = ev.cost.total;
    return ev;
}

Sample make_sample(const CriticState& c, const SystemModel& model, const StatePenalty& sp, const InputPenalty& ip,
                   const RobustnessTerms& rt, const Vec& x) {
    return evaluate_greedy(c, model, sp, ip, rt, x).sample;
}

double bellman_error(const CriticState& c, const Sample& s) {
    require_sample(c, s);
    return s.theta + c.w_hat.dot(s.y);
}

Vec weight_rate_online(const CriticState& c, const Sample& current, std::span<const Sample> buffer) {
    return weight_rate(c, current, buffer, 1.0);
}

Vec weight_rate_offline(const CriticState& c, const Sample& current, std::span<const Sample> offline) {
    if (offline.empty()) throw ContractError("weight_rate_offline: offline buffer is empty");
    return weight_rate(c, current, offline, 1.0 / static_cast<double>(offline.size()));
}

CriticState update_online(const CriticState& c, const Sample& current, std::span<const Sample> buffer, double h) {
    return euler_step(c, weight_rate_online(c, current, buffer), h);
}

CriticState update_offline(const CriticState& c, const Sample& current, std::span<const Sample> offline, double h) {
    return euler_step(c, weight_rate_offline(c, current, offline), h);
}

double hjb_residual(const CriticState& c, const SystemModel& model, const StatePenalty& sp, const InputPenalty& ip,
                    const RobustnessTerms& rt, const Vec& x) {
    const GreedyEvaluation ev = evaluate_greedy(c, model, sp, ip, rt, x);
    return ev.cost.total + grad_value(c, x).dot(ev.xdot);
}

double weight_error_energy(const CriticState& c, const Vec& w_star) {
    const Vec err = c.w_hat - w_star;
    return 0.5 * err.dot(solve(c.gamma, err));
}

}  // namespace rsadp
