#include "rsadp/sim.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <limits>
#include <mutex>
#include <ostream>
#include <random>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "rsadp/errors.hpp"

namespace rsadp {

namespace {

std::string step_prefix(std::size_t step, double t) {
    std::ostringstream os;
    os << "step " << step << " (t=" << t << "s): ";
    return os.str();
}

std::size_t step_count(const EpisodeConfig& cfg) {
    return static_cast<std::size_t>(std::llround(cfg.duration / cfg.h));
}

}  // namespace

// ---------------------------------------------------------------------------
// Configuration

CriticState EpisodeConfig::make_critic() const {
    CriticState c;
    c.basis = basis;
    c.w_hat = w0.empty() ? Vec(basis.size()) : w0;
    c.gamma = gamma.rows() == 0 ? Mat::identity(basis.size()) : gamma;
    c.k_c = k_c;
    c.k_e = k_e;
    c.rho = rho;
    return c;
}

void EpisodeConfig::validate() const {
    const SystemModel m = make_model();
    if (!(h > 0.0)) throw ConfigError("episode: step size h must be positive");
    if (!(duration > 0.0)) throw ConfigError("episode: duration must be positive");
    if (x0.size() != m.state_dim) throw ConfigError("episode: x0 length differs from the model state dimension");
    if (!x0.all_finite()) throw ConfigError("episode: x0 must be finite");
    if (basis.state_dim() != m.state_dim) throw ConfigError("episode: basis state dimension differs from the model");
    if (input.r_diag.size() != m.input_dim) throw ConfigError("episode: R size differs from the model input dimension");
    if (state.q.rows() != m.state_dim) throw ConfigError("episode: Q size differs from the model state dimension");
    if (!(rho > 0.0)) throw ConfigError("episode: rho must be positive");
    if (log_stride == 0) throw ConfigError("episode: log_stride must be positive");
    input.validate();
    state.validate();
    make_critic().validate();

    if (buffer == BufferKind::online) {
        if (capacity == 0) throw ConfigError("episode: buffer capacity must be positive");
        if (!(xi > 0.0)) throw ConfigError("episode: xi must be positive");
        if (check_interval == 0) throw ConfigError("episode: check_interval must be positive");
    } else {
        grid.validate(m.state_dim);
    }

    for (std::size_t i = 0; i < state.barriers.size(); ++i)
        if (!state.barriers[i].contains(x0))
            throw ConfigError("episode: x0 is not strictly inside barrier " + std::to_string(i));
    for (std::size_t i = 0; i < monitors.size(); ++i) {
        if (std::max(monitors[i].i, monitors[i].j) >= m.state_dim)
            throw ConfigError("episode: monitor index out of range");
        if (!monitors[i].contains(x0))
            throw ConfigError("episode: x0 is not strictly inside monitor " + std::to_string(i));
    }
    if (input_limit < 0.0) throw ConfigError("episode: input_limit must be non-negative");
}

// ---------------------------------------------------------------------------
// Episode engine

double equivalence_margin(const StatePenalty& sp, const RobustnessTerms& rt, const CriticState& c,
                          const SystemModel& model, const Vec& x) {
    const Vec v = policy_v(c, model, x);
    return state_penalty_value(sp, x) - 2.0 * rt.rho * (v.empty() ? 0.0 : v.dot(v));
}

std::vector<Vec> weight_trace(const TrajectoryLog& log) {
    std::vector<Vec> out;
    out.reserve(log.steps.size());
    for (const auto& s : log.steps) out.push_back(s.w);
    return out;
}

TrajectoryLog run_episode(const EpisodeConfig& cfg) {
    cfg.validate();
    const auto wall_start = std::chrono::steady_clock::now();

    const SystemModel model = cfg.make_model();
    const RobustnessTerms rt = cfg.robustness();
    CriticState critic = cfg.make_critic();
    const std::size_t n_steps = step_count(cfg);

    DisturbanceParams params;
    std::mt19937_64 resample_rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);
    if (cfg.plant == PlantMode::disturbed) params = sample_disturbance(model, cfg.seed);

    OnlineBuffer online;
    OfflineBuffer offline;
    if (cfg.buffer == BufferKind::online)
        online = OnlineBuffer(cfg.capacity, critic.basis.size());
    else
        offline = build_offline(cfg.grid, model, critic.basis, cfg.state, rt);

    ConvergenceDetector detector(cfg.xi, cfg.check_interval, critic.w_hat);
    std::optional<double> converged_since;

    TrajectoryLog log;
    log.config_name = cfg.name;
    log.state_dim = model.state_dim;
    log.input_dim = model.input_dim;
    log.disturbance_dim = model.disturbance_dim;
    log.basis_size = critic.basis.size();
    log.margin_count = cfg.state.barriers.size() + cfg.monitors.size();
    log.steps.reserve(n_steps / cfg.log_stride + 2);

    EpisodeSummary& sum = log.summary;
    sum.min_equivalence_margin = std::numeric_limits<double>::infinity();

    std::vector<Sample> assembled;
    std::vector<Vec> record_states;  // parallel to the online records
    Vec x = cfg.x0;

    for (std::size_t k = 0; k <= n_steps; ++k) {
        const double t = static_cast<double>(k) * cfg.h;
        const bool last = k == n_steps;

        GreedyEvaluation ev;
        try {
            ev = evaluate_greedy(critic, model, cfg.state, cfg.input, rt, x);
        } catch (const ConstraintViolationError& e) {
            throw ConstraintViolationError(step_prefix(k, t) + e.what(), e.index(), static_cast<long>(k));
        }

        // Replay bookkeeping and the weight step (skipped on the terminal record).
        CriticState next = critic;
        double lambda = 0.0;
        if (cfg.buffer == BufferKind::online) {
            if (!last) {
                const InsertReport rep = online.insert(ev.sample, detector.converged());
                if (rep.accepted) {
                    if (*rep.slot == record_states.size())
                        record_states.push_back(x);
                    else
                        record_states[*rep.slot] = x;
                }
            }
            if (cfg.refresh_replay) {
                assembled.clear();
                for (const Vec& xs : record_states)
                    assembled.push_back(make_sample(critic, model, cfg.state, cfg.input, rt, xs));
            }
            lambda = online.min_eig();
        } else {
            assembled = assemble_all(offline, critic, cfg.input, rt);
            lambda = gram_min_eig(assembled, 1.0 / static_cast<double>(assembled.size()));
        }
        if (!last) {
            try {
                if (cfg.buffer == BufferKind::offline)
                    next = update_offline(critic, ev.sample, assembled, cfg.h);
                else if (cfg.refresh_replay)
                    next = update_online(critic, ev.sample, assembled, cfg.h);
                else
                    next = update_online(critic, ev.sample, online.records(), cfg.h);
            } catch (const LearningDivergedError& e) {
                throw LearningDivergedError(step_prefix(k, t) + e.what(), static_cast<long>(k));
            }
        }

        // Monitors.
        StepRecord rec;
        rec.margins.reserve(log.margin_count);
        for (const auto& b : cfg.state.barriers) rec.margins.push_back(b.distance(x));
        bool outside = false;
        for (const auto& b : cfg.monitors) {
            const double d = b.distance(x);
            rec.margins.push_back(d);
            outside = outside || !(d > 0.0);
        }
        if (outside) ++sum.violations;
        for (double uj : ev.u) sum.max_abs_input = std::max(sum.max_abs_input, std::abs(uj));
        if (cfg.input_limit > 0.0 && ev.u.norm_inf() > cfg.input_limit) ++sum.input_violations;

        const double vv = ev.v.empty() ? 0.0 : ev.v.dot(ev.v);
        rec.equivalence_margin = ev.cost.state.total - 2.0 * rt.rho * vv;
        if (x.norm() > 1e-9) {
            sum.min_equivalence_margin = std::min(sum.min_equivalence_margin, rec.equivalence_margin);
            if (!(rec.equivalence_margin > 0.0)) ++sum.equivalence_warnings;
        }

        if (k % cfg.log_stride == 0 || last) {
            rec.t = t;
            rec.x = x;
            rec.u = ev.u;
            rec.v = ev.v;
            rec.w = critic.w_hat;
            rec.bellman_error = bellman_error(critic, ev.sample);
            rec.gram_min_eig = lambda;
            rec.cost = ev.cost;
            rec.buffer_mode = cfg.buffer == BufferKind::online ? online.mode() : BufferMode::sequential;
            rec.converged = detector.converged();
            log.steps.push_back(std::move(rec));
        }

        if (last) {
            sum.min_gram_eig = lambda;
            sum.final_rank_ok = cfg.buffer == BufferKind::online
                                    ? online.rank_ok()
                                    : matrix_rank(stack_regressors(assembled)) == critic.basis.size();
            break;
        }

        // Plant step under zero-order hold.
        if (cfg.plant == PlantMode::disturbed && cfg.resample_disturbance && k > 0)
            params = sample_disturbance(model, resample_rng());
        Derivative deriv;
        if (cfg.plant == PlantMode::auxiliary) {
            deriv = [&](double, const Vec& xs) { return auxiliary_deriv(model, xs, ev.u, ev.v); };
        } else {
            deriv = [&](double, const Vec& xs) { return true_deriv(model, xs, ev.u, params); };
        }
        x = rk4_step(deriv, x, t, cfg.h);
        critic = std::move(next);

        const bool was = detector.converged();
        const bool now = detector.check(critic.w_hat);
        if (now && !was) converged_since = t + cfg.h;
        if (!now) converged_since.reset();
    }

    if (!std::isfinite(sum.min_equivalence_margin)) sum.min_equivalence_margin = 0.0;
    sum.final_weights = critic.w_hat;
    sum.final_state = x;
    sum.convergence_time = converged_since;
    sum.steps = n_steps;
    sum.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - wall_start).count();
    return log;
}

std::vector<SweepResult> sweep_initial_states(const EpisodeConfig& cfg, const std::vector<Vec>& starts,
                                              std::size_t workers) {
    std::vector<SweepResult> results(starts.size());
    std::atomic<std::size_t> next{0};

    auto work = [&]() {
        for (std::size_t i = next++; i < starts.size(); i = next++) {
            SweepResult& r = results[i];
            r.x0 = starts[i];
            EpisodeConfig c = cfg;
            c.x0 = starts[i];
            try {
                r.log = run_episode(c);
            } catch (const ConstraintViolationError& e) {
                r.error = e.what();
                r.error_kind = "constraint";
            } catch (const LearningDivergedError& e) {
                r.error = e.what();
                r.error_kind = "divergence";
            } catch (const IntegrationDivergedError& e) {
                r.error = e.what();
                r.error_kind = "divergence";
            } catch (const ConfigError& e) {
                r.error = e.what();
                r.error_kind = "config";
            } catch (const std::exception& e) {
                r.error = e.what();
                r.error_kind = "other";
            }
        }
    };

    const std::size_t n_threads = std::clamp<std::size_t>(workers, 1, std::max<std::size_t>(starts.size(), 1));
    if (n_threads == 1) {
        work();
        return results;
    }
    std::vector<std::thread> pool;
    pool.reserve(n_threads);
    for (std::size_t i = 0; i < n_threads; ++i) pool.emplace_back(work);
    for (auto& th : pool) th.join();
    return results;
}

// ---------------------------------------------------------------------------
// Presets

namespace {

EpisodeConfig example1_base() {
    EpisodeConfig c;
    c.model = "benchmark2";
    c.input = InputPenalty::quadratic(Vec{1.0});
    c.state.q = Mat::identity(2);
    c.rho = 1.0;
    c.basis = Basis::benchmark2();
    c.k_c = 1.0;
    c.k_e = 1.0;
    c.x0 = Vec{1.0, 1.0};
    c.w0 = Vec(3, 1.0);
    c.h = 1e-3;
    c.duration = 10.0;
    c.plant = PlantMode::auxiliary;
    return c;
}

EpisodeConfig pendulum_base() {
    EpisodeConfig c;
    c.model = "pendulum";
    c.state.q = Mat::identity(2);
    c.rho = 0.1;
    c.basis = Basis::pendulum6();
    c.gamma = Mat::identity(6);
    c.k_c = 0.01;
    c.k_e = 0.001;
    c.w0 = Vec(6, 1.0);
    c.buffer = BufferKind::online;
    c.capacity = 9;
    c.xi = 1e-3;
    c.x0 = Vec{2.0, -2.0};
    c.h = 1e-3;
    c.duration = 40.0;
    c.plant = PlantMode::disturbed;
    c.monitors = {BarrierTerm::rect(0, 2.01), BarrierTerm::rect(1, 4.0)};
    c.input_limit = 1.5;
    return c;
}

}  // namespace

EpisodeConfig preset(std::string_view name) {
    if (name == "example1_online") {
        EpisodeConfig c = example1_base();
        c.name = "example1_online";
        c.description = "benchmark regulation, online prioritized replay (P=5)";
        c.gamma = Mat::diag(Vec{2.0, 1.4, 1.0});
        c.buffer = BufferKind::online;
        c.capacity = 5;
        c.xi = 1e-3;
        return c;
    }
    if (name == "example1_offline") {
        EpisodeConfig c = example1_base();
        c.name = "example1_offline";
        c.description = "benchmark regulation, offline 10x10 grid buffer (P=100)";
        c.gamma = Mat::diag(Vec{5.0, 0.5, 0.01});
        c.buffer = BufferKind::offline;
        c.grid.lower = Vec{-2.0, -4.0};
        c.grid.upper = Vec{2.0, 4.0};
        c.grid.counts = {10, 10};
        return c;
    }
    if (name == "pendulum_crsp") {
        EpisodeConfig c = pendulum_base();
        c.name = "pendulum_crsp";
        c.description = "pendulum with |u|<=1.5, |x1|<2.01, |x2|<4 under disturbance";
        c.input = InputPenalty::saturated(Vec{1.0}, 1.5);
        c.state.barriers = {BarrierTerm::rect(0, 2.01), BarrierTerm::rect(1, 4.0)};
        return c;
    }
    if (name == "pendulum_rop") {
        EpisodeConfig c = pendulum_base();
        c.name = "pendulum_rop";
        c.description = "pendulum robust regulation with quadratic cost, constraints only monitored";
        c.input = InputPenalty::quadratic(Vec{1.0});
        return c;
    }
    if (name == "manipulator_crsp") {
        EpisodeConfig c;
        c.name = "manipulator_crsp";
        c.description = "2-DoF arm with |u_j|<=3 and q1^2+q2^2<1 under disturbance";
        c.model = "manipulator2dof";
        c.input = InputPenalty::saturated(Vec{1.0, 1.0}, 3.0);
        c.state.q = Mat::identity(4);
        c.state.barriers = {BarrierTerm::circle(0, 1, 1.0)};
        c.rho = 0.1;
        c.basis = Basis::manipulator10();
        c.gamma = Mat::identity(10);
        c.k_c = 0.01;
        c.k_e = 0.001;
        c.w0 = Vec(10, 1.0);
        c.buffer = BufferKind::online;
        c.capacity = 15;
        c.xi = 1e-3;
        c.x0 = Vec{0.9, 0.0, 0.0, 0.0};
        c.h = 1e-3;
        c.duration = 30.0;
        c.plant = PlantMode::disturbed;
        c.monitors = {BarrierTerm::circle(0, 1, 1.0)};
        c.input_limit = 3.0;
        return c;
    }
    throw NotFoundError("unknown preset '" + std::string(name) + "'");
}

std::vector<std::string> preset_names() {
    return {"example1_online", "example1_offline", "pendulum_crsp", "pendulum_rop", "manipulator_crsp"};
}

// ---------------------------------------------------------------------------
// Output

std::vector<std::string> csv_header(const TrajectoryLog& log) {
    std::vector<std::string> h{"t"};
    auto add = [&](const char* prefix, std::size_t count) {
        for (std::size_t i = 1; i <= count; ++i) h.push_back(prefix + std::to_string(i));
    };
    add("x", log.state_dim);
    add("u", log.input_dim);
    add("v", log.disturbance_dim);
    add("w", log.basis_size);
    h.emplace_back("bellman_error");
    h.emplace_back("gram_min_eig");
    add("margin", log.margin_count);
    for (const char* c : {"equivalence_margin", "cost_disturbance", "cost_pseudo", "cost_input", "cost_state",
                          "cost_total", "buffer_mode", "converged"})
        h.emplace_back(c);
    return h;
}

void write_csv(std::ostream& os, const TrajectoryLog& log) {
    const auto header = csv_header(log);
    for (std::size_t i = 0; i < header.size(); ++i) os << (i ? "," : "") << header[i];
    os << '\n';
    os << std::setprecision(10);
    for (const auto& s : log.steps) {
        os << s.t;
        auto put_vec = [&](const Vec& v, std::size_t expected) {
            for (std::size_t i = 0; i < expected; ++i) os << ',' << (i < v.size() ? v[i] : 0.0);
        };
        put_vec(s.x, log.state_dim);
        put_vec(s.u, log.input_dim);
        put_vec(s.v, log.disturbance_dim);
        put_vec(s.w, log.basis_size);
        os << ',' << s.bellman_error << ',' << s.gram_min_eig;
        for (double m : s.margins) os << ',' << m;
        os << ',' << s.equivalence_margin << ',' << s.cost.disturbance_bound << ',' << s.cost.pseudo_control << ','
           << s.cost.input << ',' << s.cost.state.total << ',' << s.cost.total << ','
           << static_cast<int>(s.buffer_mode) << ',' << (s.converged ? 1 : 0) << '\n';
    }
}

void write_summary_json(std::ostream& os, const TrajectoryLog& log) {
    const EpisodeSummary& s = log.summary;
    nlohmann::json j;
    j["config"] = log.config_name;
    j["final_weights"] = s.final_weights.as_vector();
    j["final_state"] = s.final_state.as_vector();
    j["convergence_time_s"] = s.convergence_time ? nlohmann::json(*s.convergence_time) : nlohmann::json(nullptr);
    j["violations"] = s.violations;
    j["input_violations"] = s.input_violations;
    j["max_abs_input"] = s.max_abs_input;
    j["min_equivalence_margin"] = s.min_equivalence_margin;
    j["equivalence_warnings"] = s.equivalence_warnings;
    j["min_gram_eig"] = s.min_gram_eig;
    j["rank_ok"] = s.final_rank_ok;
    j["steps"] = s.steps;
    os << j.dump(2) << '\n';
}

void write_plot_script(std::ostream& os, const TrajectoryLog& log, std::string_view csv_name) {
    const auto header = csv_header(log);
    auto column_of = [&](const std::string& name) {
        return static_cast<std::size_t>(std::find(header.begin(), header.end(), name) - header.begin()) + 1;
    };
    auto plot_group = [&](const char* title, const char* prefix, std::size_t count) {
        if (count == 0) return;
        os << "set title '" << title << "'\nplot ";
        for (std::size_t i = 1; i <= count; ++i) {
            const std::string col = prefix + std::to_string(i);
            os << (i > 1 ? ", \\\n     " : "") << "'" << csv_name << "' using 1:" << column_of(col)
               << " with lines title '" << col << "'";
        }
        os << "\n\n";
    };
    os << "# generated for " << log.config_name << "\n";
    os << "set datafile separator ','\nset key autotitle columnhead\nset xlabel 't [s]'\nset grid\n";
    os << "set terminal pngcairo size 1000,700\n\n";
    os << "set output '" << log.config_name << "_weights.png'\n";
    plot_group("critic weights", "w", log.basis_size);
    os << "set output '" << log.config_name << "_states.png'\n";
    plot_group("states", "x", log.state_dim);
    os << "set output '" << log.config_name << "_inputs.png'\n";
    plot_group("inputs", "u", log.input_dim);
    if (log.state_dim >= 2) {
        os << "set output '" << log.config_name << "_phase.png'\nset title 'phase plot'\nset xlabel 'x1'\n"
           << "plot '" << csv_name << "' using " << column_of("x1") << ":" << column_of("x2")
           << " with lines title 'x2 vs x1'\n";
    }
}

}  // namespace rsadp
