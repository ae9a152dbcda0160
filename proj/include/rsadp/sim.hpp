#pragma once

// Closed-loop episodes: RK4 plant under zero-order-hold inputs, forward-Euler
// critic weights, replay buffers, and per-step monitoring.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "rsadp/critic.hpp"
#include "rsadp/numerics.hpp"
#include "rsadp/penalty.hpp"
#include "rsadp/replay.hpp"
#include "rsadp/systems.hpp"

namespace rsadp {

enum class PlantMode {
    auxiliary, // f + g u + h v, v from the critic
    disturbed, // f + g u + k d, d from sampled parameters
};

enum class BufferKind { online, offline };

struct EpisodeConfig {
    std::string name;
    std::string description;

    std::string model = "benchmark2";
    ModelOptions model_options;

    InputPenalty input = InputPenalty::quadratic(Vec{1.0});
    StatePenalty state;
    double rho = 1.0;

    Basis basis = Basis::benchmark2();
    Mat gamma;
    double k_c = 1.0;
    double k_e = 1.0;
    Vec w0;

    BufferKind buffer = BufferKind::online;
    std::size_t capacity = 5;       // online P
    double xi = 1e-3;               // convergence threshold
    std::size_t check_interval = 1; // detector interval, in steps
    GridSpec grid;                  // offline region
    /// Re-assemble online records at their stored states under the current
    /// greedy policies each step, as the offline buffer does. Off keeps the
    /// (Y, Theta) pairs exactly as recorded.
    bool refresh_replay = false;

    Vec x0;
    double h = 1e-3;
    double duration = 10.0;
    std::uint64_t seed = 0;
    PlantMode plant = PlantMode::auxiliary;
    bool resample_disturbance = false; // fresh parameters every step

    /// Constraint sets that are only watched, not penalised. Leaving one is
    /// counted as a violation; leaving a penalty barrier aborts the episode.
    std::vector<BarrierTerm> monitors;
    /// Input excursions |u_j| > input_limit are counted (0 disables).
    double input_limit = 0.0;

    std::size_t log_stride = 1;

    /// Throws ConfigError on inconsistent dimensions, non-positive h/T, or an
    /// initial state outside a barrier or monitor region.
    void validate() const;

    [[nodiscard]] SystemModel make_model() const { return builtin(model, model_options); }
    [[nodiscard]] CriticState make_critic() const;
    [[nodiscard]] RobustnessTerms robustness() const { return RobustnessTerms{rho}; }
};

struct StepRecord {
    double t = 0.0;
    Vec x;
    Vec u;
    Vec v;
    Vec w;
    double bellman_error = 0.0;
    double gram_min_eig = 0.0;
    std::vector<double> margins;      // distance to each penalty barrier, then each monitor
    double equivalence_margin = 0.0;  // L(x) - 2 rho v'v
    UtilityBreakdown cost;
    BufferMode buffer_mode = BufferMode::filling;
    bool converged = false;
};

struct EpisodeSummary {
    Vec final_weights;
    Vec final_state;
    std::optional<double> convergence_time;  // start of the final converged stretch
    std::size_t violations = 0;              // steps outside some monitored state set
    std::size_t input_violations = 0;        // steps with |u_j| > input_limit
    double max_abs_input = 0.0;
    double min_equivalence_margin = 0.0;     // over x != 0
    std::size_t equivalence_warnings = 0;    // steps with a non-positive margin at x != 0
    double min_gram_eig = 0.0;               // replayed Gram at the end of the run
    bool final_rank_ok = false;
    std::size_t steps = 0;
    double wall_seconds = 0.0;
};

struct TrajectoryLog {
    std::string config_name;
    std::size_t state_dim = 0;
    std::size_t input_dim = 0;
    std::size_t disturbance_dim = 0;
    std::size_t basis_size = 0;
    std::size_t margin_count = 0;
    std::vector<StepRecord> steps;
    EpisodeSummary summary;
};

/// Ŵ trace convenience: the weight vector of each logged step.
std::vector<Vec> weight_trace(const TrajectoryLog& log);

/// L(x) - 2 rho v'v under the current greedy pseudo-control.
double equivalence_margin(const StatePenalty& sp, const RobustnessTerms& rt, const CriticState& c,
                          const SystemModel& model, const Vec& x);

/// Run one episode. Errors (ConstraintViolationError, LearningDivergedError,
/// IntegrationDivergedError) carry the step index where available.
TrajectoryLog run_episode(const EpisodeConfig& cfg);

struct SweepResult {
    Vec x0;
    std::optional<TrajectoryLog> log;
    std::string error;        // empty on success
    std::string error_kind;   // "constraint", "divergence", "config", "other"
};

/// Independent episodes from several starts; failures are collected, not rethrown.
/// Results are in input order regardless of `workers`.
std::vector<SweepResult> sweep_initial_states(const EpisodeConfig& cfg, const std::vector<Vec>& starts,
                                              std::size_t workers = 1);

/// Presets: example1_online, example1_offline, pendulum_crsp, pendulum_rop, manipulator_crsp.
EpisodeConfig preset(std::string_view name);
std::vector<std::string> preset_names();

/// One row per logged step; see csv_header for the column list.
std::vector<std::string> csv_header(const TrajectoryLog& log);
void write_csv(std::ostream& os, const TrajectoryLog& log);
void write_summary_json(std::ostream& os, const TrajectoryLog& log);
/// gnuplot script plotting weights, states and inputs from `csv_name`.
void write_plot_script(std::ostream& os, const TrajectoryLog& log, std::string_view csv_name);

}  // namespace rsadp
