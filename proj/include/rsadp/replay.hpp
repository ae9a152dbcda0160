#pragma once

// Experience storage for the critic update laws.
//
// OnlineBuffer keeps up to P recorded (Y, Theta) pairs. While the weights are
// still moving it only admits a sample when swapping it in raises the smallest
// eigenvalue of the Gram matrix sum_l Y_l Y_l'; once they settle it falls back
// to a FIFO ring. OfflineBuffer holds state-only factors on a grid so that
// regression pairs can be re-assembled for any weight vector.

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rsadp/critic.hpp"
#include "rsadp/numerics.hpp"
#include "rsadp/penalty.hpp"
#include "rsadp/systems.hpp"

namespace rsadp {

/// Smallest eigenvalue of k_e * sum_l Y_l Y_l'. Throws ContractError if empty.
double gram_min_eig(std::span<const Sample> records, double k_e = 1.0);

enum class BufferMode { filling, prioritized, sequential };
const char* to_string(BufferMode mode);

struct InsertReport {
    bool accepted = false;
    std::optional<std::size_t> slot;
    BufferMode mode = BufferMode::filling;
    double lambda_before = 0.0;  // unscaled Gram, before the insert
    double lambda_after = 0.0;
};

class OnlineBuffer {
public:
    OnlineBuffer() = default;
    /// Throws ConfigError unless capacity > 0 and regressor_dim > 0.
    OnlineBuffer(std::size_t capacity, std::size_t regressor_dim);

    [[nodiscard]] std::size_t capacity() const noexcept { return capacity_; }
    [[nodiscard]] std::size_t regressor_dim() const noexcept { return dim_; }
    [[nodiscard]] std::size_t size() const noexcept { return records_.size(); }
    [[nodiscard]] bool full() const noexcept { return records_.size() == capacity_; }
    [[nodiscard]] BufferMode mode() const noexcept { return mode_; }
    [[nodiscard]] std::size_t cursor() const noexcept { return cursor_; }
    [[nodiscard]] std::span<const Sample> records() const noexcept { return records_; }

    /// Record `s`: append while filling; otherwise FIFO overwrite when
    /// `converged`, else the best eigenvalue-raising slot replacement.
    InsertReport insert(const Sample& s, bool converged);

    /// Stacked records have numerical rank equal to the regressor dimension.
    [[nodiscard]] bool rank_ok() const;
    /// Unscaled Gram eigenvalue of the current contents (0 when empty).
    [[nodiscard]] double min_eig() const;

private:
    std::size_t capacity_ = 0;
    std::size_t dim_ = 0;
    std::vector<Sample> records_;
    std::size_t cursor_ = 0;
    BufferMode mode_ = BufferMode::filling;
};

/// Stacked Y rows of a record list (P x N).
Mat stack_regressors(std::span<const Sample> records);

/// Tracks ||W_now - W_snapshot|| <= xi once every `interval` calls.
class ConvergenceDetector {
public:
    ConvergenceDetector() = default;
    /// Throws ConfigError unless xi > 0 and interval > 0.
    ConvergenceDetector(double xi, std::size_t interval, Vec initial);

    /// Advance one step. At an interval boundary the flag is recomputed and the
    /// snapshot replaced; between boundaries the last flag is returned.
    bool check(const Vec& w_now);

    [[nodiscard]] bool converged() const noexcept { return converged_; }
    [[nodiscard]] double threshold() const noexcept { return xi_; }
    [[nodiscard]] std::size_t interval() const noexcept { return interval_; }
    [[nodiscard]] double last_change() const noexcept { return last_change_; }

private:
    double xi_ = 1e-3;
    std::size_t interval_ = 1;
    std::size_t counter_ = 0;
    Vec snapshot_;
    bool converged_ = false;
    double last_change_ = 0.0;
};

/// Axis-aligned sampling region. Exactly one of `counts` and `mesh` is used:
/// counts gives c_i endpoint-inclusive points per axis (a single point sits at
/// the interval midpoint); mesh gives spacing delta_i starting at the lower edge.
struct GridSpec {
    Vec lower;
    Vec upper;
    std::vector<std::size_t> counts;
    Vec mesh;

    /// Throws ConfigError on inconsistent dimensions or empty intervals.
    void validate(std::size_t state_dim) const;
    [[nodiscard]] std::vector<Vec> points() const;
};

struct OfflineBuffer {
    std::size_t state_dim = 0;
    std::size_t input_dim = 0;
    std::size_t disturbance_dim = 0;
    std::size_t basis_size = 0;

    std::vector<Vec> states;
    std::vector<Vec> f;      // grad Phi f(x_l), length N
    std::vector<Mat> g;      // grad Phi g(x_l), N x m
    std::vector<Mat> h;      // grad Phi h(x_l), N x r
    std::vector<double> k;   // L(x_l)
    std::vector<double> r;   // l_M^2 + rho d_M^2 at x_l
    std::size_t skipped = 0; // grid points outside some barrier region

    [[nodiscard]] std::size_t size() const noexcept { return states.size(); }

    friend bool operator==(const OfflineBuffer&, const OfflineBuffer&) = default;
};

/// Grid pre-simulation. Points outside a barrier region are skipped and
/// counted; an empty result throws ConfigError.
OfflineBuffer build_offline(const GridSpec& grid, const SystemModel& model, const Basis& basis,
                            const StatePenalty& sp, const RobustnessTerms& rt);

/// Regression pair for record l under the greedy policies of `c`.
Sample assemble(const OfflineBuffer& off, std::size_t l, const CriticState& c, const InputPenalty& ip,
                const RobustnessTerms& rt);
std::vector<Sample> assemble_all(const OfflineBuffer& off, const CriticState& c, const InputPenalty& ip,
                                 const RobustnessTerms& rt);

/// Versioned text format: a magic/version header, a dimension line, then one
/// CSV row per record (x, F, G row-major, H row-major, K, R).
void write_offline(std::ostream& os, const OfflineBuffer& off);
OfflineBuffer read_offline(std::istream& is);

inline constexpr const char* kOfflineFormatHeader = "# rsadp offline buffer v1";

}  // namespace rsadp
