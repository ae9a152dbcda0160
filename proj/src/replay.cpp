#include "rsadp/replay.hpp"

#include <cmath>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

#include "rsadp/errors.hpp"

namespace rsadp {

namespace {

Mat gram(std::span<const Sample> records, std::size_t dim) {
    Mat b(dim, dim);
    for (const Sample& s : records) b += outer(s.y, s.y);
    return b;
}

// Replacement must beat the incumbent by more than round-off.
bool strictly_better(double candidate, double incumbent, double scale) {
    return candidate > incumbent + 1e-12 * std::max(1.0, scale);
}

double trace(const Mat& m) {
    double t = 0.0;
    for (std::size_t i = 0; i < m.rows(); ++i) t += m(i, i);
    return t;
}

}  // namespace

double gram_min_eig(std::span<const Sample> records, double k_e) {
    if (records.empty()) throw ContractError("gram_min_eig: buffer is empty");
    return sym_eig_min(k_e * gram(records, records.front().y.size()));
}

const char* to_string(BufferMode mode) {
    switch (mode) {
        case BufferMode::filling: return "filling";
        case BufferMode::prioritized: return "prioritized";
        case BufferMode::sequential: return "sequential";
    }
    return "?";
}

// ---------------------------------------------------------------------------
// OnlineBuffer

OnlineBuffer::OnlineBuffer(std::size_t capacity, std::size_t regressor_dim) : capacity_(capacity), dim_(regressor_dim) {
    if (capacity_ == 0) throw ConfigError("online buffer: capacity must be positive");
    if (dim_ == 0) throw ConfigError("online buffer: regressor dimension must be positive");
    records_.reserve(capacity_);
}

InsertReport OnlineBuffer::insert(const Sample& s, bool converged) {
    if (s.y.size() != dim_) throw ContractError("online buffer: sample dimension mismatch");

    InsertReport report;
    const Mat b = gram(records_, dim_);
    report.lambda_before = records_.empty() ? 0.0 : sym_eig_min(b);

    if (records_.size() < capacity_) {
        mode_ = BufferMode::filling;
        records_.push_back(s);
        report.accepted = true;
        report.slot = records_.size() - 1;
    } else if (converged) {
        mode_ = BufferMode::sequential;
        records_[cursor_] = s;
        report.accepted = true;
        report.slot = cursor_;
        cursor_ = (cursor_ + 1) % capacity_;
    } else {
        mode_ = BufferMode::prioritized;
        const Mat add = outer(s.y, s.y);
        const double scale = trace(b) + trace(add);
        double best = report.lambda_before;
        std::optional<std::size_t> best_slot;
        // Scanned newest slot first, so ties go to the highest index.
        for (std::size_t l = records_.size(); l-- > 0;) {
            const Mat trial = b - outer(records_[l].y, records_[l].y) + add;
            const double lam = sym_eig_min(trial);
            if (strictly_better(lam, best, scale)) {
                best = lam;
                best_slot = l;
            }
        }
        if (best_slot) {
            records_[*best_slot] = s;
            report.accepted = true;
            report.slot = best_slot;
        }
    }
    report.mode = mode_;
    report.lambda_after = report.accepted ? sym_eig_min(gram(records_, dim_)) : report.lambda_before;
    return report;
}

bool OnlineBuffer::rank_ok() const {
    if (records_.empty()) return false;
    return matrix_rank(stack_regressors(records_)) == dim_;
}

double OnlineBuffer::min_eig() const { return records_.empty() ? 0.0 : sym_eig_min(gram(records_, dim_)); }

Mat stack_regressors(std::span<const Sample> records) {
    if (records.empty()) return Mat();
    Mat m(records.size(), records.front().y.size());
    for (std::size_t r = 0; r < records.size(); ++r)
        for (std::size_t c = 0; c < m.cols(); ++c) m(r, c) = records[r].y[c];
    return m;
}

// ---------------------------------------------------------------------------
// ConvergenceDetector

ConvergenceDetector::ConvergenceDetector(double xi, std::size_t interval, Vec initial)
    : xi_(xi), interval_(interval), snapshot_(std::move(initial)) {
    if (!(xi_ > 0.0)) throw ConfigError("convergence detector: threshold must be positive");
    if (interval_ == 0) throw ConfigError("convergence detector: interval must be positive");
}

bool ConvergenceDetector::check(const Vec& w_now) {
    if (++counter_ < interval_) return converged_;
    counter_ = 0;
    last_change_ = (w_now - snapshot_).norm();
    converged_ = last_change_ <= xi_;
    snapshot_ = w_now;
    return converged_;
}

// ---------------------------------------------------------------------------
// Offline grid

void GridSpec::validate(std::size_t state_dim) const {
    if (lower.size() != state_dim || upper.size() != state_dim)
        throw ConfigError("grid: region bounds must match the state dimension");
    const bool by_count = !counts.empty();
    const bool by_mesh = !mesh.empty();
    if (by_count == by_mesh) throw ConfigError("grid: give exactly one of counts or mesh");
    if (by_count && counts.size() != state_dim) throw ConfigError("grid: counts must match the state dimension");
    if (by_mesh && mesh.size() != state_dim) throw ConfigError("grid: mesh must match the state dimension");
    for (std::size_t i = 0; i < state_dim; ++i) {
        if (!(lower[i] <= upper[i])) throw ConfigError("grid: empty interval on axis " + std::to_string(i));
        if (by_count && counts[i] == 0) throw ConfigError("grid: zero point count on axis " + std::to_string(i));
        if (by_mesh && !(mesh[i] > 0.0)) throw ConfigError("grid: mesh size must be positive");
    }
}

std::vector<Vec> GridSpec::points() const {
    const std::size_t n = lower.size();
    std::vector<std::vector<double>> axes(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (!counts.empty()) {
            const std::size_t c = counts[i];
            if (c == 1) {
                axes[i].push_back(0.5 * (lower[i] + upper[i]));
                continue;
            }
            for (std::size_t k = 0; k < c; ++k)
                axes[i].push_back(lower[i] + (upper[i] - lower[i]) * static_cast<double>(k) / static_cast<double>(c - 1));
        } else {
            const double span = upper[i] - lower[i];
            const auto steps = static_cast<std::size_t>(std::floor(span / mesh[i] + 1e-9));
            for (std::size_t k = 0; k <= steps; ++k) axes[i].push_back(lower[i] + mesh[i] * static_cast<double>(k));
        }
    }

    std::vector<Vec> pts;
    std::vector<std::size_t> idx(n, 0);
    while (true) {
        Vec p(n);
        for (std::size_t i = 0; i < n; ++i) p[i] = axes[i][idx[i]];
        pts.push_back(std::move(p));
        // last axis fastest
        std::size_t d = n;
        while (d > 0) {
            --d;
            if (++idx[d] < axes[d].size()) break;
            idx[d] = 0;
            if (d == 0) return pts;
        }
        if (n == 0) return pts;
    }
}

OfflineBuffer build_offline(const GridSpec& grid, const SystemModel& model, const Basis& basis,
                            const StatePenalty& sp, const RobustnessTerms& rt) {
    grid.validate(model.state_dim);
    if (basis.state_dim() != model.state_dim) throw ConfigError("offline buffer: basis and model dimensions differ");

    OfflineBuffer off;
    off.state_dim = model.state_dim;
    off.input_dim = model.input_dim;
    off.disturbance_dim = model.disturbance_dim;
    off.basis_size = basis.size();

    for (const Vec& x : grid.points()) {
        bool inside = true;
        for (const auto& b : sp.barriers) inside = inside && b.contains(x);
        if (!inside) {
            ++off.skipped;
            continue;
        }
        const Mat dphi = basis_grad(basis, x);
        off.states.push_back(x);
        off.f.push_back(dphi * model.drift(x));
        off.g.push_back(dphi * model.input_map(x));
        off.h.push_back(model.disturbance_dim > 0 ? dphi * unmatched_map(model, x) : Mat(basis.size(), 0));
        off.k.push_back(state_penalty_value(sp, x));
        off.r.push_back(disturbance_bound_cost(model, rt, x));
    }
    if (off.states.empty()) throw ConfigError("offline buffer: no grid point lies inside the constraint set");
    return off;
}

Sample assemble(const OfflineBuffer& off, std::size_t l, const CriticState& c, const InputPenalty& ip,
                const RobustnessTerms& rt) {
    if (l >= off.size()) throw ContractError("assemble: record index out of range");
    if (c.w_hat.size() != off.basis_size) throw ContractError("assemble: weight length differs from basis size");

    // g' grad Phi' W = G_l' W, and likewise for h.
    const Vec gw = off.g[l].transpose() * c.w_hat;
    Vec u(off.input_dim);
    for (std::size_t j = 0; j < u.size(); ++j) {
        const double z = gw[j] / ip.r_diag[j];
        u[j] = ip.mode == InputPenaltyMode::saturated ? -ip.beta * std::tanh(z / (2.0 * ip.beta)) : -0.5 * z;
    }

    Sample s;
    s.y = off.f[l] + off.g[l] * u;
    s.theta = off.r[l] + input_penalty_value(ip, u) + off.k[l];
    if (off.disturbance_dim > 0) {
        const Vec v = (-1.0 / (2.0 * c.rho)) * (off.h[l].transpose() * c.w_hat);
        s.y += off.h[l] * v;
        s.theta += rt.rho * v.dot(v);
    }
    return s;
}

std::vector<Sample> assemble_all(const OfflineBuffer& off, const CriticState& c, const InputPenalty& ip,
                                 const RobustnessTerms& rt) {
    std::vector<Sample> out;
    out.reserve(off.size());
    for (std::size_t l = 0; l < off.size(); ++l) out.push_back(assemble(off, l, c, ip, rt));
    return out;
}

// ---------------------------------------------------------------------------
// Text format

void write_offline(std::ostream& os, const OfflineBuffer& off) {
    os << kOfflineFormatHeader << '\n';
    os << "n=" << off.state_dim << ",m=" << off.input_dim << ",r=" << off.disturbance_dim << ",N=" << off.basis_size
       << ",P=" << off.size() << ",skipped=" << off.skipped << '\n';
    os << std::setprecision(std::numeric_limits<double>::max_digits10);
    for (std::size_t l = 0; l < off.size(); ++l) {
        bool first = true;
        auto put = [&](double v) {
            if (!first) os << ',';
            os << v;
            first = false;
        };
        for (double v : off.states[l]) put(v);
        for (double v : off.f[l]) put(v);
        for (double v : off.g[l].values()) put(v);
        for (double v : off.h[l].values()) put(v);
        put(off.k[l]);
        put(off.r[l]);
        os << '\n';
    }
}

OfflineBuffer read_offline(std::istream& is) {
    std::string line;
    if (!std::getline(is, line) || line != kOfflineFormatHeader)
        throw ConfigError("offline buffer file: missing or unsupported header");
    if (!std::getline(is, line)) throw ConfigError("offline buffer file: missing dimension line");

    OfflineBuffer off;
    std::size_t p = 0;
    {
        std::istringstream ds(line);
        std::string field;
        while (std::getline(ds, field, ',')) {
            const auto eq = field.find('=');
            if (eq == std::string::npos) throw ConfigError("offline buffer file: malformed dimension line");
            const std::string key = field.substr(0, eq);
            const std::size_t value = std::stoul(field.substr(eq + 1));
            if (key == "n") off.state_dim = value;
            else if (key == "m") off.input_dim = value;
            else if (key == "r") off.disturbance_dim = value;
            else if (key == "N") off.basis_size = value;
            else if (key == "P") p = value;
            else if (key == "skipped") off.skipped = value;
            else throw ConfigError("offline buffer file: unknown dimension key '" + key + "'");
        }
    }

    const std::size_t n = off.state_dim, m = off.input_dim, r = off.disturbance_dim, nb = off.basis_size;
    const std::size_t width = n + nb + nb * m + nb * r + 2;
    for (std::size_t l = 0; l < p; ++l) {
        if (!std::getline(is, line)) throw ConfigError("offline buffer file: truncated");
        std::vector<double> vals;
        std::istringstream rs(line);
        std::string cell;
        while (std::getline(rs, cell, ',')) vals.push_back(std::stod(cell));
        if (vals.size() != width) throw ConfigError("offline buffer file: row " + std::to_string(l) + " has wrong width");

        std::size_t at = 0;
        auto take_vec = [&](std::size_t len) {
            Vec v(len);
            for (std::size_t i = 0; i < len; ++i) v[i] = vals[at++];
            return v;
        };
        auto take_mat = [&](std::size_t rows, std::size_t cols) {
            Mat mm(rows, cols);
            for (std::size_t i = 0; i < rows; ++i)
                for (std::size_t j = 0; j < cols; ++j) mm(i, j) = vals[at++];
            return mm;
        };
        off.states.push_back(take_vec(n));
        off.f.push_back(take_vec(nb));
        off.g.push_back(take_mat(nb, m));
        off.h.push_back(take_mat(nb, r));
        off.k.push_back(vals[at++]);
        off.r.push_back(vals[at++]);
    }
    return off;
}

}  // namespace rsadp
