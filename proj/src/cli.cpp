#include "rsadp/cli.hpp"

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "rsadp/config.hpp"
#include "rsadp/errors.hpp"
#include "rsadp/sim.hpp"

namespace rsadp {

namespace fs = std::filesystem;

namespace {

struct RunOptions {
    std::string preset_name;
    std::string config_path;
    std::string out_dir;
    std::string starts;
    std::uint64_t seed = 0;
    bool seed_given = false;
    std::size_t workers = 1;
    std::vector<std::string> emit{"csv", "summary", "plot"};
    bool dump_config = false;
};

struct BuildOptions {
    std::string model;
    std::string region;
    std::vector<std::size_t> counts;
    std::vector<double> mesh;
    std::string out;
};

std::string read_file(const fs::path& p) {
    std::ifstream in(p);
    if (!in) throw ConfigError("cannot open " + p.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// Inline JSON, or the contents of a file when the argument names one.
std::string json_argument(const std::string& arg) {
    std::error_code ec;
    if (!arg.empty() && arg.front() != '{' && arg.front() != '[' && fs::is_regular_file(arg, ec)) return read_file(arg);
    return arg;
}

fs::path default_out(const std::string& name) {
    const char* root = std::getenv(kOutRootEnv);
    if (!root || !*root) throw ConfigError(std::string("run: no output directory (pass --out or set ") + kOutRootEnv + ")");
    return fs::path(root) / (name.empty() ? "run" : name);
}

std::vector<Vec> parse_starts(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(std::string("--starts: malformed JSON: ") + e.what());
    }
    if (!j.is_array()) throw ConfigError("--starts: expected an array of state vectors");
    std::vector<Vec> out;
    for (const auto& s : j) {
        if (!s.is_array()) throw ConfigError("--starts: expected an array of state vectors");
        Vec v(s.size());
        for (std::size_t i = 0; i < s.size(); ++i) {
            if (!s[i].is_number()) throw ConfigError("--starts: state entries must be numbers");
            v[i] = s[i].get<double>();
        }
        out.push_back(std::move(v));
    }
    return out;
}

bool wants(const RunOptions& o, const char* what) {
    return std::find(o.emit.begin(), o.emit.end(), what) != o.emit.end();
}

void write_outputs(const fs::path& dir, const TrajectoryLog& log, const RunOptions& o) {
    fs::create_directories(dir);
    auto open = [&](const char* name) {
        std::ofstream f(dir / name);
        if (!f) throw std::runtime_error("cannot write " + (dir / name).string());
        return f;
    };
    if (wants(o, "csv")) {
        auto f = open("trajectory.csv");
        write_csv(f, log);
    }
    if (wants(o, "summary")) {
        auto f = open("summary.json");
        write_summary_json(f, log);
    }
    if (wants(o, "plot")) {
        auto f = open("plot.gp");
        write_plot_script(f, log, "trajectory.csv");
    }
}

void print_summary(std::ostream& out, const TrajectoryLog& log) {
    const EpisodeSummary& s = log.summary;
    out << std::setprecision(6) << "final_weights:";
    for (double w : s.final_weights) out << ' ' << w;
    out << "\nconvergence_time_s: ";
    if (s.convergence_time)
        out << *s.convergence_time;
    else
        out << "none";
    out << "\nviolations: " << s.violations << " (input " << s.input_violations << ", max |u| " << s.max_abs_input
        << ")\nmin_equivalence_margin: " << s.min_equivalence_margin << "\nmin_gram_eig: " << s.min_gram_eig << '\n';
}

int exit_for(const TrajectoryLog& log) {
    return log.summary.violations > 0 || log.summary.input_violations > 0 ? kExitConstraint : kExitOk;
}

int cmd_run(const RunOptions& o, std::ostream& out, std::ostream& err) {
    EpisodeConfig cfg = o.config_path.empty() ? preset(o.preset_name) : load_config(o.config_path);
    if (o.seed_given) cfg.seed = o.seed;
    if (o.dump_config) {
        out << dump_config(cfg) << '\n';
        return kExitOk;
    }
    for (const auto& e : o.emit)
        if (e != "csv" && e != "summary" && e != "plot")
            throw ConfigError("--emit: unknown output '" + e + "' (csv, summary, plot)");

    const fs::path dir = o.out_dir.empty() ? default_out(cfg.name) : fs::path(o.out_dir);

    if (o.starts.empty()) {
        const TrajectoryLog log = run_episode(cfg);
        write_outputs(dir, log, o);
        out << "run " << cfg.name << " -> " << dir.string() << '\n';
        print_summary(out, log);
        return exit_for(log);
    }

    cfg.validate();
    const auto results = sweep_initial_states(cfg, parse_starts(json_argument(o.starts)), o.workers);
    int code = kExitOk;
    nlohmann::json index = nlohmann::json::array();
    for (std::size_t k = 0; k < results.size(); ++k) {
        const SweepResult& r = results[k];
        nlohmann::json entry = {{"x0", r.x0.as_vector()}};
        if (r.log) {
            write_outputs(dir / ("start_" + std::to_string(k)), *r.log, o);
            entry["violations"] = r.log->summary.violations;
            entry["convergence_time_s"] = r.log->summary.convergence_time
                                              ? nlohmann::json(*r.log->summary.convergence_time)
                                              : nlohmann::json(nullptr);
            if (exit_for(*r.log) == kExitConstraint && code == kExitOk) code = kExitConstraint;
        } else {
            entry["error"] = r.error;
            entry["error_kind"] = r.error_kind;
            err << "start " << k << ": " << r.error << '\n';
            if (r.error_kind == "divergence")
                code = kExitDiverged;
            else if (r.error_kind == "constraint" && code == kExitOk)
                code = kExitConstraint;
            else if (r.error_kind == "config" || r.error_kind == "other")
                code = std::max(code, kExitConfig);
        }
        index.push_back(entry);
    }
    fs::create_directories(dir);
    std::ofstream(dir / "sweep.json") << index.dump(2) << '\n';
    out << "sweep " << cfg.name << ": " << results.size() << " starts -> " << dir.string() << '\n';
    return code;
}

int cmd_list(std::ostream& out) {
    for (const auto& name : preset_names()) out << name << '\t' << preset(name).description << '\n';
    return kExitOk;
}

int cmd_buffer_build(const BuildOptions& o, std::ostream& out) {
    // Penalties and basis follow the model's reference preset.
    EpisodeConfig ref;
    if (o.model == "benchmark2")
        ref = preset("example1_offline");
    else if (o.model == "pendulum")
        ref = preset("pendulum_crsp");
    else if (o.model == "manipulator2dof")
        ref = preset("manipulator_crsp");
    else
        throw ConfigError("--model: unknown model '" + o.model + "'");

    GridSpec grid = parse_region(json_argument(o.region));
    grid.counts = o.counts;
    if (!o.mesh.empty()) grid.mesh = Vec(o.mesh);
    if (grid.counts.empty() == grid.mesh.empty()) throw ConfigError("buffer-build: give exactly one of --counts and --mesh");

    const SystemModel model = ref.make_model();
    grid.validate(model.state_dim);
    const OfflineBuffer buf = build_offline(grid, model, ref.basis, ref.state, ref.robustness());

    const fs::path path(o.out);
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot write " + path.string());
    write_offline(f, buf);
    CriticState zero = ref.make_critic();
    zero.w_hat = Vec(zero.basis.size());
    const double lambda = gram_min_eig(assemble_all(buf, zero, ref.input, ref.robustness()));
    out << "buffer " << o.model << ": P=" << buf.size() << " lambda_min(W=0)=" << lambda;
    if (buf.skipped) out << " (" << buf.skipped << " grid points outside the constraint set skipped)";
    out << " -> " << path.string() << '\n';
    return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Risk-sensitive off-policy ADP simulator"};
    app.require_subcommand(1);

    RunOptions ro;
    auto* run = app.add_subcommand("run", "Run a preset or a JSON configuration");
    auto* opt_preset = run->add_option("--preset", ro.preset_name, "Preset name (see 'list')");
    auto* opt_config = run->add_option("--config", ro.config_path, "JSON configuration file")->check(CLI::ExistingFile);
    opt_preset->excludes(opt_config);
    run->add_option("--out", ro.out_dir, std::string("Output directory (default $") + kOutRootEnv + "/<name>)");
    run->add_option("--seed", ro.seed, "Disturbance seed override")->each([&](const std::string&) { ro.seed_given = true; });
    run->add_option("--workers", ro.workers, "Threads for multi-start sweeps")->check(CLI::PositiveNumber);
    run->add_option("--starts", ro.starts, "JSON array (inline or file) of initial states for a sweep");
    run->add_option("--emit", ro.emit, "Outputs: csv, summary, plot")->delimiter(',');
    run->add_flag("--dump-config", ro.dump_config, "Print the resolved configuration as JSON and exit");

    app.add_subcommand("list", "List presets");

    BuildOptions bo;
    auto* build = app.add_subcommand("buffer-build", "Pre-simulate an offline experience buffer");
    build->add_option("--model", bo.model, "benchmark2, pendulum or manipulator2dof")->required();
    build->add_option("--region", bo.region, "JSON {\"lower\": [...], \"upper\": [...]} (inline or file)")->required();
    auto* opt_counts = build->add_option("--counts", bo.counts, "Points per axis, e.g. 10,10")->delimiter(',');
    auto* opt_mesh = build->add_option("--mesh", bo.mesh, "Mesh size per axis")->delimiter(',');
    opt_counts->excludes(opt_mesh);
    build->add_option("--out", bo.out, "Output file")->required();

    std::vector<std::string> rev(args.rbegin(), args.rend());
    try {
        app.parse(rev);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n';
        return kExitConfig;
    }

    try {
        if (run->parsed()) {
            if (ro.preset_name.empty() && ro.config_path.empty()) throw ConfigError("run: one of --preset or --config is required");
            return cmd_run(ro, out, err);
        }
        if (build->parsed()) return cmd_buffer_build(bo, out);
        return cmd_list(out);
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const NotFoundError& e) {
        err << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const ConstraintViolationError& e) {
        err << "constraint violation: " << e.what() << '\n';
        return kExitConstraint;
    } catch (const LearningDivergedError& e) {
        err << "diverged: " << e.what() << '\n';
        return kExitDiverged;
    } catch (const IntegrationDivergedError& e) {
        err << "diverged: " << e.what() << '\n';
        return kExitDiverged;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitFailure;
    }
}

}  // namespace rsadp
