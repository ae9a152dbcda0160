#include "rsadp/config.hpp"

#include <fstream>
#include <initializer_list>
#include <set>
#include <sstream>

#include <json.hpp>

#include "rsadp/errors.hpp"

namespace rsadp {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& path, const std::string& msg) {
    throw ConfigError("config " + (path.empty() ? std::string("<root>") : path) + ": " + msg);
}

void require_object(const json& j, const std::string& path) {
    if (!j.is_object()) fail(path, "expected an object");
}

void check_keys(const json& j, const std::string& path, std::initializer_list<const char*> allowed) {
    require_object(j, path);
    const std::set<std::string> ok(allowed.begin(), allowed.end());
    for (const auto& item : j.items())
        if (!ok.count(item.key())) fail(path, "unknown key '" + item.key() + "'");
}

std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }

double get_number(const json& j, const std::string& path) {
    if (!j.is_number()) fail(path, "expected a number");
    return j.get<double>();
}

std::size_t get_count(const json& j, const std::string& path) {
    if (!j.is_number_integer() || j.get<long long>() < 0) fail(path, "expected a non-negative integer");
    return j.get<std::size_t>();
}

std::string get_string(const json& j, const std::string& path) {
    if (!j.is_string()) fail(path, "expected a string");
    return j.get<std::string>();
}

bool get_bool(const json& j, const std::string& path) {
    if (!j.is_boolean()) fail(path, "expected true or false");
    return j.get<bool>();
}

Vec get_vec(const json& j, const std::string& path) {
    if (!j.is_array()) fail(path, "expected an array of numbers");
    Vec v(j.size());
    for (std::size_t i = 0; i < j.size(); ++i) v[i] = get_number(j[i], path + "[" + std::to_string(i) + "]");
    return v;
}

Mat get_mat(const json& j, const std::string& path) {
    if (!j.is_array() || j.empty()) fail(path, "expected a non-empty array of rows");
    std::vector<Vec> rows;
    for (std::size_t r = 0; r < j.size(); ++r) rows.push_back(get_vec(j[r], path + "[" + std::to_string(r) + "]"));
    Mat m(rows.size(), rows.front().size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
        if (rows[r].size() != m.cols()) fail(path, "ragged matrix");
        for (std::size_t c = 0; c < m.cols(); ++c) m(r, c) = rows[r][c];
    }
    return m;
}

json vec_json(const Vec& v) { return v.as_vector(); }

json mat_json(const Mat& m) {
    json rows = json::array();
    for (std::size_t r = 0; r < m.rows(); ++r) rows.push_back(vec_json(m.row(r)));
    return rows;
}

// --- barriers

const char* kind_name(BarrierKind k) {
    switch (k) {
        case BarrierKind::rect_abs: return "rect";
        case BarrierKind::circle: return "circle";
        case BarrierKind::ellipse_coupled: return "ellipse_coupled";
    }
    return "rect";
}

BarrierTerm parse_barrier(const json& j, const std::string& path) {
    require_object(j, path);
    if (!j.contains("kind")) fail(path, "missing 'kind'");
    const std::string kind = get_string(j["kind"], join(path, "kind"));
    if (kind == "rect") {
        check_keys(j, path, {"kind", "index", "bound"});
        if (!j.contains("index") || !j.contains("bound")) fail(path, "rect needs 'index' and 'bound'");
        return BarrierTerm::rect(get_count(j["index"], join(path, "index")), get_number(j["bound"], join(path, "bound")));
    }
    if (kind == "circle" || kind == "ellipse_coupled") {
        check_keys(j, path, {"kind", "i", "j", "radius"});
        if (!j.contains("i") || !j.contains("j") || !j.contains("radius"))
            fail(path, kind + " needs 'i', 'j' and 'radius'");
        const std::size_t i = get_count(j["i"], join(path, "i"));
        const std::size_t jj = get_count(j["j"], join(path, "j"));
        const double r = get_number(j["radius"], join(path, "radius"));
        return kind == "circle" ? BarrierTerm::circle(i, jj, r) : BarrierTerm::ellipse_coupled(i, jj, r);
    }
    fail(join(path, "kind"), "expected rect, circle or ellipse_coupled, got '" + kind + "'");
}

json barrier_json(const BarrierTerm& b) {
    if (b.kind == BarrierKind::rect_abs) return {{"kind", "rect"}, {"index", b.i}, {"bound", b.bound}};
    return {{"kind", kind_name(b.kind)}, {"i", b.i}, {"j", b.j}, {"radius", b.bound}};
}

std::vector<BarrierTerm> parse_barriers(const json& j, const std::string& path) {
    if (!j.is_array()) fail(path, "expected an array");
    std::vector<BarrierTerm> out;
    for (std::size_t i = 0; i < j.size(); ++i) out.push_back(parse_barrier(j[i], path + "[" + std::to_string(i) + "]"));
    return out;
}

// --- sections

void parse_input(const json& j, const std::string& path, EpisodeConfig& c) {
    check_keys(j, path, {"mode", "r", "beta"});
    if (j.contains("mode")) {
        const std::string mode = get_string(j["mode"], join(path, "mode"));
        if (mode == "quadratic")
            c.input.mode = InputPenaltyMode::quadratic;
        else if (mode == "saturated")
            c.input.mode = InputPenaltyMode::saturated;
        else
            fail(join(path, "mode"), "expected quadratic or saturated");
    }
    if (j.contains("r")) c.input.r_diag = get_vec(j["r"], join(path, "r"));
    if (j.contains("beta")) c.input.beta = get_number(j["beta"], join(path, "beta"));
    if (c.input.mode == InputPenaltyMode::quadratic) c.input.beta = 0.0;
}

void parse_state(const json& j, const std::string& path, EpisodeConfig& c) {
    check_keys(j, path, {"q", "barriers"});
    if (j.contains("q")) c.state.q = get_mat(j["q"], join(path, "q"));
    if (j.contains("barriers")) c.state.barriers = parse_barriers(j["barriers"], join(path, "barriers"));
}

Basis parse_basis(const json& j, const std::string& path, std::size_t state_dim) {
    if (j.is_string()) {
        const std::string name = j.get<std::string>();
        if (name == "benchmark2") return Basis::benchmark2();
        if (name == "pendulum6") return Basis::pendulum6();
        if (name == "manipulator10") return Basis::manipulator10();
        if (name == "quadratic") return Basis::quadratic(state_dim);
        fail(path, "unknown basis '" + name + "'");
    }
    if (!j.is_array() || j.empty()) fail(path, "expected a basis name or a list of exponent tuples");
    std::vector<std::vector<int>> terms;
    for (std::size_t t = 0; t < j.size(); ++t) {
        const std::string tp = path + "[" + std::to_string(t) + "]";
        if (!j[t].is_array()) fail(tp, "expected an exponent tuple");
        std::vector<int> e;
        for (const auto& x : j[t]) {
            if (!x.is_number_integer()) fail(tp, "exponents must be integers");
            e.push_back(x.get<int>());
        }
        terms.push_back(std::move(e));
    }
    const std::size_t n = terms.front().size();
    return Basis(n, std::move(terms));
}

void parse_critic(const json& j, const std::string& path, EpisodeConfig& c) {
    check_keys(j, path, {"basis", "gamma", "k_c", "k_e", "w0"});
    if (j.contains("basis")) {
        c.basis = parse_basis(j["basis"], join(path, "basis"), c.make_model().state_dim);
        // A new basis invalidates size-dependent defaults unless they are given too.
        if (!j.contains("gamma")) c.gamma = Mat();
        if (!j.contains("w0")) c.w0 = Vec();
    }
    if (j.contains("gamma")) {
        const json& g = j["gamma"];
        c.gamma = (g.is_array() && !g.empty() && g[0].is_number()) ? Mat::diag(get_vec(g, join(path, "gamma")))
                                                                   : get_mat(g, join(path, "gamma"));
    }
    if (j.contains("k_c")) c.k_c = get_number(j["k_c"], join(path, "k_c"));
    if (j.contains("k_e")) c.k_e = get_number(j["k_e"], join(path, "k_e"));
    if (j.contains("w0")) c.w0 = get_vec(j["w0"], join(path, "w0"));
}

void parse_buffer(const json& j, const std::string& path, EpisodeConfig& c) {
    require_object(j, path);
    std::string kind = c.buffer == BufferKind::online ? "online" : "offline";
    if (j.contains("kind")) kind = get_string(j["kind"], join(path, "kind"));
    if (kind == "online") {
        check_keys(j, path, {"kind", "capacity", "xi", "check_interval", "refresh_replay"});
        c.buffer = BufferKind::online;
        if (j.contains("capacity")) c.capacity = get_count(j["capacity"], join(path, "capacity"));
        if (j.contains("xi")) c.xi = get_number(j["xi"], join(path, "xi"));
        if (j.contains("check_interval"))
            c.check_interval = get_count(j["check_interval"], join(path, "check_interval"));
        if (j.contains("refresh_replay")) c.refresh_replay = get_bool(j["refresh_replay"], join(path, "refresh_replay"));
    } else if (kind == "offline") {
        check_keys(j, path, {"kind", "lower", "upper", "counts", "mesh"});
        c.buffer = BufferKind::offline;
        if (j.contains("lower")) c.grid.lower = get_vec(j["lower"], join(path, "lower"));
        if (j.contains("upper")) c.grid.upper = get_vec(j["upper"], join(path, "upper"));
        if (j.contains("counts")) {
            const json& cj = j["counts"];
            if (!cj.is_array()) fail(join(path, "counts"), "expected an array of integers");
            c.grid.counts.clear();
            for (std::size_t i = 0; i < cj.size(); ++i)
                c.grid.counts.push_back(get_count(cj[i], join(path, "counts") + "[" + std::to_string(i) + "]"));
            if (!j.contains("mesh")) c.grid.mesh = Vec();
        }
        if (j.contains("mesh")) {
            c.grid.mesh = get_vec(j["mesh"], join(path, "mesh"));
            if (!j.contains("counts")) c.grid.counts.clear();
        }
    } else {
        fail(join(path, "kind"), "expected online or offline");
    }
}

void parse_model_options(const json& j, const std::string& path, EpisodeConfig& c) {
    check_keys(j, path, {"p1", "p2", "p3"});
    auto& in = c.model_options.inertia;
    if (j.contains("p1")) in.p1 = get_number(j["p1"], join(path, "p1"));
    if (j.contains("p2")) in.p2 = get_number(j["p2"], join(path, "p2"));
    if (j.contains("p3")) in.p3 = get_number(j["p3"], join(path, "p3"));
}

EpisodeConfig from_json(const json& j) {
    check_keys(j, "",
               {"preset", "name", "description", "model", "inertia", "input_penalty", "state_penalty", "rho", "critic",
                "buffer", "x0", "h", "duration", "seed", "plant", "resample_disturbance", "monitors", "input_limit",
                "log_stride"});

    EpisodeConfig c;
    if (j.contains("preset")) {
        try {
            c = preset(get_string(j["preset"], "preset"));
        } catch (const NotFoundError& e) {
            fail("preset", e.what());
        }
    }
    if (j.contains("name")) c.name = get_string(j["name"], "name");
    if (j.contains("description")) c.description = get_string(j["description"], "description");
    if (j.contains("model")) {
        c.model = get_string(j["model"], "model");
        try {
            (void)c.make_model();
        } catch (const NotFoundError& e) {
            fail("model", e.what());
        }
    }
    if (j.contains("inertia")) parse_model_options(j["inertia"], "inertia", c);
    if (j.contains("input_penalty")) parse_input(j["input_penalty"], "input_penalty", c);
    if (j.contains("state_penalty")) parse_state(j["state_penalty"], "state_penalty", c);
    if (j.contains("rho")) c.rho = get_number(j["rho"], "rho");
    if (j.contains("critic")) parse_critic(j["critic"], "critic", c);
    if (j.contains("buffer")) parse_buffer(j["buffer"], "buffer", c);
    if (j.contains("x0")) c.x0 = get_vec(j["x0"], "x0");
    if (j.contains("h")) c.h = get_number(j["h"], "h");
    if (j.contains("duration")) c.duration = get_number(j["duration"], "duration");
    if (j.contains("seed")) {
        if (!j["seed"].is_number_unsigned()) fail("seed", "expected a non-negative integer");
        c.seed = j["seed"].get<std::uint64_t>();
    }
    if (j.contains("plant")) {
        const std::string p = get_string(j["plant"], "plant");
        if (p == "auxiliary")
            c.plant = PlantMode::auxiliary;
        else if (p == "disturbed")
            c.plant = PlantMode::disturbed;
        else
            fail("plant", "expected auxiliary or disturbed");
    }
    if (j.contains("resample_disturbance"))
        c.resample_disturbance = get_bool(j["resample_disturbance"], "resample_disturbance");
    if (j.contains("monitors")) c.monitors = parse_barriers(j["monitors"], "monitors");
    if (j.contains("input_limit")) c.input_limit = get_number(j["input_limit"], "input_limit");
    if (j.contains("log_stride")) c.log_stride = get_count(j["log_stride"], "log_stride");
    return c;
}

json parse_text(std::string_view text) {
    try {
        return json::parse(text.begin(), text.end());
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config: malformed JSON: ") + e.what());
    }
}

}  // namespace

EpisodeConfig parse_config(std::string_view json_text) { return from_json(parse_text(json_text)); }

EpisodeConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

std::string dump_config(const EpisodeConfig& c) {
    json j;
    j["name"] = c.name;
    j["description"] = c.description;
    j["model"] = c.model;
    j["inertia"] = {{"p1", c.model_options.inertia.p1},
                    {"p2", c.model_options.inertia.p2},
                    {"p3", c.model_options.inertia.p3}};

    json ip = {{"mode", c.input.mode == InputPenaltyMode::saturated ? "saturated" : "quadratic"},
               {"r", vec_json(c.input.r_diag)}};
    if (c.input.mode == InputPenaltyMode::saturated) ip["beta"] = c.input.beta;
    j["input_penalty"] = ip;

    json barriers = json::array();
    for (const auto& b : c.state.barriers) barriers.push_back(barrier_json(b));
    j["state_penalty"] = {{"q", mat_json(c.state.q)}, {"barriers", barriers}};
    j["rho"] = c.rho;

    const CriticState cs = c.make_critic();
    j["critic"] = {{"basis", cs.basis.terms()},
                   {"gamma", mat_json(cs.gamma)},
                   {"k_c", c.k_c},
                   {"k_e", c.k_e},
                   {"w0", vec_json(cs.w_hat)}};

    if (c.buffer == BufferKind::online) {
        j["buffer"] = {{"kind", "online"},
                       {"capacity", c.capacity},
                       {"xi", c.xi},
                       {"check_interval", c.check_interval},
                       {"refresh_replay", c.refresh_replay}};
    } else {
        json b = {{"kind", "offline"}, {"lower", vec_json(c.grid.lower)}, {"upper", vec_json(c.grid.upper)}};
        if (!c.grid.counts.empty()) b["counts"] = c.grid.counts;
        if (!c.grid.mesh.empty()) b["mesh"] = vec_json(c.grid.mesh);
        j["buffer"] = b;
    }

    j["x0"] = vec_json(c.x0);
    j["h"] = c.h;
    j["duration"] = c.duration;
    j["seed"] = c.seed;
    j["plant"] = c.plant == PlantMode::disturbed ? "disturbed" : "auxiliary";
    j["resample_disturbance"] = c.resample_disturbance;
    json monitors = json::array();
    for (const auto& b : c.monitors) monitors.push_back(barrier_json(b));
    j["monitors"] = monitors;
    j["input_limit"] = c.input_limit;
    j["log_stride"] = c.log_stride;
    return j.dump(2);
}

GridSpec parse_region(std::string_view json_text) {
    const json j = parse_text(json_text);
    check_keys(j, "region", {"lower", "upper"});
    if (!j.contains("lower") || !j.contains("upper")) fail("region", "needs 'lower' and 'upper'");
    GridSpec g;
    g.lower = get_vec(j["lower"], "region.lower");
    g.upper = get_vec(j["upper"], "region.upper");
    return g;
}

}  // namespace rsadp
