#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include <json.hpp>

#include "rsadp/cli.hpp"
#include "rsadp/config.hpp"
#include "rsadp/errors.hpp"

using namespace rsadp;
namespace fs = std::filesystem;

namespace {

struct Cli {
    int code = 0;
    std::string out, err;
};

Cli cli(std::vector<std::string> args) {
    std::ostringstream out, err;
    Cli r;
    r.code = run_cli(args, out, err);
    r.out = out.str();
    r.err = err.str();
    return r;
}

fs::path scratch(const std::string& tag) {
    std::random_device rd;
    const fs::path p = fs::temp_directory_path() / ("rsadp_test_" + tag + "_" + std::to_string(rd()));
    fs::create_directories(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

}  // namespace

TEST_CASE("every preset round-trips through the JSON dump") {
    for (const auto& name : preset_names()) {
        const std::string text = dump_config(preset(name));
        const EpisodeConfig back = parse_config(text);
        CHECK(dump_config(back) == text);
        CHECK(back.name == name);
    }
}

TEST_CASE("config overrides on top of a preset") {
    const EpisodeConfig c = parse_config(R"({
        "preset": "pendulum_crsp",
        "duration": 2.5,
        "seed": 11,
        "critic": {"k_c": 0.5, "gamma": [1, 2, 3, 4, 5, 6]},
        "buffer": {"kind": "online", "capacity": 4, "check_interval": 10}
    })");
    CHECK(c.duration == 2.5);
    CHECK(c.seed == 11);
    CHECK(c.k_c == 0.5);
    CHECK(c.k_e == 0.001);
    CHECK(c.gamma == Mat::diag(Vec{1, 2, 3, 4, 5, 6}));
    CHECK(c.capacity == 4);
    CHECK(c.check_interval == 10);
    CHECK(c.xi == 1e-3);
    CHECK(c.input.beta == 1.5);
}

TEST_CASE("config from scratch") {
    const EpisodeConfig c = parse_config(R"({
        "name": "custom",
        "model": "pendulum",
        "input_penalty": {"mode": "saturated", "r": [2], "beta": 1.0},
        "state_penalty": {"q": [[1, 0], [0, 2]], "barriers": [{"kind": "rect", "index": 0, "bound": 3}]},
        "rho": 0.5,
        "critic": {"basis": [[2, 0], [0, 2]], "w0": [1, 1]},
        "buffer": {"kind": "offline", "lower": [-1, -1], "upper": [1, 1], "counts": [3, 3]},
        "x0": [0.5, 0.5],
        "duration": 0.1,
        "plant": "disturbed"
    })");
    CHECK(c.basis.size() == 2);
    CHECK(c.buffer == BufferKind::offline);
    CHECK(c.grid.points().size() == 9);
    CHECK(c.plant == PlantMode::disturbed);
    CHECK(c.state.q(1, 1) == 2.0);
    CHECK_NOTHROW(run_episode(c));
}

TEST_CASE("config errors name the offending key") {
    auto message = [](const char* text) {
        try {
            (void)parse_config(text);
        } catch (const ConfigError& e) {
            return std::string(e.what());
        }
        return std::string();
    };
    CHECK(message(R"({"preset": "example1_online", "duratoin": 3})").find("duratoin") != std::string::npos);
    CHECK(message(R"({"critic": {"kc": 1}})").find("critic") != std::string::npos);
    CHECK(message(R"({"buffer": {"kind": "online", "size": 3}})").find("size") != std::string::npos);
    CHECK(message(R"({"h": "small"})").find("h") != std::string::npos);
    CHECK_FALSE(message(R"({"x0": [1, 2)").empty());
    CHECK_FALSE(message(R"({"plant": "real"})").empty());
    CHECK_THROWS_AS(parse_config(R"({"preset": "nope"})"), Error);
}

TEST_CASE("region parsing") {
    const GridSpec g = parse_region(R"({"lower": [-2, -4], "upper": [2, 4]})");
    CHECK(g.lower == Vec{-2.0, -4.0});
    CHECK(g.upper == Vec{2.0, 4.0});
    CHECK_THROWS_AS(parse_region(R"({"lower": [0], "upper": [1], "extra": 1})"), ConfigError);
}

TEST_CASE("cli list shows the five presets") {
    const Cli r = cli({"list"});
    CHECK(r.code == kExitOk);
    std::istringstream ss(r.out);
    std::string line;
    std::vector<std::string> names;
    while (std::getline(ss, line)) names.push_back(line.substr(0, line.find('\t')));
    CHECK(names == preset_names());
    CHECK(r.out.find("example1_online") != std::string::npos);
    CHECK(r.out.find("pendulum_rop") != std::string::npos);
}

TEST_CASE("cli usage errors exit with status 2") {
    CHECK(cli({}).code == kExitConfig);
    CHECK(cli({"frobnicate"}).code == kExitConfig);
    CHECK(cli({"run"}).code == kExitConfig);
    CHECK(cli({"run", "--preset", "example1_online", "--config", "x.json"}).code == kExitConfig);
    CHECK(cli({"run", "--preset", "no_such_preset", "--out", "/tmp/x"}).code == kExitConfig);
    CHECK(cli({"run", "--preset", "example1_offline", "--out", "/tmp/x", "--emit", "pdf"}).code == kExitConfig);
}

TEST_CASE("cli run needs an output directory") {
    ::unsetenv(kOutRootEnv);
    const Cli r = cli({"run", "--preset", "example1_offline"});
    CHECK(r.code == kExitConfig);
    CHECK(r.err.find(kOutRootEnv) != std::string::npos);

    const fs::path root = scratch("env");
    ::setenv(kOutRootEnv, root.c_str(), 1);
    const fs::path cfg = root / "short.json";
    write(cfg, R"({"preset": "example1_offline", "duration": 0.3})");
    const Cli ok = cli({"run", "--config", cfg.string()});
    ::unsetenv(kOutRootEnv);
    CHECK(ok.code == kExitOk);
    CHECK(fs::exists(root / "example1_offline" / "summary.json"));
    fs::remove_all(root);
}

TEST_CASE("cli run writes the requested outputs") {
    const fs::path dir = scratch("run");
    const Cli r = cli({"run", "--preset", "example1_offline", "--out", dir.string()});
    CHECK(r.code == kExitOk);
    for (const char* f : {"trajectory.csv", "summary.json", "plot.gp"}) CHECK(fs::exists(dir / f));
    const auto summary = nlohmann::json::parse(slurp(dir / "summary.json"));
    const auto w = summary["final_weights"].get<std::vector<double>>();
    REQUIRE(w.size() == 3);
    CHECK(std::abs(w[0] - 0.5) < 0.1);
    CHECK(std::abs(w[1]) < 0.1);
    CHECK(std::abs(w[2] - 1.0) < 0.1);
    CHECK(summary["violations"] == 0);

    const fs::path only = scratch("emit");
    CHECK(cli({"run", "--preset", "example1_offline", "--out", only.string(), "--emit", "summary"}).code == kExitOk);
    CHECK(fs::exists(only / "summary.json"));
    CHECK_FALSE(fs::exists(only / "trajectory.csv"));
    fs::remove_all(dir);
    fs::remove_all(only);
}

TEST_CASE("cli dump-config re-parses to the same configuration") {
    const Cli r = cli({"run", "--preset", "pendulum_crsp", "--seed", "7", "--dump-config"});
    REQUIRE(r.code == kExitOk);
    const EpisodeConfig c = parse_config(r.out);
    CHECK(c.seed == 7);
    CHECK(dump_config(c) + "\n" == r.out);

    const fs::path dir = scratch("dump");
    write(dir / "cfg.json", r.out);
    const Cli again = cli({"run", "--config", (dir / "cfg.json").string(), "--dump-config"});
    CHECK(again.out == r.out);
    fs::remove_all(dir);
}

TEST_CASE("cli maps episode failures to exit codes") {
    const fs::path dir = scratch("codes");
    // Zero initial weights make the online benchmark diverge.
    write(dir / "div.json", R"({"preset": "example1_online", "critic": {"w0": [0, 0, 0]}})");
    CHECK(cli({"run", "--config", (dir / "div.json").string(), "--out", (dir / "a").string()}).code == kExitDiverged);

    // Uncontrolled pendulum against a tight velocity barrier.
    write(dir / "hit.json", R"({"preset": "pendulum_crsp", "critic": {"w0": [0, 0, 0, 0, 0, 0]},
        "state_penalty": {"barriers": [{"kind": "rect", "index": 1, "bound": 2.2}]}, "monitors": []})");
    const Cli hit = cli({"run", "--config", (dir / "hit.json").string(), "--out", (dir / "b").string()});
    CHECK(hit.code == kExitConstraint);
    CHECK(hit.err.find("step ") != std::string::npos);

    write(dir / "bad.json", R"({"preset": "example1_online", "bogus": 1})");
    const Cli bad = cli({"run", "--config", (dir / "bad.json").string(), "--out", (dir / "c").string()});
    CHECK(bad.code == kExitConfig);
    CHECK(bad.err.find("bogus") != std::string::npos);
    fs::remove_all(dir);
}

TEST_CASE("cli sweep writes one directory per start") {
    const fs::path dir = scratch("sweep");
    write(dir / "short.json", R"({"preset": "pendulum_crsp", "duration": 0.2})");
    const Cli r = cli({"run", "--config", (dir / "short.json").string(), "--out", (dir / "out").string(), "--starts",
                       "[[1, 0], [0.5, 0.5], [3, 0]]", "--workers", "2"});
    CHECK(r.code == kExitConfig);  // the third start lies outside the barrier
    CHECK(fs::exists(dir / "out" / "start_0" / "summary.json"));
    CHECK(fs::exists(dir / "out" / "start_1" / "trajectory.csv"));
    CHECK_FALSE(fs::exists(dir / "out" / "start_2"));
    const auto index = nlohmann::json::parse(slurp(dir / "out" / "sweep.json"));
    REQUIRE(index.size() == 3);
    CHECK(index[2].contains("error"));
    fs::remove_all(dir);
}

TEST_CASE("cli buffer-build") {
    const fs::path dir = scratch("buf");
    const Cli r = cli({"buffer-build", "--model", "benchmark2", "--region", R"({"lower": [-2, -4], "upper": [2, 4]})",
                       "--counts", "10,10", "--out", (dir / "ex1.buf").string()});
    CHECK(r.code == kExitOk);
    CHECK(r.out.find("P=100") != std::string::npos);
    std::ifstream in(dir / "ex1.buf");
    CHECK(read_offline(in).size() == 100);

    const Cli origin = cli({"buffer-build", "--model", "benchmark2", "--region", R"({"lower": [-1, -1], "upper": [1, 1]})",
                            "--counts", "1,1", "--out", (dir / "o.buf").string()});
    CHECK(origin.code == kExitOk);
    CHECK(origin.out.find("P=1 ") != std::string::npos);
    CHECK(origin.out.find("lambda_min(W=0)=0 ") != std::string::npos);

    const Cli mesh = cli({"buffer-build", "--model", "pendulum", "--region", R"({"lower": [0, 0], "upper": [1, 1]})",
                          "--mesh", "0.5,0.5", "--out", (dir / "m.buf").string()});
    CHECK(mesh.code == kExitOk);
    CHECK(mesh.out.find("P=9") != std::string::npos);

    const Cli outside = cli({"buffer-build", "--model", "manipulator2dof", "--region",
                             R"({"lower": [1, 1, 0, 0], "upper": [2, 2, 0, 0]})", "--counts", "3,3,1,1", "--out",
                             (dir / "x.buf").string()});
    CHECK(outside.code == kExitConfig);
    CHECK(cli({"buffer-build", "--model", "benchmark2", "--region", R"({"lower": [0, 0], "upper": [1, 1]})", "--out",
               (dir / "y.buf").string()})
              .code == kExitConfig);
    CHECK(cli({"buffer-build", "--model", "cartpole", "--region", R"({"lower": [0], "upper": [1]})", "--counts", "2",
               "--out", (dir / "z.buf").string()})
              .code == kExitConfig);
    fs::remove_all(dir);
}
