#include <cmath>
#include <filesystem>
#include <sstream>
#include <string>
#include <vector>

#include "cli_app.hpp"
#include "delaystab/io.hpp"
#include "delaystab/version.hpp"
#include "doctest.h"

using namespace delaystab;
namespace fs = std::filesystem;

namespace {

struct Run {
    int code;
    std::string out, err;
};

struct Sandbox {
    fs::path dir;
    explicit Sandbox(const std::string& name) : dir(fs::temp_directory_path() / ("delaystab_cli_" + name)) {
        fs::remove_all(dir);
        fs::create_directories(dir);
    }
    ~Sandbox() { fs::remove_all(dir); }

    fs::path config(const std::string& text, const std::string& name = "config.json") const {
        write_atomic(dir / name, text);
        return dir / name;
    }
    Run run(std::vector<std::string> args, const std::string& out = "out") const {
        args.push_back("--out");
        args.push_back((dir / out).string());
        std::ostringstream o, e;
        const int code = cli::run_cli(args, o, e);
        return {code, o.str(), e.str()};
    }
    Json json(const std::string& file, const std::string& out = "out") const {
        return Json::parse(read_file(dir / out / file));
    }
    std::string text(const std::string& file, const std::string& out = "out") const {
        return read_file(dir / out / file);
    }
};

const char* kStable = R"("system": {"name": "linear_scalar", "r": 1, "params": {"a": -1, "b": 0}})";
const char* kZero = R"("system": {"name": "linear_scalar", "r": 1, "params": {"a": 0, "b": 0}})";

std::string cfg(std::initializer_list<std::string> parts) {
    std::string s = "{";
    bool first = true;
    for (const auto& p : parts) {
        if (!first) s += ",";
        s += p;
        first = false;
    }
    return s + "}";
}

}  // namespace

TEST_CASE("simulate: exponential decay, zero history and blowup") {
    Sandbox box("simulate");
    auto c = box.config(cfg({kStable, R"("initial": {"constant": 1}, "T": 1)"}));
    Run r = box.run({"simulate", "--config", c.string()});
    REQUIRE(r.code == cli::kOk);
    const Json s = box.json("summary.json");
    CHECK(s["terminal"]["state"][0].get<double>() == doctest::Approx(std::exp(-1.0)).epsilon(1e-8));
    CHECK(s["terminal"]["norms"].size() == 3);
    CHECK(s["version"] == kVersion);
    CHECK(s["config"]["system"]["params"]["a"] == -1.0);
    CHECK(s["config"]["step"] == doctest::Approx(1.0 / 200));

    c = box.config(cfg({kStable, R"("initial": {"constant": 0}, "T": 2)"}));
    REQUIRE(box.run({"simulate", "--config", c.string()}, "zero").code == cli::kOk);
    std::istringstream csv(box.text("trajectory.csv", "zero"));
    std::string line;
    std::getline(csv, line);
    CHECK(line == "t,x_1,dx_1");
    std::size_t rows = 0;
    while (std::getline(csv, line)) {
        ++rows;
        CHECK(line.substr(line.find(',')) == ",0,0");
    }
    CHECK(rows == 601);

    c = box.config(cfg({R"("system": {"name": "quadratic", "r": 1}, "initial": {"constant": 2}, "T": 1)"}));
    r = box.run({"simulate", "--config", c.string()}, "blow");
    CHECK(r.code == cli::kEscaped);
    CHECK(box.json("summary.json", "blow")["escape_time"].get<double>() == doctest::Approx(0.5).epsilon(0.02));
}

TEST_CASE("check: exit codes follow the verdict") {
    Sandbox box("check");
    const std::string budget = R"("budget": {"samples": 12, "family": {"kind": "polynomial", "degree": 0}})";
    auto c = box.config(cfg({kZero, R"("rho": 1, "eps": 0.1)", budget}));
    Run r = box.run({"check", "ga", "--config", c.string()});
    CHECK(r.code == cli::kFalsified);
    const Json rep = box.json("report.json");
    CHECK(rep["report"]["verdict"] == "falsified");
    const Json w = rep["report"]["witness"];
    REQUIRE(w.is_object());
    const auto values = w["initial"]["values"];
    for (const auto& v : values) CHECK(v == values[0]);
    CHECK(rep["config"]["budget"]["samples"] == 12);
    CHECK(rep["config"]["seed"] == 0);

    c = box.config(cfg({R"("system": {"name": "saturating", "r": 1, "params": {"c": 1, "k": 0.5}})",
                        R"("rho": 2, "T": 10, "budget": {"samples": 10})"}));
    CHECK(box.run({"check", "rfc", "--config", c.string()}, "sat").code == cli::kOk);

    c = box.config(cfg({kStable, R"("eps_list": [0.5], "budget": {"samples": 6}, "options": {"horizon": 5})"}));
    r = box.run({"check", "ls", "--config", c.string()}, "ls");
    CHECK(r.code == cli::kOk);
    CHECK(box.json("report.json", "ls")["report"]["tables"]["delta"]["rows"].size() == 1);

    // property given in the config instead of on the command line
    c = box.config(cfg({R"("property": "ga")", kZero, R"("rho": 1, "eps": 0.1)", budget}));
    CHECK(box.run({"check", "--config", c.string()}, "cfgprop").code == cli::kFalsified);
}

TEST_CASE("config validation") {
    Sandbox box("validation");
    auto c = box.config(cfg({kZero, R"("rho": 1, "eps": 0.1, "T": 3)"}));
    Run r = box.run({"check", "ga", "--config", c.string()});
    CHECK(r.code == cli::kError);
    CHECK(r.err.find("unknown key 'T'") != std::string::npos);
    CHECK_FALSE(fs::exists(box.dir / "out" / "report.json"));

    c = box.config(cfg({kZero, R"("rho": 1)"}));
    CHECK(box.run({"check", "ga", "--config", c.string()}).code == cli::kError);
    CHECK(box.run({"check", "nope", "--config", c.string()}).code == cli::kError);
    c = box.config(cfg({R"("system": {"name": "linear_scalar", "r": 1, "params": {"q": 1}})",
                        R"("initial": {"constant": 1}, "T": 1)"}));
    CHECK(box.run({"simulate", "--config", c.string()}).code == cli::kError);
    c = box.config("{not json");
    CHECK(box.run({"simulate", "--config", c.string()}).code == cli::kError);
    CHECK(box.run({"simulate", "--config", (box.dir / "missing.json").string()}).code == cli::kError);
    CHECK(box.run({"frobnicate"}).code == cli::kError);
    c = box.config(cfg({R"("property": "ls")", kZero, R"("rho": 1, "eps": 0.1)"}));
    CHECK(box.run({"check", "ga", "--config", c.string()}).code == cli::kError);
}

TEST_CASE("same config and seed give byte-identical outputs, independent of threads") {
    Sandbox box("determinism");
    const auto c = box.config(cfg({kStable, R"("space": {"kind": "sobolev", "p": 2}, "rho_max": 2, "T": 4,
                                    "times": 30, "shells": 4, "budget": {"samples": 24}, "seed": 11)"}));
    REQUIRE(box.run({"envelope", "--config", c.string(), "--threads", "1"}, "a").code == cli::kOk);
    REQUIRE(box.run({"envelope", "--config", c.string(), "--threads", "3"}, "b").code == cli::kOk);
    for (const char* f : {"envelope.csv", "omega.csv", "envelope.json"}) CHECK(box.text(f, "a") == box.text(f, "b"));
    CHECK(box.json("envelope.json", "a")["config"]["seed"] == 11);
    CHECK(box.text("envelope.csv", "a").rfind("s\\t,0,", 0) == 0);

    // --seed overrides the config
    REQUIRE(box.run({"envelope", "--config", c.string(), "--seed", "12"}, "c").code == cli::kOk);
    CHECK(box.json("envelope.json", "c")["config"]["seed"] == 12);
    CHECK(box.text("envelope.csv", "a") != box.text("envelope.csv", "c"));
}

TEST_CASE("norms and lyapunov commands") {
    Sandbox box("lyap");
    auto c = box.config(cfg({R"("segment": {"r": 1, "nodes": [-1, -0.5, 0], "values": [-1, -0.5, 0], "derivs": [1, 1, 1]},
                              "spaces": [{"kind": "sup_c0"}, {"kind": "sobolev", "p": 2}, {"kind": "hoelder", "a": 1}])"}));
    REQUIRE(box.run({"norms", "--config", c.string()}).code == cli::kOk);
    const Json n = box.json("norms.json");
    CHECK(n["norms"][0]["value"].get<double>() == doctest::Approx(1.0));
    CHECK(n["norms"][1]["value"].get<double>() == doctest::Approx(2.0));
    CHECK(n["norms"][2]["value"].get<double>() == doctest::Approx(1.0));
    CHECK(box.text("segment.csv") == "s,x_1,dx_1\n-1,-1,1\n-0.5,-0.5,1\n0,0,1\n");

    const std::string V = R"("functional": {"kind": "weighted_sup", "rate": 1}, "rho": 1, "T": 3,
                             "budget": {"samples": 8}, "options": {"report_times": 30})";
    c = box.config(cfg({R"("condition": "theorem5")", kStable, V, R"("a1": {"linear": 0.36787944117144233}, "a2": {"linear": 1})"}));
    CHECK(box.run({"lyapunov", "--config", c.string()}, "t5").code == cli::kOk);
    c = box.config(cfg({kStable, V, R"("a1": {"linear": 1}, "a2": {"linear": 1}, "Q": {"linear": 0.36787944117144233})"}));
    CHECK(box.run({"lyapunov", "theorem6", "--config", c.string()}, "t6").code == cli::kOk);
    c = box.config(cfg({R"("system": {"name": "linear_scalar", "r": 1, "params": {"a": 0, "b": 1}})", V,
                        R"("a": {"linear": 1}, "mu": 0)"}));
    CHECK(box.run({"lyapunov", "rfc-sufficient", "--config", c.string()}, "rs").code == cli::kFalsified);
    CHECK(box.json("report.json", "rs")["config"]["mu"] == 0.0);
}
