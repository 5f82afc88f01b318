#include "cli_app.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <optional>

#include "CLI11.hpp"

#include "delaystab/io.hpp"
#include "delaystab/lyapunov.hpp"
#include "delaystab/parallel.hpp"
#include "delaystab/simulate.hpp"
#include "delaystab/stability.hpp"
#include "delaystab/version.hpp"

namespace delaystab::cli {

namespace fs = std::filesystem;

namespace {

struct Context {
    Json config;
    std::uint64_t seed = 0;
    fs::path out_dir;
    std::optional<std::string> selector;  // property or condition from the command line
    std::ostream* out = nullptr;
};

[[noreturn]] void bad(const std::string& msg) { throw ConfigError(msg); }

const Json* find(const Json& j, const char* key) {
    auto it = j.find(key);
    return it == j.end() ? nullptr : &*it;
}

double number(const Json& j, const char* key, std::optional<double> fallback = std::nullopt) {
    if (const Json* v = find(j, key)) return number_from_json(*v, key);
    if (!fallback) bad(std::string("missing key '") + key + "'");
    return *fallback;
}

std::size_t count(const Json& j, const char* key, std::size_t fallback) {
    const Json* v = find(j, key);
    if (!v) return fallback;
    if (!v->is_number_unsigned()) bad(std::string(key) + ": expected a nonnegative integer");
    return v->get<std::size_t>();
}

std::vector<double> numbers(const Json& j, const char* key) {
    const Json* v = find(j, key);
    if (!v) bad(std::string("missing key '") + key + "'");
    if (!v->is_array() || v->empty()) bad(std::string(key) + ": expected a nonempty array");
    std::vector<double> out;
    for (const auto& e : *v) out.push_back(number_from_json(e, key));
    return out;
}

Json numbers_json(const std::vector<double>& v) {
    Json a = Json::array();
    for (double x : v) a.push_back(number_json(x));
    return a;
}

DelaySystem system_of(const Json& config) {
    const Json* j = find(config, "system");
    if (!j) bad("missing key 'system'");
    try {
        return make_system(system_def_from_json(*j));
    } catch (const std::invalid_argument& e) {
        bad(std::string("system: ") + e.what());
    }
}

SpaceSpec space_of(const Json& config) {
    const Json* j = find(config, "space");
    return j ? space_from_json(*j) : SpaceSpec::sup_c0();
}

CheckOptions options_of(const Json& config) {
    CheckOptions o;
    const Json* j = find(config, "options");
    if (!j) return o;
    expect_keys(*j, {"horizon", "report_times", "step", "refine", "hoelder_cap", "polish"}, "options");
    o.horizon = number(*j, "horizon", 0.0);
    o.report_times = count(*j, "report_times", o.report_times);
    o.step = number(*j, "step", 0.0);
    o.norms.refine = static_cast<unsigned>(count(*j, "refine", o.norms.refine));
    o.norms.hoelder_cap = count(*j, "hoelder_cap", o.norms.hoelder_cap);
    if (const Json* p = find(*j, "polish")) {
        if (!p->is_boolean()) bad("options.polish: expected a boolean");
        o.norms.polish = p->get<bool>();
    }
    if (o.norms.refine < 2 || o.norms.refine % 2) bad("options.refine: expected an even number >= 2");
    return o;
}

Json to_json(const CheckOptions& o) {
    return {{"horizon", o.horizon},         {"report_times", o.report_times}, {"step", o.step},
            {"refine", o.norms.refine},     {"hoelder_cap", o.norms.hoelder_cap}, {"polish", o.norms.polish}};
}

Budget budget_of(const Json& config, std::uint64_t seed) {
    Budget b;
    b.seed = seed;
    const Json* j = find(config, "budget");
    if (!j) return b;
    expect_keys(*j, {"samples", "family", "radial", "intervals"}, "budget");
    b.samples = count(*j, "samples", b.samples);
    if (b.samples == 0) bad("budget.samples must be positive");
    if (const Json* f = find(*j, "family")) b.family = family_from_json(*f);
    if (const Json* r = find(*j, "radial")) b.radial = radial_from_json(*r);
    b.intervals = count(*j, "intervals", b.intervals);
    return b;
}

Json to_json(const Budget& b) {
    return {{"samples", b.samples}, {"family", delaystab::to_json(b.family)}, {"radial", to_string(b.radial)},
            {"intervals", b.intervals}};
}

// {"constant": c | [c..], "intervals"} | {"segment": {...}} | {"sample": {...}}
Segment initial_of(const Json& j, const DelaySystem& sys, std::uint64_t seed, Json& resolved) {
    expect_keys(j, {"constant", "intervals", "segment", "sample"}, "initial");
    if (j.size() == 0) bad("initial: expected one of constant, segment, sample");
    if (const Json* c = find(j, "constant")) {
        expect_keys(j, {"constant", "intervals"}, "initial");
        std::vector<double> v;
        if (c->is_array())
            for (const auto& e : *c) v.push_back(number_from_json(e, "initial.constant"));
        else
            v.assign(sys.dim(), number_from_json(*c, "initial.constant"));
        if (v.size() != sys.dim()) bad("initial.constant: dimension does not match the system");
        const std::size_t intervals = count(j, "intervals", 200);
        resolved = {{"constant", numbers_json(v)}, {"intervals", intervals}};
        try {
            return Segment::constant(sys.delay(), v, intervals);
        } catch (const std::invalid_argument& e) {
            bad(std::string("initial: ") + e.what());
        }
    }
    if (const Json* s = find(j, "segment")) {
        expect_keys(j, {"segment"}, "initial");
        Segment seg = segment_from_json(*s);
        if (seg.dim() != sys.dim()) bad("initial.segment: dimension does not match the system");
        if (std::abs(seg.delay() - sys.delay()) > 1e-12 * sys.delay()) bad("initial.segment: delay does not match the system");
        resolved = {{"segment", delaystab::to_json(seg)}};
        return seg;
    }
    expect_keys(j, {"sample"}, "initial");
    const Json& s = j["sample"];
    expect_keys(s, {"family", "space", "radius", "radial", "index", "intervals"}, "initial.sample");
    SamplerConfig cfg;
    cfg.family = find(s, "family") ? family_from_json(s["family"]) : SamplerFamily{FourierFamily{}};
    cfg.target_space = find(s, "space") ? space_from_json(s["space"]) : SpaceSpec::sup_c0();
    cfg.target_norm = number(s, "radius", 1.0);
    cfg.radial = find(s, "radial") ? radial_from_json(s["radial"]) : RadialMode::Boundary;
    cfg.intervals = count(s, "intervals", 200);
    cfg.dimension = sys.dim();
    cfg.delay = sys.delay();
    cfg.seed = seed;
    const std::size_t index = count(s, "index", 0);
    resolved = {{"sample",
                 {{"family", delaystab::to_json(cfg.family)}, {"space", delaystab::to_json(cfg.target_space)},
                  {"radius", cfg.target_norm}, {"radial", to_string(cfg.radial)}, {"index", index},
                  {"intervals", cfg.intervals}}}};
    try {
        validate(cfg);
    } catch (const std::invalid_argument& e) {
        bad(std::string("initial.sample: ") + e.what());
    }
    return sample_one(cfg, index);
}

Json resolved_base(const Context& ctx, const char* command) {
    return {{"command", command}, {"seed", ctx.seed}};
}

void emit(const Context& ctx, const char* name, const std::string& text) {
    write_atomic(ctx.out_dir / name, text);
    *ctx.out << "wrote " << (ctx.out_dir / name).string() << "\n";
}

std::string dump(const Json& j) { return j.dump(2) + "\n"; }

int exit_for(Verdict v) {
    switch (v) {
        case Verdict::Consistent: return kOk;
        case Verdict::Falsified: return kFalsified;
        case Verdict::Inconclusive: return kInconclusive;
    }
    return kError;
}

std::string selector(const Context& ctx, const char* key) {
    const Json* j = find(ctx.config, key);
    if (j && !j->is_string()) bad(std::string(key) + ": expected a string");
    if (ctx.selector && j && j->get<std::string>() != *ctx.selector)
        bad(std::string(key) + ": command line and config disagree");
    if (ctx.selector) return *ctx.selector;
    if (j) return j->get<std::string>();
    bad(std::string("missing ") + key);
}

// ---------------------------------------------------------------------------

const std::vector<SpaceSpec> kSummarySpaces = {SpaceSpec::sup_c0(), SpaceSpec::sobolev(2), SpaceSpec::hoelder(0.5)};

Json norms_json(const HermiteCurve& x, const std::vector<SpaceSpec>& spaces, const NormOptions& norms) {
    Json out = Json::array();
    for (const auto& s : spaces)
        out.push_back({{"space", delaystab::to_json(s)}, {"label", s.label()}, {"value", number_json(space_norm(x, s, norms))}});
    return out;
}

std::vector<SpaceSpec> spaces_of(const Json& config) {
    const Json* j = find(config, "spaces");
    if (!j) return kSummarySpaces;
    if (!j->is_array() || j->empty()) bad("spaces: expected a nonempty array");
    std::vector<SpaceSpec> out;
    for (const auto& s : *j) out.push_back(space_from_json(s));
    return out;
}

Json spaces_json(const std::vector<SpaceSpec>& spaces) {
    Json a = Json::array();
    for (const auto& s : spaces) a.push_back(delaystab::to_json(s));
    return a;
}

int cmd_simulate(const Context& ctx) {
    const Json& c = ctx.config;
    expect_keys(c, {"system", "initial", "T", "step", "seed", "spaces", "options"}, "simulate config");
    const DelaySystem sys = system_of(c);
    const double T = number(c, "T");
    const double step = number(c, "step", 0.0);
    const CheckOptions opts = options_of(c);
    const auto spaces = spaces_of(c);
    Json init_resolved;
    const Json* init = find(c, "initial");
    if (!init) bad("missing key 'initial'");
    const Segment x0 = initial_of(*init, sys, ctx.seed, init_resolved);
    if (!(T > 0) || !std::isfinite(T)) bad("T must be positive");

    Trajectory tr = [&] {
        try {
            return simulate(sys, x0, T, step);
        } catch (const std::invalid_argument& e) {
            bad(std::string("simulate: ") + e.what());
        }
    }();
    Json resolved = resolved_base(ctx, "simulate");
    resolved["system"] = delaystab::to_json(sys.definition());
    resolved["initial"] = init_resolved;
    resolved["T"] = T;
    resolved["step"] = tr.step();
    resolved["spaces"] = spaces_json(spaces);
    resolved["options"] = to_json(opts);

    const double t_end = tr.end_time();
    Json summary = {{"version", kVersion},
                    {"config", resolved},
                    {"escaped", tr.escaped()},
                    {"escape_time", tr.escaped() ? number_json(tr.escape_time()) : Json(nullptr)},
                    {"end_time", t_end},
                    {"steps", tr.mesh_times().size() - 1}};
    summary["terminal"] = {{"time", t_end},
                           {"state", numbers_json(tr.state(t_end))},
                           {"norms", norms_json(tr.curve_at(t_end), spaces, opts.norms)}};
    emit(ctx, "trajectory.csv", trajectory_csv(tr));
    emit(ctx, "summary.json", dump(summary));
    if (tr.escaped()) {
        *ctx.out << "escaped at t = " << format_double(tr.escape_time()) << "\n";
        return kEscaped;
    }
    return kOk;
}

int cmd_norms(const Context& ctx) {
    const Json& c = ctx.config;
    expect_keys(c, {"system", "initial", "segment", "seed", "spaces", "options"}, "norms config");
    const CheckOptions opts = options_of(c);
    const auto spaces = spaces_of(c);
    Json resolved = resolved_base(ctx, "norms");
    std::optional<Segment> x;
    if (const Json* s = find(c, "segment")) {
        if (find(c, "initial") || find(c, "system")) bad("norms: give either 'segment' or 'system' with 'initial'");
        x = segment_from_json(*s);
        resolved["segment"] = delaystab::to_json(*x);
    } else {
        const DelaySystem sys = system_of(c);
        const Json* init = find(c, "initial");
        if (!init) bad("norms: missing 'segment' or 'initial'");
        Json init_resolved;
        x = initial_of(*init, sys, ctx.seed, init_resolved);
        resolved["system"] = delaystab::to_json(sys.definition());
        resolved["initial"] = init_resolved;
    }
    resolved["spaces"] = spaces_json(spaces);
    resolved["options"] = to_json(opts);
    Json report = {{"version", kVersion}, {"config", resolved}, {"norms", norms_json(x->curve(), spaces, opts.norms)}};
    report["sup"] = sup_norm(*x, opts.norms);
    report["max_abs_deriv"] = max_abs_deriv(*x, opts.norms);
    emit(ctx, "segment.csv", segment_csv(*x));
    emit(ctx, "norms.json", dump(report));
    return kOk;
}

int cmd_check(const Context& ctx) {
    const Json& c = ctx.config;
    const std::string property = selector(ctx, "property");
    const std::vector<std::string_view> common = {"property", "system", "space", "budget", "options", "seed"};
    std::vector<std::string_view> extra;
    if (property == "ls") extra = {"eps_list"};
    else if (property == "ga" || property == "uga") extra = {"rho", "eps"};
    else if (property == "lags") extra = {"rho"};
    else if (property == "rfc") extra = {"rho", "T"};
    else if (property == "gas-vs-ugas") extra = {"rho_list", "eps_list"};
    else bad("check: unknown property '" + property + "' (expected ls, ga, uga, lags, rfc, gas-vs-ugas)");
    for (auto it = c.begin(); it != c.end(); ++it) {
        const bool ok = std::find(common.begin(), common.end(), it.key()) != common.end() ||
                        std::find(extra.begin(), extra.end(), it.key()) != extra.end();
        if (!ok) bad("check " + property + ": unknown key '" + it.key() + "'");
    }
    const DelaySystem sys = system_of(c);
    const SpaceSpec space = space_of(c);
    const Budget budget = budget_of(c, ctx.seed);
    const CheckOptions opts = options_of(c);

    Json resolved = resolved_base(ctx, "check");
    resolved["property"] = property;
    resolved["system"] = delaystab::to_json(sys.definition());
    resolved["space"] = delaystab::to_json(space);
    resolved["budget"] = to_json(budget);
    resolved["options"] = to_json(opts);

    StabilityReport rep;
    try {
        if (property == "ls") {
            const auto eps = numbers(c, "eps_list");
            resolved["eps_list"] = numbers_json(eps);
            rep = check_ls(sys, space, eps, budget, opts);
        } else if (property == "ga") {
            const double rho = number(c, "rho"), eps = number(c, "eps");
            resolved["rho"] = rho;
            resolved["eps"] = eps;
            rep = check_ga(sys, space, rho, eps, budget, opts);
        } else if (property == "uga") {
            const double rho = number(c, "rho"), eps = number(c, "eps");
            resolved["rho"] = rho;
            resolved["eps"] = eps;
            rep = check_uga(sys, space, eps, rho, budget, opts);
        } else if (property == "lags") {
            const double rho = number(c, "rho");
            resolved["rho"] = rho;
            rep = check_lags(sys, space, rho, budget, opts);
        } else if (property == "rfc") {
            const double rho = number(c, "rho"), T = number(c, "T");
            resolved["rho"] = rho;
            resolved["T"] = T;
            rep = check_rfc(sys, space, rho, T, budget, opts);
        } else {
            const auto rhos = numbers(c, "rho_list"), eps = numbers(c, "eps_list");
            resolved["rho_list"] = numbers_json(rhos);
            resolved["eps_list"] = numbers_json(eps);
            rep = check_gas_vs_ugas(sys, space, rhos, eps, budget, opts);
        }
    } catch (const std::invalid_argument& e) {
        bad(std::string("check: ") + e.what());
    }
    emit(ctx, "report.json", dump({{"version", kVersion}, {"config", resolved}, {"report", delaystab::to_json(rep)}}));
    *ctx.out << property << ": " << to_string(rep.verdict) << "\n";
    return exit_for(rep.verdict);
}

int cmd_envelope(const Context& ctx) {
    const Json& c = ctx.config;
    expect_keys(c, {"system", "space", "rho_max", "T", "times", "shells", "ratio", "mode", "floor", "lipschitz",
                    "budget", "options", "seed"},
                "envelope config");
    const DelaySystem sys = system_of(c);
    const SpaceSpec space = space_of(c);
    const Budget budget = budget_of(c, ctx.seed);
    const CheckOptions opts = options_of(c);
    const double rho_max = number(c, "rho_max");
    const double T = number(c, "T", 20 * sys.delay());
    const std::size_t times = count(c, "times", 200);
    EnvelopeOptions env;
    env.shells = count(c, "shells", env.shells);
    env.shell_ratio = number(c, "ratio", env.shell_ratio);
    std::string mode = "same_space";
    if (const Json* m = find(c, "mode")) mode = m->get<std::string>();
    if (mode == "same_space") env.mode = EnvelopeMode::SameSpace;
    else if (mode == "qx") env.mode = EnvelopeMode::QX;
    else bad("envelope.mode: expected same_space or qx");
    if (const Json* f = find(c, "floor")) {
        if (!f->is_boolean()) bad("envelope.floor: expected a boolean");
        env.floor_at_s = f->get<bool>();
    }
    // Lipschitz modulus for omega: "system", a constant, or "none"
    Json lip = "system";
    if (const Json* l = find(c, "lipschitz")) lip = *l;
    std::optional<LipschitzModulus> L;
    if (lip.is_string() && lip.get<std::string>() == "system") L = sys.modulus();
    else if (lip.is_number()) {
        const double v = lip.get<double>();
        if (!(v >= 0)) bad("envelope.lipschitz: expected a nonnegative constant");
        L = [v](double) { return v; };
    } else if (!(lip.is_string() && lip.get<std::string>() == "none"))
        bad("envelope.lipschitz: expected \"system\", \"none\" or a number");

    Json resolved = resolved_base(ctx, "envelope");
    resolved["system"] = delaystab::to_json(sys.definition());
    resolved["space"] = delaystab::to_json(space);
    resolved["budget"] = to_json(budget);
    resolved["options"] = to_json(opts);
    resolved["rho_max"] = rho_max;
    resolved["T"] = T;
    resolved["times"] = times;
    resolved["shells"] = env.shells;
    resolved["ratio"] = env.shell_ratio;
    resolved["mode"] = mode;
    resolved["floor"] = env.floor_at_s;
    resolved["lipschitz"] = lip;

    KLEnvelope sigma;
    std::optional<KLEnvelope> omega;
    try {
        const double step = opts.step > 0 ? opts.step : sys.delay() / 200;
        const auto grid = report_times(sys.delay(), T, times, step);
        sigma = fit_kl_envelope(sys, space, rho_max, grid, budget, env, opts);
        if (L) omega = omega_from_sigma(sigma, sys.delay(), space.paired_p(), *L);
    } catch (const std::invalid_argument& e) {
        bad(std::string("envelope: ") + e.what());
    }
    std::vector<bool> absent = sigma.absent;
    Json summary = {{"version", kVersion},
                    {"config", resolved},
                    {"s_grid", numbers_json(sigma.s_grid)},
                    {"counts", sigma.counts},
                    {"absent", absent},
                    {"decaying", sigma.decaying},
                    {"non_decay", sigma.non_decay},
                    {"kl_shape", has_kl_shape(sigma)},
                    {"omega", omega.has_value()}};
    emit(ctx, "envelope.csv", envelope_csv(sigma));
    if (omega) emit(ctx, "omega.csv", envelope_csv(*omega));
    emit(ctx, "envelope.json", dump(summary));
    *ctx.out << "envelope: " << (sigma.decaying ? "decaying" : sigma.non_decay ? "non-decaying" : "undecided") << "\n";
    return kOk;
}

int cmd_lyapunov(const Context& ctx) {
    const Json& c = ctx.config;
    const std::string condition = selector(ctx, "condition");
    const std::vector<std::string_view> common = {"condition", "system", "space", "functional", "rho",  "T",
                                                  "trajectories", "budget", "options", "dini", "seed"};
    std::vector<std::string_view> extra;
    if (condition == "theorem5") extra = {"a1", "a2"};
    else if (condition == "theorem6") extra = {"a1", "a2", "Q"};
    else if (condition == "rfc-sufficient") extra = {"a", "mu"};
    else bad("lyapunov: unknown condition '" + condition + "' (expected theorem5, theorem6, rfc-sufficient)");
    for (auto it = c.begin(); it != c.end(); ++it) {
        const bool ok = std::find(common.begin(), common.end(), it.key()) != common.end() ||
                        std::find(extra.begin(), extra.end(), it.key()) != extra.end();
        if (!ok) bad("lyapunov " + condition + ": unknown key '" + it.key() + "'");
    }
    const DelaySystem sys = system_of(c);
    const SpaceSpec space = space_of(c);
    const Budget budget = budget_of(c, ctx.seed);
    LyapunovOptions opts;
    opts.check = options_of(c);
    opts.trajectories = count(c, "trajectories", 0);
    if (const Json* d = find(c, "dini")) {
        expect_keys(*d, {"h0_fraction", "levels", "ratio", "substeps"}, "dini");
        opts.dini.h0_fraction = number(*d, "h0_fraction", opts.dini.h0_fraction);
        opts.dini.levels = count(*d, "levels", opts.dini.levels);
        opts.dini.ratio = number(*d, "ratio", opts.dini.ratio);
        opts.dini.substeps = count(*d, "substeps", opts.dini.substeps);
    }
    const Json* fj = find(c, "functional");
    if (!fj) bad("missing key 'functional'");
    const Functional V = functional_from_json(*fj);
    const double rho = number(c, "rho", 1.0);
    const double T = number(c, "T", 5 * sys.delay());
    auto grid = [&](const char* key) {
        const Json* j = find(c, key);
        if (!j) bad(std::string("missing key '") + key + "'");
        return grid_function_from_json(*j);
    };

    Json resolved = resolved_base(ctx, "lyapunov");
    resolved["condition"] = condition;
    resolved["system"] = delaystab::to_json(sys.definition());
    resolved["space"] = delaystab::to_json(space);
    resolved["functional"] = delaystab::to_json(V);
    resolved["budget"] = to_json(budget);
    resolved["options"] = to_json(opts.check);
    resolved["dini"] = {{"h0_fraction", opts.dini.h0_fraction}, {"levels", opts.dini.levels},
                        {"ratio", opts.dini.ratio},             {"substeps", opts.dini.substeps}};
    resolved["rho"] = rho;
    resolved["T"] = T;
    resolved["trajectories"] = opts.trajectories;

    StabilityReport rep;
    try {
        if (condition == "theorem5") {
            const auto a1 = grid("a1"), a2 = grid("a2");
            resolved["a1"] = delaystab::to_json(a1);
            resolved["a2"] = delaystab::to_json(a2);
            rep = check_theorem5(sys, V, a1, a2, space, rho, T, budget, opts);
        } else if (condition == "theorem6") {
            const auto a1 = grid("a1"), a2 = grid("a2");
            const RadialFunction Q(grid("Q"));
            resolved["a1"] = delaystab::to_json(a1);
            resolved["a2"] = delaystab::to_json(a2);
            resolved["Q"] = delaystab::to_json(Q.profile());
            rep = check_theorem6(sys, V, a1, a2, Q, space, rho, T, budget, opts);
        } else {
            const auto a = grid("a");
            const double mu = number(c, "mu");
            resolved["a"] = delaystab::to_json(a);
            resolved["mu"] = mu;
            rep = check_rfc_sufficient(sys, V, a, mu, space, rho, T, budget, opts);
        }
    } catch (const std::invalid_argument& e) {
        bad(std::string("lyapunov: ") + e.what());
    }
    emit(ctx, "report.json", dump({{"version", kVersion}, {"config", resolved}, {"report", delaystab::to_json(rep)}}));
    *ctx.out << condition << ": " << to_string(rep.verdict) << "\n";
    return exit_for(rep.verdict);
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Numerical toolkit for retarded functional differential equations", "delaystab"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1, 1);

    std::string config_path;
    std::uint64_t seed = 0;
    std::string out_dir = ".";
    unsigned threads = 0;
    bool threads_given = false;
    std::string chosen;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "JSON configuration file")->required()->check(CLI::ExistingFile);
        sub->add_option("--seed", seed, "Random seed (overrides the config)");
        sub->add_option("--out", out_dir, "Output directory");
        sub->add_option_function<unsigned>(
            "--threads", [&](const unsigned& n) { threads = n, threads_given = true; },
            "Worker threads (0 = auto; DELAYSTAB_THREADS is the fallback)");
    };
    add_common(app.add_subcommand("simulate", "Integrate one initial history"));
    add_common(app.add_subcommand("norms", "Evaluate segment norms"));
    auto* check = app.add_subcommand("check", "Check a stability property");
    add_common(check);
    check->add_option("property", chosen, "ls, ga, uga, lags, rfc or gas-vs-ugas");
    add_common(app.add_subcommand("envelope", "Fit a KL envelope and build omega"));
    auto* lyap = app.add_subcommand("lyapunov", "Check Lyapunov-Krasovskii conditions");
    add_common(lyap);
    lyap->add_option("condition", chosen, "theorem5, theorem6 or rfc-sufficient");

    try {
        std::vector<std::string> rev(args.rbegin(), args.rend());
        app.parse(rev);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return kOk;
    } catch (const CLI::CallForVersion&) {
        out << kVersion << "\n";
        return kOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n";
        return kError;
    }

    const std::string command = app.get_subcommands().front()->get_name();
    try {
        Context ctx;
        try {
            ctx.config = Json::parse(read_file(config_path));
        } catch (const Json::parse_error& e) {
            bad(std::string("config is not valid JSON: ") + e.what());
        }
        if (!ctx.config.is_object()) bad("config must be a JSON object");
        const bool seed_flag = app.get_subcommands().front()->count("--seed") > 0;
        if (seed_flag) {
            ctx.seed = seed;
        } else if (const Json* s = find(ctx.config, "seed")) {
            if (!s->is_number_unsigned()) bad("seed: expected a nonnegative integer");
            ctx.seed = s->get<std::uint64_t>();
        }
        ctx.out_dir = out_dir;
        fs::create_directories(ctx.out_dir);
        if (!chosen.empty()) ctx.selector = chosen;
        ctx.out = &out;
        set_thread_count(threads_given ? threads : 0);

        if (command == "simulate") return cmd_simulate(ctx);
        if (command == "norms") return cmd_norms(ctx);
        if (command == "check") return cmd_check(ctx);
        if (command == "envelope") return cmd_envelope(ctx);
        return cmd_lyapunov(ctx);
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << "\n";
    } catch (const Json::exception& e) {
        err << "config error: " << e.what() << "\n";
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
    }
    return kError;
}

}  // namespace delaystab::cli
