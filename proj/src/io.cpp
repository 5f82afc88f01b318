#include "delaystab/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <system_error>

#include <unistd.h>

namespace delaystab {

namespace {

template <typename... Args>
[[noreturn]] void fail(Args&&... parts) {
    std::ostringstream os;
    (os << ... << parts);
    throw ConfigError(os.str());
}

const Json& require(const Json& j, const char* key, std::string_view context) {
    auto it = j.find(key);
    if (it == j.end()) fail(context, ": missing key '", key, "'");
    return *it;
}

std::vector<double> number_array(const Json& j, std::string_view what) {
    if (!j.is_array()) fail(what, ": expected an array");
    std::vector<double> out;
    out.reserve(j.size());
    for (const auto& v : j) out.push_back(number_from_json(v, what));
    return out;
}

// Flat for n = 1, nested otherwise; either form is accepted on input.
Json node_array(const std::vector<double>& flat, std::size_t n) {
    Json out = Json::array();
    const std::size_t count = flat.size() / n;
    for (std::size_t i = 0; i < count; ++i) {
        if (n == 1) {
            out.push_back(number_json(flat[i]));
        } else {
            Json row = Json::array();
            for (std::size_t k = 0; k < n; ++k) row.push_back(number_json(flat[i * n + k]));
            out.push_back(std::move(row));
        }
    }
    return out;
}

std::vector<double> node_values(const Json& j, std::size_t nodes, std::size_t& n, std::string_view what) {
    if (!j.is_array() || j.size() != nodes) fail(what, ": expected one entry per node");
    std::vector<double> out;
    for (const auto& e : j) {
        if (e.is_array()) {
            if (n == 0) n = e.size();
            if (e.size() != n || n == 0) fail(what, ": node vectors must share one positive length");
            for (const auto& v : e) out.push_back(number_from_json(v, what));
        } else {
            if (n == 0) n = 1;
            if (n != 1) fail(what, ": mixed scalar and vector entries");
            out.push_back(number_from_json(e, what));
        }
    }
    return out;
}

std::string csv_row(std::initializer_list<double> lead, std::span<const double> a, std::span<const double> b) {
    std::string row;
    bool first = true;
    auto put = [&](double v) {
        if (!first) row += ',';
        row += format_double(v);
        first = false;
    };
    for (double v : lead) put(v);
    for (double v : a) put(v);
    for (double v : b) put(v);
    row += '\n';
    return row;
}

std::string csv_header(const char* lead, std::size_t n) {
    std::string h = lead;
    for (std::size_t k = 1; k <= n; ++k) h += ",x_" + std::to_string(k);
    for (std::size_t k = 1; k <= n; ++k) h += ",dx_" + std::to_string(k);
    return h + "\n";
}

}  // namespace

std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

Json number_json(double v) {
    if (std::isfinite(v)) return v;
    return format_double(v);
}

double number_from_json(const Json& j, std::string_view what) {
    if (j.is_number()) return j.get<double>();
    if (j.is_string()) {
        const auto s = j.get<std::string>();
        if (s == "inf" || s == "infinity") return INFINITY;
        if (s == "-inf") return -INFINITY;
    }
    fail(what, ": expected a number");
}

void expect_keys(const Json& j, std::initializer_list<std::string_view> allowed, std::string_view context) {
    if (!j.is_object()) fail(context, ": expected an object");
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool ok = false;
        for (auto a : allowed) ok = ok || it.key() == a;
        if (!ok) fail(context, ": unknown key '", it.key(), "'");
    }
}

// ---------------------------------------------------------------------------

Json to_json(const SpaceSpec& space) {
    switch (space.kind) {
        case SpaceSpec::Kind::SupC0: return {{"kind", "sup_c0"}};
        case SpaceSpec::Kind::Sobolev: return {{"kind", "sobolev"}, {"p", number_json(space.p)}};
        case SpaceSpec::Kind::Hoelder: return {{"kind", "hoelder"}, {"a", space.a}};
    }
    return {};
}

SpaceSpec space_from_json(const Json& j) {
    expect_keys(j, {"kind", "p", "a"}, "space");
    const auto kind = require(j, "kind", "space").get<std::string>();
    try {
        if (kind == "sup_c0") {
            expect_keys(j, {"kind"}, "space sup_c0");
            return SpaceSpec::sup_c0();
        }
        if (kind == "sobolev") {
            expect_keys(j, {"kind", "p"}, "space sobolev");
            return SpaceSpec::sobolev(number_from_json(require(j, "p", "space"), "space.p"));
        }
        if (kind == "hoelder") {
            expect_keys(j, {"kind", "a"}, "space hoelder");
            return SpaceSpec::hoelder(number_from_json(require(j, "a", "space"), "space.a"));
        }
    } catch (const std::invalid_argument& e) {
        fail("space: ", e.what());
    }
    fail("space: unknown kind '", kind, "'");
}

Json to_json(const SystemDef& def) {
    Json params = Json::object();
    for (const auto& [k, v] : def.params) params[k] = v;
    return {{"name", def.name}, {"n", def.n}, {"r", def.r}, {"params", params}};
}

SystemDef system_def_from_json(const Json& j) {
    expect_keys(j, {"name", "n", "r", "params"}, "system");
    SystemDef def;
    def.name = require(j, "name", "system").get<std::string>();
    if (j.contains("n")) {
        if (!j["n"].is_number_unsigned() || j["n"].get<std::size_t>() == 0) fail("system.n: expected a positive integer");
        def.n = j["n"].get<std::size_t>();
    }
    def.r = number_from_json(require(j, "r", "system"), "system.r");
    if (j.contains("params")) {
        if (!j["params"].is_object()) fail("system.params: expected an object");
        for (auto it = j["params"].begin(); it != j["params"].end(); ++it)
            def.params[it.key()] = number_from_json(it.value(), "system.params");
    }
    return def;
}

Json to_json(const SamplerFamily& family) {
    return std::visit(
        [](const auto& f) -> Json {
            using F = std::decay_t<decltype(f)>;
            if constexpr (std::is_same_v<F, FourierFamily>)
                return {{"kind", "fourier"}, {"harmonics", f.harmonics}};
            else if constexpr (std::is_same_v<F, PolynomialFamily>)
                return {{"kind", "polynomial"}, {"degree", f.degree}};
            else
                return {{"kind", "piecewise_linear"}, {"breakpoints", f.breakpoints}};
        },
        family);
}

SamplerFamily family_from_json(const Json& j) {
    expect_keys(j, {"kind", "harmonics", "degree", "breakpoints"}, "family");
    const auto kind = require(j, "kind", "family").get<std::string>();
    auto count = [&](const char* key, unsigned def) {
        if (!j.contains(key)) return def;
        if (!j[key].is_number_unsigned()) fail("family.", key, ": expected a nonnegative integer");
        return j[key].get<unsigned>();
    };
    if (kind == "fourier") {
        expect_keys(j, {"kind", "harmonics"}, "family fourier");
        return FourierFamily{count("harmonics", 3)};
    }
    if (kind == "polynomial") {
        expect_keys(j, {"kind", "degree"}, "family polynomial");
        return PolynomialFamily{count("degree", 2)};
    }
    if (kind == "piecewise_linear") {
        expect_keys(j, {"kind", "breakpoints"}, "family piecewise_linear");
        return PiecewiseLinearFamily{count("breakpoints", 3)};
    }
    fail("family: unknown kind '", kind, "'");
}

std::string to_string(RadialMode mode) {
    switch (mode) {
        case RadialMode::Uniform: return "uniform";
        case RadialMode::Boundary: return "boundary";
        case RadialMode::Mixed: return "mixed";
    }
    return "?";
}

RadialMode radial_from_json(const Json& j) {
    const auto s = j.get<std::string>();
    if (s == "uniform") return RadialMode::Uniform;
    if (s == "boundary") return RadialMode::Boundary;
    if (s == "mixed") return RadialMode::Mixed;
    fail("radial: unknown mode '", s, "'");
}

Json to_json(const Segment& seg) {
    const std::size_t n = seg.dim();
    Json nodes = Json::array();
    for (double s : seg.nodes()) nodes.push_back(s);
    Json out = {{"r", seg.delay()},
                {"nodes", nodes},
                {"values", node_array(seg.values(), n)},
                {"derivs", node_array(seg.derivs(), n)}};
    if (seg.has_derivative_jumps()) out["left_derivs"] = node_array(seg.left_derivs(), n);
    return out;
}

Segment segment_from_json(const Json& j) {
    expect_keys(j, {"r", "nodes", "values", "derivs", "left_derivs"}, "segment");
    const double r = number_from_json(require(j, "r", "segment"), "segment.r");
    auto nodes = number_array(require(j, "nodes", "segment"), "segment.nodes");
    std::size_t n = 0;
    auto values = node_values(require(j, "values", "segment"), nodes.size(), n, "segment.values");
    auto derivs = node_values(require(j, "derivs", "segment"), nodes.size(), n, "segment.derivs");
    std::vector<double> left;
    if (j.contains("left_derivs")) left = node_values(j["left_derivs"], nodes.size(), n, "segment.left_derivs");
    try {
        return Segment(r, std::move(nodes), std::move(values), std::move(derivs), n, std::move(left));
    } catch (const std::invalid_argument& e) {
        fail("segment: ", e.what());
    }
}

Json to_json(const MonotoneGridFunction& g) {
    return {{"s", g.s()}, {"v", g.v()}};
}

MonotoneGridFunction grid_function_from_json(const Json& j) {
    try {
        if (j.is_object() && j.contains("linear")) {
            expect_keys(j, {"linear", "s_max"}, "grid function");
            return MonotoneGridFunction::linear(number_from_json(j["linear"], "linear"),
                                                j.contains("s_max") ? number_from_json(j["s_max"], "s_max") : 1.0);
        }
        expect_keys(j, {"s", "v"}, "grid function");
        return {number_array(require(j, "s", "grid function"), "s"), number_array(require(j, "v", "grid function"), "v")};
    } catch (const std::invalid_argument& e) {
        fail("grid function: ", e.what());
    }
}

Json to_json(const Functional& V) {
    Json out;
    switch (V.kind) {
        case Functional::Kind::WeightedSup: out = {{"kind", "weighted_sup"}, {"rate", V.rate}}; break;
        case Functional::Kind::QuadraticIntegral: out = {{"kind", "quadratic_integral"}, {"rate", V.rate}}; break;
        case Functional::Kind::SpaceNorm: out = {{"kind", "space_norm"}, {"space", to_json(V.space)}}; break;
    }
    out["scale"] = V.scale;
    return out;
}

Functional functional_from_json(const Json& j) {
    expect_keys(j, {"kind", "rate", "space", "scale"}, "functional");
    const auto kind = require(j, "kind", "functional").get<std::string>();
    Functional V;
    try {
        if (kind == "weighted_sup" || kind == "quadratic_integral") {
            expect_keys(j, {"kind", "rate", "scale"}, "functional");
            const double rate = number_from_json(require(j, "rate", "functional"), "functional.rate");
            V = kind == "weighted_sup" ? Functional::weighted_sup(rate) : Functional::quadratic_integral(rate);
        } else if (kind == "space_norm") {
            expect_keys(j, {"kind", "space", "scale"}, "functional");
            V = Functional::space_norm(space_from_json(require(j, "space", "functional")));
        } else {
            fail("functional: unknown kind '", kind, "'");
        }
        if (j.contains("scale")) V = V.scaled(number_from_json(j["scale"], "functional.scale"));
    } catch (const std::invalid_argument& e) {
        fail("functional: ", e.what());
    }
    return V;
}

Json to_json(const Witness& w) {
    return {{"sample_index", w.sample_index}, {"seed", w.seed},          {"radius", number_json(w.radius)},
            {"time", number_json(w.time)},    {"norm", number_json(w.norm)}, {"initial", to_json(w.initial)}};
}

Json to_json(const StabilityReport& rep) {
    Json margins = Json::object();
    for (const auto& [k, v] : rep.margins) margins[k] = number_json(v);
    Json tables = Json::object();
    for (const auto& [name, t] : rep.tables) {
        Json rows = Json::array();
        for (const auto& row : t.rows) {
            Json r = Json::array();
            for (double v : row) r.push_back(number_json(v));
            rows.push_back(std::move(r));
        }
        tables[name] = {{"columns", t.columns}, {"rows", rows}};
    }
    Json parts = Json::array();
    for (const auto& p : rep.parts) parts.push_back(to_json(p));
    Json out = {{"property", rep.property}, {"space", to_json(rep.space)}, {"verdict", to_string(rep.verdict)},
                {"margins", margins},       {"budget", rep.budget},        {"tables", tables},
                {"notes", rep.notes},       {"parts", parts}};
    out["witness"] = rep.witness ? to_json(*rep.witness) : Json(nullptr);
    return out;
}

// ---------------------------------------------------------------------------

std::string segment_csv(const Segment& seg) {
    std::string out = csv_header("s", seg.dim());
    for (std::size_t i = 0; i < seg.size(); ++i) out += csv_row({seg.nodes()[i]}, seg.value(i), seg.deriv(i));
    return out;
}

std::string trajectory_csv(const Trajectory& tr) {
    const auto& c = tr.curve();
    std::string out = csv_header("t", c.dim());
    for (std::size_t i = 0; i < c.size(); ++i) {
        const auto d = i + 1 < c.size() ? c.right_deriv(i) : c.left_deriv(i);
        out += csv_row({c.knots()[i]}, c.value_at(i), d);
    }
    return out;
}

std::string envelope_csv(const KLEnvelope& env) {
    std::string out = "s\\t";
    for (double t : env.t_grid) out += "," + format_double(t);
    out += '\n';
    for (std::size_t j = 0; j < env.s_grid.size(); ++j) {
        out += format_double(env.s_grid[j]);
        for (std::size_t k = 0; k < env.t_grid.size(); ++k) out += "," + format_double(env.at(j, k));
        out += '\n';
    }
    return out;
}

void write_atomic(const std::filesystem::path& path, std::string_view content) {
    auto tmp = path;
    tmp += ".tmp." + std::to_string(::getpid());
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        if (!f) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
        f.write(content.data(), static_cast<std::streamsize>(content.size()));
        f.flush();
        if (!f) throw std::runtime_error("write failed for " + tmp.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp);
        throw std::runtime_error("cannot move output into place at " + path.string() + ": " + ec.message());
    }
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot read " + path.string());
    std::ostringstream os;
    os << f.rdbuf();
    return os.str();
}

}  // namespace delaystab
