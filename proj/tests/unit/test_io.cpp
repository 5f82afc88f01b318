#include <cmath>
#include <filesystem>
#include <stdexcept>
#include <vector>

#include "delaystab/io.hpp"
#include "doctest.h"

using namespace delaystab;
namespace fs = std::filesystem;

TEST_CASE("format_double round trips and marks non-finite values") {
    for (double v : {0.1, 1.0 / 3, -2.5e-300, 6.02214076e23, 0.0}) CHECK(std::stod(format_double(v)) == v);
    CHECK(format_double(1.0) == "1");
    CHECK(format_double(INFINITY) == "inf");
    CHECK(format_double(-INFINITY) == "-inf");
    CHECK(format_double(NAN) == "nan");
    CHECK(number_json(INFINITY) == "inf");
    CHECK(number_from_json(Json("inf"), "x") == INFINITY);
    CHECK_THROWS_AS(number_from_json(Json("abc"), "x"), ConfigError);
}

TEST_CASE("segment JSON round trip keeps one-sided derivatives") {
    const auto x = Segment::from_function(
        1.0, 10, 2,
        [](double s, std::span<double> o) {
            o[0] = std::sin(s);
            o[1] = std::abs(s + 0.5);
        },
        [](double s, std::span<double> o) {
            o[0] = std::cos(s);
            o[1] = s < -0.5 ? -1.0 : 1.0;
        });
    // give the kink node its left derivative
    auto left = x.derivs();
    left[5 * 2 + 1] = -1.0;
    const Segment kinked(1.0, x.nodes(), x.values(), x.derivs(), 2, left);
    const Json j = to_json(kinked);
    CHECK(j.contains("left_derivs"));
    const Segment back = segment_from_json(Json::parse(j.dump()));
    CHECK(back.values() == kinked.values());
    CHECK(back.derivs() == kinked.derivs());
    CHECK(back.left_derivs() == kinked.left_derivs());
    CHECK(back.delay() == 1.0);

    // scalar segments use flat arrays
    const double c[1] = {0.25};
    const Json flat = to_json(Segment::constant(2.0, c, 4));
    CHECK(flat["values"] == Json::array({0.25, 0.25, 0.25, 0.25, 0.25}));
    CHECK_FALSE(flat.contains("left_derivs"));
    CHECK(segment_from_json(flat).dim() == 1);

    Json extra = flat;
    extra["colour"] = "red";
    CHECK_THROWS_AS(segment_from_json(extra), ConfigError);
    Json short_values = flat;
    short_values["values"] = Json::array({1.0});
    CHECK_THROWS_AS(segment_from_json(short_values), ConfigError);
}

TEST_CASE("config value types") {
    CHECK(space_from_json(Json::parse(R"({"kind":"sobolev","p":"inf"})")) == SpaceSpec::sobolev(INFINITY));
    CHECK(space_from_json(to_json(SpaceSpec::hoelder(0.25))) == SpaceSpec::hoelder(0.25));
    CHECK_THROWS_AS(space_from_json(Json::parse(R"({"kind":"sobolev","p":1})")), ConfigError);
    CHECK_THROWS_AS(space_from_json(Json::parse(R"({"kind":"sup_c0","p":2})")), ConfigError);
    CHECK_THROWS_AS(space_from_json(Json::parse(R"({"kind":"lp"})")), ConfigError);

    const auto def = system_def_from_json(Json::parse(R"({"name":"saturating","n":2,"r":0.5,"params":{"c":1,"k":0.5}})"));
    CHECK(def.n == 2);
    CHECK(def.params.at("k") == 0.5);
    CHECK(system_def_from_json(to_json(def)).params == def.params);
    CHECK_THROWS_AS(system_def_from_json(Json::parse(R"({"name":"x","r":1,"delay":2})")), ConfigError);

    CHECK(std::get<PolynomialFamily>(family_from_json(Json::parse(R"({"kind":"polynomial","degree":0})"))).degree == 0);
    CHECK_THROWS_AS(family_from_json(Json::parse(R"({"kind":"fourier","degree":2})")), ConfigError);
    CHECK(radial_from_json(Json("mixed")) == RadialMode::Mixed);

    const auto g = grid_function_from_json(Json::parse(R"({"linear":2})"));
    CHECK(g(3.0) == doctest::Approx(6.0));
    CHECK_THROWS_AS(grid_function_from_json(Json::parse(R"({"s":[0,1],"v":[1,0]})")), ConfigError);

    const auto V = functional_from_json(Json::parse(R"({"kind":"weighted_sup","rate":1,"scale":2})"));
    CHECK(V.kind == Functional::Kind::WeightedSup);
    CHECK(V.scale == 2.0);
    CHECK(functional_from_json(to_json(V)).name() == V.name());
    CHECK_THROWS_AS(functional_from_json(Json::parse(R"({"kind":"space_norm","rate":1})")), ConfigError);
}

TEST_CASE("CSV exports") {
    const double c[1] = {1.0};
    const auto seg = Segment::constant(1.0, c, 2);
    CHECK(segment_csv(seg) == "s,x_1,dx_1\n-1,1,0\n-0.5,1,0\n0,1,0\n");

    KLEnvelope env;
    env.s_grid = {0.5, 1.0};
    env.t_grid = {0.0, 2.0};
    env.sigma = {0.5, 0.25, 1.0, 0.125};
    CHECK(envelope_csv(env) == "s\\t,0,2\n0.5,0.5,0.25\n1,1,0.125\n");

    const auto tr = simulate(linear_scalar(0, 0, 1.0), Segment::zero(1.0, 1, 10), 0.5, 0.1);
    const std::string csv = trajectory_csv(tr);
    CHECK(csv.rfind("t,x_1,dx_1\n-1,0,0\n", 0) == 0);
    CHECK(csv.find("\n0.5,0,0\n") != std::string::npos);
}

TEST_CASE("report JSON") {
    StabilityReport rep;
    rep.property = "ga";
    rep.verdict = Verdict::Falsified;
    rep.margins["escape_time"] = INFINITY;
    rep.tables["delta"] = Table{{"eps", "delta"}, {{0.1, 0.05}}};
    const double c[1] = {1.0};
    rep.witness = Witness{3, 7, 1.0, Segment::constant(1.0, c, 4), 2.0, 1.0};
    const Json j = to_json(rep);
    CHECK(j["verdict"] == "falsified");
    CHECK(j["margins"]["escape_time"] == "inf");
    CHECK(j["tables"]["delta"]["rows"][0][1] == 0.05);
    CHECK(j["witness"]["sample_index"] == 3);
    CHECK(segment_from_json(j["witness"]["initial"]).values() == rep.witness->initial.values());
    CHECK(to_json(StabilityReport{})["witness"].is_null());
}

TEST_CASE("atomic writes replace the target and leave no temporaries") {
    const fs::path dir = fs::temp_directory_path() / "delaystab_io_test";
    fs::remove_all(dir);
    fs::create_directories(dir);
    write_atomic(dir / "a.txt", "first");
    write_atomic(dir / "a.txt", "second");
    CHECK(read_file(dir / "a.txt") == "second");
    CHECK(std::distance(fs::directory_iterator(dir), fs::directory_iterator{}) == 1);
    CHECK_THROWS(write_atomic(dir / "missing" / "b.txt", "x"));
    fs::remove_all(dir);
}
