#include <cmath>
#include <stdexcept>
#include <vector>

#include "delaystab/lyapunov.hpp"
#include "doctest.h"
#include "test_util.hpp"

using namespace delaystab;

namespace {
Budget budget(std::size_t n, SamplerFamily fam = FourierFamily{3}) {
    Budget b;
    b.samples = n;
    b.family = fam;
    b.seed = 29;
    return b;
}

LyapunovOptions quick(std::size_t times = 40) {
    LyapunovOptions o;
    o.check.report_times = times;
    return o;
}

Segment constant(double r, double c) {
    const double v[1] = {c};
    return Segment::constant(r, v);
}

Segment from_poly(double r, const std::function<double(double)>& x, const std::function<double(double)>& dx) {
    return Segment::from_function(
        r, 200, 1, [&](double s, std::span<double> o) { o[0] = x(s); },
        [&](double s, std::span<double> o) { o[0] = dx(s); });
}

const auto id = MonotoneGridFunction::linear(1.0);
}  // namespace

TEST_CASE("builtin functionals against closed forms") {
    const auto V = Functional::weighted_sup(1.0);
    CHECK(V(constant(1.0, -0.7)) == doctest::Approx(0.7).epsilon(1e-12));
    // e^{s}(-s) peaks at s = -1, e^{2s}(-s) at s = -1/2
    const auto lin = from_poly(1.0, [](double s) { return -s; }, [](double) { return -1.0; });
    CHECK(V(lin) == doctest::Approx(std::exp(-1.0)).epsilon(1e-10));
    CHECK(Functional::weighted_sup(2.0)(lin) == doctest::Approx(0.5 * std::exp(-1.0)).epsilon(1e-9));
    // |x(0)|^2 + int e^{mu s} c^2 ds
    const double c = 0.6, mu = 0.8, r = 1.5;
    CHECK(Functional::quadratic_integral(mu)(constant(r, c)) ==
          doctest::Approx(c * c + c * c * (1 - std::exp(-mu * r)) / mu).epsilon(1e-10));
    // mu = 0, x(s) = s: int_{-r}^0 s^2 ds = r^3 / 3
    const auto ramp = from_poly(r, [](double s) { return s; }, [](double) { return 1.0; });
    CHECK(Functional::quadratic_integral(0.0)(ramp) == doctest::Approx(r * r * r / 3).epsilon(1e-10));
    const auto N = Functional::space_norm(SpaceSpec::sobolev(2));
    CHECK(N(ramp) == doctest::Approx(r + std::sqrt(r)).epsilon(1e-10));
    CHECK(V.scaled(2.0)(lin) == doctest::Approx(2 * std::exp(-1.0)).epsilon(1e-10));
    CHECK(V.name() == "WeightedSup(1)");
    CHECK_THROWS_AS(V.scaled(-1), std::invalid_argument);
}

TEST_CASE("functional invariants: V(0) = 0, homogeneity and c^2 scaling") {
    SamplerConfig cfg;
    cfg.family = FourierFamily{3};
    cfg.target_norm = 1.0;
    cfg.seed = 5;
    const std::vector<Functional> homogeneous = {Functional::weighted_sup(1.0), Functional::weighted_sup(-0.5),
                                                 Functional::space_norm(SpaceSpec::sobolev(3)),
                                                 Functional::space_norm(SpaceSpec::hoelder(0.5))};
    const auto Q = Functional::quadratic_integral(1.0);
    const Segment zero = Segment::zero(1.0, 1);
    for (const auto& V : homogeneous) CHECK(V(zero) == 0.0);
    CHECK(Q(zero) == 0.0);
    for (std::size_t i = 0; i < 20; ++i) {
        const Segment x = sample_one(cfg, i);
        for (double c : {-2.5, 0.3, 4.0}) {
            for (const auto& V : homogeneous) {
                CHECK(V(x) >= 0);
                CHECK(V(x * c) == doctest::Approx(std::abs(c) * V(x)).epsilon(1e-9));
            }
            CHECK(Q(x * c) == doctest::Approx(c * c * Q(x)).epsilon(1e-12));
        }
    }
}

TEST_CASE("functional Lipschitz spot check on bounded sets") {
    // the weighted sup is 1-Lipschitz for the sup norm when l >= 0
    const auto sys = linear_scalar(-1, 0, 1.0);
    const double c = functional_lipschitz(sys, Functional::weighted_sup(1.0), SpaceSpec::sup_c0(), 1.0, 30, budget(60));
    CHECK(c > 0);
    CHECK(c <= 1.0 + 1e-9);
    // quadratic functional: constant grows with the radius
    const auto Q = Functional::quadratic_integral(0.0);
    const double c1 = functional_lipschitz(sys, Q, SpaceSpec::sup_c0(), 1.0, 30, budget(60));
    const double c2 = functional_lipschitz(sys, Q, SpaceSpec::sup_c0(), 4.0, 30, budget(60));
    CHECK(c2 == doctest::Approx(4 * c1).epsilon(1e-9));
}

TEST_CASE("monotone grid inversion") {
    const auto g = MonotoneGridFunction::tabulate([](double s) { return s * s + 0.5 * s; }, 3.0, 65);
    for (std::size_t i = 0; i < g.s().size(); ++i) {
        const double s = g.s()[i];
        CHECK(std::abs(g.inverse(g(s)) - s) <= 3.0 / 64 + 1e-12);
    }
    // extrapolation beyond the last point follows the last slope
    CHECK(g.inverse(g(5.0)) == doctest::Approx(5.0));
    const MonotoneGridFunction flat({0.0, 1.0, 2.0}, {0.0, 1.0, 1.0});
    CHECK(flat.inverse(1.0) == doctest::Approx(1.0));
    CHECK_THROWS_AS(flat.inverse(2.0), std::domain_error);
    CHECK_THROWS_AS(MonotoneGridFunction({0.0, 1.0}, {1.0, 0.5}), std::invalid_argument);
    CHECK_THROWS_AS(MonotoneGridFunction({0.0, 0.0}, {0.0, 0.5}), std::invalid_argument);
    CHECK_THROWS_AS(RadialFunction(MonotoneGridFunction({0.0, 1.0}, {0.1, 0.5})), std::invalid_argument);
}

TEST_CASE("dini_derivative examples") {
    const auto V = Functional::weighted_sup(1.0);
    const auto d = dini_derivative(linear_scalar(-1, 0, 1.0), V, constant(1.0, 0.8));
    CHECK(d.h.size() == 6);
    for (std::size_t k = 1; k < d.h.size(); ++k) CHECK(d.h[k] < d.h[k - 1]);
    CHECK(d.h.front() == doctest::Approx(1e-2));
    CHECK(std::abs(d.estimate + 0.8) <= 0.02 * 0.8);
    CHECK(std::isfinite(d.estimate));

    const auto eq = dini_derivative(linear_scalar(-1, 0, 1.0), V, Segment::zero(1.0, 1));
    CHECK(eq.estimate == 0.0);
    CHECK_FALSE(eq.trend);

    const auto frozen = dini_derivative(linear_scalar(0, 0, 1.0), Functional::space_norm(SpaceSpec::sup_c0()),
                                        constant(1.0, -1.3));
    CHECK(std::abs(frozen.estimate) <= 1e-12);

    // x' = x^2 from x = 2 blows up at t = 0.5, far beyond h0, so no escape;
    // a short delay with a huge state does escape inside the ladder
    CHECK_NOTHROW(dini_derivative(quadratic(1.0), V, constant(1.0, 2.0)));
    CHECK_THROWS_AS(dini_derivative(quadratic(1.0), V, constant(1.0, 1e3)), EscapeError);
}

TEST_CASE("prolongation ladder") {
    // zero system: P_h only shifts, the sup never increases
    const auto U = Functional::space_norm(SpaceSpec::sup_c0());
    SamplerConfig cfg;
    cfg.seed = 8;
    for (std::size_t i = 0; i < 10; ++i) {
        const auto d = prolongation_derivative(linear_scalar(0, 0, 1.0), U, sample_one(cfg, i));
        for (double q : d.quotients) CHECK(q <= 1e-9);
    }
    // x' = x(t-1) from x = c: P_h x has slope c, U grows like c (1 + h) -> quotient c
    const auto w = prolongation_derivative(linear_scalar(0, 1, 1.0), Functional::weighted_sup(1.0), constant(1.0, 0.5));
    for (double q : w.quotients) CHECK(q == doctest::Approx(0.5).epsilon(1e-6));
}

TEST_CASE("check_theorem5 examples") {
    const auto sys = linear_scalar(-1, 0, 1.0);
    const auto V = Functional::weighted_sup(1.0);
    const auto a1 = MonotoneGridFunction::linear(std::exp(-1.0));
    const auto opts = quick();
    const auto rep = check_theorem5(sys, V, a1, id, SpaceSpec::sup_c0(), 1.5, 4.0, budget(30), opts);
    CHECK(rep.verdict == Verdict::Consistent);
    CHECK(rep.margins.at("max_decay_ratio") <= 1 + 1e-6);
    CHECK(rep.margins.at("lipschitz_estimate") <= 1 + 1e-9);
    CHECK_FALSE(rep.witness);

    // constant histories: equality in the decay bound
    const auto consts = check_theorem5(sys, V, a1, id, SpaceSpec::sup_c0(), 1.5, 4.0,
                                       budget(10, PolynomialFamily{0}), opts);
    CHECK(consts.verdict == Verdict::Consistent);
    CHECK(consts.margins.at("max_decay_ratio") == doctest::Approx(1.0).epsilon(1e-6));

    const auto doubled = check_theorem5(sys, V.scaled(2.0), a1, id, SpaceSpec::sup_c0(), 1.5, 4.0, budget(10), opts);
    CHECK(doubled.verdict == Verdict::Falsified);
    CHECK(doubled.margins.at("sandwich_violations") > 0);
    REQUIRE(doubled.witness);
    CHECK(doubled.witness->time == 0.0);

    const auto frozen = check_theorem5(linear_scalar(0, 0, 1.0), Functional::space_norm(SpaceSpec::sup_c0()), id, id,
                                       SpaceSpec::sup_c0(), 1.0, 2.0, budget(10), opts);
    CHECK(frozen.verdict == Verdict::Falsified);
    CHECK(frozen.margins.at("decay_violations") > 0);
    REQUIRE(frozen.witness);
    CHECK(frozen.witness->time > 0);
    CHECK(frozen.witness->initial.values() == sample_one(sampler_for(linear_scalar(0, 0, 1.0), SpaceSpec::sup_c0(), 1.0,
                                                                      budget(10)),
                                                          frozen.witness->sample_index)
                                                 .values());
}

TEST_CASE("decay bound implies the Dini inequality on the same samples") {
    const auto sys = linear_scalar(-1, 0, 1.0);
    const auto V = Functional::weighted_sup(1.0);
    const auto b = budget(12);
    const auto rep = check_theorem5(sys, V, MonotoneGridFunction::linear(std::exp(-1.0)), id, SpaceSpec::sup_c0(),
                                    1.0, 3.0, b, quick());
    REQUIRE(rep.verdict == Verdict::Consistent);
    const auto cfg = sampler_for(sys, SpaceSpec::sup_c0(), 1.0, b);
    for (std::size_t i = 0; i < b.samples; ++i) {
        const Segment x = sample_one(cfg, i);
        CHECK(dini_derivative(sys, V, x).estimate <= -V(x) * (1 - 0.05));
    }
}

TEST_CASE("check_theorem6 examples") {
    const auto sys = linear_scalar(-1, 0, 1.0);
    const auto V = Functional::weighted_sup(1.0);
    const auto Q = RadialFunction::linear(std::exp(-1.0));
    auto opts = quick();
    opts.trajectories = 5;
    const auto rep = check_theorem6(sys, V, id, id, Q, SpaceSpec::sup_c0(), 1.5, 3.0, budget(15), opts);
    CHECK(rep.verdict == Verdict::Consistent);
    CHECK(rep.margins.at("max_dini_margin") <= 0);
    CHECK(rep.margins.at("max_integral_excess") <= 1e-4);
    CHECK(rep.budget.at("trajectories") == 5);

    // at the equilibrium every term vanishes
    CHECK(dini_derivative(sys, V, Segment::zero(1.0, 1)).estimate == 0.0);
    const double zero[1] = {0.0};
    CHECK(Q(zero) == 0.0);

    const auto bad = check_theorem6(linear_scalar(1, 0, 1.0), V, id, id, Q, SpaceSpec::sup_c0(), 1.0, 1.0,
                                    budget(6, PolynomialFamily{0}), opts);
    CHECK(bad.verdict == Verdict::Falsified);
    CHECK(bad.margins.at("dini_violations") == 6);
}

TEST_CASE("check_rfc_sufficient examples") {
    auto opts = quick();
    opts.trajectories = 5;
    const auto sys = linear_scalar(0, 1, 1.0);
    const auto U = Functional::weighted_sup(1.0);
    const auto ok = check_rfc_sufficient(sys, U, id, std::exp(1.0), SpaceSpec::sup_c0(), 1.0, 2.0, budget(20), opts);
    CHECK(ok.verdict == Verdict::Consistent);
    CHECK(ok.margins.at("max_growth_ratio") <= 1.001);

    const auto frozen = check_rfc_sufficient(linear_scalar(0, 0, 1.0), Functional::space_norm(SpaceSpec::sup_c0()), id,
                                             0.0, SpaceSpec::sup_c0(), 1.0, 2.0, budget(20), opts);
    CHECK(frozen.verdict == Verdict::Consistent);

    const auto bad = check_rfc_sufficient(sys, U, id, 0.0, SpaceSpec::sup_c0(), 1.0, 2.0,
                                          budget(6, PolynomialFamily{0}), opts);
    CHECK(bad.verdict == Verdict::Falsified);
    CHECK(bad.margins.at("quotient_violations") > 0);
    CHECK_THROWS_AS(check_rfc_sufficient(sys, U, id, -1.0, SpaceSpec::sup_c0(), 1.0, 2.0, budget(2), opts),
                    std::invalid_argument);
}

TEST_CASE("Sobolev functional is continuous along the flow, p = infinity is not") {
    // zero system, kink of size 1 at s = -r/2
    const double r = 1.0;
    const auto x0 = Segment::from_function(
        r, 200, 1, [](double s, std::span<double> o) { o[0] = s < -0.5 ? 0.0 : s + 0.5; },
        [](double s, std::span<double> o) { o[0] = s < -0.5 ? 0.0 : 1.0; });
    const auto tr = simulate(linear_scalar(0, 0, r), x0, 0.2);
    // |s + 1/2| - 1/2 loses its left ramp as it leaves the window, so the
    // Sobolev(2) value moves with t
    const auto v0 = Segment::from_function(
        r, 200, 1, [](double s, std::span<double> o) { o[0] = std::abs(s + 0.5) - 0.5; },
        [](double s, std::span<double> o) { o[0] = s < -0.5 ? -1.0 : 1.0; });
    const auto tv = simulate(linear_scalar(0, 0, r), v0, 0.2);
    const auto V2 = Functional::space_norm(SpaceSpec::sobolev(2));
    auto max_jump = [&](const Functional& V, double dt) {
        double jump = 0, prev = V(tv.curve_at(0.0));
        for (double t = dt; t <= 0.1 + 1e-12; t += dt) {
            const double v = V(tv.curve_at(t));
            jump = std::max(jump, std::abs(v - prev));
            prev = v;
        }
        return jump;
    };
    const double coarse = max_jump(V2, 0.02), fine = max_jump(V2, 0.005);
    CHECK(coarse > 0);
    CHECK(fine < 0.5 * coarse);
    // distance in the derivative part for p = infinity stays at the kink size
    for (double t : {0.1, 0.05, 0.025}) {
        const auto diff = Segment::from_curve(tr.curve_at(t), 200) - x0;
        CHECK(lp_deriv_norm(diff, INFINITY) >= 0.9);
    }
}
