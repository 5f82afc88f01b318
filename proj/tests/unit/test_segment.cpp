#include <cmath>
#include <stdexcept>
#include <limits>
#include <random>
#include <vector>

#include "delaystab/sampler.hpp"
#include "delaystab/segment.hpp"
#include "doctest.h"
#include "test_util.hpp"

using namespace delaystab;
using testutil::scalar_segment;

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();

Segment identity_segment(double r, std::size_t N = 200) {
    return scalar_segment(r, N, [](double s) { return s; }, [](double) { return 1.0; });
}

std::vector<Segment> random_segments(std::size_t count, std::uint64_t seed, double r = 1.0) {
    std::vector<Segment> out;
    SamplerConfig cfg;
    cfg.delay = r;
    cfg.seed = seed;
    cfg.radial = RadialMode::Uniform;
    cfg.target_norm = 3.0;
    for (std::size_t i = 0; i < count; ++i) {
        switch (i % 3) {
            case 0: cfg.family = FourierFamily{3}; break;
            case 1: cfg.family = PolynomialFamily{3}; break;
            default: cfg.family = PiecewiseLinearFamily{4}; break;
        }
        out.push_back(sample_one(cfg, i));
    }
    return out;
}
}  // namespace

TEST_CASE("segment invariants are enforced at construction") {
    CHECK_THROWS_AS(Segment::zero(1.0, 1, 1), std::invalid_argument);
    CHECK_THROWS_AS(Segment(1.0, {-1.0, -0.4, 0.0}, {0, 0, 0}, {0, 0, 0}, 1), std::invalid_argument);
    CHECK_THROWS_AS(Segment(1.0, {-1.0, -0.5, 0.1}, {0, 0, 0}, {0, 0, 0}, 1), std::invalid_argument);
    const double nan = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(Segment(1.0, {-1.0, -0.5, 0.0}, {0, nan, 0}, {0, 0, 0}, 1), std::invalid_argument);
    CHECK_NOTHROW(Segment(1.0, {-1.0, -0.5, 0.0}, {0, 1, 0}, {0, 0, 0}, 1));
}

TEST_CASE("sup_norm examples") {
    const double c[2] = {3.0, 4.0};
    CHECK(sup_norm(Segment::constant(0.7, c)) == doctest::Approx(5.0).epsilon(1e-14));
    CHECK(sup_norm(Segment::zero(1.0, 2)) == 0.0);
    CHECK(sup_norm(identity_segment(2.0)) == doctest::Approx(2.0).epsilon(1e-14));
}

TEST_CASE("sup_norm dominates raw nodes and catches interior maxima") {
    // x(s) = sin(7 s) peaks between nodes of a coarse grid
    const auto seg = scalar_segment(1.0, 6, [](double s) { return std::sin(7 * s); },
                                    [](double s) { return 7 * std::cos(7 * s); });
    double raw = 0;
    for (std::size_t i = 0; i < seg.size(); ++i) raw = std::max(raw, std::abs(seg.value(i)[0]));
    CHECK(sup_norm(seg) >= raw);
    CHECK(sup_norm(seg) == doctest::Approx(1.0).epsilon(2e-3));
}

TEST_CASE("lp_deriv_norm examples") {
    const double c[1] = {2.0};
    CHECK(lp_deriv_norm(Segment::constant(1.0, c), 2.0) == 0.0);
    CHECK(lp_deriv_norm(Segment::constant(1.0, c), kInf) == 0.0);
    CHECK(lp_deriv_norm(identity_segment(1.0), 2.0) == doctest::Approx(1.0).epsilon(1e-13));
    const auto sq = scalar_segment(1.0, 200, [](double s) { return s * s; },
                                   [](double s) { return 2 * s; });
    CHECK(lp_deriv_norm(sq, 2.0) == doctest::Approx(std::sqrt(4.0 / 3.0)).epsilon(1e-12));
    CHECK(lp_deriv_norm(sq, kInf) == doctest::Approx(2.0).epsilon(1e-13));
    CHECK_THROWS_AS(lp_deriv_norm(sq, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(lp_deriv_norm(sq, 0.5), std::invalid_argument);
}

TEST_CASE("hoelder_seminorm examples") {
    const double c[1] = {2.0};
    CHECK(hoelder_seminorm(Segment::constant(1.0, c), 0.5) == 0.0);
    CHECK(hoelder_seminorm(identity_segment(1.0), 1.0) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(hoelder_seminorm(identity_segment(2.0), 0.5) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-12));
    CHECK_THROWS_AS(hoelder_seminorm(identity_segment(1.0), 0.0), std::invalid_argument);
    CHECK_THROWS_AS(hoelder_seminorm(identity_segment(1.0), 1.5), std::invalid_argument);
}

TEST_CASE("space_norm examples and SpaceSpec validation") {
    const double c[2] = {3.0, 4.0};
    CHECK(space_norm(Segment::constant(1.0, c), SpaceSpec::sobolev(2)) == doctest::Approx(5.0));
    CHECK(space_norm(identity_segment(1.0), SpaceSpec::sobolev(2)) == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(space_norm(identity_segment(1.0), SpaceSpec::hoelder(1)) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(space_norm(identity_segment(1.0), SpaceSpec::sup_c0()) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK_THROWS_AS(SpaceSpec::sobolev(1.0), std::invalid_argument);
    CHECK_THROWS_AS(SpaceSpec::hoelder(0.0), std::invalid_argument);
    CHECK_THROWS_AS(SpaceSpec::hoelder(1.1), std::invalid_argument);
    CHECK(SpaceSpec::sobolev(kInf).paired_p() == kInf);
    CHECK(SpaceSpec::hoelder(0.5).paired_p() == doctest::Approx(2.0));
}

TEST_CASE("prolong examples") {
    const double c[1] = {1.5};
    const auto cs = Segment::constant(1.0, c, 50);
    const double zero = 0.0;
    for (double h : {0.1, 0.5, 1.0}) {
        const auto p = prolong(cs, {&zero, 1}, h);
        for (std::size_t i = 0; i < p.size(); ++i) CHECK(p.value(i)[0] == doctest::Approx(1.5));
    }

    const double one = 1.0;
    const auto shifted = prolong(identity_segment(1.0, 40), {&one, 1}, 0.5);
    for (double s = -1.0; s <= 0.0; s += 0.01) {
        double v = 0;
        shifted.eval(s, {&v, 1});
        CHECK(v == doctest::Approx(s + 0.5).epsilon(1e-12));
    }

    const double two = 2.0;
    const auto ones = Segment::constant(1.0, std::vector<double>{1.0}, 40);
    const auto ext = prolong(ones, {&two, 1}, 0.25);
    for (double s = -1.0; s <= 0.0; s += 0.005) {
        double v = 0;
        ext.eval(s, {&v, 1});
        const double expect = s <= -0.25 ? 1.0 : 1.0 + 2.0 * (s + 0.25);
        CHECK(v == doctest::Approx(expect).epsilon(1e-12));
    }
    CHECK_THROWS_AS(prolong(ones, {&two, 1}, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(prolong(ones, {&two, 1}, 1.5), std::invalid_argument);
}

TEST_CASE("prolongation composes for a fixed slope") {
    const auto segs = random_segments(12, 99);
    for (const auto& x : segs) {
        const double f = 0.7;
        for (auto [h1, h2] : {std::pair{0.1, 0.3}, std::pair{0.25, 0.25}, std::pair{0.4, 0.6}}) {
            const auto once = prolong_curve(x.curve(), {&f, 1}, h1 + h2);
            const auto twice = prolong_curve(prolong_curve(x.curve(), {&f, 1}, h1), {&f, 1}, h2);
            for (double s = -1.0; s <= 0.0; s += 1.0 / 128) {
                double a = 0, b = 0;
                once.eval(s, {&a, 1});
                twice.eval(s, {&b, 1});
                CHECK(std::abs(a - b) <= 1e-8);
            }
        }
    }
}

TEST_CASE("embedding and monotonicity inequalities on sampled segments") {
    for (double r : {0.5, 1.0, 2.0}) {
        const auto segs = random_segments(30, 7, r);
        for (const auto& x : segs) {
            const double dmax = max_abs_deriv(x);
            for (double p : {1.5, 2.0, 4.0}) {
                const double lp = lp_deriv_norm(x, p);
                CHECK(hoelder_seminorm(x, 1 - 1 / p) <= lp + 1e-6);
                CHECK(lp <= std::pow(r, 1 / p) * dmax + 1e-6);
                CHECK(hoelder_seminorm(x, 1 - 1 / p) <= std::pow(r, 1 / p) * dmax + 1e-6);
                for (double q : {p, 3.0, 8.0, kInf}) {
                    if (q < p) continue;
                    const double f = std::pow(r, 1 / p - 1 / q);
                    CHECK(lp <= f * lp_deriv_norm(x, q) + 1e-6);
                    CHECK(hoelder_seminorm(x, 1 - 1 / p) <= f * hoelder_seminorm(x, 1 - 1 / q) + 1e-6);
                }
            }
        }
    }
}

TEST_CASE("norms are homogeneous and subadditive") {
    const auto segs = random_segments(24, 3);
    const std::vector<SpaceSpec> spaces{SpaceSpec::sup_c0(), SpaceSpec::sobolev(2),
                                        SpaceSpec::sobolev(kInf), SpaceSpec::hoelder(0.5),
                                        SpaceSpec::hoelder(1.0)};
    for (std::size_t i = 0; i + 1 < segs.size(); ++i) {
        const auto& x = segs[i];
        const auto& y = segs[i + 1];
        for (const auto& sp : spaces) {
            const double nx = space_norm(x, sp);
            for (double c : {-2.5, 0.3}) CHECK(testutil::close_rel(space_norm(x * c, sp), std::abs(c) * nx, 1e-10));
            CHECK(space_norm(x + y, sp) <= nx + space_norm(y, sp) + 1e-8);
        }
    }
}

TEST_CASE("vector segments use the Euclidean norm") {
    const auto seg = Segment::from_function(
        1.0, 100, 2,
        [](double s, std::span<double> o) { o[0] = 3 * s; o[1] = 4 * s; },
        [](double, std::span<double> o) { o[0] = 3; o[1] = 4; });
    CHECK(sup_norm(seg) == doctest::Approx(5.0));
    CHECK(lp_deriv_norm(seg, 3.0) == doctest::Approx(5.0).epsilon(1e-12));
    CHECK(hoelder_seminorm(seg, 1.0) == doctest::Approx(5.0).epsilon(1e-12));
}
