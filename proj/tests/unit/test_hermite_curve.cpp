#include <cmath>
#include <stdexcept>
#include <vector>

#include "delaystab/hermite_curve.hpp"
#include "doctest.h"

using delaystab::HermiteCurve;

namespace {

// p(t) = t^3 - 2t + 1 sampled on irregular knots; cubic Hermite reproduces it.
HermiteCurve cubic_curve(const std::vector<double>& knots) {
    HermiteCurve c(1);
    for (double t : knots) {
        const double v = t * t * t - 2 * t + 1, d = 3 * t * t - 2;
        c.append(t, {&v, 1}, {&d, 1}, {&d, 1});
    }
    return c;
}

double p(double t) { return t * t * t - 2 * t + 1; }
double P(double t) { return t * t * t * t / 4 - t * t + t; }

}  // namespace

TEST_CASE("cubic data is reproduced exactly") {
    const auto c = cubic_curve({-1.0, -0.7, -0.2, 0.1, 0.5});
    for (double t = -1.0; t <= 0.5; t += 0.013) {
        double v = 0, d = 0;
        c.eval(t, {&v, 1});
        c.eval_deriv(t, {&d, 1});
        CHECK(v == doctest::Approx(p(t)).epsilon(1e-13));
        CHECK(d == doctest::Approx(3 * t * t - 2).epsilon(1e-12));
    }
    double I = 0;
    c.integral(-0.9, 0.33, {&I, 1});
    CHECK(I == doctest::Approx(P(0.33) - P(-0.9)).epsilon(1e-13));
}

TEST_CASE("restrict is exact and shifts knots") {
    const auto c = cubic_curve({-1.0, -0.5, 0.0, 0.5, 1.0});
    const auto sub = c.restrict(-0.3, 0.7, -0.7);
    CHECK(sub.front() == doctest::Approx(-1.0));
    CHECK(sub.back() == doctest::Approx(0.0));
    for (double s = -1.0; s <= 0.0; s += 0.01) {
        double v = 0;
        sub.eval(s, {&v, 1});
        CHECK(v == doctest::Approx(p(s + 0.7)).epsilon(1e-12));
    }
    CHECK_THROWS_AS(c.restrict(-2.0, 0.0), std::out_of_range);
}

TEST_CASE("derivative jumps at knots are kept") {
    HermiteCurve c(1);
    const double v0 = 0, v1 = 1, v2 = 1, one = 1, zero = 0;
    c.append(0.0, {&v0, 1}, {&one, 1}, {&one, 1});
    c.append(1.0, {&v1, 1}, {&one, 1}, {&zero, 1});
    c.append(2.0, {&v2, 1}, {&zero, 1}, {&zero, 1});
    double v = 0;
    c.eval(0.5, {&v, 1});
    CHECK(v == doctest::Approx(0.5));
    c.eval(1.5, {&v, 1});
    CHECK(v == doctest::Approx(1.0));
    const auto sub = c.restrict(0.5, 2.0);
    const std::size_t k = sub.knot_near(1.0, 1e-12);
    REQUIRE(k < sub.size());
    CHECK(sub.left_deriv(k)[0] == 1.0);
    CHECK(sub.right_deriv(k)[0] == 0.0);
    CHECK(c.knot_near(1.3, 1e-6) == c.size());
}

TEST_CASE("append rejects non-increasing knots") {
    HermiteCurve c(1);
    const double v = 0;
    c.append(0.0, {&v, 1}, {&v, 1}, {&v, 1});
    CHECK_THROWS(c.append(0.0, {&v, 1}, {&v, 1}, {&v, 1}));
}
