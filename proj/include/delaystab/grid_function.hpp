#pragma once

#include <functional>
#include <vector>

namespace delaystab {

/// Nondecreasing piecewise-linear function on a grid of abscissae, used for
/// the comparison functions a1, a2, a and the radial profile of Q.
///
/// Beyond the last grid point the function continues with the slope of the
/// last cell, so class-K-infinity data stays unbounded.
class MonotoneGridFunction {
public:
    MonotoneGridFunction(std::vector<double> s, std::vector<double> v);

    /// g(s) = slope * s.
    static MonotoneGridFunction linear(double slope, double s_max = 1.0);
    /// Tabulates f on `points` uniform nodes of [0, s_max].
    static MonotoneGridFunction tabulate(const std::function<double(double)>& f, double s_max,
                                         std::size_t points = 257);

    double operator()(double s) const;

    /// Smallest s with g(s) >= y, by bisection over the grid cells and
    /// linear inversion inside the cell.
    double inverse(double y) const;

    const std::vector<double>& s() const { return s_; }
    const std::vector<double>& v() const { return v_; }

private:
    std::vector<double> s_;
    std::vector<double> v_;
};

}  // namespace delaystab
