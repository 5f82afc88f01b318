#pragma once

#include <cmath>
#include <functional>
#include <span>

#include "delaystab/segment.hpp"

namespace testutil {

using ScalarFn = std::function<double(double)>;

inline delaystab::Segment scalar_segment(double r, std::size_t N, ScalarFn x, ScalarFn dx) {
    return delaystab::Segment::from_function(
        r, N, 1, [&](double s, std::span<double> o) { o[0] = x(s); },
        [&](double s, std::span<double> o) { o[0] = dx(s); });
}

inline bool close_rel(double a, double b, double rel, double abs_tol = 0.0) {
    return std::abs(a - b) <= rel * std::max(std::abs(a), std::abs(b)) + abs_tol;
}

}  // namespace testutil
