#include "delaystab/grid_function.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace delaystab {

MonotoneGridFunction::MonotoneGridFunction(std::vector<double> s, std::vector<double> v)
    : s_(std::move(s)), v_(std::move(v)) {
    if (s_.size() < 2 || s_.size() != v_.size())
        throw std::invalid_argument("MonotoneGridFunction: need at least two matching points");
    for (std::size_t i = 0; i < s_.size(); ++i) {
        if (!std::isfinite(s_[i]) || !std::isfinite(v_[i]))
            throw std::invalid_argument("MonotoneGridFunction: values must be finite");
        if (i > 0 && !(s_[i] > s_[i - 1]))
            throw std::invalid_argument("MonotoneGridFunction: abscissae must increase");
        if (i > 0 && v_[i] < v_[i - 1])
            throw std::invalid_argument("MonotoneGridFunction: values must be nondecreasing");
    }
    if (s_.front() < 0) throw std::invalid_argument("MonotoneGridFunction: domain starts below 0");
}

MonotoneGridFunction MonotoneGridFunction::linear(double slope, double s_max) {
    if (!(slope >= 0) || !(s_max > 0)) throw std::invalid_argument("MonotoneGridFunction: bad linear data");
    return {{0.0, s_max}, {0.0, slope * s_max}};
}

MonotoneGridFunction MonotoneGridFunction::tabulate(const std::function<double(double)>& f,
                                                    double s_max, std::size_t points) {
    if (points < 2 || !(s_max > 0)) throw std::invalid_argument("MonotoneGridFunction: bad grid");
    std::vector<double> s(points), v(points);
    for (std::size_t i = 0; i < points; ++i) {
        s[i] = s_max * static_cast<double>(i) / static_cast<double>(points - 1);
        v[i] = f(s[i]);
    }
    return {std::move(s), std::move(v)};
}

double MonotoneGridFunction::operator()(double s) const {
    std::size_t c;
    if (s <= s_.front()) {
        c = 0;
    } else {
        auto it = std::upper_bound(s_.begin(), s_.end(), s);
        c = std::min<std::size_t>(static_cast<std::size_t>(it - s_.begin()) - 1, s_.size() - 2);
    }
    const double th = (s - s_[c]) / (s_[c + 1] - s_[c]);
    return v_[c] + th * (v_[c + 1] - v_[c]);
}

double MonotoneGridFunction::inverse(double y) const {
    if (y <= v_.front()) return s_.front();
    std::size_t c;
    if (y > v_.back()) {
        c = s_.size() - 2;
        if (!(v_[c + 1] > v_[c])) throw std::domain_error("MonotoneGridFunction: value out of range");
    } else {
        // first cell whose right value reaches y
        std::size_t lo = 0, hi = v_.size() - 1;
        while (hi - lo > 1) {
            const std::size_t mid = (lo + hi) / 2;
            if (v_[mid] >= y)
                hi = mid;
            else
                lo = mid;
        }
        c = lo;
    }
    const double dv = v_[c + 1] - v_[c];
    if (dv <= 0) return s_[c + 1];
    return s_[c] + (y - v_[c]) / dv * (s_[c + 1] - s_[c]);
}

}  // namespace delaystab
