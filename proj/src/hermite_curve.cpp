#include "delaystab/hermite_curve.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace delaystab {

namespace {

struct Basis {
    double h00, h10, h01, h11;
};

Basis value_basis(double th) {
    const double t2 = th * th;
    const double t3 = t2 * th;
    return {2 * t3 - 3 * t2 + 1, t3 - 2 * t2 + th, -2 * t3 + 3 * t2, t3 - t2};
}

Basis deriv_basis(double th) {
    const double t2 = th * th;
    return {6 * t2 - 6 * th, 3 * t2 - 4 * th + 1, -6 * t2 + 6 * th, 3 * t2 - 2 * th};
}

// Antiderivatives of the value basis in theta.
Basis integral_basis(double th) {
    const double t2 = th * th;
    const double t3 = t2 * th;
    const double t4 = t3 * th;
    return {t4 / 2 - t3 + th, t4 / 4 - 2 * t3 / 3 + t2 / 2, -t4 / 2 + t3, t4 / 4 - t3 / 3};
}

}  // namespace

HermiteCurve::HermiteCurve(std::size_t dim) : dim_(dim) {
    if (dim == 0) throw std::invalid_argument("HermiteCurve: dimension must be positive");
}

HermiteCurve::HermiteCurve(std::vector<double> knots, std::vector<double> values,
                           std::vector<double> right_derivs, std::vector<double> left_derivs,
                           std::size_t dim)
    : dim_(dim),
      knots_(std::move(knots)),
      values_(std::move(values)),
      right_(std::move(right_derivs)),
      left_(std::move(left_derivs)) {
    if (dim_ == 0) throw std::invalid_argument("HermiteCurve: dimension must be positive");
    if (left_.empty()) left_ = right_;
    const std::size_t n = knots_.size();
    if (values_.size() != n * dim_ || right_.size() != n * dim_ || left_.size() != n * dim_)
        throw std::invalid_argument("HermiteCurve: data size does not match knots x dim");
    for (std::size_t i = 1; i < n; ++i)
        if (!(knots_[i] > knots_[i - 1]))
            throw std::invalid_argument("HermiteCurve: knots must be strictly increasing");
}

std::span<const double> HermiteCurve::value_at(std::size_t i) const {
    return {values_.data() + i * dim_, dim_};
}
std::span<const double> HermiteCurve::right_deriv(std::size_t i) const {
    return {right_.data() + i * dim_, dim_};
}
std::span<const double> HermiteCurve::left_deriv(std::size_t i) const {
    return {left_.data() + i * dim_, dim_};
}

void HermiteCurve::append(double t, std::span<const double> value,
                          std::span<const double> left_deriv,
                          std::span<const double> right_deriv) {
    if (!knots_.empty() && !(t > knots_.back()))
        throw std::invalid_argument("HermiteCurve::append: knot not increasing");
    knots_.push_back(t);
    values_.insert(values_.end(), value.begin(), value.end());
    left_.insert(left_.end(), left_deriv.begin(), left_deriv.end());
    right_.insert(right_.end(), right_deriv.begin(), right_deriv.end());
    uniform_ = false;
}

void HermiteCurve::set_left_deriv(std::size_t i, std::span<const double> d) {
    std::copy(d.begin(), d.end(), left_.begin() + static_cast<std::ptrdiff_t>(i * dim_));
}

void HermiteCurve::set_right_deriv(std::size_t i, std::span<const double> d) {
    std::copy(d.begin(), d.end(), right_.begin() + static_cast<std::ptrdiff_t>(i * dim_));
}

std::size_t HermiteCurve::locate(double t) const {
    const std::size_t nc = cells();
    if (nc == 0) throw std::logic_error("HermiteCurve: no cells");
    if (uniform_) {
        const double step = (knots_.back() - knots_.front()) / static_cast<double>(nc);
        const double pos = (t - knots_.front()) / step;
        if (pos <= 0) return 0;
        auto i = static_cast<std::size_t>(pos);
        return std::min(i, nc - 1);
    }
    auto it = std::upper_bound(knots_.begin(), knots_.end(), t);
    if (it == knots_.begin()) return 0;
    auto i = static_cast<std::size_t>(it - knots_.begin()) - 1;
    return std::min(i, nc - 1);
}

void HermiteCurve::eval_cell(std::size_t cell, double th, std::span<double> value,
                             std::span<double> deriv) const {
    const double dt = knots_[cell + 1] - knots_[cell];
    const double* y0 = values_.data() + cell * dim_;
    const double* y1 = y0 + dim_;
    const double* m0 = right_.data() + cell * dim_;
    const double* m1 = left_.data() + (cell + 1) * dim_;
    if (!value.empty()) {
        const Basis b = value_basis(th);
        for (std::size_t k = 0; k < dim_; ++k)
            value[k] = b.h00 * y0[k] + b.h10 * dt * m0[k] + b.h01 * y1[k] + b.h11 * dt * m1[k];
    }
    if (!deriv.empty()) {
        const Basis b = deriv_basis(th);
        for (std::size_t k = 0; k < dim_; ++k)
            deriv[k] = (b.h00 * y0[k] + b.h01 * y1[k]) / dt + b.h10 * m0[k] + b.h11 * m1[k];
    }
}

void HermiteCurve::eval(double t, std::span<double> out) const {
    if (knots_.size() == 1) {
        std::copy_n(values_.begin(), dim_, out.begin());
        return;
    }
    const std::size_t c = locate(t);
    const double th = (t - knots_[c]) / (knots_[c + 1] - knots_[c]);
    eval_cell(c, th, out, {});
}

void HermiteCurve::eval_deriv(double t, std::span<double> out) const {
    if (knots_.size() == 1) {
        std::copy_n(right_.begin(), dim_, out.begin());
        return;
    }
    const std::size_t c = locate(t);
    const double th = (t - knots_[c]) / (knots_[c + 1] - knots_[c]);
    eval_cell(c, th, {}, out);
}

void HermiteCurve::cell_integral(std::size_t cell, double ta, double tb,
                                 std::span<double> out) const {
    const double dt = knots_[cell + 1] - knots_[cell];
    const Basis ba = integral_basis(ta);
    const Basis bb = integral_basis(tb);
    const double w00 = bb.h00 - ba.h00, w10 = bb.h10 - ba.h10;
    const double w01 = bb.h01 - ba.h01, w11 = bb.h11 - ba.h11;
    const double* y0 = values_.data() + cell * dim_;
    const double* y1 = y0 + dim_;
    const double* m0 = right_.data() + cell * dim_;
    const double* m1 = left_.data() + (cell + 1) * dim_;
    for (std::size_t k = 0; k < dim_; ++k)
        out[k] += dt * (w00 * y0[k] + dt * w10 * m0[k] + w01 * y1[k] + dt * w11 * m1[k]);
}

void HermiteCurve::integral(double a, double b, std::span<double> out) const {
    std::fill(out.begin(), out.end(), 0.0);
    if (!(b > a) || cells() == 0) return;
    const std::size_t ca = locate(a);
    const std::size_t cb = locate(b);
    auto theta = [&](std::size_t c, double t) {
        return std::clamp((t - knots_[c]) / (knots_[c + 1] - knots_[c]), 0.0, 1.0);
    };
    if (ca == cb) {
        cell_integral(ca, theta(ca, a), theta(ca, b), out);
        return;
    }
    cell_integral(ca, theta(ca, a), 1.0, out);
    for (std::size_t c = ca + 1; c < cb; ++c) cell_integral(c, 0.0, 1.0, out);
    cell_integral(cb, 0.0, theta(cb, b), out);
}

std::size_t HermiteCurve::knot_near(double t, double tol) const {
    if (knots_.empty()) return 0;
    auto it = std::lower_bound(knots_.begin(), knots_.end(), t - tol);
    if (it != knots_.end() && std::abs(*it - t) <= tol)
        return static_cast<std::size_t>(it - knots_.begin());
    return knots_.size();
}

HermiteCurve HermiteCurve::restrict(double a, double b, double shift) const {
    if (!(b > a)) throw std::invalid_argument("HermiteCurve::restrict: empty interval");
    const double span_len = knots_.back() - knots_.front();
    const double slack = 1e-12 * std::max(1.0, span_len);
    if (a < knots_.front() - slack || b > knots_.back() + slack)
        throw std::out_of_range("HermiteCurve::restrict: interval outside curve");
    a = std::max(a, knots_.front());
    b = std::min(b, knots_.back());

    const double tol = 1e-9 * (span_len / static_cast<double>(std::max<std::size_t>(1, cells())));
    HermiteCurve out(dim_);
    std::vector<double> v(dim_), d(dim_);

    const std::size_t ia = knot_near(a, tol);
    std::size_t first_interior;
    if (ia < knots_.size()) {
        out.append(a + shift, value_at(ia), right_deriv(ia), right_deriv(ia));
        first_interior = ia + 1;
    } else {
        const std::size_t c = locate(a);
        eval_cell(c, (a - knots_[c]) / (knots_[c + 1] - knots_[c]), v, d);
        out.append(a + shift, v, d, d);
        first_interior = c + 1;
    }

    const std::size_t ib = knot_near(b, tol);
    const double stop = ib < knots_.size() ? knots_[ib] : b;
    for (std::size_t i = first_interior; i < knots_.size() && knots_[i] < stop - tol; ++i)
        out.append(knots_[i] + shift, value_at(i), left_deriv(i), right_deriv(i));

    if (ib < knots_.size()) {
        out.append(b + shift, value_at(ib), left_deriv(ib), left_deriv(ib));
    } else {
        const std::size_t c = locate(b);
        eval_cell(c, (b - knots_[c]) / (knots_[c + 1] - knots_[c]), v, d);
        out.append(b + shift, v, d, d);
    }
    return out;
}

bool HermiteCurve::all_finite() const {
    auto finite = [](const std::vector<double>& xs) {
        return std::all_of(xs.begin(), xs.end(), [](double x) { return std::isfinite(x); });
    };
    return finite(knots_) && finite(values_) && finite(left_) && finite(right_);
}

}  // namespace delaystab
