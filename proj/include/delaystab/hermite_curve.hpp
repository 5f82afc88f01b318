#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace delaystab {

/// Read access to a history function on [-r, 0].
///
/// Delay systems see their state only through point queries and
/// integrals of the state over subintervals, which keeps distributed
/// delays on the same footing as point delays.
class HistoryView {
public:
    virtual ~HistoryView() = default;

    virtual std::size_t dim() const = 0;
    virtual double delay() const = 0;

    /// x(s) for s in [-r, 0].
    virtual void value(double s, std::span<double> out) const = 0;

    /// Integral of x over [a, b], with -r <= a <= b <= 0.
    virtual void integral(double a, double b, std::span<double> out) const = 0;
};

/// Piecewise cubic Hermite curve in R^n on non-uniform knots.
///
/// Each knot carries a value plus a left and a right derivative, so
/// derivative jumps at knots are represented exactly. Cell i spans
/// [knot i, knot i+1] and is the cubic fixed by the value and right
/// derivative at knot i and the value and left derivative at knot i+1.
class HermiteCurve {
public:
    explicit HermiteCurve(std::size_t dim = 1);
    HermiteCurve(std::vector<double> knots, std::vector<double> values,
                 std::vector<double> right_derivs, std::vector<double> left_derivs,
                 std::size_t dim);

    std::size_t dim() const { return dim_; }
    std::size_t size() const { return knots_.size(); }
    std::size_t cells() const { return knots_.empty() ? 0 : knots_.size() - 1; }
    bool empty() const { return knots_.empty(); }
    double front() const { return knots_.front(); }
    double back() const { return knots_.back(); }
    double length() const { return back() - front(); }

    const std::vector<double>& knots() const { return knots_; }
    std::span<const double> value_at(std::size_t i) const;
    std::span<const double> right_deriv(std::size_t i) const;
    std::span<const double> left_deriv(std::size_t i) const;

    /// Appends a knot strictly to the right of the current last knot.
    void append(double t, std::span<const double> value,
                std::span<const double> left_deriv, std::span<const double> right_deriv);
    void set_left_deriv(std::size_t i, std::span<const double> d);
    void set_right_deriv(std::size_t i, std::span<const double> d);

    /// Marks knots as uniformly spaced, enabling O(1) cell lookup.
    void set_uniform(bool uniform) { uniform_ = uniform; }
    bool uniform() const { return uniform_; }

    /// Cell containing t (clamped to the valid range).
    std::size_t locate(double t) const;

    void eval(double t, std::span<double> out) const;
    /// Derivative inside the containing cell; at an interior knot this is
    /// the right derivative.
    void eval_deriv(double t, std::span<double> out) const;
    void eval_cell(std::size_t cell, double theta, std::span<double> value,
                   std::span<double> deriv) const;
    void integral(double a, double b, std::span<double> out) const;

    /// Exact restriction to [a, b], translated by `shift`.
    HermiteCurve restrict(double a, double b, double shift = 0.0) const;

    /// Index of a knot within `tol` of t, or size() when there is none.
    std::size_t knot_near(double t, double tol) const;

    bool all_finite() const;

private:
    void cell_integral(std::size_t cell, double theta_a, double theta_b,
                       std::span<double> out) const;

    std::size_t dim_;
    std::vector<double> knots_;
    std::vector<double> values_;
    std::vector<double> right_;
    std::vector<double> left_;
    bool uniform_ = false;
};

/// HistoryView over a curve defined on [-r, 0].
class CurveHistory final : public HistoryView {
public:
    explicit CurveHistory(const HermiteCurve& curve) : curve_(curve) {}

    std::size_t dim() const override { return curve_.dim(); }
    double delay() const override { return curve_.length(); }
    void value(double s, std::span<double> out) const override { curve_.eval(s, out); }
    void integral(double a, double b, std::span<double> out) const override {
        curve_.integral(a, b, out);
    }

private:
    const HermiteCurve& curve_;
};

}  // namespace delaystab
