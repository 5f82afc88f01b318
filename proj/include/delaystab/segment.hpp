#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "delaystab/hermite_curve.hpp"

namespace delaystab {

/// History segment on [-r, 0] sampled on a uniform grid of N+1 nodes,
/// with value and derivative data at each node and cubic Hermite
/// interpolation in between.
///
/// `derivs` holds the derivative used by the cell to the right of each
/// node (the last node uses its left derivative). `left_derivs` may differ
/// from `derivs` at nodes where the history has a derivative jump.
class Segment {
public:
    Segment(double r, std::vector<double> nodes, std::vector<double> values,
            std::vector<double> derivs, std::size_t dim,
            std::vector<double> left_derivs = {});

    static Segment uniform(double r, std::size_t intervals, std::size_t dim,
                           std::vector<double> values, std::vector<double> derivs,
                           std::vector<double> left_derivs = {});
    static Segment constant(double r, std::span<const double> c, std::size_t intervals = 200);
    static Segment zero(double r, std::size_t dim, std::size_t intervals = 200);

    /// Samples value and derivative callbacks at the nodes.
    static Segment from_function(double r, std::size_t intervals, std::size_t dim,
                                 const std::function<void(double, std::span<double>)>& x,
                                 const std::function<void(double, std::span<double>)>& dx);

    /// Resamples a curve defined on [-r, 0] onto the uniform grid. Nodes that
    /// coincide with curve knots inherit both one-sided derivatives.
    static Segment from_curve(const HermiteCurve& curve, std::size_t intervals);

    double delay() const { return r_; }
    std::size_t dim() const { return curve_.dim(); }
    std::size_t intervals() const { return curve_.cells(); }
    std::size_t size() const { return curve_.size(); }
    double spacing() const { return r_ / static_cast<double>(intervals()); }

    const std::vector<double>& nodes() const { return curve_.knots(); }
    std::span<const double> value(std::size_t i) const { return curve_.value_at(i); }
    std::span<const double> deriv(std::size_t i) const;
    std::span<const double> left_deriv(std::size_t i) const { return curve_.left_deriv(i); }
    std::vector<double> values() const;
    std::vector<double> derivs() const;
    std::vector<double> left_derivs() const;
    bool has_derivative_jumps() const;

    /// x(0).
    std::span<const double> head() const { return value(size() - 1); }
    void eval(double s, std::span<double> out) const { curve_.eval(s, out); }

    const HermiteCurve& curve() const { return curve_; }

    Segment operator+(const Segment& other) const;
    Segment operator-(const Segment& other) const;
    Segment operator*(double c) const;

private:
    Segment(double r, HermiteCurve curve);
    Segment combine(const Segment& other, double a, double b) const;
    void validate() const;

    double r_;
    HermiteCurve curve_;
};

Segment operator*(double c, const Segment& seg);

/// State space for segment norms.
struct SpaceSpec {
    enum class Kind { SupC0, Sobolev, Hoelder };

    Kind kind = Kind::SupC0;
    double p = 0.0;  // Sobolev exponent in (1, inf]
    double a = 0.0;  // Hoelder exponent in (0, 1]

    static SpaceSpec sup_c0();
    static SpaceSpec sobolev(double p);
    static SpaceSpec hoelder(double a);

    /// Exponent p with a = 1 - 1/p for the Hoelder case, p itself for
    /// Sobolev, and infinity for C0.
    double paired_p() const;
    std::string label() const;

    bool operator==(const SpaceSpec&) const = default;
};

struct NormOptions {
    unsigned refine = 8;             // sub-samples per cell, must be even
    std::size_t hoelder_cap = 2048;  // max samples for the pair search
    bool polish = true;              // refine sup-type maxima between samples
};

/// Dense samples of a curve: `values` on the global refined grid and
/// `derivs` per cell (refine+1 samples each, one-sided at cell ends).
struct RefinedSamples {
    std::size_t dim = 1;
    unsigned refine = 8;
    std::vector<double> s;
    std::vector<double> values;
    std::vector<double> derivs;
};

RefinedSamples refine_curve(const HermiteCurve& curve, unsigned refine);

double sup_norm(const HermiteCurve& curve, const NormOptions& opts = {});
double sup_norm(const Segment& seg, const NormOptions& opts = {});

/// sup over s of w(s) |x(s)|, sampled on the refined grid and, when
/// enabled, polished by golden-section search around the best samples.
double weighted_sup(const HermiteCurve& curve, const std::function<double(double)>& weight,
                    const NormOptions& opts = {});

/// ||x'||_p by composite Simpson quadrature of the Hermite derivative on
/// the refined grid; p = infinity gives the max over refined samples.
double lp_deriv_norm(const HermiteCurve& curve, double p, const NormOptions& opts = {});
double lp_deriv_norm(const Segment& seg, double p, const NormOptions& opts = {});

/// max |x'| over the refined derivative samples.
double max_abs_deriv(const HermiteCurve& curve, const NormOptions& opts = {});
double max_abs_deriv(const Segment& seg, const NormOptions& opts = {});

/// Hoelder seminorm of exponent a, maximised over all pairs of a uniform
/// sample grid (at most `hoelder_cap` points). This is a lower
/// approximation of the supremum.
double hoelder_seminorm(const HermiteCurve& curve, double a, const NormOptions& opts = {});
double hoelder_seminorm(const Segment& seg, double a, const NormOptions& opts = {});

double space_norm(const HermiteCurve& curve, const SpaceSpec& space, const NormOptions& opts = {});
double space_norm(const Segment& seg, const SpaceSpec& space, const NormOptions& opts = {});

/// Number of points used by the Hoelder pair search for a curve.
std::size_t hoelder_grid_points(const HermiteCurve& curve, const NormOptions& opts = {});

/// Prolongation: x(s+h) on [-r,-h] and x(0) + (s+h) f on (-h, 0].
HermiteCurve prolong_curve(const HermiteCurve& x, std::span<const double> f_value, double h);
Segment prolong(const Segment& seg, std::span<const double> f_value, double h);

}  // namespace delaystab
