#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "delaystab/grid_function.hpp"
#include "delaystab/segment.hpp"
#include "delaystab/stability.hpp"
#include "delaystab/system.hpp"

namespace delaystab {

/// Candidate Lyapunov-Krasovskii functional on history segments.
///
///   WeightedSup(l):       V(x) = sup_{s in [-r,0]} e^{l s} |x(s)|
///   QuadraticIntegral(m): V(x) = |x(0)|^2 + int_{-r}^0 e^{m s} |x(s)|^2 ds
///   SpaceNorm(X):         V(x) = ||x||_X
///
/// every form multiplied by `scale`.
struct Functional {
    enum class Kind { WeightedSup, QuadraticIntegral, SpaceNorm };

    Kind kind = Kind::WeightedSup;
    double rate = 0.0;  // l or m
    SpaceSpec space{};
    double scale = 1.0;
    NormOptions norms{};

    static Functional weighted_sup(double lambda);
    static Functional quadratic_integral(double mu);
    static Functional space_norm(const SpaceSpec& space);

    Functional scaled(double c) const;
    std::string name() const;

    double operator()(const HermiteCurve& x) const;
    double operator()(const Segment& x) const { return (*this)(x.curve()); }
};

/// Positive definite Q(xi) = g(|xi|) with g(0) = 0.
class RadialFunction {
public:
    explicit RadialFunction(MonotoneGridFunction profile);
    static RadialFunction linear(double slope) { return RadialFunction(MonotoneGridFunction::linear(slope)); }

    double operator()(std::span<const double> xi) const;
    const MonotoneGridFunction& profile() const { return g_; }

private:
    MonotoneGridFunction g_;
};

struct DiniOptions {
    double h0_fraction = 1e-2;  // h0 = h0_fraction * r
    std::size_t levels = 6;     // h_k = h0 ratio^{-k}, k < levels
    double ratio = 4.0;
    std::size_t substeps = 1024;  // integrator steps per h0
};

/// Upper-right Dini derivative estimate from a ladder of forward quotients.
struct DiniEstimate {
    std::vector<double> h;          // strictly decreasing
    std::vector<double> quotients;  // (V(y_{h_k}) - V(x)) / h_k
    double estimate = 0.0;          // max of the last three quotients
    bool trend = false;             // last two quotients differ by more than 10%
};

/// Ladder along the flow: y_h = x_h, the solution segment at time h.
/// Throws EscapeError if the short simulation escapes.
DiniEstimate dini_derivative(const DelaySystem& sys, const Functional& V, const Segment& x,
                             const DiniOptions& opts = {});

/// Ladder along the prolongation: y_h = P_h x with slope f(x).
DiniEstimate prolongation_derivative(const DelaySystem& sys, const Functional& U, const Segment& x,
                                     const DiniOptions& opts = {});

/// Largest |V(x) - V(y)| / ||x - y||_X over `pairs` sampled pairs from the
/// R-ball of `space`.
double functional_lipschitz(const DelaySystem& sys, const Functional& V, const SpaceSpec& space,
                            double R, std::size_t pairs, const Budget& budget,
                            const NormOptions& norms = {});

struct LyapunovOptions {
    CheckOptions check{};
    DiniOptions dini{};
    double algebraic_slack = 1e-6;  // relative, for sandwiches and decay bounds
    double dini_slack = 1e-3;       // times (1 + V) for Dini comparisons
    double integral_slack = 1e-4;   // absolute, for the dissipation integral
    double growth_slack = 1e-3;     // relative, for U(x_t) <= e^{mu t} U(x_0)
    std::size_t trajectories = 0;   // full trajectories to follow; 0 = all samples
};

/// Coercive sandwich a1(||x||_X) <= V(x) <= a2(||x||_X) and the decay
/// V(x_t) <= e^{-t} V(x_0) on sampled histories and report times, plus the
/// implied estimate ||x_t||_X <= a1^{-1}(e^{-t} a2(||x_0||_X)).
StabilityReport check_theorem5(const DelaySystem& sys, const Functional& V,
                               const MonotoneGridFunction& a1, const MonotoneGridFunction& a2,
                               const SpaceSpec& space, double rho, double T, const Budget& budget,
                               const LyapunovOptions& opts = {});

/// Non-coercive sandwich a1(|x(0)|) <= V(x) <= a2(||x||_X), the Dini bound
/// D+V(x) <= -Q(x(0)) and the dissipation inequality
/// V(x_t) + int_0^t Q(x(s)) ds <= V(x_0) along trajectories.
StabilityReport check_theorem6(const DelaySystem& sys, const Functional& V,
                               const MonotoneGridFunction& a1, const MonotoneGridFunction& a2,
                               const RadialFunction& Q, const SpaceSpec& space, double rho, double T,
                               const Budget& budget, const LyapunovOptions& opts = {});

/// U(x) >= a(|x(0)|) and prolongation quotients
/// (U(P_h x) - U(x)) / h <= mu U(x) on the ladder, cross-checked by
/// U(x_t) <= e^{mu t} U(x_0) along trajectories.
StabilityReport check_rfc_sufficient(const DelaySystem& sys, const Functional& U,
                                     const MonotoneGridFunction& a, double mu, const SpaceSpec& space,
                                     double rho, double T, const Budget& budget,
                                     const LyapunovOptions& opts = {});

}  // namespace delaystab
