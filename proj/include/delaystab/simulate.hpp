#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

#include "delaystab/hermite_curve.hpp"
#include "delaystab/segment.hpp"
#include "delaystab/system.hpp"

namespace delaystab {

/// Solution of x'(t) = f(x_t) on [-r, t_end] with Hermite dense output.
///
/// Knots for t >= 0 carry the exact right-hand side as derivative, so the
/// dense output is C^1 away from t = 0. A trajectory that left the ball
/// |x| <= 1e12 before the requested horizon is flagged `escaped`.
class Trajectory {
public:
    Trajectory(DelaySystem system, Segment initial, HermiteCurve curve, double step,
               double horizon, bool escaped, double escape_time);

    const DelaySystem& system() const { return system_; }
    const Segment& initial() const { return initial_; }
    const HermiteCurve& curve() const { return curve_; }
    double step() const { return step_; }
    double delay() const { return system_.delay(); }
    /// Requested final time.
    double horizon() const { return horizon_; }
    /// Last time covered by the dense output.
    double end_time() const { return curve_.back(); }
    bool escaped() const { return escaped_; }
    double escape_time() const { return escape_time_; }

    /// x(t) for t in [-r, end_time()].
    void state(double t, std::span<double> out) const;
    std::vector<double> state(double t) const;

    /// The exact segment x_t as a curve on [-r, 0] (no resampling).
    HermiteCurve curve_at(double t) const;

    /// x_t resampled onto the uniform grid with `intervals` cells (default:
    /// the grid of the initial segment).
    Segment segment_at(double t, std::size_t intervals = 0) const;

    /// Mesh times t >= 0 (step multiples plus any guard substeps).
    std::vector<double> mesh_times() const;

private:
    double check_time(double t) const;

    DelaySystem system_;
    Segment initial_;
    HermiteCurve curve_;
    double step_;
    double horizon_;
    bool escaped_;
    double escape_time_;
};

/// Threshold on |x(t)| beyond which the solution is declared escaped.
inline constexpr double kEscapeThreshold = 1e12;

/// Number of steps per delay interval for a requested step h; the step
/// actually used is r / steps_per_delay(r, h), so every multiple of r is a
/// mesh point.
std::size_t steps_per_delay(double r, double h);

/// Classical RK4 by the method of steps. h = 0 selects r / 200. Requires
/// h <= r / 10.
///
/// A step whose increment exceeds 0.5 (1 + |x|) is split in halves
/// recursively; this keeps finite-time blowup resolved up to the escape
/// threshold.
Trajectory simulate(const DelaySystem& sys, const Segment& x0, double T, double h = 0.0);

/// Thrown by routines that need a complete trajectory.
class EscapeError : public std::runtime_error {
public:
    EscapeError(double time, const std::string& what)
        : std::runtime_error(what), time_(time) {}
    double time() const { return time_; }

private:
    double time_;
};

}  // namespace delaystab
