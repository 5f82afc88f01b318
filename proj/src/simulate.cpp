#include "delaystab/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace delaystab {

namespace {

double euclid(std::span<const double> v) {
    double acc = 0;
    for (double x : v) acc += x * x;
    return std::sqrt(acc);
}

bool finite(std::span<const double> v) {
    return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

// History seen by an RK stage at time tau. The dense output covers
// [-r, t_n]; on (t_n, tau] the solution is replaced by the chord from
// x(t_n) to the stage value.
class StageView final : public HistoryView {
public:
    StageView(const HermiteCurve& curve, double r, double tau, std::span<const double> x_tau)
        : curve_(curve), r_(r), tau_(tau), t_n_(curve.back()), x_n_(curve.value_at(curve.size() - 1)),
          x_tau_(x_tau) {}

    std::size_t dim() const override { return curve_.dim(); }
    double delay() const override { return r_; }

    void value(double s, std::span<double> out) const override {
        const double t = tau_ + s;
        if (t <= t_n_ || tau_ <= t_n_) {
            curve_.eval(std::min(t, t_n_), out);
            return;
        }
        const double th = (t - t_n_) / (tau_ - t_n_);
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = x_n_[i] + th * (x_tau_[i] - x_n_[i]);
    }

    void integral(double a, double b, std::span<double> out) const override {
        const double ta = tau_ + a, tb = tau_ + b;
        std::fill(out.begin(), out.end(), 0.0);
        if (ta < t_n_) curve_.integral(ta, std::min(tb, t_n_), out);
        if (tb > t_n_ && tau_ > t_n_) {
            // exact integral of the chord over [max(ta, t_n), tb]
            const double lo = std::max(ta, t_n_);
            const double th0 = (lo - t_n_) / (tau_ - t_n_), th1 = (tb - t_n_) / (tau_ - t_n_);
            const double len = tb - lo;
            const double mean = 0.5 * (th0 + th1);
            for (std::size_t i = 0; i < out.size(); ++i)
                out[i] += len * (x_n_[i] + mean * (x_tau_[i] - x_n_[i]));
        }
    }

private:
    const HermiteCurve& curve_;
    double r_;
    double tau_;
    double t_n_;
    std::span<const double> x_n_;
    std::span<const double> x_tau_;
};

constexpr int kMaxHalvings = 60;

struct Integrator {
    const DelaySystem& sys;
    HermiteCurve& curve;
    std::size_t n;
    bool escaped = false;
    double escape_time = 0.0;

    std::vector<double> k1, k2, k3, k4, xs, xb;

    Integrator(const DelaySystem& s, HermiteCurve& c)
        : sys(s), curve(c), n(s.dim()), k1(n), k2(n), k3(n), k4(n), xs(n), xb(n) {}

    void eval(double tau, std::span<const double> x_tau, std::span<double> out) {
        sys.rhs(StageView(curve, sys.delay(), tau, x_tau), out);
    }

    // Attempts one RK4 step from the end of the curve to tb; on success the
    // new knot is appended.
    bool attempt(double tb) {
        const double ta = curve.back();
        const double h = tb - ta;
        const auto xa = curve.value_at(curve.size() - 1);
        std::ranges::copy(curve.right_deriv(curve.size() - 1), k1.begin());
        for (std::size_t i = 0; i < n; ++i) xs[i] = xa[i] + 0.5 * h * k1[i];
        eval(ta + 0.5 * h, xs, k2);
        for (std::size_t i = 0; i < n; ++i) xs[i] = xa[i] + 0.5 * h * k2[i];
        eval(ta + 0.5 * h, xs, k3);
        for (std::size_t i = 0; i < n; ++i) xs[i] = xa[i] + h * k3[i];
        eval(tb, xs, k4);
        double dx = 0;
        for (std::size_t i = 0; i < n; ++i) {
            const double inc = h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            xb[i] = xa[i] + inc;
            dx += inc * inc;
        }
        dx = std::sqrt(dx);
        if (!finite(xb) || !std::isfinite(dx) || dx > 0.5 * (1.0 + euclid(xa))) return false;

        curve.append(tb, xb, k4, k4);
        const std::size_t last = curve.size() - 1;
        std::vector<double> d(n);
        eval(tb, curve.value_at(last), d);
        if (finite(d)) {
            curve.set_left_deriv(last, d);
            curve.set_right_deriv(last, d);
        }
        if (!finite(d) || euclid(xb) > kEscapeThreshold) {
            escaped = true;
            escape_time = tb;
        }
        return true;
    }

    void advance(double tb, int depth) {
        if (escaped) return;
        const double ta = curve.back();
        if (attempt(tb)) return;
        const double mid = ta + 0.5 * (tb - ta);
        if (depth >= kMaxHalvings || !(mid > ta) || !(mid < tb)) {
            escaped = true;
            escape_time = ta;
            return;
        }
        advance(mid, depth + 1);
        advance(tb, depth + 1);
    }
};

}  // namespace

std::size_t steps_per_delay(double r, double h) {
    if (!(h > 0) || !(r > 0)) throw std::invalid_argument("steps_per_delay: r and h must be positive");
    return static_cast<std::size_t>(std::ceil(r / h * (1.0 - 1e-12)));
}

Trajectory simulate(const DelaySystem& sys, const Segment& x0, double T, double h) {
    const double r = sys.delay();
    if (std::abs(x0.delay() - r) > 1e-12 * r)
        throw std::invalid_argument("simulate: initial segment delay differs from the system delay");
    if (x0.dim() != sys.dim()) throw std::invalid_argument("simulate: dimension mismatch");
    if (!(T > 0) || !std::isfinite(T)) throw std::invalid_argument("simulate: T must be positive");
    if (h == 0.0) h = r / 200.0;
    if (!(h > 0) || h > r / 10.0 * (1.0 + 1e-12))
        throw std::invalid_argument("simulate: step must satisfy 0 < h <= r/10");

    const std::size_t K = steps_per_delay(r, h);
    const double step = r / static_cast<double>(K);

    HermiteCurve curve = x0.curve();
    curve.set_uniform(false);
    // x is only right-differentiable at 0, with derivative f(x0).
    curve.set_right_deriv(curve.size() - 1, sys.rhs(x0.curve()));

    auto time_of = [&](std::size_t m) {
        return static_cast<double>(m / K) * r + static_cast<double>(m % K) * step;
    };

    Integrator integ(sys, curve);
    const double close = 1e-9 * step;
    for (std::size_t m = 0; !integ.escaped; ++m) {
        const double ta = time_of(m);
        if (ta >= T - close) break;
        double tb = time_of(m + 1);
        if (tb > T + close) tb = T;
        integ.advance(tb, 0);
    }
    return Trajectory(sys, x0, std::move(curve), step, T, integ.escaped, integ.escape_time);
}

Trajectory::Trajectory(DelaySystem system, Segment initial, HermiteCurve curve, double step,
                       double horizon, bool escaped, double escape_time)
    : system_(std::move(system)),
      initial_(std::move(initial)),
      curve_(std::move(curve)),
      step_(step),
      horizon_(horizon),
      escaped_(escaped),
      escape_time_(escape_time) {}

double Trajectory::check_time(double t) const {
    const double tol = 1e-9 * step_;
    if (!(t >= -tol) || !(t <= end_time() + tol))
        throw std::out_of_range("Trajectory: time " + std::to_string(t) + " outside [0, " +
                                std::to_string(end_time()) + "]");
    return std::clamp(t, 0.0, end_time());
}

void Trajectory::state(double t, std::span<double> out) const {
    if (!(t >= curve_.front() - 1e-9 * step_) || !(t <= end_time() + 1e-9 * step_))
        throw std::out_of_range("Trajectory::state: time outside the covered range");
    curve_.eval(std::clamp(t, curve_.front(), end_time()), out);
}

std::vector<double> Trajectory::state(double t) const {
    std::vector<double> out(system_.dim());
    state(t, out);
    return out;
}

HermiteCurve Trajectory::curve_at(double t) const {
    t = check_time(t);
    const double r = delay();
    if (t == 0.0) return initial_.curve();
    return curve_.restrict(t - r, t, -t);
}

Segment Trajectory::segment_at(double t, std::size_t intervals) const {
    if (intervals == 0) intervals = initial_.intervals();
    t = check_time(t);
    if (t == 0.0 && intervals == initial_.intervals()) return initial_;
    return Segment::from_curve(curve_at(t), intervals);
}

std::vector<double> Trajectory::mesh_times() const {
    const auto& k = curve_.knots();
    auto it = std::lower_bound(k.begin(), k.end(), 0.0);
    return {it, k.end()};
}

}  // namespace delaystab
