#include "delaystab/lyapunov.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "delaystab/parallel.hpp"
#include "delaystab/simulate.hpp"

namespace delaystab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double step_of(const CheckOptions& opts, double r) { return opts.step > 0 ? opts.step : r / 200.0; }

void require_positive(double v, const char* what) {
    if (!(v > 0) || !std::isfinite(v)) throw std::invalid_argument(std::string(what) + " must be positive");
}

double euclid(std::span<const double> v) {
    double s = 0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

// a <= b up to a relative slack; exact zeros compare exactly.
bool leq(double a, double b, double rel) { return a <= b + rel * std::abs(b); }

double ratio(double a, double b) {
    if (b > 0) return a / b;
    return a > 0 ? kInf : 0.0;
}

Witness make_witness(const SamplerConfig& cfg, std::size_t index, double time, double value) {
    return Witness{index, cfg.seed, cfg.target_norm, sample_one(cfg, index), time, value};
}

void fill_budget(StabilityReport& rep, const Budget& budget, std::size_t simulations, std::size_t times) {
    rep.budget["samples"] = budget.samples;
    rep.budget["simulations"] = simulations;
    rep.budget["report_times"] = times;
    rep.budget["seed"] = static_cast<std::size_t>(budget.seed);
}

std::size_t trajectory_count(const LyapunovOptions& opts, const Budget& budget) {
    return opts.trajectories == 0 ? budget.samples : std::min(opts.trajectories, budget.samples);
}

std::vector<double> ladder(double r, const DiniOptions& opts) {
    if (opts.levels < 3) throw std::invalid_argument("dini: need at least three ladder levels");
    if (!(opts.ratio > 1)) throw std::invalid_argument("dini: ladder ratio must exceed 1");
    require_positive(opts.h0_fraction, "dini h0 fraction");
    std::vector<double> h(opts.levels);
    for (std::size_t k = 0; k < opts.levels; ++k) h[k] = opts.h0_fraction * r * std::pow(opts.ratio, -double(k));
    return h;
}

DiniEstimate summarise(std::vector<double> h, std::vector<double> q) {
    DiniEstimate d;
    const std::size_t n = q.size();
    d.estimate = std::max({q[n - 1], q[n - 2], q[n - 3]});
    d.trend = std::abs(q[n - 1] - q[n - 2]) > 0.1 * std::abs(q[n - 1]) + 1e-12;
    d.h = std::move(h);
    d.quotients = std::move(q);
    if (!std::isfinite(d.estimate)) throw std::runtime_error("dini: non-finite quotient");
    return d;
}

// Composite Simpson (four panels) of Q(x(s)) over [a, b].
double integrate_q(const Trajectory& tr, const RadialFunction& Q, double a, double b, std::vector<double>& buf) {
    constexpr int m = 4;
    const double h = (b - a) / m;
    double sum = 0;
    for (int j = 0; j <= m; ++j) {
        tr.state(a + j * h, buf);
        const double w = (j == 0 || j == m) ? 1.0 : (j % 2 ? 4.0 : 2.0);
        sum += w * Q(buf);
    }
    return sum * h / 3.0;
}

}  // namespace

// ---------------------------------------------------------------------------

Functional Functional::weighted_sup(double lambda) {
    if (!std::isfinite(lambda)) throw std::invalid_argument("WeightedSup: rate must be finite");
    Functional f;
    f.kind = Kind::WeightedSup;
    f.rate = lambda;
    return f;
}

Functional Functional::quadratic_integral(double mu) {
    if (!std::isfinite(mu)) throw std::invalid_argument("QuadraticIntegral: rate must be finite");
    Functional f;
    f.kind = Kind::QuadraticIntegral;
    f.rate = mu;
    return f;
}

Functional Functional::space_norm(const SpaceSpec& space) {
    Functional f;
    f.kind = Kind::SpaceNorm;
    f.space = space;
    return f;
}

Functional Functional::scaled(double c) const {
    if (!(c >= 0) || !std::isfinite(c)) throw std::invalid_argument("Functional: scale must be nonnegative");
    Functional f = *this;
    f.scale *= c;
    return f;
}

std::string Functional::name() const {
    std::ostringstream os;
    switch (kind) {
        case Kind::WeightedSup: os << "WeightedSup(" << rate << ")"; break;
        case Kind::QuadraticIntegral: os << "QuadraticIntegral(" << rate << ")"; break;
        case Kind::SpaceNorm: os << "SpaceNorm(" << space.label() << ")"; break;
    }
    if (scale != 1.0) os << "*" << scale;
    return os.str();
}

double Functional::operator()(const HermiteCurve& x) const {
    double v = 0;
    switch (kind) {
        case Kind::WeightedSup: {
            const double lam = rate;
            v = delaystab::weighted_sup(x, [lam](double s) { return std::exp(lam * s); }, norms);
            break;
        }
        case Kind::QuadraticIntegral: {
            const RefinedSamples rs = refine_curve(x, norms.refine);
            const std::size_t n = rs.dim, m = rs.refine;
            auto sq = [&](std::size_t g) {
                double a = 0;
                for (std::size_t i = 0; i < n; ++i) a += rs.values[g * n + i] * rs.values[g * n + i];
                return std::exp(rate * rs.s[g]) * a;
            };
            double integral = 0;
            const auto& kn = x.knots();
            for (std::size_t c = 0; c + 1 < kn.size(); ++c) {
                double cell = 0;
                for (std::size_t j = 0; j <= m; ++j) {
                    const double w = (j == 0 || j == m) ? 1.0 : (j % 2 ? 4.0 : 2.0);
                    cell += w * sq(c * m + j);
                }
                integral += cell * (kn[c + 1] - kn[c]) / (3.0 * m);
            }
            const double head = euclid(x.value_at(x.size() - 1));
            v = head * head + integral;
            break;
        }
        case Kind::SpaceNorm:
            v = delaystab::space_norm(x, space, norms);
            break;
    }
    return scale * v;
}

RadialFunction::RadialFunction(MonotoneGridFunction profile) : g_(std::move(profile)) {
    if (g_.s().front() != 0.0 || g_.v().front() != 0.0)
        throw std::invalid_argument("RadialFunction: profile must start at g(0) = 0");
    for (std::size_t i = 1; i < g_.v().size(); ++i)
        if (!(g_.v()[i] > 0)) throw std::invalid_argument("RadialFunction: profile must be positive for s > 0");
}

double RadialFunction::operator()(std::span<const double> xi) const { return g_(euclid(xi)); }

// ---------------------------------------------------------------------------

DiniEstimate dini_derivative(const DelaySystem& sys, const Functional& V, const Segment& x,
                             const DiniOptions& opts) {
    const double r = sys.delay();
    auto h = ladder(r, opts);
    if (opts.substeps < 1) throw std::invalid_argument("dini: substeps must be positive");
    const auto tr = simulate(sys, x, h.front(), h.front() / static_cast<double>(opts.substeps));
    if (tr.escaped()) throw EscapeError(tr.escape_time(), "dini: trajectory escaped");
    const double v0 = V(x.curve());
    std::vector<double> q;
    for (double hk : h) q.push_back((V(tr.curve_at(hk)) - v0) / hk);
    return summarise(std::move(h), std::move(q));
}

DiniEstimate prolongation_derivative(const DelaySystem& sys, const Functional& U, const Segment& x,
                                     const DiniOptions& opts) {
    auto h = ladder(sys.delay(), opts);
    const auto f = sys.rhs(x);
    const double u0 = U(x.curve());
    std::vector<double> q;
    for (double hk : h) q.push_back((U(prolong_curve(x.curve(), f, hk)) - u0) / hk);
    return summarise(std::move(h), std::move(q));
}

double functional_lipschitz(const DelaySystem& sys, const Functional& V, const SpaceSpec& space,
                            double R, std::size_t pairs, const Budget& budget, const NormOptions& norms) {
    require_positive(R, "R");
    const auto cfg = sampler_for(sys, space, R, budget, norms);
    auto q = parallel_map(pairs, [&](std::size_t i) {
        const Segment x = sample_one(cfg, 2 * i), y = sample_one(cfg, 2 * i + 1);
        const double d = delaystab::space_norm(x - y, space, norms);
        return d > 0 ? std::abs(V(x) - V(y)) / d : 0.0;
    });
    double c = 0;
    for (auto& v : q) c = std::max(c, *v);
    return c;
}

// ---------------------------------------------------------------------------

StabilityReport check_theorem5(const DelaySystem& sys, const Functional& V,
                               const MonotoneGridFunction& a1, const MonotoneGridFunction& a2,
                               const SpaceSpec& space, double rho, double T, const Budget& budget,
                               const LyapunovOptions& opts) {
    require_positive(rho, "rho");
    require_positive(T, "T");
    const double r = sys.delay();
    const double step = step_of(opts.check, r);
    const double rel = opts.algebraic_slack;
    const auto cfg = sampler_for(sys, space, rho, budget, opts.check.norms);
    const auto times = report_times(r, T, opts.check.report_times, step);

    struct Run {
        std::size_t sandwich = 0, decay = 0, sigma = 0;
        double lower = 0, upper = 0, decay_ratio = 0, sigma_ratio = 0;
        double fail_time = -1, fail_value = 0;
        bool escaped = false;
    };
    auto runs = parallel_map(budget.samples, [&](std::size_t i) {
        const Segment x0 = sample_one(cfg, i);
        const double n0 = delaystab::space_norm(x0, space, opts.check.norms);
        const double v0 = V(x0);
        const auto tr = simulate(sys, x0, T, step);
        Run run;
        auto fail = [&](double t, double v) {
            if (run.fail_time < 0) run.fail_time = t, run.fail_value = v;
        };
        for (double t : times) {
            if (t > tr.end_time() + 1e-9 * tr.step()) {
                run.escaped = true;
                ++run.decay;
                run.decay_ratio = kInf;
                fail(tr.escape_time(), kInf);
                break;
            }
            const HermiteCurve xt = tr.curve_at(t);
            const double n = delaystab::space_norm(xt, space, opts.check.norms);
            const double v = V(xt);
            const double lo = a1(n), hi = a2(n), bound = std::exp(-t) * v0;
            run.lower = std::max(run.lower, ratio(lo, v));
            run.upper = std::max(run.upper, ratio(v, hi));
            run.decay_ratio = std::max(run.decay_ratio, ratio(v, bound));
            if (!leq(lo, v, rel) || !leq(v, hi, rel)) ++run.sandwich, fail(t, v);
            if (!leq(v, bound, rel)) ++run.decay, fail(t, v);
            const double sig = a1.inverse(std::exp(-t) * a2(n0));
            run.sigma_ratio = std::max(run.sigma_ratio, ratio(n, sig));
            if (!leq(n, sig, rel)) ++run.sigma;
        }
        return run;
    });

    StabilityReport rep;
    rep.property = "theorem5";
    rep.space = space;
    std::size_t sandwich = 0, decay = 0, sigma = 0, escaped = 0;
    double lower = 0, upper = 0, decay_ratio = 0, sigma_ratio = 0;
    std::optional<std::size_t> first;
    for (std::size_t i = 0; i < runs.size(); ++i) {
        const Run& run = *runs[i];
        sandwich += run.sandwich;
        decay += run.decay;
        sigma += run.sigma;
        escaped += run.escaped;
        lower = std::max(lower, run.lower);
        upper = std::max(upper, run.upper);
        decay_ratio = std::max(decay_ratio, run.decay_ratio);
        sigma_ratio = std::max(sigma_ratio, run.sigma_ratio);
        if (!first && run.fail_time >= 0) first = i;
    }
    rep.margins["sandwich_violations"] = double(sandwich);
    rep.margins["decay_violations"] = double(decay);
    rep.margins["sigma_violations"] = double(sigma);
    rep.margins["escaped_samples"] = double(escaped);
    rep.margins["max_lower_ratio"] = lower;   // a1(||x_t||) / V(x_t)
    rep.margins["max_upper_ratio"] = upper;   // V(x_t) / a2(||x_t||)
    rep.margins["max_decay_ratio"] = decay_ratio;  // V(x_t) / (e^{-t} V(x_0))
    rep.margins["max_sigma_ratio"] = sigma_ratio;  // ||x_t|| / a1^{-1}(e^{-t} a2(||x_0||))
    rep.margins["rho"] = rho;
    rep.margins["T"] = T;
    rep.margins["lipschitz_estimate"] =
        functional_lipschitz(sys, V, space, rho, std::max<std::size_t>(1, budget.samples / 2), budget,
                             opts.check.norms);

    if (sandwich == 0 && decay == 0) {
        // the estimate is implied by the two hypotheses, so a miss here
        // means the functional data or the numerics are inconsistent
        rep.verdict = sigma == 0 ? Verdict::Consistent : Verdict::Falsified;
        if (sigma > 0) rep.notes.push_back("implied sigma estimate violated although hypotheses hold");
    } else {
        rep.verdict = Verdict::Falsified;
        if (sandwich > 0) rep.notes.push_back("sandwich a1(|x|) <= V(x) <= a2(|x|) violated");
        if (decay > 0) rep.notes.push_back("decay V(x_t) <= exp(-t) V(x_0) violated");
        if (sigma > 0) rep.notes.push_back("sigma estimate violated");
    }
    if (first) rep.witness = make_witness(cfg, *first, runs[*first]->fail_time, runs[*first]->fail_value);
    fill_budget(rep, budget, budget.samples, times.size());
    return rep;
}

StabilityReport check_theorem6(const DelaySystem& sys, const Functional& V,
                               const MonotoneGridFunction& a1, const MonotoneGridFunction& a2,
                               const RadialFunction& Q, const SpaceSpec& space, double rho, double T,
                               const Budget& budget, const LyapunovOptions& opts) {
    require_positive(rho, "rho");
    require_positive(T, "T");
    const double r = sys.delay();
    const double step = step_of(opts.check, r);
    const double rel = opts.algebraic_slack;
    const auto cfg = sampler_for(sys, space, rho, budget, opts.check.norms);
    const auto times = report_times(r, T, opts.check.report_times, step);
    const std::size_t follow = trajectory_count(opts, budget);

    struct Run {
        bool sandwich_ok = true, dini_ok = true, integral_ok = true;
        double dini_margin = -kInf;      // estimate + Q(x(0)) - tol, <= 0 passes
        double integral_margin = -kInf;  // V(x_t) + int Q - V(x_0), <= slack passes
        double fail_time = -1, fail_value = 0;
        bool escaped = false, trend = false;
    };
    auto runs = parallel_map(budget.samples, [&](std::size_t i) {
        const Segment x0 = sample_one(cfg, i);
        const double v0 = V(x0);
        Run run;
        const double head = euclid(x0.head());
        run.sandwich_ok = leq(a1(head), v0, rel) && leq(v0, a2(delaystab::space_norm(x0, space, opts.check.norms)), rel);
        if (!run.sandwich_ok) run.fail_time = 0, run.fail_value = v0;
        try {
            const auto d = dini_derivative(sys, V, x0, opts.dini);
            const double qx = Q(x0.head());
            run.trend = d.trend;
            run.dini_margin = d.estimate + qx - opts.dini_slack * (1 + v0);
            if (run.dini_margin > 0) {
                run.dini_ok = false;
                if (run.fail_time < 0) run.fail_time = 0, run.fail_value = d.estimate;
            }
        } catch (const EscapeError& e) {
            run.dini_ok = false;
            run.escaped = true;
            if (run.fail_time < 0) run.fail_time = e.time(), run.fail_value = kInf;
        }
        if (i >= follow) return run;

        const auto tr = simulate(sys, x0, T, step);
        const auto mesh = tr.mesh_times();
        std::vector<double> buf(sys.dim());
        double integral = 0, prev = 0;
        for (double t : times) {
            if (t > tr.end_time() + 1e-9 * tr.step()) {
                run.escaped = true;
                run.integral_ok = false;
                run.integral_margin = kInf;
                if (run.fail_time < 0) run.fail_time = tr.escape_time(), run.fail_value = kInf;
                break;
            }
            // integrate over mesh cells between consecutive report times
            double a = prev;
            for (auto it = std::upper_bound(mesh.begin(), mesh.end(), prev + 1e-9 * step);
                 it != mesh.end() && *it < t - 1e-9 * step; ++it) {
                integral += integrate_q(tr, Q, a, *it, buf);
                a = *it;
            }
            if (t > a) integral += integrate_q(tr, Q, a, t, buf);
            prev = t;
            const double lhs = V(tr.curve_at(t)) + integral;
            run.integral_margin = std::max(run.integral_margin, lhs - v0);
            if (lhs > v0 + opts.integral_slack) {
                run.integral_ok = false;
                if (run.fail_time < 0) run.fail_time = t, run.fail_value = lhs;
            }
        }
        return run;
    });

    StabilityReport rep;
    rep.property = "theorem6";
    rep.space = space;
    std::size_t sandwich = 0, dini = 0, integral = 0, escaped = 0, trend = 0;
    double dini_margin = -kInf, integral_margin = -kInf;
    std::optional<std::size_t> first;
    for (std::size_t i = 0; i < runs.size(); ++i) {
        const Run& run = *runs[i];
        sandwich += !run.sandwich_ok;
        dini += !run.dini_ok;
        integral += !run.integral_ok;
        escaped += run.escaped;
        trend += run.trend;
        dini_margin = std::max(dini_margin, run.dini_margin);
        integral_margin = std::max(integral_margin, run.integral_margin);
        if (!first && run.fail_time >= 0) first = i;
    }
    rep.margins["sandwich_violations"] = double(sandwich);
    rep.margins["dini_violations"] = double(dini);
    rep.margins["integral_violations"] = double(integral);
    rep.margins["escaped_samples"] = double(escaped);
    rep.margins["trend_flags"] = double(trend);
    rep.margins["max_dini_margin"] = dini_margin;
    rep.margins["max_integral_excess"] = integral_margin;
    rep.margins["rho"] = rho;
    rep.margins["T"] = T;
    rep.verdict = (sandwich + dini + integral == 0) ? Verdict::Consistent : Verdict::Falsified;
    if (sandwich) rep.notes.push_back("sandwich a1(|x(0)|) <= V(x) <= a2(|x|) violated");
    if (dini) rep.notes.push_back("Dini bound D+V(x) <= -Q(x(0)) violated");
    if (integral) rep.notes.push_back("dissipation inequality V(x_t) + int Q <= V(x_0) violated");
    if (trend) rep.notes.push_back("some Dini ladders had not settled at the smallest step");
    if (first) rep.witness = make_witness(cfg, *first, runs[*first]->fail_time, runs[*first]->fail_value);
    fill_budget(rep, budget, budget.samples + follow, times.size());
    rep.budget["trajectories"] = follow;
    return rep;
}

StabilityReport check_rfc_sufficient(const DelaySystem& sys, const Functional& U,
                                     const MonotoneGridFunction& a, double mu, const SpaceSpec& space,
                                     double rho, double T, const Budget& budget,
                                     const LyapunovOptions& opts) {
    require_positive(rho, "rho");
    require_positive(T, "T");
    if (!(mu >= 0) || !std::isfinite(mu)) throw std::invalid_argument("mu must be nonnegative");
    const double r = sys.delay();
    const double step = step_of(opts.check, r);
    const double rel = opts.algebraic_slack;
    const auto cfg = sampler_for(sys, space, rho, budget, opts.check.norms);
    const auto times = report_times(r, T, opts.check.report_times, step);
    const std::size_t follow = trajectory_count(opts, budget);

    struct Run {
        bool lower_ok = true, quotient_ok = true, growth_ok = true;
        double quotient_margin = -kInf;  // max_k q_k - mu U - tol
        double growth_ratio = 0;         // U(x_t) / (e^{mu t} U(x_0))
        double fail_time = -1, fail_value = 0;
        bool escaped = false;
    };
    auto runs = parallel_map(budget.samples, [&](std::size_t i) {
        const Segment x0 = sample_one(cfg, i);
        const double u0 = U(x0);
        Run run;
        run.lower_ok = leq(a(euclid(x0.head())), u0, rel);
        if (!run.lower_ok) run.fail_time = 0, run.fail_value = u0;
        const auto d = prolongation_derivative(sys, U, x0, opts.dini);
        const double q = *std::max_element(d.quotients.begin(), d.quotients.end());
        run.quotient_margin = q - mu * u0 - opts.dini_slack * (1 + u0);
        if (run.quotient_margin > 0) {
            run.quotient_ok = false;
            if (run.fail_time < 0) run.fail_time = 0, run.fail_value = q;
        }
        if (i >= follow) return run;

        const auto tr = simulate(sys, x0, T, step);
        for (double t : times) {
            if (t > tr.end_time() + 1e-9 * tr.step()) {
                run.escaped = true;
                run.growth_ok = false;
                run.growth_ratio = kInf;
                if (run.fail_time < 0) run.fail_time = tr.escape_time(), run.fail_value = kInf;
                break;
            }
            const double u = U(tr.curve_at(t));
            const double bound = std::exp(mu * t) * u0;
            run.growth_ratio = std::max(run.growth_ratio, ratio(u, bound));
            if (!leq(u, bound, opts.growth_slack)) {
                run.growth_ok = false;
                if (run.fail_time < 0) run.fail_time = t, run.fail_value = u;
            }
        }
        return run;
    });

    StabilityReport rep;
    rep.property = "rfc-sufficient";
    rep.space = space;
    std::size_t lower = 0, quotient = 0, growth = 0, escaped = 0;
    double quotient_margin = -kInf, growth_ratio = 0;
    std::optional<std::size_t> first;
    for (std::size_t i = 0; i < runs.size(); ++i) {
        const Run& run = *runs[i];
        lower += !run.lower_ok;
        quotient += !run.quotient_ok;
        growth += !run.growth_ok;
        escaped += run.escaped;
        quotient_margin = std::max(quotient_margin, run.quotient_margin);
        growth_ratio = std::max(growth_ratio, run.growth_ratio);
        if (!first && run.fail_time >= 0) first = i;
    }
    rep.margins["lower_violations"] = double(lower);
    rep.margins["quotient_violations"] = double(quotient);
    rep.margins["growth_violations"] = double(growth);
    rep.margins["escaped_samples"] = double(escaped);
    rep.margins["max_quotient_margin"] = quotient_margin;
    rep.margins["max_growth_ratio"] = growth_ratio;
    rep.margins["mu"] = mu;
    rep.margins["rho"] = rho;
    rep.margins["T"] = T;
    rep.verdict = (lower + quotient + growth == 0) ? Verdict::Consistent : Verdict::Falsified;
    if (lower) rep.notes.push_back("lower bound U(x) >= a(|x(0)|) violated");
    if (quotient) rep.notes.push_back("prolongation quotient exceeds mu U(x)");
    if (growth) rep.notes.push_back("U(x_t) <= exp(mu t) U(x_0) violated along a trajectory");
    if (first) rep.witness = make_witness(cfg, *first, runs[*first]->fail_time, runs[*first]->fail_value);
    fill_budget(rep, budget, follow, times.size());
    rep.budget["trajectories"] = follow;
    return rep;
}

}  // namespace delaystab
