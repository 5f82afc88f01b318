#include "delaystab/stability.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "delaystab/parallel.hpp"

namespace delaystab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double horizon_of(const CheckOptions& opts, double r) { return opts.horizon > 0 ? opts.horizon : 20.0 * r; }
double step_of(const CheckOptions& opts, double r) { return opts.step > 0 ? opts.step : r / 200.0; }

double pow_r(double r, double p) { return std::isinf(p) ? 1.0 : std::pow(r, 1.0 / p); }

double norm_at(const Trajectory& tr, double t, const SpaceSpec& space, const NormOptions& norms) {
    if (t > tr.end_time() + 1e-9 * tr.step()) return kInf;
    return space_norm(tr.curve_at(t), space, norms);
}

// Decides ||x||_X > eps, computing the exact norm only when the cheap
// bounds leave the answer open. Returns the norm when it was computed and
// a bound otherwise.
std::pair<bool, double> exceeds(const HermiteCurve& x, const SpaceSpec& space, double eps,
                                const NormOptions& norms) {
    const double sup = sup_norm(x, norms);
    if (sup > eps || space.kind == SpaceSpec::Kind::SupC0) return {sup > eps, sup};
    if (space.kind == SpaceSpec::Kind::Hoelder) {
        // |x(t) - x(s)| <= max|x'| r^{1-a} |t - s|^a
        const double upper = std::max(sup, max_abs_deriv(x, norms) * std::pow(x.length(), 1.0 - space.a));
        if (upper * 1.01 <= eps) return {false, upper};
    }
    const double n = space_norm(x, space, norms);
    return {n > eps, n};
}

Witness make_witness(const SamplerConfig& cfg, std::size_t index, double time, double norm) {
    return Witness{index, cfg.seed, cfg.target_norm, sample_one(cfg, index), time, norm};
}

void fill_budget(StabilityReport& rep, const Budget& budget, std::size_t simulations,
                 std::size_t times) {
    rep.budget["samples"] = budget.samples;
    rep.budget["simulations"] = simulations;
    rep.budget["report_times"] = times;
    rep.budget["seed"] = static_cast<std::size_t>(budget.seed);
}

void require_positive(double v, const char* what) {
    if (!(v > 0) || !std::isfinite(v)) throw std::invalid_argument(std::string(what) + " must be positive");
}

}  // namespace

std::string to_string(Verdict v) {
    switch (v) {
        case Verdict::Consistent: return "consistent";
        case Verdict::Falsified: return "falsified";
        case Verdict::Inconclusive: return "inconclusive";
    }
    return "inconclusive";
}

SamplerConfig sampler_for(const DelaySystem& sys, const SpaceSpec& space, double rho,
                          const Budget& budget, const NormOptions& norms) {
    SamplerConfig cfg;
    cfg.family = budget.family;
    cfg.target_space = space;
    cfg.target_norm = rho;
    cfg.dimension = sys.dim();
    cfg.seed = budget.seed;
    cfg.delay = sys.delay();
    cfg.intervals = budget.intervals;
    cfg.radial = budget.radial;
    cfg.norms = norms;
    return cfg;
}

std::vector<double> report_times(double r, double T, std::size_t count, double step) {
    require_positive(r, "r");
    require_positive(T, "T");
    require_positive(step, "step");
    if (count < 2) throw std::invalid_argument("report_times: need at least two times");
    const auto K = static_cast<std::size_t>(std::llround(r / step));
    auto snap = [&](double t) {
        if (t >= T) return T;
        const auto m = static_cast<std::size_t>(std::llround(t / step));
        const double s = static_cast<double>(m / K) * r + static_cast<double>(m % K) * step;
        return std::min(s, T);
    };
    std::vector<double> raw;
    const double t_uni = std::min(r, T);
    const std::size_t n_uni = T <= r ? count : std::max<std::size_t>(2, count / 5);
    for (std::size_t i = 0; i < n_uni; ++i)
        raw.push_back(t_uni * static_cast<double>(i) / static_cast<double>(n_uni - 1));
    if (T > r) {
        const std::size_t n_geo = count - n_uni;
        for (std::size_t i = 1; i <= n_geo; ++i)
            raw.push_back(r * std::pow(T / r, static_cast<double>(i) / static_cast<double>(n_geo)));
    }
    std::vector<double> out;
    for (double t : raw) out.push_back(snap(t));
    out.back() = T;
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

std::vector<NormSeries> collect_series(const DelaySystem& sys, const SpaceSpec& space, double rho,
                                       const std::vector<double>& times, const Budget& budget,
                                       const CheckOptions& opts, SeriesRequest what) {
    require_positive(rho, "rho");
    if (times.empty()) throw std::invalid_argument("collect_series: empty time grid");
    const double r = sys.delay();
    const auto cfg = sampler_for(sys, space, rho, budget, opts.norms);
    const double T = times.back();
    auto runs = parallel_map(budget.samples, [&](std::size_t i) {
        const Segment x0 = sample_one(cfg, i);
        NormSeries s;
        s.index = i;
        s.initial_norm = space_norm(x0, space, opts.norms);
        const auto tr = simulate(sys, x0, T > 0 ? T : r, step_of(opts, r));
        s.escaped = tr.escaped();
        s.escape_time = tr.escape_time();
        for (double t : times) {
            const bool covered = t <= tr.end_time() + 1e-9 * tr.step();
            const HermiteCurve xt = covered ? tr.curve_at(t) : HermiteCurve(sys.dim());
            if (what.sup) s.sup.push_back(covered ? sup_norm(xt, opts.norms) : kInf);
            if (what.space) s.space.push_back(covered ? space_norm(xt, space, opts.norms) : kInf);
        }
        return s;
    });
    std::vector<NormSeries> out;
    out.reserve(runs.size());
    for (auto& r_ : runs) out.push_back(std::move(*r_));
    return out;
}

// ---------------------------------------------------------------------------

StabilityReport check_rfc(const DelaySystem& sys, const SpaceSpec& space, double rho, double T,
                          const Budget& budget, const CheckOptions& opts) {
    require_positive(rho, "rho");
    require_positive(T, "T");
    const double r = sys.delay();
    const auto cfg = sampler_for(sys, space, rho, budget, opts.norms);
    const auto times = report_times(r, T, opts.report_times, step_of(opts, r));

    struct Run {
        double sup = 0;
        bool escaped = false;
        double escape_time = 0;
        double escape_norm = 0;
    };
    auto runs = parallel_map(budget.samples, [&](std::size_t i) {
        const auto tr = simulate(sys, sample_one(cfg, i), T, step_of(opts, r));
        Run run;
        run.escaped = tr.escaped();
        run.escape_time = tr.escape_time();
        if (tr.escaped()) {
            const auto x = tr.state(tr.end_time());
            double n = 0;
            for (double v : x) n += v * v;
            run.escape_norm = std::sqrt(n);
        }
        if (space.kind == SpaceSpec::Kind::SupC0) {
            // max over t of ||x_t||_inf is the sup of |x| on [-r, t_end]
            run.sup = sup_norm(tr.curve(), opts.norms);
        } else {
            for (double t : times) {
                if (t > tr.end_time()) break;
                run.sup = std::max(run.sup, space_norm(tr.curve_at(t), space, opts.norms));
            }
        }
        return run;
    });

    StabilityReport rep;
    rep.property = "rfc";
    rep.space = space;
    double sup = 0;
    std::size_t escapes = 0;
    std::optional<std::size_t> first;
    for (std::size_t i = 0; i < runs.size(); ++i) {
        const Run& run = *runs[i];
        sup = std::max(sup, run.sup);
        if (run.escaped) {
            ++escapes;
            if (!first || run.escape_time < runs[*first]->escape_time) first = i;
        }
    }
    rep.margins["rho"] = rho;
    rep.margins["T"] = T;
    rep.margins["sup"] = sup;
    rep.margins["escaped_samples"] = static_cast<double>(escapes);
    if (first) {
        const Run& run = *runs[*first];
        rep.verdict = Verdict::Falsified;
        rep.witness = make_witness(cfg, *first, run.escape_time, run.escape_norm);
        rep.margins["escape_time"] = run.escape_time;
        rep.notes.push_back("a sampled solution left |x| <= 1e12 before T (finite-time blowup)");
    } else {
        rep.verdict = Verdict::Consistent;
    }
    fill_budget(rep, budget, budget.samples, times.size());
    return rep;
}

StabilityReport check_ls(const DelaySystem& sys, const SpaceSpec& space,
                         const std::vector<double>& eps_list, const Budget& budget,
                         const CheckOptions& opts) {
    if (eps_list.empty()) throw std::invalid_argument("check_ls: empty eps list");
    for (double e : eps_list) require_positive(e, "eps");
    const double r = sys.delay();
    const double H = horizon_of(opts, r);
    const double h = step_of(opts, r);
    const auto times = report_times(r, H, opts.report_times, h);

    struct Probe {
        bool pass = true;
        double worst = 0;  // max norm seen (or a bound when not computed)
        std::size_t index = 0;
        double time = 0;
        double norm = 0;
    };
    std::size_t simulations = 0;
    auto probe = [&](double eps, double delta) {
        const auto cfg = sampler_for(sys, space, delta, budget, opts.norms);
        auto runs = parallel_map(budget.samples, [&](std::size_t i) {
            const auto tr = simulate(sys, sample_one(cfg, i), H, h);
            Probe p;
            p.index = i;
            if (tr.escaped()) {
                p.pass = false;
                p.time = tr.escape_time();
                p.norm = kInf;
                p.worst = kInf;
                return p;
            }
            // sup over the whole solution bounds every ||x_t||_inf from below
            const double whole = sup_norm(tr.curve(), opts.norms);
            p.worst = whole;
            if (whole > eps) {
                p.pass = false;
                p.norm = whole;
                for (double t : times)
                    if (sup_norm(tr.curve_at(t), opts.norms) >= whole * (1 - 1e-9)) {
                        p.time = t;
                        break;
                    }
                return p;
            }
            if (space.kind == SpaceSpec::Kind::SupC0) return p;
            for (double t : times) {
                const auto [over, value] = exceeds(tr.curve_at(t), space, eps, opts.norms);
                p.worst = std::max(p.worst, value);
                if (over) {
                    p.pass = false;
                    p.time = t;
                    p.norm = value;
                    return p;
                }
            }
            return p;
        });
        simulations += budget.samples;
        Probe agg;
        for (auto& p : runs) {
            agg.worst = std::max(agg.worst, p->worst);
            if (!p->pass && agg.pass) {
                agg.pass = false;
                agg.index = p->index;
                agg.time = p->time;
                agg.norm = p->norm;
            }
        }
        return agg;
    };

    StabilityReport rep;
    rep.property = "ls";
    rep.space = space;
    rep.verdict = Verdict::Consistent;
    Table table{{"eps", "delta", "worst_norm_at_delta"}, {}};
    for (double eps : eps_list) {
        double lo = 1e-6 * eps, hi = 10.0 * eps;
        Probe best;
        double delta;
        const Probe top = probe(eps, hi);
        if (top.pass) {
            delta = hi;
            best = top;
        } else {
            const Probe bottom = probe(eps, lo);
            if (!bottom.pass) {
                delta = 0.0;
            } else {
                best = bottom;
                for (int it = 0; it < 20; ++it) {
                    const double mid = std::sqrt(lo * hi);
                    const Probe pm = probe(eps, mid);
                    if (pm.pass) {
                        lo = mid;
                        best = pm;
                    } else {
                        hi = mid;
                    }
                }
                delta = lo;
            }
        }
        table.rows.push_back({eps, delta, best.worst});
        const double small = 1e-3 * eps;
        const Probe tiny = probe(eps, small);
        if (!tiny.pass && rep.verdict != Verdict::Falsified) {
            rep.verdict = Verdict::Falsified;
            const auto cfg = sampler_for(sys, space, small, budget, opts.norms);
            rep.witness = make_witness(cfg, tiny.index, tiny.time, tiny.norm);
            rep.notes.push_back("a solution from the ball of radius 1e-3 eps exceeded eps");
        }
    }
    rep.tables["delta"] = table;
    double min_ratio = kInf;
    for (const auto& row : table.rows) min_ratio = std::min(min_ratio, row[1] / row[0]);
    rep.margins["min_delta_over_eps"] = min_ratio;
    rep.margins["horizon"] = H;
    fill_budget(rep, budget, simulations, times.size());
    return rep;
}

StabilityReport check_ga(const DelaySystem& sys, const SpaceSpec& space, double rho, double eps,
                         const Budget& budget, const CheckOptions& opts) {
    require_positive(rho, "rho");
    require_positive(eps, "eps");
    const double r = sys.delay();
    const double H = horizon_of(opts, r);
    const auto cfg = sampler_for(sys, space, rho, budget, opts.norms);

    struct Run {
        double initial = 0, final_norm = 0;
        bool escaped = false;
        double escape_time = 0;
    };
    auto runs = parallel_map(budget.samples, [&](std::size_t i) {
        const Segment x0 = sample_one(cfg, i);
        const auto tr = simulate(sys, x0, H, step_of(opts, r));
        Run run;
        run.initial = space_norm(x0, space, opts.norms);
        run.escaped = tr.escaped();
        run.escape_time = tr.escape_time();
        run.final_norm = tr.escaped() ? kInf : norm_at(tr, H, space, opts.norms);
        return run;
    });

    StabilityReport rep;
    rep.property = "ga";
    rep.space = space;
    std::optional<std::size_t> worst_stuck;
    std::size_t stuck = 0, slow = 0;
    double max_final = 0;
    for (std::size_t i = 0; i < runs.size(); ++i) {
        const Run& run = *runs[i];
        max_final = std::max(max_final, run.final_norm);
        if (run.final_norm <= eps) continue;
        if (run.escaped || run.final_norm >= 0.5 * run.initial) {
            ++stuck;
            if (!worst_stuck || run.final_norm > runs[*worst_stuck]->final_norm) worst_stuck = i;
        } else {
            ++slow;
        }
    }
    rep.margins["rho"] = rho;
    rep.margins["eps"] = eps;
    rep.margins["horizon"] = H;
    rep.margins["max_final_norm"] = max_final;
    rep.margins["non_decaying_samples"] = static_cast<double>(stuck);
    rep.margins["slow_samples"] = static_cast<double>(slow);
    if (worst_stuck) {
        const Run& run = *runs[*worst_stuck];
        rep.verdict = Verdict::Falsified;
        rep.witness = make_witness(cfg, *worst_stuck, run.escaped ? run.escape_time : H, run.final_norm);
        rep.notes.push_back("a sampled solution did not decay: final norm >= half its initial norm");
    } else if (slow > 0) {
        rep.verdict = Verdict::Inconclusive;
        rep.notes.push_back("some solutions are decaying but still above eps at the horizon");
    } else {
        rep.verdict = Verdict::Consistent;
    }
    fill_budget(rep, budget, budget.samples, 1);
    return rep;
}

StabilityReport check_uga(const DelaySystem& sys, const SpaceSpec& space, double eps, double rho,
                          const Budget& budget, const CheckOptions& opts) {
    require_positive(rho, "rho");
    require_positive(eps, "eps");
    const double r = sys.delay();
    const double H = horizon_of(opts, r);
    const auto times = report_times(r, H, opts.report_times, step_of(opts, r));
    const auto cfg = sampler_for(sys, space, rho, budget, opts.norms);

    struct Run {
        std::size_t first_ok = 0;  // index after the last exceedance
        bool escaped = false;
        double escape_time = 0;
        double last_norm = 0;
    };
    auto runs = parallel_map(budget.samples, [&](std::size_t i) {
        const auto tr = simulate(sys, sample_one(cfg, i), H, step_of(opts, r));
        Run run;
        run.escaped = tr.escaped();
        run.escape_time = tr.escape_time();
        if (tr.escaped()) {
            run.first_ok = times.size();
            run.last_norm = kInf;
            return run;
        }
        for (std::size_t k = times.size(); k-- > 0;) {
            const auto [over, value] = exceeds(tr.curve_at(times[k]), space, eps, opts.norms);
            if (k + 1 == times.size()) run.last_norm = value;
            if (over) {
                run.first_ok = k + 1;
                break;
            }
        }
        return run;
    });

    StabilityReport rep;
    rep.property = "uga";
    rep.space = space;
    std::size_t first_ok = 0;
    std::optional<std::size_t> worst;
    std::optional<std::size_t> escaped;
    for (std::size_t i = 0; i < runs.size(); ++i) {
        if (runs[i]->escaped && !escaped) escaped = i;
        if (runs[i]->first_ok > first_ok) {
            first_ok = runs[i]->first_ok;
            worst = i;
        }
    }
    rep.margins["rho"] = rho;
    rep.margins["eps"] = eps;
    rep.margins["horizon"] = H;
    if (escaped) {
        const Run& run = *runs[*escaped];
        rep.verdict = Verdict::Falsified;
        rep.witness = make_witness(cfg, *escaped, run.escape_time, kInf);
        rep.notes.push_back("a sampled solution escaped");
    } else if (first_ok >= times.size()) {
        rep.verdict = Verdict::Inconclusive;
        rep.margins["max_norm_at_horizon"] = runs[*worst]->last_norm;
        rep.notes.push_back("horizon reached with a sample still above eps");
    } else {
        rep.verdict = Verdict::Consistent;
        rep.margins["T"] = times[first_ok];
        rep.margins["grid_spacing_at_T"] =
            first_ok == 0 ? times[1] - times[0] : times[first_ok] - times[first_ok - 1];
    }
    fill_budget(rep, budget, budget.samples, times.size());
    return rep;
}

StabilityReport check_lags(const DelaySystem& sys, const SpaceSpec& space, double rho,
                           const Budget& budget, const CheckOptions& opts) {
    const double r = sys.delay();
    const double H = horizon_of(opts, r);
    const auto times = report_times(r, H, opts.report_times, step_of(opts, r));
    const auto series = collect_series(sys, space, rho, times, budget, opts, {false, true});

    StabilityReport rep;
    rep.property = "lags";
    rep.space = space;
    std::vector<double> m(times.size(), 0.0);
    std::optional<std::size_t> escaped;
    for (const auto& s : series) {
        if (s.escaped && !escaped) escaped = s.index;
        for (std::size_t k = 0; k < times.size(); ++k) m[k] = std::max(m[k], s.space[k]);
    }
    const double sup = *std::max_element(m.begin(), m.end());
    rep.margins["rho"] = rho;
    rep.margins["horizon"] = H;
    rep.margins["sup"] = sup;
    if (escaped) {
        rep.verdict = Verdict::Falsified;
        const auto cfg = sampler_for(sys, space, rho, budget, opts.norms);
        rep.witness = make_witness(cfg, *escaped, series[*escaped].escape_time, kInf);
        fill_budget(rep, budget, budget.samples, times.size());
        return rep;
    }
    // least-squares slope of the per-time maximum over the last quarter
    const std::size_t k0 = times.size() - std::max<std::size_t>(2, times.size() / 4);
    double mt = 0, mm = 0;
    const double n = static_cast<double>(times.size() - k0);
    for (std::size_t k = k0; k < times.size(); ++k) {
        mt += times[k];
        mm += m[k];
    }
    mt /= n;
    mm /= n;
    double num = 0, den = 0;
    for (std::size_t k = k0; k < times.size(); ++k) {
        num += (times[k] - mt) * (m[k] - mm);
        den += (times[k] - mt) * (times[k] - mt);
    }
    const double slope = den > 0 ? num / den : 0.0;
    rep.margins["last_quarter_slope"] = slope;
    if (slope * (times.back() - times[k0]) > 1e-9 * (1.0 + sup)) {
        rep.verdict = Verdict::Inconclusive;
        rep.notes.push_back("the sup is still growing at the horizon");
    } else {
        rep.verdict = Verdict::Consistent;
    }
    fill_budget(rep, budget, budget.samples, times.size());
    return rep;
}

// ---------------------------------------------------------------------------

std::size_t KLEnvelope::shell_of(double s) const {
    for (std::size_t j = 0; j < s_grid.size(); ++j)
        if (s <= s_grid[j] * (1 + 1e-12)) return j;
    throw std::out_of_range("KLEnvelope: norm beyond the last shell");
}

double KLEnvelope::lookup(double s, double t) const {
    const std::size_t j = shell_of(s);
    auto it = std::upper_bound(t_grid.begin(), t_grid.end(), t + 1e-12 * std::max(1.0, std::abs(t)));
    const std::size_t k = it == t_grid.begin() ? 0 : static_cast<std::size_t>(it - t_grid.begin()) - 1;
    return at(j, k);
}

void KLEnvelope::classify() {
    decaying = true;
    non_decay = false;
    const std::size_t last = t_grid.size() - 1;
    for (std::size_t j = 0; j < s_grid.size(); ++j) {
        const double s0 = at(j, 0), se = at(j, last);
        decaying = decaying && se <= 0.05 * s0;
        if (se > 0.5 * s0) non_decay = true;
    }
}

std::vector<double> shell_edges(double rho_max, std::size_t shells, double ratio) {
    require_positive(rho_max, "rho_max");
    if (shells == 0) throw std::invalid_argument("shell_edges: need at least one shell");
    if (!(ratio > 1)) throw std::invalid_argument("shell_edges: ratio must exceed 1");
    std::vector<double> s(shells);
    for (std::size_t j = 0; j < shells; ++j)
        s[j] = rho_max * std::pow(ratio, -static_cast<double>(shells - 1 - j));
    s.back() = rho_max;
    return s;
}

KLEnvelope envelope_from_series(const std::vector<NormSeries>& series, const std::vector<double>& s_grid,
                                const std::vector<double>& t_grid, EnvelopeMode mode, bool floor_at_s) {
    KLEnvelope env;
    env.s_grid = s_grid;
    env.t_grid = t_grid;
    const std::size_t S = s_grid.size(), T = t_grid.size();
    env.sigma.assign(S * T, 0.0);
    env.counts.assign(S, 0);
    env.absent.assign(S, false);
    for (const auto& ser : series) {
        const auto& vals = mode == EnvelopeMode::SameSpace ? ser.space : ser.sup;
        if (vals.size() != T) throw std::invalid_argument("envelope: series length differs from the time grid");
        const std::size_t j = env.shell_of(ser.initial_norm);
        ++env.counts[j];
        for (std::size_t k = 0; k < T; ++k) env.at(j, k) = std::max(env.at(j, k), vals[k]);
    }
    for (std::size_t j = 0; j < S; ++j) env.absent[j] = env.counts[j] == 0;
    for (std::size_t j = 0; j < S; ++j) {
        if (!env.absent[j]) continue;
        std::optional<std::size_t> lo, hi;
        for (std::size_t i = j; i-- > 0;)
            if (!env.absent[i]) { lo = i; break; }
        for (std::size_t i = j + 1; i < S; ++i)
            if (!env.absent[i]) { hi = i; break; }
        for (std::size_t k = 0; k < T; ++k) {
            // below the lowest populated shell, interpolate towards sigma(0, t) = 0
            const double s_lo = lo ? s_grid[*lo] : 0.0;
            const double v_lo = lo ? env.at(*lo, k) : 0.0;
            if (hi) {
                const double w = (s_grid[j] - s_lo) / (s_grid[*hi] - s_lo);
                env.at(j, k) = (1 - w) * v_lo + w * env.at(*hi, k);
            } else {
                env.at(j, k) = v_lo;
            }
        }
    }
    if (floor_at_s)
        for (std::size_t j = 0; j < S; ++j) env.at(j, 0) = std::max(env.at(j, 0), s_grid[j]);
    for (std::size_t j = 1; j < S; ++j)
        for (std::size_t k = 0; k < T; ++k) env.at(j, k) = std::max(env.at(j, k), env.at(j - 1, k));
    for (std::size_t j = 0; j < S; ++j)
        for (std::size_t k = T - 1; k-- > 0;) env.at(j, k) = std::max(env.at(j, k), env.at(j, k + 1));
    env.classify();
    return env;
}

KLEnvelope fit_kl_envelope(const DelaySystem& sys, const SpaceSpec& space, double rho_max,
                           const std::vector<double>& t_grid, const Budget& budget,
                           const EnvelopeOptions& env, const CheckOptions& opts) {
    if (t_grid.empty()) throw std::invalid_argument("fit_kl_envelope: empty time grid");
    const SeriesRequest what{env.mode == EnvelopeMode::QX, env.mode == EnvelopeMode::SameSpace};
    // initial norms are always in X; trajectory norms follow the mode
    const auto series = collect_series(sys, space, rho_max, t_grid, budget, opts, what);
    return envelope_from_series(series, shell_edges(rho_max, env.shells, env.shell_ratio), t_grid,
                                env.mode, env.floor_at_s);
}

bool has_kl_shape(const KLEnvelope& env) {
    const std::size_t S = env.s_grid.size(), T = env.t_grid.size();
    for (std::size_t j = 0; j < S; ++j)
        for (std::size_t k = 0; k < T; ++k) {
            const double v = env.at(j, k);
            if (!(v >= 0)) return false;
            if (j > 0 && v < env.at(j - 1, k)) return false;
            if (k > 0 && v > env.at(j, k - 1)) return false;
        }
    return true;
}

KLEnvelope omega_from_sigma(const KLEnvelope& sigma, double r, double p, const LipschitzModulus& L) {
    require_positive(r, "r");
    if (!(p > 1)) throw std::invalid_argument("omega_from_sigma: p must exceed 1");
    KLEnvelope out = sigma;
    const double rp = pow_r(r, p);
    const std::size_t S = sigma.s_grid.size(), T = sigma.t_grid.size();
    for (std::size_t j = 0; j < S; ++j) {
        const double s0 = sigma.at(j, 0);
        const double factor = (1.0 + rp) * std::max(1.0, L(s0));
        for (std::size_t k = 0; k < T; ++k) {
            const double t = sigma.t_grid[k];
            double tail;
            if (t <= r) {
                tail = std::exp(r - t) * s0;
            } else {
                auto it = std::upper_bound(sigma.t_grid.begin(), sigma.t_grid.end(), t - r);
                const std::size_t kk = it == sigma.t_grid.begin()
                                           ? 0
                                           : static_cast<std::size_t>(it - sigma.t_grid.begin()) - 1;
                tail = sigma.at(j, kk);
            }
            out.at(j, k) = sigma.at(j, k) + factor * tail;
        }
    }
    if (!has_kl_shape(out)) throw std::logic_error("omega_from_sigma: result lost the KL shape");
    out.classify();
    return out;
}

double lipschitz_propagation_bound(double R, double T, double r, double p, const LipschitzModulus& L,
                                   double sigma0) {
    require_positive(R, "R");
    require_positive(T, "T");
    require_positive(r, "r");
    require_positive(sigma0, "sigma0");
    if (!(p > 1)) throw std::invalid_argument("lipschitz_propagation_bound: p must exceed 1");
    const double l = L(sigma0);
    return 1.0 + (1.0 + pow_r(r, p)) * std::max(1.0, l * std::exp(l * T));
}

StabilityReport verify_pair_bounds(const DelaySystem& sys, const SpaceSpec& space, double R, double T,
                                   std::size_t pairs, const Budget& budget, std::optional<double> sigma0,
                                   const CheckOptions& opts) {
    require_positive(R, "R");
    require_positive(T, "T");
    if (pairs == 0) throw std::invalid_argument("verify_pair_bounds: need at least one pair");
    const double r = sys.delay();
    const double p = space.paired_p();
    const double s0 = sigma0 ? *sigma0 : std::exp(sys.lipschitz(R) * T) * R;
    const double l = sys.lipschitz(s0);
    const double gronwall = std::exp(l * T);
    const double M = lipschitz_propagation_bound(R, T, r, p, sys.modulus(), s0);
    const auto times = report_times(r, T, opts.report_times, step_of(opts, r));
    const auto cfg = sampler_for(sys, space, R, budget, opts.norms);
    const std::size_t N = budget.intervals;

    struct Run {
        double sup_ratio = 0, x_ratio = 0;
        bool sup_bad = false, x_bad = false, escaped = false;
        double time = 0, norm = 0;
    };
    auto runs = parallel_map(pairs, [&](std::size_t i) {
        const Segment x0 = sample_one(cfg, 2 * i), y0 = sample_one(cfg, 2 * i + 1);
        const Segment d0 = x0 - y0;
        const double d0_sup = sup_norm(d0, opts.norms), d0_x = space_norm(d0, space, opts.norms);
        const auto tx = simulate(sys, x0, T, step_of(opts, r));
        const auto ty = simulate(sys, y0, T, step_of(opts, r));
        Run run;
        if (tx.escaped() || ty.escaped()) {
            run.escaped = true;
            return run;
        }
        for (double t : times) {
            const Segment d = tx.segment_at(t, N) - ty.segment_at(t, N);
            const double ds = sup_norm(d, opts.norms), dx = space_norm(d, space, opts.norms);
            if (d0_sup > 0) run.sup_ratio = std::max(run.sup_ratio, ds / d0_sup);
            if (d0_x > 0) run.x_ratio = std::max(run.x_ratio, dx / d0_x);
            const bool sb = ds > gronwall * d0_sup * (1 + 1e-6) + 1e-12;
            const bool xb = dx > M * d0_x * (1 + 1e-6) + 1e-12;
            if ((sb || xb) && !run.sup_bad && !run.x_bad) {
                run.time = t;
                run.norm = sb ? ds : dx;
            }
            run.sup_bad = run.sup_bad || sb;
            run.x_bad = run.x_bad || xb;
        }
        return run;
    });

    StabilityReport rep;
    rep.property = "pair-bounds";
    rep.space = space;
    rep.verdict = Verdict::Consistent;
    double sup_ratio = 0, x_ratio = 0;
    std::size_t sup_bad = 0, x_bad = 0, escaped = 0;
    for (std::size_t i = 0; i < runs.size(); ++i) {
        const Run& run = *runs[i];
        sup_ratio = std::max(sup_ratio, run.sup_ratio);
        x_ratio = std::max(x_ratio, run.x_ratio);
        sup_bad += run.sup_bad;
        x_bad += run.x_bad;
        escaped += run.escaped;
        if ((run.sup_bad || run.x_bad) && !rep.witness) {
            rep.verdict = Verdict::Falsified;
            rep.witness = make_witness(cfg, 2 * i, run.time, run.norm);
        }
    }
    if (escaped > 0 && rep.verdict == Verdict::Consistent) {
        rep.verdict = Verdict::Inconclusive;
        rep.notes.push_back("some pairs escaped before T");
    }
    rep.margins["R"] = R;
    rep.margins["T"] = T;
    rep.margins["sigma0"] = s0;
    rep.margins["L"] = l;
    rep.margins["gronwall_factor"] = gronwall;
    rep.margins["M"] = M;
    // The bound actually implied by the sup and derivative estimates keeps
    // the Gronwall factor on the sup part.
    rep.margins["M_with_sup_factor"] = gronwall + (1.0 + pow_r(r, p)) * std::max(1.0, l * gronwall);
    rep.margins["max_sup_ratio"] = sup_ratio;
    rep.margins["max_x_ratio"] = x_ratio;
    rep.margins["sup_violations"] = static_cast<double>(sup_bad);
    rep.margins["x_violations"] = static_cast<double>(x_bad);
    rep.budget["pairs"] = pairs;
    rep.budget["simulations"] = 2 * pairs;
    rep.budget["report_times"] = times.size();
    rep.budget["seed"] = static_cast<std::size_t>(budget.seed);
    return rep;
}

StabilityReport check_gas_vs_ugas(const DelaySystem& sys, const SpaceSpec& space,
                                  const std::vector<double>& rho_list,
                                  const std::vector<double>& eps_list, const Budget& budget,
                                  const CheckOptions& opts) {
    if (rho_list.empty() || eps_list.empty())
        throw std::invalid_argument("check_gas_vs_ugas: rho and eps lists must be nonempty");
    const double rho = *std::max_element(rho_list.begin(), rho_list.end());
    const double eps = *std::min_element(eps_list.begin(), eps_list.end());
    const double r = sys.delay();
    const double H = horizon_of(opts, r);

    StabilityReport rep;
    rep.property = "gas-vs-ugas";
    rep.space = space;
    rep.parts.push_back(check_ls(sys, space, eps_list, budget, opts));
    rep.parts.push_back(check_ga(sys, space, rho, eps, budget, opts));
    rep.parts.push_back(check_rfc(sys, space, rho, H, budget, opts));

    const auto times = report_times(r, H, opts.report_times, step_of(opts, r));
    const auto env = fit_kl_envelope(sys, space, rho, times, budget, {}, opts);
    StabilityReport env_rep;
    env_rep.property = "envelope";
    env_rep.space = space;
    env_rep.verdict = env.decaying ? Verdict::Consistent
                                   : (env.non_decay ? Verdict::Falsified : Verdict::Inconclusive);
    env_rep.margins["decaying"] = env.decaying;
    env_rep.margins["non_decay"] = env.non_decay;
    double worst = 0;
    for (std::size_t j = 0; j < env.s_grid.size(); ++j)
        if (env.at(j, 0) > 0) worst = std::max(worst, env.at(j, times.size() - 1) / env.at(j, 0));
    env_rep.margins["max_final_over_initial"] = worst;
    rep.parts.push_back(env_rep);

    bool all = true;
    for (const auto& part : rep.parts) {
        rep.margins[part.property + "_verdict"] = static_cast<double>(part.verdict);
        all = all && part.verdict == Verdict::Consistent;
        if (part.verdict == Verdict::Falsified && rep.verdict != Verdict::Falsified) {
            rep.verdict = Verdict::Falsified;
            rep.witness = part.witness;
        }
    }
    if (rep.verdict != Verdict::Falsified) rep.verdict = all ? Verdict::Consistent : Verdict::Inconclusive;

    const bool premises = rep.parts[0].verdict == Verdict::Consistent &&
                          rep.parts[1].verdict == Verdict::Consistent &&
                          rep.parts[2].verdict == Verdict::Consistent;
    rep.margins["coherent"] = !premises || env.decaying;
    if (premises && !env.decaying)
        rep.notes.push_back("LS, GA and RFC are consistent but the fitted envelope does not decay");
    if (rep.verdict == Verdict::Consistent) rep.notes.push_back("consistent with UGAS");
    rep.budget["samples"] = budget.samples;
    rep.budget["seed"] = static_cast<std::size_t>(budget.seed);
    return rep;
}

}  // namespace delaystab
