#include "delaystab/segment.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace delaystab {

// ---------------------------------------------------------------------------
// Segment

Segment::Segment(double r, std::vector<double> nodes, std::vector<double> values,
                 std::vector<double> derivs, std::size_t dim, std::vector<double> left_derivs)
    : r_(r),
      curve_(std::move(nodes), std::move(values), std::move(derivs), std::move(left_derivs),
             dim) {
    validate();
    curve_.set_uniform(true);
}

Segment::Segment(double r, HermiteCurve curve) : r_(r), curve_(std::move(curve)) {
    validate();
    curve_.set_uniform(true);
}

void Segment::validate() const {
    if (!(r_ > 0) || !std::isfinite(r_))
        throw std::invalid_argument("Segment: delay r must be positive and finite");
    const std::size_t n = curve_.size();
    if (n < 3) throw std::invalid_argument("Segment: at least 2 intervals (N >= 2) required");
    const auto& nodes = curve_.knots();
    const double step = r_ / static_cast<double>(n - 1);
    const double tol = 1e-12 * r_;
    for (std::size_t i = 0; i < n; ++i) {
        const double ideal = -r_ + static_cast<double>(i) * step;
        if (std::abs(nodes[i] - ideal) > tol)
            throw std::invalid_argument("Segment: nodes must be uniform on [-r, 0]");
    }
    if (std::abs(nodes.front() + r_) > tol || std::abs(nodes.back()) > tol)
        throw std::invalid_argument("Segment: nodes must start at -r and end at 0");
    if (!curve_.all_finite()) throw std::invalid_argument("Segment: non-finite data");
}

Segment Segment::uniform(double r, std::size_t intervals, std::size_t dim,
                         std::vector<double> values, std::vector<double> derivs,
                         std::vector<double> left_derivs) {
    if (intervals < 2) throw std::invalid_argument("Segment: at least 2 intervals required");
    std::vector<double> nodes(intervals + 1);
    for (std::size_t i = 0; i <= intervals; ++i)
        nodes[i] = -r + r * static_cast<double>(i) / static_cast<double>(intervals);
    nodes.back() = 0.0;
    return Segment(r, std::move(nodes), std::move(values), std::move(derivs), dim,
                   std::move(left_derivs));
}

Segment Segment::constant(double r, std::span<const double> c, std::size_t intervals) {
    const std::size_t dim = c.size();
    std::vector<double> values;
    values.reserve((intervals + 1) * dim);
    for (std::size_t i = 0; i <= intervals; ++i) values.insert(values.end(), c.begin(), c.end());
    return uniform(r, intervals, dim, std::move(values),
                   std::vector<double>((intervals + 1) * dim, 0.0));
}

Segment Segment::zero(double r, std::size_t dim, std::size_t intervals) {
    std::vector<double> c(dim, 0.0);
    return constant(r, c, intervals);
}

Segment Segment::from_function(double r, std::size_t intervals, std::size_t dim,
                               const std::function<void(double, std::span<double>)>& x,
                               const std::function<void(double, std::span<double>)>& dx) {
    std::vector<double> values((intervals + 1) * dim), derivs((intervals + 1) * dim);
    for (std::size_t i = 0; i <= intervals; ++i) {
        const double s = i == intervals
                             ? 0.0
                             : -r + r * static_cast<double>(i) / static_cast<double>(intervals);
        x(s, {values.data() + i * dim, dim});
        dx(s, {derivs.data() + i * dim, dim});
    }
    return uniform(r, intervals, dim, std::move(values), std::move(derivs));
}

Segment Segment::from_curve(const HermiteCurve& curve, std::size_t intervals) {
    if (intervals < 2) throw std::invalid_argument("Segment: at least 2 intervals required");
    const std::size_t dim = curve.dim();
    const double r = curve.length();
    const double step = r / static_cast<double>(intervals);
    const double tol = 1e-9 * step;
    std::vector<double> values((intervals + 1) * dim);
    std::vector<double> right((intervals + 1) * dim);
    std::vector<double> left((intervals + 1) * dim);
    for (std::size_t i = 0; i <= intervals; ++i) {
        const double u = i == intervals ? curve.back()
                                        : curve.front() + static_cast<double>(i) * step;
        std::span<double> v{values.data() + i * dim, dim};
        std::span<double> dr{right.data() + i * dim, dim};
        std::span<double> dl{left.data() + i * dim, dim};
        const std::size_t k = curve.knot_near(u, tol);
        if (k < curve.size()) {
            std::ranges::copy(curve.value_at(k), v.begin());
            std::ranges::copy(curve.right_deriv(k), dr.begin());
            std::ranges::copy(curve.left_deriv(k), dl.begin());
        } else {
            const std::size_t c = curve.locate(u);
            const auto& kn = curve.knots();
            curve.eval_cell(c, (u - kn[c]) / (kn[c + 1] - kn[c]), v, dr);
            std::ranges::copy(dr, dl.begin());
        }
    }
    // Endpoint conventions: no jump can be seen from outside the interval.
    std::copy_n(right.begin(), dim, left.begin());
    std::copy_n(left.begin() + static_cast<std::ptrdiff_t>(intervals * dim), dim,
                right.begin() + static_cast<std::ptrdiff_t>(intervals * dim));
    return uniform(r, intervals, dim, std::move(values), std::move(right), std::move(left));
}

std::span<const double> Segment::deriv(std::size_t i) const { return curve_.right_deriv(i); }

std::vector<double> Segment::values() const {
    std::vector<double> out;
    out.reserve(size() * dim());
    for (std::size_t i = 0; i < size(); ++i) {
        auto v = value(i);
        out.insert(out.end(), v.begin(), v.end());
    }
    return out;
}

std::vector<double> Segment::derivs() const {
    std::vector<double> out;
    out.reserve(size() * dim());
    for (std::size_t i = 0; i < size(); ++i) {
        auto v = deriv(i);
        out.insert(out.end(), v.begin(), v.end());
    }
    return out;
}

std::vector<double> Segment::left_derivs() const {
    std::vector<double> out;
    out.reserve(size() * dim());
    for (std::size_t i = 0; i < size(); ++i) {
        auto v = left_deriv(i);
        out.insert(out.end(), v.begin(), v.end());
    }
    return out;
}

bool Segment::has_derivative_jumps() const {
    for (std::size_t i = 0; i < size(); ++i)
        if (!std::ranges::equal(deriv(i), left_deriv(i))) return true;
    return false;
}

Segment Segment::combine(const Segment& other, double a, double b) const {
    if (other.dim() != dim() || other.intervals() != intervals() ||
        std::abs(other.delay() - delay()) > 1e-12 * delay())
        throw std::invalid_argument("Segment: incompatible operands");
    auto mix = [&](const std::vector<double>& x, const std::vector<double>& y) {
        std::vector<double> out(x.size());
        for (std::size_t i = 0; i < x.size(); ++i) out[i] = a * x[i] + b * y[i];
        return out;
    };
    return uniform(r_, intervals(), dim(), mix(values(), other.values()),
                   mix(derivs(), other.derivs()), mix(left_derivs(), other.left_derivs()));
}

Segment Segment::operator+(const Segment& other) const { return combine(other, 1.0, 1.0); }
Segment Segment::operator-(const Segment& other) const { return combine(other, 1.0, -1.0); }
Segment Segment::operator*(double c) const { return combine(*this, c, 0.0); }
Segment operator*(double c, const Segment& seg) { return seg * c; }

// ---------------------------------------------------------------------------
// SpaceSpec

SpaceSpec SpaceSpec::sup_c0() { return {Kind::SupC0, 0.0, 0.0}; }

SpaceSpec SpaceSpec::sobolev(double p) {
    if (!(p > 1.0))
        throw std::invalid_argument("SpaceSpec: Sobolev exponent must satisfy p > 1");
    return {Kind::Sobolev, p, 0.0};
}

SpaceSpec SpaceSpec::hoelder(double a) {
    if (!(a > 0.0 && a <= 1.0))
        throw std::invalid_argument("SpaceSpec: Hoelder exponent must lie in (0, 1]");
    return {Kind::Hoelder, 0.0, a};
}

double SpaceSpec::paired_p() const {
    switch (kind) {
        case Kind::SupC0: return std::numeric_limits<double>::infinity();
        case Kind::Sobolev: return p;
        case Kind::Hoelder:
            return a >= 1.0 ? std::numeric_limits<double>::infinity() : 1.0 / (1.0 - a);
    }
    return std::numeric_limits<double>::infinity();
}

std::string SpaceSpec::label() const {
    auto num = [](double v) {
        if (std::isinf(v)) return std::string("inf");
        std::string s = std::to_string(v);
        s.erase(s.find_last_not_of('0') + 1);
        if (!s.empty() && s.back() == '.') s.pop_back();
        return s;
    };
    switch (kind) {
        case Kind::SupC0: return "C0";
        case Kind::Sobolev: return "W1," + num(p);
        case Kind::Hoelder: return "C0," + num(a);
    }
    return "?";
}

// ---------------------------------------------------------------------------
// Refined sampling

namespace {

void check_refine(unsigned m) {
    if (m < 2 || m % 2 != 0)
        throw std::invalid_argument("NormOptions: refine must be an even integer >= 2");
}

double norm2(const double* x, std::size_t n) {
    if (n == 1) return std::abs(x[0]);
    double acc = 0;
    for (std::size_t k = 0; k < n; ++k) acc += x[k] * x[k];
    return std::sqrt(acc);
}

double norm2_sq(const double* x, std::size_t n) {
    double acc = 0;
    for (std::size_t k = 0; k < n; ++k) acc += x[k] * x[k];
    return acc;
}

}  // namespace

RefinedSamples refine_curve(const HermiteCurve& curve, unsigned m) {
    check_refine(m);
    RefinedSamples out;
    out.dim = curve.dim();
    out.refine = m;
    const std::size_t n = curve.dim();
    const std::size_t nc = curve.cells();
    const std::size_t total = nc * m + 1;
    out.s.resize(total);
    out.values.resize(total * n);
    out.derivs.resize(nc * (m + 1) * n);

    // Basis tables shared by all cells.
    std::vector<std::array<double, 4>> vb(m + 1), db(m + 1);
    for (unsigned j = 0; j <= m; ++j) {
        const double th = static_cast<double>(j) / m;
        const double t2 = th * th, t3 = t2 * th;
        vb[j] = {2 * t3 - 3 * t2 + 1, t3 - 2 * t2 + th, -2 * t3 + 3 * t2, t3 - t2};
        db[j] = {6 * t2 - 6 * th, 3 * t2 - 4 * th + 1, -6 * t2 + 6 * th, 3 * t2 - 2 * th};
    }
    const auto& kn = curve.knots();
    for (std::size_t c = 0; c < nc; ++c) {
        const double dt = kn[c + 1] - kn[c];
        const auto y0 = curve.value_at(c);
        const auto y1 = curve.value_at(c + 1);
        const auto m0 = curve.right_deriv(c);
        const auto m1 = curve.left_deriv(c + 1);
        for (unsigned j = 0; j <= m; ++j) {
            const std::size_t g = c * m + j;
            const auto& b = vb[j];
            const auto& d = db[j];
            if (j < m || c + 1 == nc) {
                out.s[g] = j == m ? kn[c + 1] : kn[c] + dt * static_cast<double>(j) / m;
                double* v = out.values.data() + g * n;
                if (j == 0) {
                    std::copy(y0.begin(), y0.end(), v);
                } else if (j == m) {
                    std::copy(y1.begin(), y1.end(), v);
                } else {
                    for (std::size_t k = 0; k < n; ++k)
                        v[k] = b[0] * y0[k] + b[1] * dt * m0[k] + b[2] * y1[k] + b[3] * dt * m1[k];
                }
            }
            double* dv = out.derivs.data() + (c * (m + 1) + j) * n;
            for (std::size_t k = 0; k < n; ++k)
                dv[k] = (d[0] * y0[k] + d[2] * y1[k]) / dt + d[1] * m0[k] + d[3] * m1[k];
        }
    }
    return out;
}

namespace {

double golden_max(const std::function<double(double)>& g, double lo, double hi) {
    constexpr double inv_phi = 0.6180339887498949;
    double a = lo, b = hi;
    double c = b - inv_phi * (b - a);
    double d = a + inv_phi * (b - a);
    double gc = g(c), gd = g(d);
    double best = std::max(gc, gd);
    for (int it = 0; it < 40; ++it) {
        if (gc >= gd) {
            b = d;
            d = c;
            gd = gc;
            c = b - inv_phi * (b - a);
            gc = g(c);
        } else {
            a = c;
            c = d;
            gc = gd;
            d = a + inv_phi * (b - a);
            gd = g(d);
        }
        best = std::max({best, gc, gd});
    }
    return best;
}

double sup_from_samples(const HermiteCurve& curve, const RefinedSamples& rs,
                        const std::function<double(double)>* weight, bool polish) {
    const std::size_t n = rs.dim;
    const std::size_t total = rs.s.size();
    std::vector<double> g(total);
    for (std::size_t i = 0; i < total; ++i) {
        const double w = weight ? (*weight)(rs.s[i]) : 1.0;
        g[i] = w * norm2(rs.values.data() + i * n, n);
    }
    double best = *std::max_element(g.begin(), g.end());
    if (!polish || total < 3 || best == 0.0) return best;

    // Polish the strongest discrete local maxima.
    constexpr std::size_t kCandidates = 4;
    std::vector<std::size_t> peaks;
    for (std::size_t i = 0; i < total; ++i) {
        const bool left_ok = i == 0 || g[i] >= g[i - 1];
        const bool right_ok = i + 1 == total || g[i] >= g[i + 1];
        if (left_ok && right_ok) peaks.push_back(i);
    }
    const std::size_t keep = std::min(kCandidates, peaks.size());
    std::partial_sort(peaks.begin(), peaks.begin() + static_cast<std::ptrdiff_t>(keep),
                      peaks.end(), [&](std::size_t x, std::size_t y) {
                          return g[x] > g[y] || (g[x] == g[y] && x < y);
                      });
    std::vector<double> buf(n);
    const std::function<double(double)> fn = [&](double s) {
        curve.eval(s, buf);
        const double w = weight ? (*weight)(s) : 1.0;
        return w * norm2(buf.data(), n);
    };
    for (std::size_t q = 0; q < keep; ++q) {
        const std::size_t i = peaks[q];
        const double lo = rs.s[i == 0 ? 0 : i - 1];
        const double hi = rs.s[i + 1 == total ? i : i + 1];
        if (hi > lo) best = std::max(best, golden_max(fn, lo, hi));
    }
    return best;
}

// max |x'|, polished inside the cells holding the largest samples (the
// derivative may jump at knots, so the search never crosses one).
double max_deriv_from_samples(const HermiteCurve& curve, const RefinedSamples& rs, bool polish) {
    const std::size_t n = rs.dim;
    const unsigned m = rs.refine;
    const std::size_t total = curve.cells() * (m + 1);
    std::vector<double> g(total);
    for (std::size_t i = 0; i < total; ++i) g[i] = norm2(rs.derivs.data() + i * n, n);
    double best = total ? *std::max_element(g.begin(), g.end()) : 0.0;
    if (!polish || best == 0.0) return best;

    constexpr std::size_t kCandidates = 4;
    std::vector<std::size_t> peaks;
    for (std::size_t i = 0; i < total; ++i) {
        const std::size_t j = i % (m + 1);
        const bool left_ok = j == 0 || g[i] >= g[i - 1];
        const bool right_ok = j == m || g[i] >= g[i + 1];
        if (left_ok && right_ok) peaks.push_back(i);
    }
    const std::size_t keep = std::min(kCandidates, peaks.size());
    std::partial_sort(peaks.begin(), peaks.begin() + static_cast<std::ptrdiff_t>(keep), peaks.end(),
                      [&](std::size_t x, std::size_t y) { return g[x] > g[y] || (g[x] == g[y] && x < y); });
    std::vector<double> val(n), der(n);
    for (std::size_t q = 0; q < keep; ++q) {
        const std::size_t cell = peaks[q] / (m + 1), j = peaks[q] % (m + 1);
        const std::function<double(double)> fn = [&](double th) {
            curve.eval_cell(cell, th, val, der);
            return norm2(der.data(), n);
        };
        const double lo = static_cast<double>(j == 0 ? 0 : j - 1) / m;
        const double hi = static_cast<double>(j == m ? m : j + 1) / m;
        best = std::max(best, golden_max(fn, lo, hi));
    }
    return best;
}

double lp_from_samples(const HermiteCurve& curve, const RefinedSamples& rs, double p, bool polish) {
    if (!(p > 1.0)) throw std::invalid_argument("lp_deriv_norm: p must satisfy p > 1");
    const std::size_t n = rs.dim;
    const unsigned m = rs.refine;
    const std::size_t nc = curve.cells();
    if (std::isinf(p)) return max_deriv_from_samples(curve, rs, polish);
    const auto& kn = curve.knots();
    const bool square = p == 2.0;
    double acc = 0;
    for (std::size_t c = 0; c < nc; ++c) {
        const double hsub = (kn[c + 1] - kn[c]) / m;
        double cell = 0;
        for (unsigned j = 0; j <= m; ++j) {
            const double* d = rs.derivs.data() + (c * (m + 1) + j) * n;
            const double sq = norm2_sq(d, n);
            const double v = square ? sq : std::pow(sq, p / 2.0);
            const double w = (j == 0 || j == m) ? 1.0 : (j % 2 == 1 ? 4.0 : 2.0);
            cell += w * v;
        }
        acc += cell * hsub / 3.0;
    }
    return square ? std::sqrt(acc) : std::pow(acc, 1.0 / p);
}

double hoelder_uniform(const std::vector<double>& x, std::size_t n, double spacing, double a) {
    const std::size_t pts = x.size() / n;
    if (pts < 2) return 0;
    std::vector<double> lo(n, std::numeric_limits<double>::infinity());
    std::vector<double> hi(n, -std::numeric_limits<double>::infinity());
    for (std::size_t i = 0; i < pts; ++i)
        for (std::size_t k = 0; k < n; ++k) {
            lo[k] = std::min(lo[k], x[i * n + k]);
            hi[k] = std::max(hi[k], x[i * n + k]);
        }
    double diam_sq = 0;
    for (std::size_t k = 0; k < n; ++k) diam_sq += (hi[k] - lo[k]) * (hi[k] - lo[k]);
    const double diam = std::sqrt(diam_sq);
    if (diam == 0) return 0;

    double best = 0;
    for (std::size_t k = 1; k < pts; ++k) {
        const double w = std::pow(static_cast<double>(k) * spacing, -a);
        if (diam * w <= best) break;  // weights only decrease from here on
        double msq = 0;
        if (n == 1) {
            const double* p = x.data();
            for (std::size_t i = 0; i + k < pts; ++i) {
                const double d = p[i + k] - p[i];
                msq = std::max(msq, d * d);
            }
        } else {
            for (std::size_t i = 0; i + k < pts; ++i) {
                double acc = 0;
                for (std::size_t c = 0; c < n; ++c) {
                    const double d = x[(i + k) * n + c] - x[i * n + c];
                    acc += d * d;
                }
                msq = std::max(msq, acc);
            }
        }
        best = std::max(best, std::sqrt(msq) * w);
    }
    return best;
}

double hoelder_from(const HermiteCurve& curve, const RefinedSamples* rs, double a,
                    const NormOptions& opts) {
    if (!(a > 0.0 && a <= 1.0))
        throw std::invalid_argument("hoelder_seminorm: exponent must lie in (0, 1]");
    // Exponent 1 is the Lipschitz constant, i.e. max |x'| of the piecewise
    // C^1 interpolant; the pair search would only approach it from below.
    if (a == 1.0 && opts.polish) {
        if (rs) return max_deriv_from_samples(curve, *rs, true);
        return max_deriv_from_samples(curve, refine_curve(curve, opts.refine), true);
    }
    const std::size_t pts = hoelder_grid_points(curve, opts);
    const std::size_t q = pts - 1;
    const double spacing = curve.length() / static_cast<double>(q);
    if (rs && curve.uniform() && rs->s.size() == pts) return hoelder_uniform(rs->values, rs->dim, spacing, a);
    const std::size_t n = curve.dim();
    std::vector<double> x(pts * n);
    for (std::size_t i = 0; i < pts; ++i) {
        const double s = i == q ? curve.back() : curve.front() + static_cast<double>(i) * spacing;
        curve.eval(s, {x.data() + i * n, n});
    }
    return hoelder_uniform(x, n, spacing, a);
}

}  // namespace

std::size_t hoelder_grid_points(const HermiteCurve& curve, const NormOptions& opts) {
    const std::size_t cap = std::max<std::size_t>(opts.hoelder_cap, 3);
    return std::min(curve.cells() * opts.refine, cap - 1) + 1;
}

double sup_norm(const HermiteCurve& curve, const NormOptions& opts) {
    const RefinedSamples rs = refine_curve(curve, opts.refine);
    return sup_from_samples(curve, rs, nullptr, opts.polish);
}
double sup_norm(const Segment& seg, const NormOptions& opts) { return sup_norm(seg.curve(), opts); }

double weighted_sup(const HermiteCurve& curve, const std::function<double(double)>& weight,
                    const NormOptions& opts) {
    const RefinedSamples rs = refine_curve(curve, opts.refine);
    return sup_from_samples(curve, rs, &weight, opts.polish);
}

double lp_deriv_norm(const HermiteCurve& curve, double p, const NormOptions& opts) {
    if (!(p > 1.0)) throw std::invalid_argument("lp_deriv_norm: p must satisfy p > 1");
    const RefinedSamples rs = refine_curve(curve, opts.refine);
    return lp_from_samples(curve, rs, p, opts.polish);
}
double lp_deriv_norm(const Segment& seg, double p, const NormOptions& opts) {
    return lp_deriv_norm(seg.curve(), p, opts);
}

double max_abs_deriv(const HermiteCurve& curve, const NormOptions& opts) {
    const RefinedSamples rs = refine_curve(curve, opts.refine);
    return lp_from_samples(curve, rs, std::numeric_limits<double>::infinity(), opts.polish);
}
double max_abs_deriv(const Segment& seg, const NormOptions& opts) {
    return max_abs_deriv(seg.curve(), opts);
}

double hoelder_seminorm(const HermiteCurve& curve, double a, const NormOptions& opts) {
    check_refine(opts.refine);
    const std::size_t pts = hoelder_grid_points(curve, opts);
    if (curve.uniform() && pts == curve.cells() * opts.refine + 1) {
        const RefinedSamples rs = refine_curve(curve, opts.refine);
        return hoelder_from(curve, &rs, a, opts);
    }
    return hoelder_from(curve, nullptr, a, opts);
}
double hoelder_seminorm(const Segment& seg, double a, const NormOptions& opts) {
    return hoelder_seminorm(seg.curve(), a, opts);
}

double space_norm(const HermiteCurve& curve, const SpaceSpec& space, const NormOptions& opts) {
    const RefinedSamples rs = refine_curve(curve, opts.refine);
    const double sup = sup_from_samples(curve, rs, nullptr, opts.polish);
    switch (space.kind) {
        case SpaceSpec::Kind::SupC0: return sup;
        case SpaceSpec::Kind::Sobolev: return sup + lp_from_samples(curve, rs, space.p, opts.polish);
        case SpaceSpec::Kind::Hoelder: return std::max(sup, hoelder_from(curve, &rs, space.a, opts));
    }
    return sup;
}
double space_norm(const Segment& seg, const SpaceSpec& space, const NormOptions& opts) {
    return space_norm(seg.curve(), space, opts);
}

// ---------------------------------------------------------------------------
// Prolongation

HermiteCurve prolong_curve(const HermiteCurve& x, std::span<const double> f_value, double h) {
    const double r = x.length();
    if (f_value.size() != x.dim())
        throw std::invalid_argument("prolong: f_value dimension mismatch");
    if (!(h > 0.0) || h > r * (1 + 1e-12))
        throw std::invalid_argument("prolong: step h must satisfy 0 < h <= r");
    const std::size_t n = x.dim();
    const auto x0 = x.value_at(x.size() - 1);
    std::vector<double> tip(n);
    for (std::size_t k = 0; k < n; ++k) tip[k] = x0[k] + h * f_value[k];

    const double tol = 1e-12 * r;
    if (h >= r - tol) {
        HermiteCurve out(n);
        out.append(x.front(), x0, f_value, f_value);
        out.append(x.back(), tip, f_value, f_value);
        return out;
    }
    HermiteCurve out = x.restrict(x.front() + h, x.back(), -h);
    out.set_right_deriv(out.size() - 1, f_value);
    out.append(x.back(), tip, f_value, f_value);
    return out;
}

Segment prolong(const Segment& seg, std::span<const double> f_value, double h) {
    return Segment::from_curve(prolong_curve(seg.curve(), f_value, h), seg.intervals());
}

}  // namespace delaystab
