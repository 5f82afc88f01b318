#include "delaystab/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

#include "delaystab/parallel.hpp"

namespace delaystab {

namespace {

std::mt19937_64 stream_for(std::uint64_t seed, std::size_t index) {
    const auto idx = static_cast<std::uint64_t>(index);
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(idx), static_cast<std::uint32_t>(idx >> 32),
                      0x9e3779b9u};
    return std::mt19937_64(seq);
}

Segment fourier_shape(const SamplerConfig& cfg, unsigned harmonics, std::mt19937_64& rng) {
    const std::size_t n = cfg.dimension;
    const double r = cfg.delay;
    std::normal_distribution<double> normal;
    // per component: c0, then (a_k, b_k) for k = 1..K
    std::vector<double> coef(n * (1 + 2 * harmonics));
    for (double& c : coef) c = normal(rng);
    const std::size_t stride = 1 + 2 * harmonics;
    auto x = [&](double s, std::span<double> out) {
        for (std::size_t i = 0; i < n; ++i) {
            const double* c = coef.data() + i * stride;
            double v = c[0];
            for (unsigned k = 1; k <= harmonics; ++k) {
                const double w = k * std::numbers::pi / r;
                v += c[2 * k - 1] * std::cos(w * (s + r)) + c[2 * k] * std::sin(w * (s + r));
            }
            out[i] = v;
        }
    };
    auto dx = [&](double s, std::span<double> out) {
        for (std::size_t i = 0; i < n; ++i) {
            const double* c = coef.data() + i * stride;
            double v = 0;
            for (unsigned k = 1; k <= harmonics; ++k) {
                const double w = k * std::numbers::pi / r;
                v += w * (-c[2 * k - 1] * std::sin(w * (s + r)) + c[2 * k] * std::cos(w * (s + r)));
            }
            out[i] = v;
        }
    };
    return Segment::from_function(r, cfg.intervals, n, x, dx);
}

Segment polynomial_shape(const SamplerConfig& cfg, unsigned degree, std::mt19937_64& rng) {
    const std::size_t n = cfg.dimension;
    const double r = cfg.delay;
    std::normal_distribution<double> normal;
    std::vector<double> coef(n * (degree + 1));
    for (double& c : coef) c = normal(rng);
    auto x = [&](double s, std::span<double> out) {
        const double tau = s / r;
        for (std::size_t i = 0; i < n; ++i) {
            double v = 0;
            for (unsigned j = degree + 1; j-- > 0;) v = v * tau + coef[i * (degree + 1) + j];
            out[i] = v;
        }
    };
    auto dx = [&](double s, std::span<double> out) {
        const double tau = s / r;
        for (std::size_t i = 0; i < n; ++i) {
            double v = 0;
            for (unsigned j = degree; j >= 1; --j) v = v * tau + j * coef[i * (degree + 1) + j];
            out[i] = v / r;
        }
    };
    return Segment::from_function(r, cfg.intervals, n, x, dx);
}

// Breakpoints sit on grid nodes so the Hermite representation is exact.
Segment piecewise_linear_shape(const SamplerConfig& cfg, unsigned breaks, std::mt19937_64& rng) {
    const std::size_t n = cfg.dimension;
    const std::size_t N = cfg.intervals;
    if (breaks + 1 > N)
        throw std::invalid_argument("sampler: too many breakpoints for the segment grid");
    std::vector<std::size_t> interior(N - 1);
    for (std::size_t i = 0; i < interior.size(); ++i) interior[i] = i + 1;
    // partial Fisher-Yates with a fixed draw order
    for (unsigned j = 0; j < breaks; ++j) {
        std::uniform_int_distribution<std::size_t> pick(j, interior.size() - 1);
        std::swap(interior[j], interior[pick(rng)]);
    }
    std::vector<std::size_t> knots(interior.begin(), interior.begin() + breaks);
    knots.push_back(0);
    knots.push_back(N);
    std::sort(knots.begin(), knots.end());

    std::normal_distribution<double> normal;
    std::vector<double> kv(knots.size() * n);
    for (double& v : kv) v = normal(rng);

    const double h = cfg.delay / static_cast<double>(N);
    std::vector<double> values((N + 1) * n), right((N + 1) * n), left((N + 1) * n);
    for (std::size_t piece = 0; piece + 1 < knots.size(); ++piece) {
        const std::size_t i0 = knots[piece], i1 = knots[piece + 1];
        const double len = static_cast<double>(i1 - i0) * h;
        for (std::size_t c = 0; c < n; ++c) {
            const double v0 = kv[piece * n + c], v1 = kv[(piece + 1) * n + c];
            const double slope = (v1 - v0) / len;
            for (std::size_t i = i0; i <= i1; ++i) {
                const double th = static_cast<double>(i - i0) / static_cast<double>(i1 - i0);
                values[i * n + c] = i == i1 ? v1 : v0 + th * (v1 - v0);
                if (i < i1) right[i * n + c] = slope;
                if (i > i0) left[i * n + c] = slope;
            }
        }
    }
    for (std::size_t c = 0; c < n; ++c) {
        left[c] = right[c];
        right[N * n + c] = left[N * n + c];
    }
    return Segment::uniform(cfg.delay, N, n, std::move(values), std::move(right), std::move(left));
}

}  // namespace

void validate(const SamplerConfig& cfg) {
    if (!(cfg.target_norm > 0) || !std::isfinite(cfg.target_norm))
        throw std::invalid_argument("sampler: target_norm must be positive");
    if (cfg.dimension == 0) throw std::invalid_argument("sampler: dimension must be positive");
    if (!(cfg.delay > 0)) throw std::invalid_argument("sampler: delay must be positive");
    if (cfg.intervals < 2) throw std::invalid_argument("sampler: at least 2 intervals required");
    std::visit(
        [](const auto& fam) {
            using T = std::decay_t<decltype(fam)>;
            if constexpr (std::is_same_v<T, FourierFamily>) {
                if (fam.harmonics < 1) throw std::invalid_argument("sampler: Fourier K must be >= 1");
            } else if constexpr (std::is_same_v<T, PiecewiseLinearFamily>) {
                if (fam.breakpoints < 1)
                    throw std::invalid_argument("sampler: piecewise-linear k must be >= 1");
            }
        },
        cfg.family);
}

Segment sample_one(const SamplerConfig& cfg, std::size_t index) {
    validate(cfg);
    auto rng = stream_for(cfg.seed, index);
    Segment shape = std::visit(
        [&](const auto& fam) -> Segment {
            using T = std::decay_t<decltype(fam)>;
            if constexpr (std::is_same_v<T, FourierFamily>)
                return fourier_shape(cfg, fam.harmonics, rng);
            else if constexpr (std::is_same_v<T, PolynomialFamily>)
                return polynomial_shape(cfg, fam.degree, rng);
            else
                return piecewise_linear_shape(cfg, fam.breakpoints, rng);
        },
        cfg.family);

    std::uniform_real_distribution<double> uniform(0.0, 1.0);
    const double u_draw = 1.0 - uniform(rng);  // (0, 1]
    const bool on_sphere = cfg.radial == RadialMode::Boundary ||
                           (cfg.radial == RadialMode::Mixed && index % 2 == 0);
    const double u = on_sphere ? 1.0 : u_draw;

    const double norm = space_norm(shape, cfg.target_space, cfg.norms);
    if (norm == 0.0) return Segment::zero(cfg.delay, cfg.dimension, cfg.intervals);
    Segment out = shape * (u * cfg.target_norm / norm);
    // Homogeneity holds only up to rounding; pull back inside the ball if needed.
    double shrink = 1e-15;
    for (double check = space_norm(out, cfg.target_space, cfg.norms); check > cfg.target_norm;
         check = space_norm(out, cfg.target_space, cfg.norms), shrink *= 4)
        out = out * (cfg.target_norm / check * (1.0 - shrink));
    return out;
}

std::vector<Segment> sample(const SamplerConfig& cfg, std::size_t count) {
    validate(cfg);
    std::vector<Segment> out;
    out.reserve(count);
    auto items = parallel_map(count, [&](std::size_t i) { return sample_one(cfg, i); });
    for (auto& s : items) out.push_back(std::move(*s));
    return out;
}

}  // namespace delaystab
