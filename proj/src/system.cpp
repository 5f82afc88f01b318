#include "delaystab/system.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

#include "delaystab/sampler.hpp"

namespace delaystab {

DelaySystem::DelaySystem(std::string name, std::size_t n, double r, RhsFunction rhs,
                         LipschitzModulus lipschitz, std::map<std::string, double> params)
    : name_(std::move(name)),
      n_(n),
      r_(r),
      rhs_(std::move(rhs)),
      lipschitz_(std::move(lipschitz)),
      params_(std::move(params)) {
    if (n_ == 0) throw std::invalid_argument("DelaySystem: dimension must be positive");
    if (!(r_ > 0) || !std::isfinite(r_))
        throw std::invalid_argument("DelaySystem: delay must be positive");
    if (!rhs_ || !lipschitz_) throw std::invalid_argument("DelaySystem: missing rhs or modulus");
    const auto f0 = this->rhs(Segment::zero(r_, n_, 8));
    for (double v : f0)
        if (!(std::abs(v) <= 1e-12))
            throw std::invalid_argument("DelaySystem: rhs(0) must vanish");
}

std::vector<double> DelaySystem::rhs(const Segment& x) const { return rhs(x.curve()); }

std::vector<double> DelaySystem::rhs(const HermiteCurve& x) const {
    if (x.dim() != n_) throw std::invalid_argument("DelaySystem: state dimension mismatch");
    std::vector<double> out(n_);
    rhs_(CurveHistory(x), out);
    return out;
}

double spectral_norm(std::span<const double> a, std::size_t n) {
    if (a.size() != n * n) throw std::invalid_argument("spectral_norm: size mismatch");
    Eigen::MatrixXd m(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = a[i * n + j];
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
    return svd.singularValues().size() ? svd.singularValues()(0) : 0.0;
}

namespace {

void matvec_add(std::span<const double> a, std::span<const double> x, double scale,
                std::span<double> out) {
    const std::size_t n = x.size();
    for (std::size_t i = 0; i < n; ++i) {
        double acc = 0;
        for (std::size_t j = 0; j < n; ++j) acc += a[i * n + j] * x[j];
        out[i] += scale * acc;
    }
}

}  // namespace

DelaySystem linear_scalar(double a, double b, double r) {
    const double L = std::abs(a) + std::abs(b);
    return DelaySystem(
        "linear_scalar", 1, r,
        [a, b, r](const HistoryView& x, std::span<double> out) {
            double now = 0, lag = 0;
            x.value(0.0, {&now, 1});
            x.value(-r, {&lag, 1});
            out[0] = a * now + b * lag;
        },
        [L](double) { return L; }, {{"a", a}, {"b", b}});
}

DelaySystem linear_vector(std::size_t n, std::vector<double> a0, std::vector<double> a1,
                          double r) {
    if (a0.size() != n * n || a1.size() != n * n)
        throw std::invalid_argument("linear_vector: matrices must be n x n");
    const double L = spectral_norm(a0, n) + spectral_norm(a1, n);
    std::map<std::string, double> params;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            params["A0_" + std::to_string(i) + "_" + std::to_string(j)] = a0[i * n + j];
            params["A1_" + std::to_string(i) + "_" + std::to_string(j)] = a1[i * n + j];
        }
    return DelaySystem(
        "linear_vector", n, r,
        [a0 = std::move(a0), a1 = std::move(a1), n, r](const HistoryView& x, std::span<double> out) {
            std::vector<double> now(n), lag(n);
            x.value(0.0, now);
            x.value(-r, lag);
            std::fill(out.begin(), out.end(), 0.0);
            matvec_add(a0, now, 1.0, out);
            matvec_add(a1, lag, 1.0, out);
        },
        [L](double) { return L; }, std::move(params));
}

DelaySystem distributed_linear(std::size_t n, std::vector<double> a0,
                               std::vector<std::vector<double>> kernels, double r) {
    if (a0.size() != n * n) throw std::invalid_argument("distributed_linear: A0 must be n x n");
    if (kernels.empty()) throw std::invalid_argument("distributed_linear: need at least one piece");
    double kmax = 0;
    std::map<std::string, double> params;
    params["pieces"] = static_cast<double>(kernels.size());
    for (std::size_t p = 0; p < kernels.size(); ++p) {
        if (kernels[p].size() != n * n)
            throw std::invalid_argument("distributed_linear: kernel pieces must be n x n");
        kmax = std::max(kmax, spectral_norm(kernels[p], n));
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j)
                params["K" + std::to_string(p) + "_" + std::to_string(i) + "_" + std::to_string(j)] =
                    kernels[p][i * n + j];
    }
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            params["A0_" + std::to_string(i) + "_" + std::to_string(j)] = a0[i * n + j];
    const double L = spectral_norm(a0, n) + r * kmax;
    return DelaySystem(
        "distributed_linear", n, r,
        [a0 = std::move(a0), kernels = std::move(kernels), n, r](const HistoryView& x,
                                                                 std::span<double> out) {
            std::vector<double> now(n), piece(n);
            x.value(0.0, now);
            std::fill(out.begin(), out.end(), 0.0);
            matvec_add(a0, now, 1.0, out);
            const double width = r / static_cast<double>(kernels.size());
            for (std::size_t p = 0; p < kernels.size(); ++p) {
                const double lo = -r + static_cast<double>(p) * width;
                const double hi = p + 1 == kernels.size() ? 0.0 : lo + width;
                x.integral(lo, hi, piece);
                matvec_add(kernels[p], piece, 1.0, out);
            }
        },
        [L](double) { return L; }, std::move(params));
}

DelaySystem saturating(double c, double k, double r, std::size_t n) {
    const double L = std::abs(c) + std::abs(k);
    return DelaySystem(
        "saturating", n, r,
        [c, k, r, n](const HistoryView& x, std::span<double> out) {
            std::vector<double> now(n), lag(n);
            x.value(0.0, now);
            x.value(-r, lag);
            for (std::size_t i = 0; i < n; ++i) out[i] = -c * now[i] + k * std::tanh(lag[i]);
        },
        [L](double) { return L; }, {{"c", c}, {"k", k}});
}

DelaySystem quadratic(double r) {
    return DelaySystem(
        "quadratic", 1, r,
        [](const HistoryView& x, std::span<double> out) {
            double now = 0;
            x.value(0.0, {&now, 1});
            out[0] = now * now;
        },
        [](double R) { return 2.0 * R; });
}

namespace {

double param(const SystemDef& def, const std::string& key, double fallback = 0.0) {
    auto it = def.params.find(key);
    return it == def.params.end() ? fallback : it->second;
}

void require_keys(const SystemDef& def, const std::set<std::string>& allowed) {
    for (const auto& [k, v] : def.params) {
        if (!allowed.contains(k))
            throw std::invalid_argument("system '" + def.name + "': unknown parameter '" + k + "'");
        if (!std::isfinite(v))
            throw std::invalid_argument("system '" + def.name + "': parameter '" + k + "' is not finite");
    }
}

std::vector<double> matrix_param(const SystemDef& def, const std::string& prefix,
                                 std::set<std::string>& keys) {
    const std::size_t n = def.n;
    std::vector<double> m(n * n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            const std::string key = prefix + "_" + std::to_string(i) + "_" + std::to_string(j);
            keys.insert(key);
            m[i * n + j] = param(def, key);
        }
    return m;
}

void require_scalar(const SystemDef& def) {
    if (def.n != 1) throw std::invalid_argument("system '" + def.name + "' is scalar (n = 1)");
}

}  // namespace

DelaySystem make_system(const SystemDef& def) {
    if (def.name == "linear_scalar") {
        require_scalar(def);
        require_keys(def, {"a", "b"});
        return linear_scalar(param(def, "a"), param(def, "b"), def.r);
    }
    if (def.name == "linear_vector") {
        std::set<std::string> keys;
        auto a0 = matrix_param(def, "A0", keys);
        auto a1 = matrix_param(def, "A1", keys);
        require_keys(def, keys);
        return linear_vector(def.n, std::move(a0), std::move(a1), def.r);
    }
    if (def.name == "distributed_linear") {
        std::set<std::string> keys{"pieces"};
        const double pieces = param(def, "pieces", 1.0);
        if (!(pieces >= 1) || pieces != std::floor(pieces))
            throw std::invalid_argument("distributed_linear: 'pieces' must be a positive integer");
        auto a0 = matrix_param(def, "A0", keys);
        std::vector<std::vector<double>> kernels;
        for (std::size_t p = 0; p < static_cast<std::size_t>(pieces); ++p)
            kernels.push_back(matrix_param(def, "K" + std::to_string(p), keys));
        require_keys(def, keys);
        return distributed_linear(def.n, std::move(a0), std::move(kernels), def.r);
    }
    if (def.name == "saturating") {
        require_keys(def, {"c", "k"});
        return saturating(param(def, "c"), param(def, "k"), def.r, def.n);
    }
    if (def.name == "quadratic") {
        require_scalar(def);
        require_keys(def, {});
        return quadratic(def.r);
    }
    throw std::invalid_argument("unknown system '" + def.name + "'");
}

std::vector<std::string> registered_systems() {
    return {"linear_scalar", "linear_vector", "distributed_linear", "saturating", "quadratic"};
}

double lipschitz_probe(const DelaySystem& sys, double R, std::size_t trials, std::uint64_t seed) {
    if (trials == 0) throw std::invalid_argument("lipschitz_probe: trials must be >= 1");
    SamplerConfig cfg;
    cfg.target_space = SpaceSpec::sup_c0();
    cfg.target_norm = R;
    cfg.dimension = sys.dim();
    cfg.delay = sys.delay();
    cfg.radial = RadialMode::Mixed;
    double best = 0;
    for (std::size_t t = 0; t < trials; ++t) {
        cfg.family = t % 2 == 0 ? SamplerFamily{FourierFamily{3}}
                                : SamplerFamily{PiecewiseLinearFamily{4}};
        cfg.seed = seed;
        const Segment x = sample_one(cfg, 2 * t);
        cfg.seed = seed ^ 0x5bd1e995u;
        const Segment y = sample_one(cfg, 2 * t + 1);
        const double dist = sup_norm(x - y);
        if (dist == 0) continue;
        const auto fx = sys.rhs(x);
        const auto fy = sys.rhs(y);
        double acc = 0;
        for (std::size_t i = 0; i < fx.size(); ++i) acc += (fx[i] - fy[i]) * (fx[i] - fy[i]);
        best = std::max(best, std::sqrt(acc) / dist);
    }
    return best;
}

}  // namespace delaystab
