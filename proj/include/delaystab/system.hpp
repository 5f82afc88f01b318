#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "delaystab/hermite_curve.hpp"
#include "delaystab/segment.hpp"

namespace delaystab {

using RhsFunction = std::function<void(const HistoryView&, std::span<double>)>;
using LipschitzModulus = std::function<double(double)>;

/// System definition as carried in configuration files.
struct SystemDef {
    std::string name;
    std::size_t n = 1;
    double r = 1.0;
    std::map<std::string, double> params;
};

/// Time-invariant retarded system x'(t) = f(x_t) with delay r, together
/// with a nondecreasing modulus L such that
/// |f(x) - f(y)| <= L(R) ||x - y||_inf on the sup-ball of radius R.
class DelaySystem {
public:
    DelaySystem(std::string name, std::size_t n, double r, RhsFunction rhs,
                LipschitzModulus lipschitz, std::map<std::string, double> params = {});

    const std::string& name() const { return name_; }
    std::size_t dim() const { return n_; }
    double delay() const { return r_; }
    const std::map<std::string, double>& params() const { return params_; }
    SystemDef definition() const { return {name_, n_, r_, params_}; }

    void rhs(const HistoryView& x, std::span<double> out) const { rhs_(x, out); }
    std::vector<double> rhs(const Segment& x) const;
    std::vector<double> rhs(const HermiteCurve& x) const;
    double lipschitz(double R) const { return lipschitz_(R); }
    const LipschitzModulus& modulus() const { return lipschitz_; }

private:
    std::string name_;
    std::size_t n_;
    double r_;
    RhsFunction rhs_;
    LipschitzModulus lipschitz_;
    std::map<std::string, double> params_;
};

// Builtin families.

/// x' = a x(t) + b x(t-r); L = |a| + |b|.
DelaySystem linear_scalar(double a, double b, double r);

/// x' = A0 x(t) + A1 x(t-r) with row-major n x n matrices; L = ||A0|| + ||A1||.
DelaySystem linear_vector(std::size_t n, std::vector<double> a0, std::vector<double> a1, double r);

/// x' = A0 x(t) + int_{-r}^0 K(s) x(t+s) ds with K constant on each of
/// `kernels.size()` equal subintervals of [-r, 0] (ordered from -r);
/// L = ||A0|| + r max ||K||.
DelaySystem distributed_linear(std::size_t n, std::vector<double> a0,
                               std::vector<std::vector<double>> kernels, double r);

/// x_i' = -c x_i(t) + k tanh(x_i(t-r)); L = c + |k|.
DelaySystem saturating(double c, double k, double r, std::size_t n = 1);

/// x' = x(t)^2, which blows up in finite time from positive data; L(R) = 2R.
DelaySystem quadratic(double r);

/// Builds a registered system from its definition.
DelaySystem make_system(const SystemDef& def);
std::vector<std::string> registered_systems();

/// Largest observed |f(x) - f(y)| / ||x - y||_inf over random pairs in the
/// sup-ball of radius R.
double lipschitz_probe(const DelaySystem& sys, double R, std::size_t trials,
                       std::uint64_t seed = 0);

/// Spectral norm of a row-major n x n matrix.
double spectral_norm(std::span<const double> a, std::size_t n);

}  // namespace delaystab
