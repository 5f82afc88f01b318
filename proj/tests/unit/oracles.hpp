#pragma once

// Independent closed-form references used by the unit and acceptance tests.

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace oracle {

/// Dense polynomial with coefficients in increasing degree.
struct Poly {
    std::vector<double> c;

    double operator()(double t) const {
        double v = 0;
        for (std::size_t j = c.size(); j-- > 0;) v = v * t + c[j];
        return v;
    }
    Poly deriv() const {
        Poly d;
        for (std::size_t j = 1; j < c.size(); ++j) d.c.push_back(static_cast<double>(j) * c[j]);
        return d;
    }
    Poly antideriv() const {
        Poly a{{0.0}};
        for (std::size_t j = 0; j < c.size(); ++j) a.c.push_back(c[j] / static_cast<double>(j + 1));
        return a;
    }
    bool zero() const {
        for (double x : c)
            if (x != 0.0) return false;
        return true;
    }
    Poly operator+(const Poly& o) const {
        Poly s{std::vector<double>(std::max(c.size(), o.c.size()), 0.0)};
        for (std::size_t j = 0; j < c.size(); ++j) s.c[j] += c[j];
        for (std::size_t j = 0; j < o.c.size(); ++j) s.c[j] += o.c[j];
        return s;
    }
    Poly operator*(double k) const {
        Poly s = *this;
        for (double& x : s.c) x *= k;
        return s;
    }
    /// p(t - d) expanded in powers of t.
    Poly shifted(double d) const {
        Poly s{std::vector<double>(c.size(), 0.0)};
        for (std::size_t j = 0; j < c.size(); ++j) {
            double binom = 1.0;  // C(j, i)
            for (std::size_t i = 0; i <= j; ++i) {
                s.c[i] += c[j] * binom * std::pow(-d, static_cast<double>(j - i));
                binom = binom * static_cast<double>(j - i) / static_cast<double>(i + 1);
            }
        }
        return s;
    }
};

/// Exact solution of x' = a x(t) + b x(t - r) with history x == c on
/// [-r, 0]. On each delay interval x(t) = A_k(t) + B_k(t) e^{a t} with
/// polynomials A_k, B_k obtained by integrating the previous interval.
class LinearScalarMethodOfSteps {
public:
    LinearScalarMethodOfSteps(double a, double b, double r, double c) : a_(a), b_(b), r_(r) {
        A_.push_back(Poly{{c}});
        B_.push_back(Poly{{0.0}});
    }

    double operator()(double t) {
        if (t <= 0) return A_[0](t);
        const auto k = static_cast<std::size_t>(std::ceil(t / r_ - 1e-15));
        while (A_.size() <= k) extend();
        return A_[k](t) + B_[k](t) * std::exp(a_ * t);
    }

private:
    // interval k covers [(k-1) r, k r]; index 0 is the history
    void extend() {
        const std::size_t k = A_.size();
        const double t0 = static_cast<double>(k - 1) * r_;
        const Poly g = A_[k - 1].shifted(r_) * b_;                           // polynomial forcing
        const Poly e = B_[k - 1].shifted(r_) * (b_ * std::exp(-a_ * r_));  // forcing times e^{at}
        Poly A, B;
        if (a_ == 0.0) {
            A = g.antideriv() + e.antideriv();
            B = Poly{{0.0}};
        } else {
            // (D - a) A = g  =>  A = -(1/a) sum_j (D/a)^j g
            Poly term = g;
            A = Poly{{0.0}};
            double scale = -1.0 / a_;
            while (!term.zero() && !term.c.empty()) {
                A = A + term * scale;
                term = term.deriv();
                scale /= a_;
            }
            B = e.antideriv();
        }
        // continuity at t0
        const double left = value_on(k - 1, t0);
        const double right = A(t0) + (a_ == 0.0 ? 0.0 : B(t0) * std::exp(a_ * t0));
        if (a_ == 0.0)
            A = A + Poly{{left - right}};
        else
            B = B + Poly{{(left - right) * std::exp(-a_ * t0)}};
        A_.push_back(A);
        B_.push_back(B);
    }

    double value_on(std::size_t k, double t) const {
        return A_[k](t) + (a_ == 0.0 ? 0.0 : B_[k](t) * std::exp(a_ * t));
    }

    double a_, b_, r_;
    std::vector<Poly> A_, B_;
};

/// x' = x^2 from x(0) = c > 0: x(t) = 1 / (1/c - t), blowing up at 1/c.
inline double quadratic_blowup_time(double c) { return 1.0 / c; }

}  // namespace oracle
