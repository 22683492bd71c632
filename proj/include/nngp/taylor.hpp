#pragma once

#include <algorithm>
#include <array>
#include <cmath>

namespace nngp {

/// Truncated bivariate Taylor polynomial in two infinitesimals s and t,
///
///     p(s, t) = sum_{i <= Ds, j <= Dt} c(i, j) s^i t^j,
///
/// with arithmetic in R[s, t] / (s^{Ds+1}, t^{Dt+1}). Lifting x_a -> x_a + s and
/// x'_b -> x'_b + t and evaluating a kernel in this algebra yields every mixed
/// partial d^i/dx_a^i d^j/dx'_b^j k(x, x') for i <= Ds, j <= Dt in one pass.
template <int Ds, int Dt>
class TaylorJet {
public:
    static constexpr int kRows = Ds + 1;
    static constexpr int kCols = Dt + 1;
    /// Highest total degree; any product of more nilpotents than this vanishes.
    static constexpr int kOrder = Ds + Dt;

    constexpr TaylorJet() = default;
    constexpr TaylorJet(double v) { c_[0] = v; }  // NOLINT: implicit scalar promotion

    constexpr double& operator()(int i, int j) { return c_[i * kCols + j]; }
    constexpr double operator()(int i, int j) const { return c_[i * kCols + j]; }

    constexpr double value() const { return c_[0]; }
    constexpr void set_value(double v) { c_[0] = v; }

    /// d^{i+j} / ds^i dt^j at s = t = 0.
    constexpr double derivative(int i, int j) const { return (*this)(i, j) * factorial(i) * factorial(j); }

    static constexpr TaylorJet from_derivatives(const std::array<std::array<double, 3>, 3>& d) {
        TaylorJet r;
        for (int i = 0; i < kRows; ++i)
            for (int j = 0; j < kCols; ++j) r(i, j) = d[i][j] / (factorial(i) * factorial(j));
        return r;
    }

    TaylorJet& operator+=(const TaylorJet& o) {
        for (int k = 0; k < kRows * kCols; ++k) c_[k] += o.c_[k];
        return *this;
    }
    TaylorJet& operator-=(const TaylorJet& o) {
        for (int k = 0; k < kRows * kCols; ++k) c_[k] -= o.c_[k];
        return *this;
    }
    TaylorJet& operator*=(double a) {
        for (auto& v : c_) v *= a;
        return *this;
    }
    TaylorJet& operator+=(double a) {
        c_[0] += a;
        return *this;
    }

    friend TaylorJet operator+(TaylorJet a, const TaylorJet& b) { return a += b; }
    friend TaylorJet operator-(TaylorJet a, const TaylorJet& b) { return a -= b; }
    friend TaylorJet operator+(TaylorJet a, double b) { return a += b; }
    friend TaylorJet operator+(double b, TaylorJet a) { return a += b; }
    friend TaylorJet operator-(TaylorJet a, double b) { return a += -b; }
    friend TaylorJet operator-(double b, const TaylorJet& a) { return -a + b; }
    friend TaylorJet operator*(TaylorJet a, double b) { return a *= b; }
    friend TaylorJet operator*(double b, TaylorJet a) { return a *= b; }
    friend TaylorJet operator-(TaylorJet a) { return a *= -1.0; }

    friend TaylorJet operator*(const TaylorJet& a, const TaylorJet& b) {
        TaylorJet r;
        for (int i1 = 0; i1 < kRows; ++i1)
            for (int j1 = 0; j1 < kCols; ++j1) {
                const double av = a(i1, j1);
                if (av == 0.0) continue;
                for (int i2 = 0; i1 + i2 < kRows; ++i2)
                    for (int j2 = 0; j1 + j2 < kCols; ++j2) r(i1 + i2, j1 + j2) += av * b(i2, j2);
            }
        return r;
    }

    friend TaylorJet operator/(const TaylorJet& a, const TaylorJet& b) { return a * pow(b, -1.0); }

    /// f(u) given f and its derivatives at u.value(): sum_k f^(k)(u0)/k! (u - u0)^k.
    friend TaylorJet compose(const TaylorJet& u, const std::array<double, kOrder + 1>& derivs) {
        TaylorJet n = u;
        n.c_[0] = 0.0;
        TaylorJet r(derivs[kOrder] / factorial(kOrder));
        for (int k = kOrder - 1; k >= 0; --k) {
            r = r * n;
            r.c_[0] += derivs[k] / factorial(k);
        }
        return r;
    }

    friend TaylorJet pow(const TaylorJet& u, double p) {
        std::array<double, kOrder + 1> d{};
        const double u0 = u.value();
        const double inv = 1.0 / u0;
        double term = std::pow(u0, p);
        for (int k = 0; k <= kOrder; ++k) {
            d[k] = term;
            term *= (p - k) * inv;
        }
        return compose(u, d);
    }

    friend TaylorJet sqrt(const TaylorJet& u) { return pow(u, 0.5); }

    friend TaylorJet exp(const TaylorJet& u) {
        std::array<double, kOrder + 1> d{};
        d.fill(std::exp(u.value()));
        return compose(u, d);
    }

    friend TaylorJet asin(const TaylorJet& u) {
        static_assert(kOrder <= 4, "asin jets are coded up to fourth order");
        const double x = u.value();
        const double q = 1.0 - x * x;
        const double r = 1.0 / std::sqrt(q);
        std::array<double, kOrder + 1> d{};
        const std::array<double, 5> all = {
            std::asin(x),
            r,
            x * r * r * r,
            (1.0 + 2.0 * x * x) * r * r * r * r * r,
            (9.0 * x + 6.0 * x * x * x) * r * r * r * r * r * r * r,
        };
        for (int k = 0; k <= kOrder; ++k) d[k] = all[k];
        return compose(u, d);
    }

private:
    static constexpr double factorial(int k) {
        double f = 1.0;
        for (int i = 2; i <= k; ++i) f *= i;
        return f;
    }

    std::array<double, kRows * kCols> c_{};
};

/// A jet in s alone (Dt = 0) or t alone (Ds = 0) lifted into the bivariate algebra.
template <int Ds, int Dt, int Es, int Et>
TaylorJet<Ds, Dt> embed(const TaylorJet<Es, Et>& u) {
    static_assert(Es <= Ds && Et <= Dt, "embed: target algebra must be at least as large");
    TaylorJet<Ds, Dt> r;
    for (int i = 0; i <= Es; ++i)
        for (int j = 0; j <= Et; ++j) r(i, j) = u(i, j);
    return r;
}

/// Scalar value of a double or a jet.
inline double value_of(double v) { return v; }
template <int Ds, int Dt>
double value_of(const TaylorJet<Ds, Dt>& v) {
    return v.value();
}

/// Clamps the constant term into [-1, 1]; derivative terms are left as they are.
inline double clamp_unit(double v) { return std::clamp(v, -1.0, 1.0); }
template <int Ds, int Dt>
TaylorJet<Ds, Dt> clamp_unit(TaylorJet<Ds, Dt> v) {
    v.set_value(std::clamp(v.value(), -1.0, 1.0));
    return v;
}

}  // namespace nngp
