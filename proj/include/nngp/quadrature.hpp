#pragma once

#include "nngp/kernels.hpp"
#include "nngp/types.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

namespace nngp {

struct QuadratureRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

namespace detail {

/// Golub-Welsch on a symmetric tridiagonal Jacobi matrix with zero diagonal.
inline QuadratureRule golub_welsch(int n, const std::function<double(int)>& offdiag, double mu0) {
    Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n, n);
    for (int k = 1; k < n; ++k) J(k, k - 1) = J(k - 1, k) = offdiag(k);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
    QuadratureRule rule;
    rule.nodes.resize(n);
    rule.weights.resize(n);
    for (int i = 0; i < n; ++i) {
        rule.nodes[i] = es.eigenvalues()[i];
        rule.weights[i] = mu0 * es.eigenvectors()(0, i) * es.eigenvectors()(0, i);
    }
    return rule;
}

}  // namespace detail

/// Nodes and weights for the integral of f(x) exp(-x^2) over the real line.
inline QuadratureRule gauss_hermite(int n) {
    if (n < 1) throw InputError("gauss_hermite: need at least one node");
    QuadratureRule rule = detail::golub_welsch(n, [](int k) { return std::sqrt(0.5 * k); }, std::sqrt(std::numbers::pi));
    // Newton polish with the orthonormal recurrence; weights from the derivative.
    for (int i = 0; i < n; ++i) {
        double z = rule.nodes[i];
        double pp = 0.0;
        for (int it = 0; it < 3; ++it) {
            double p1 = 1.0 / std::pow(std::numbers::pi, 0.25), p2 = 0.0;
            for (int j = 1; j <= n; ++j) {
                const double p3 = p2;
                p2 = p1;
                p1 = z * std::sqrt(2.0 / j) * p2 - std::sqrt((j - 1.0) / j) * p3;
            }
            pp = std::sqrt(2.0 * n) * p2;
            if (pp == 0.0) break;
            z -= p1 / pp;
        }
        if (std::isfinite(pp) && pp != 0.0) {
            rule.nodes[i] = z;
            rule.weights[i] = 2.0 / (pp * pp);
        }
    }
    return rule;
}

/// Nodes and weights on [-1, 1].
inline QuadratureRule gauss_legendre(int n) {
    if (n < 1) throw InputError("gauss_legendre: need at least one node");
    QuadratureRule rule =
        detail::golub_welsch(n, [](int k) { return k / std::sqrt(4.0 * k * k - 1.0); }, 2.0);
    for (int i = 0; i < n; ++i) {
        double z = rule.nodes[i];
        double dp = 1.0;
        for (int it = 0; it < 3; ++it) {
            double p1 = 1.0, p2 = 0.0;
            for (int j = 1; j <= n; ++j) {
                const double p3 = p2;
                p2 = p1;
                p1 = ((2.0 * j - 1.0) * z * p2 - (j - 1.0) * p3) / j;
            }
            dp = n * (z * p1 - p2) / (z * z - 1.0);
            z -= p1 / dp;
        }
        rule.nodes[i] = z;
        rule.weights[i] = 2.0 / ((1.0 - z * z) * dp * dp);
    }
    return rule;
}

/// How a Gaussian expectation is discretized along each axis.
///  Hermite: one Gauss-Hermite rule (exact for polynomials; slow for steep integrands such as
///           erf(c u)^2, and inaccurate across kinks, so kinked activations still use panels).
///  Panels:  the line truncated to [-12, 12], cut at -3, 0, 3 and at every kink, with a
///           Gauss-Legendre rule on each panel.
enum class NormalRule { Hermite, Panels };

/// Scalar nonlinearity with the points where it fails to be smooth.
struct Activation {
    std::string name;
    std::function<double(double)> fn;
    std::vector<double> kinks;
    NormalRule rule = NormalRule::Panels;  // discretization used unless the caller overrides it

    double operator()(double z) const { return fn(z); }
    bool smooth() const { return kinks.empty(); }

    static Activation relu() {
        return {"relu", [](double z) { return z > 0.0 ? z : 0.0; }, {0.0}};
    }
    static Activation erf() {
        return {"erf", [](double z) { return std::erf(z); }, {}};
    }
    static Activation identity() {
        return {"identity", [](double z) { return z; }, {}, NormalRule::Hermite};
    }
    /// Piecewise-linear interpolation of (xs, ys), extended linearly beyond the ends.
    static Activation table(std::vector<double> xs, std::vector<double> ys) {
        if (xs.size() < 2 || xs.size() != ys.size()) throw InputError("Activation::table: need >= 2 matching samples");
        if (!std::is_sorted(xs.begin(), xs.end())) throw InputError("Activation::table: abscissae must be sorted");
        auto kinks = std::vector<double>(xs.begin() + 1, xs.end() - 1);
        auto fn = [xs = std::move(xs), ys = std::move(ys)](double z) {
            auto it = std::upper_bound(xs.begin() + 1, xs.end() - 1, z);
            const auto i = static_cast<std::size_t>(it - xs.begin()) - 1;
            const double w = (z - xs[i]) / (xs[i + 1] - xs[i]);
            return ys[i] + w * (ys[i + 1] - ys[i]);
        };
        return {"table", std::move(fn), std::move(kinks)};
    }
};

namespace detail {

/// Standard-normal coordinates beyond this radius carry < 1e-32 of the mass.
inline constexpr double kNormalCutoff = 12.0;

/// Rules are reused across calls; computing one costs an eigen-decomposition.
inline const QuadratureRule& cached_rule(bool hermite, int n) {
    static std::mutex mutex;
    static std::map<std::pair<bool, int>, QuadratureRule> cache;
    std::lock_guard lock(mutex);
    auto it = cache.find({hermite, n});
    if (it == cache.end()) it = cache.emplace(std::pair{hermite, n}, hermite ? gauss_hermite(n) : gauss_legendre(n)).first;
    return it->second;
}

inline double normal_pdf(double u) { return std::exp(-0.5 * u * u) / std::sqrt(2.0 * std::numbers::pi); }

/// E[f(u)], u ~ N(0, 1). `breaks` are the points where f is not smooth.
template <class F>
double normal_expectation(const F& f, std::vector<double> breaks, const QuadratureRule& gh, const QuadratureRule& gl,
                          NormalRule rule = NormalRule::Panels) {
    if (breaks.empty() && rule == NormalRule::Hermite) {
        double sum = 0.0;
        for (std::size_t i = 0; i < gh.nodes.size(); ++i) sum += gh.weights[i] * f(std::numbers::sqrt2 * gh.nodes[i]);
        return sum / std::sqrt(std::numbers::pi);
    }
    std::vector<double> edges = {-kNormalCutoff, -3.0, 0.0, 3.0, kNormalCutoff};
    for (double b : breaks)
        if (b > -kNormalCutoff && b < kNormalCutoff) edges.push_back(b);
    std::sort(edges.begin(), edges.end());
    double sum = 0.0;
    for (std::size_t p = 0; p + 1 < edges.size(); ++p) {
        const double half = 0.5 * (edges[p + 1] - edges[p]);
        const double mid = 0.5 * (edges[p + 1] + edges[p]);
        if (half <= 0.0) continue;
        for (std::size_t i = 0; i < gl.nodes.size(); ++i) {
            const double u = mid + half * gl.nodes[i];
            sum += half * gl.weights[i] * f(u) * normal_pdf(u);
        }
    }
    return sum;
}

}  // namespace detail

/// Correlation magnitude above which the bivariate integral collapses to a univariate one.
inline constexpr double kDegenerateCorrelation = 1.0 - 1e-10;

/// sigma_w^2 E[phi(z) phi(z')] + sigma_b^2 with (z, z') ~ N(0, [[k_xx, k_xx'], [k_xx', k_x'x']]).
inline double numeric_step(double k_xx, double k_xpxp, double k_xxp, double weight_var, double bias_var,
                           const Activation& phi, int nodes = 64, std::optional<NormalRule> rule_override = {}) {
    const NormalRule rule = rule_override.value_or(phi.rule);
    if (nodes < 2) throw InputError("numeric_step: need at least 2 nodes");
    const double scale = std::max({std::abs(k_xx), std::abs(k_xpxp), 1e-300});
    if (k_xx < -1e-12 * scale || k_xpxp < -1e-12 * scale || k_xx * k_xpxp - k_xxp * k_xxp < -1e-10 * scale * scale)
        throw DomainError("numeric_step: covariance matrix is not positive semidefinite");
    k_xx = std::max(k_xx, 0.0);
    k_xpxp = std::max(k_xpxp, 0.0);

    const QuadratureRule& gh = detail::cached_rule(true, nodes);
    const QuadratureRule& gl = detail::cached_rule(false, nodes);
    auto kinks_for = [&](double coef, double shift) {
        std::vector<double> out;
        if (coef == 0.0) return out;
        for (double k : phi.kinks) out.push_back((k - shift) / coef);
        return out;
    };

    const double sx = std::sqrt(k_xx);
    const double sxp = std::sqrt(k_xpxp);
    const double rho = (sx > 0.0 && sxp > 0.0) ? k_xxp / (sx * sxp) : 0.0;

    double expectation;
    if (std::abs(rho) > kDegenerateCorrelation) {
        const double sgn = rho > 0.0 ? 1.0 : -1.0;
        auto f = [&](double u) { return phi(sx * u) * phi(sgn * sxp * u); };
        auto breaks = kinks_for(sx, 0.0);
        for (double b : kinks_for(sgn * sxp, 0.0)) breaks.push_back(b);
        expectation = detail::normal_expectation(f, breaks, gh, gl, rule);
    } else {
        // z = l11 u, z' = l21 u + l22 v
        const double l11 = sx;
        const double l21 = l11 > 0.0 ? k_xxp / l11 : 0.0;
        const double l22 = std::sqrt(std::max(k_xpxp - l21 * l21, 0.0));
        auto outer = [&](double u) {
            const double a = phi(l11 * u);
            if (a == 0.0) return 0.0;
            const double shift = l21 * u;
            auto inner = [&](double v) { return phi(shift + l22 * v); };
            return a * detail::normal_expectation(inner, kinks_for(l22, shift), gh, gl, rule);
        };
        expectation = detail::normal_expectation(outer, kinks_for(l11, 0.0), gh, gl, rule);
    }
    return weight_var * expectation + bias_var;
}

/// Depth-L NNGP kernel with every layer integrated numerically; depth 0 is the base kernel.
inline double numeric_nngp_kernel(const Point& x, const Point& xp, const HyperParams& hp, const Activation& phi,
                                  int depth, int nodes = 64, std::optional<NormalRule> rule = {}) {
    double k_xx = base_kernel(x, x, hp);
    double k_xpxp = base_kernel(xp, xp, hp);
    double k_xxp = base_kernel(x, xp, hp);
    if (hp.log_weight_var_layer.size() < depth || hp.log_bias_var_layer.size() < depth)
        throw InputError("numeric_nngp_kernel: not enough layer variances for the requested depth");
    for (int l = 0; l < depth; ++l) {
        const double w = std::exp(hp.log_weight_var_layer[l]);
        const double b = std::exp(hp.log_bias_var_layer[l]);
        const double nxx = numeric_step(k_xx, k_xx, k_xx, w, b, phi, nodes, rule);
        const double nxpxp = numeric_step(k_xpxp, k_xpxp, k_xpxp, w, b, phi, nodes, rule);
        k_xxp = numeric_step(k_xx, k_xpxp, k_xxp, w, b, phi, nodes, rule);
        k_xx = nxx;
        k_xpxp = nxpxp;
    }
    return k_xxp;
}

}  // namespace nngp
