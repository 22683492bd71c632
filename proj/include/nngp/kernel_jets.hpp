#pragma once

#include "nngp/kernels.hpp"
#include "nngp/taylor.hpp"
#include "nngp/types.hpp"

#include <array>
#include <vector>

namespace nngp {

using Derivs3x3 = std::array<std::array<double, 3>, 3>;

/// Kernel value and mixed partials up to second order per argument.
///
/// pair(a, b)[i][j] = d^i/dx_a^i d^j/dx'_b^j k(x, x');  diag_x(a)[i] = d^i/dx_a^i k(x, x),
/// diag_xp(b)[j] = d^j/dx'_b^j k(x', x'). Only same-coordinate second derivatives are kept:
/// every operator used here is a sum of per-coordinate terms, so d^2/dx_a dx_c (a != c) is never needed.
struct KernelJet {
    int dim = 0;
    std::vector<Derivs3x3> pairs;             // dim * dim, row-major in (a, b)
    std::vector<std::array<double, 3>> dxx;   // dim
    std::vector<std::array<double, 3>> dxpxp; // dim

    explicit KernelJet(int d = 0) : dim(d), pairs(d * d, Derivs3x3{}), dxx(d), dxpxp(d) {}

    Derivs3x3& pair(int a, int b) { return pairs[a * dim + b]; }
    const Derivs3x3& pair(int a, int b) const { return pairs[a * dim + b]; }
    double value() const { return pairs.front()[0][0]; }

    /// The jet of k(x', x) from the jet of k(x, x').
    KernelJet swapped() const {
        KernelJet r(dim);
        for (int a = 0; a < dim; ++a)
            for (int b = 0; b < dim; ++b)
                for (int i = 0; i < 3; ++i)
                    for (int j = 0; j < 3; ++j) r.pair(b, a)[j][i] = pair(a, b)[i][j];
        r.dxx = dxpxp;
        r.dxpxp = dxx;
        return r;
    }
};

/// Jet of the bilinear base kernel k^0; it is linear in each argument, so most entries vanish.
inline KernelJet jet_base(const Point& x, const Point& xp, const HyperParams& hp) {
    const int d = static_cast<int>(hp.log_weight_var_input.size());
    detail::check_dims(x.size(), xp.size(), d);
    const Eigen::VectorXd lambda = hp.log_weight_var_input.array().exp();
    const double k0 = base_kernel(x, xp, hp);
    const double kxx = base_kernel(x, x, hp);
    const double kxpxp = base_kernel(xp, xp, hp);
    KernelJet jet(d);
    for (int a = 0; a < d; ++a) {
        jet.dxx[a] = {kxx, 2.0 * lambda[a] * x[a], 2.0 * lambda[a]};
        jet.dxpxp[a] = {kxpxp, 2.0 * lambda[a] * xp[a], 2.0 * lambda[a]};
        for (int b = 0; b < d; ++b) {
            auto& D = jet.pair(a, b);
            D[0][0] = k0;
            D[1][0] = lambda[a] * xp[a];
            D[0][1] = lambda[b] * x[b];
            D[1][1] = a == b ? lambda[a] : 0.0;
        }
    }
    return jet;
}

/// Pushes a jet of k^{l-1} through one error-function layer to obtain the jet of k^l.
///
/// Each (a, b) slot is the trivariate composition F(k(x,x), k(x',x'), k(x,x')) evaluated in the
/// truncated algebra R[s,t]/(s^3,t^3), which realises the chain rule up to the (2,2) order pair.
/// The diagonal slots go through the univariate map c -> F(c, c, c).
inline KernelJet jet_step(const KernelJet& prev, double weight_var, double bias_var) {
    using Jet = TaylorJet<2, 2>;
    using Diag = TaylorJet<2, 0>;
    const int d = prev.dim;
    KernelJet next(d);
    std::vector<Jet> kxx(d), kxpxp(d);
    for (int a = 0; a < d; ++a) {
        Diag g;
        for (int i = 0; i < 3; ++i) g(i, 0) = prev.dxx[a][i] / (i == 2 ? 2.0 : 1.0);
        const Diag gn = erf_step(g, g, g, weight_var, bias_var);
        Diag h;
        for (int i = 0; i < 3; ++i) h(i, 0) = prev.dxpxp[a][i] / (i == 2 ? 2.0 : 1.0);
        const Diag hn = erf_step(h, h, h, weight_var, bias_var);
        for (int i = 0; i < 3; ++i) {
            next.dxx[a][i] = gn.derivative(i, 0);
            next.dxpxp[a][i] = hn.derivative(i, 0);
            kxx[a](i, 0) = g(i, 0);
            kxpxp[a](0, i) = h(i, 0);
        }
    }
    for (int a = 0; a < d; ++a)
        for (int b = 0; b < d; ++b) {
            const Jet c = Jet::from_derivatives(prev.pair(a, b));
            const Jet r = erf_step(kxx[a], kxpxp[b], c, weight_var, bias_var);
            auto& D = next.pair(a, b);
            for (int i = 0; i < 3; ++i)
                for (int j = 0; j < 3; ++j) D[i][j] = r.derivative(i, j);
        }
    return next;
}

/// Full jet of the depth-L error-function NNGP kernel.
inline KernelJet nngp_jet(const Point& x, const Point& xp, const KernelSpec& spec, const HyperParams& hp) {
    if (spec.family == KernelFamily::NNGP_ReLU)
        throw ConfigError("ReLU kernel derivatives are singular at x = x'; use nngp-erf for differential operators");
    if (spec.family != KernelFamily::NNGP_Erf) throw ConfigError("nngp_jet: family must be nngp-erf");
    hp.check(spec);
    KernelJet jet = jet_base(x, xp, hp);
    for (int l = 0; l < spec.depth; ++l)
        jet = jet_step(jet, std::exp(hp.log_weight_var_layer[l]), std::exp(hp.log_bias_var_layer[l]));
    return jet;
}

/// c0 Id + sum_a (c1_a d/dx_a + c2_a d^2/dx_a^2).
struct LinearOp {
    double identity = 1.0;
    std::vector<std::array<double, 2>> terms;  // terms[a] = {c1_a, c2_a}; empty means pure identity

    static LinearOp id() { return {}; }

    static LinearOp negative_laplacian(int dim) {
        LinearOp op;
        op.identity = 0.0;
        op.terms.assign(dim, {0.0, -1.0});
        return op;
    }

    /// coefficient of d/dx_a (i = 1) or d^2/dx_a^2 (i = 2)
    double coef(int a, int i) const { return a < static_cast<int>(terms.size()) ? terms[a][i - 1] : 0.0; }

    bool acts_on(int a) const { return coef(a, 1) != 0.0 || coef(a, 2) != 0.0; }

    bool has_derivatives() const {
        for (int a = 0; a < static_cast<int>(terms.size()); ++a)
            if (acts_on(a)) return true;
        return false;
    }

    void check(int dim) const {
        for (int a = dim; a < static_cast<int>(terms.size()); ++a)
            if (acts_on(a)) throw InputError("LinearOp: term references coordinate >= input_dim");
    }
};

/// op_left applied in x and op_right applied in x' to the kernel described by `jet`.
inline double apply_operator_pair(const KernelJet& jet, const LinearOp& left, const LinearOp& right) {
    left.check(jet.dim);
    right.check(jet.dim);
    double total = left.identity * right.identity * jet.value();
    for (int a = 0; a < jet.dim; ++a)
        for (int i = 1; i <= 2; ++i) {
            total += left.coef(a, i) * right.identity * jet.pair(a, 0)[i][0];
            total += left.identity * right.coef(a, i) * jet.pair(0, a)[0][i];
        }
    for (int a = 0; a < jet.dim; ++a)
        for (int b = 0; b < jet.dim; ++b)
            for (int i = 1; i <= 2; ++i)
                for (int j = 1; j <= 2; ++j) total += left.coef(a, i) * right.coef(b, j) * jet.pair(a, b)[i][j];
    return total;
}

/// Same contraction evaluated straight from the kernel, computing only the jets the operators touch.
inline double apply_operator_pair(const Kernel& kernel, const LinearOp& left, const Point& x, const LinearOp& right,
                                  const Point& xp) {
    const int d = kernel.input_dim();
    const bool dl = left.has_derivatives();
    const bool dr = right.has_derivatives();
    if (!dl && !dr) return left.identity * right.identity * kernel(x, xp);
    if (!dl) {
        double total = 0.0;
        bool first = true;
        for (int b = 0; b < d; ++b) {
            if (!right.acts_on(b)) continue;
            const auto J = kernel.pair_jet<0, 2>(x, xp, -1, b);
            if (first) total += right.identity * J.value();
            first = false;
            total += right.coef(b, 1) * J.derivative(0, 1) + right.coef(b, 2) * J.derivative(0, 2);
        }
        return left.identity * total;
    }
    if (!dr) {
        double total = 0.0;
        bool first = true;
        for (int a = 0; a < d; ++a) {
            if (!left.acts_on(a)) continue;
            const auto J = kernel.pair_jet<2, 0>(x, xp, a, -1);
            if (first) total += left.identity * J.value();
            first = false;
            total += left.coef(a, 1) * J.derivative(1, 0) + left.coef(a, 2) * J.derivative(2, 0);
        }
        return right.identity * total;
    }
    double total = 0.0;
    int first_a = -1, first_b = -1;
    for (int a = 0; a < d; ++a)
        if (left.acts_on(a)) {
            first_a = a;
            break;
        }
    for (int b = 0; b < d; ++b)
        if (right.acts_on(b)) {
            first_b = b;
            break;
        }
    for (int a = 0; a < d; ++a) {
        if (!left.acts_on(a)) continue;
        for (int b = 0; b < d; ++b) {
            if (!right.acts_on(b)) continue;
            const auto J = kernel.pair_jet<2, 2>(x, xp, a, b);
            if (a == first_a && b == first_b) total += left.identity * right.identity * J.value();
            if (b == first_b)
                for (int i = 1; i <= 2; ++i) total += left.coef(a, i) * right.identity * J.derivative(i, 0);
            if (a == first_a)
                for (int j = 1; j <= 2; ++j) total += left.identity * right.coef(b, j) * J.derivative(0, j);
            for (int i = 1; i <= 2; ++i)
                for (int j = 1; j <= 2; ++j) total += left.coef(a, i) * right.coef(b, j) * J.derivative(i, j);
        }
    }
    return total;
}

}  // namespace nngp
