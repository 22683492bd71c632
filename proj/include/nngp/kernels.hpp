#pragma once

#include "nngp/taylor.hpp"
#include "nngp/types.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <numbers>
#include <string>

namespace nngp {

using Point = Eigen::Ref<const Eigen::VectorXd>;

namespace detail {

/// Inverse-trig arguments may leave [-1, 1] by rounding; anything farther is a real domain error.
inline constexpr double kUnitTolerance = 1e-12;

inline void check_unit_range(double v, const char* where) {
    if (!(std::abs(v) <= 1.0 + kUnitTolerance)) throw DomainError(std::string(where) + ": argument outside [-1, 1]");
}

inline void check_dims(Eigen::Index a, Eigen::Index b, Eigen::Index d) {
    if (a != d || b != d) throw InputError("kernel: point dimension does not match input_dim");
}

}  // namespace detail

/// One layer of the ReLU recursion (arc-cosine kernel of degree one).
inline double relu_step(double k_xx, double k_xpxp, double k_xxp, double weight_var, double bias_var) {
    if (!(k_xx > 0.0) || !(k_xpxp > 0.0)) throw DomainError("relu_step: diagonal covariance must be positive");
    const double norm = std::sqrt(k_xx * k_xpxp);
    const double cos_angle = k_xxp / norm;
    detail::check_unit_range(cos_angle, "relu_step");
    const double angle = std::acos(clamp_unit(cos_angle));
    return weight_var / (2.0 * std::numbers::pi) * norm *
               (std::sin(angle) + (std::numbers::pi - angle) * std::cos(angle)) +
           bias_var;
}

/// One layer of the error-function recursion. `T` is double or a TaylorJet.
template <class T>
T erf_step(const T& k_xx, const T& k_xpxp, const T& k_xxp, double weight_var, double bias_var) {
    using std::asin;
    using std::pow;
    const T denom = (1.0 + 2.0 * k_xx) * (1.0 + 2.0 * k_xpxp);
    if (!(1.0 + 2.0 * value_of(k_xx) > 0.0) || !(1.0 + 2.0 * value_of(k_xpxp) > 0.0))
        throw DomainError("erf_step: 1 + 2k must be positive");
    const T arg = 2.0 * k_xxp * pow(denom, -0.5);
    detail::check_unit_range(value_of(arg), "erf_step");
    return (2.0 * weight_var / std::numbers::pi) * asin(clamp_unit(arg)) + bias_var;
}

/// erf_step with the two diagonal entries held in one-sided jets (s only, t only).
template <int Ds, int Dt>
TaylorJet<Ds, Dt> erf_step_split(const TaylorJet<Ds, 0>& k_xx, const TaylorJet<0, Dt>& k_xpxp,
                                 const TaylorJet<Ds, Dt>& k_xxp, double weight_var, double bias_var) {
    if (!(1.0 + 2.0 * k_xx.value() > 0.0) || !(1.0 + 2.0 * k_xpxp.value() > 0.0))
        throw DomainError("erf_step: 1 + 2k must be positive");
    const auto rx = pow(1.0 + 2.0 * k_xx, -0.5);
    const auto rxp = pow(1.0 + 2.0 * k_xpxp, -0.5);
    const TaylorJet<Ds, Dt> arg = 2.0 * k_xxp * (embed<Ds, Dt>(rx) * embed<Ds, Dt>(rxp));
    detail::check_unit_range(arg.value(), "erf_step");
    return (2.0 * weight_var / std::numbers::pi) * asin(clamp_unit(arg)) + bias_var;
}

/// A kernel with its hyperparameters exponentiated once. Cheap to copy.
class Kernel {
public:
    Kernel(KernelSpec spec, const HyperParams& hp) : spec_(spec) {
        spec_.validate();
        hp.check(spec_);
        if (spec_.family == KernelFamily::NNGP_Erf || spec_.family == KernelFamily::NNGP_ReLU ||
            spec_.family == KernelFamily::ArcSin) {
            input_weight_var_ = hp.log_weight_var_input.array().exp();
            input_bias_var_ = std::exp(hp.log_bias_var_input);
            layer_weight_var_ = hp.log_weight_var_layer.array().exp();
            layer_bias_var_ = hp.log_bias_var_layer.array().exp();
        } else {
            const Eigen::Index nl = hp.aux.size() - 1;
            inv_length_ = (-hp.aux.head(nl).array()).exp();
            if (nl == 1) inv_length_ = Eigen::VectorXd::Constant(spec_.input_dim, inv_length_[0]);
            signal_var_ = std::exp(hp.aux[nl]);
        }
    }

    const KernelSpec& spec() const { return spec_; }
    int input_dim() const { return spec_.input_dim; }

    const Eigen::VectorXd& input_weight_var() const { return input_weight_var_; }
    double input_bias_var() const { return input_bias_var_; }
    const Eigen::VectorXd& layer_weight_var() const { return layer_weight_var_; }
    const Eigen::VectorXd& layer_bias_var() const { return layer_bias_var_; }
    double signal_var() const { return signal_var_; }
    double length_scale(int a) const { return 1.0 / inv_length_[a]; }

    /// x^T Lambda x' + sigma^2_{b,0}.
    double base(const Point& x, const Point& xp) const {
        return (x.array() * xp.array() * input_weight_var_.array()).sum() + input_bias_var_;
    }

    double operator()(const Point& x, const Point& xp) const {
        detail::check_dims(x.size(), xp.size(), spec_.input_dim);
        switch (spec_.family) {
            case KernelFamily::NNGP_Erf:
            case KernelFamily::NNGP_ReLU:
            case KernelFamily::ArcSin: return recursion(base(x, x), base(xp, xp), base(x, xp));
            case KernelFamily::SE:
            case KernelFamily::Matern32:
            case KernelFamily::Matern52: return stationary(scaled_sq_dist(x, xp));
        }
        return 0.0;
    }

    /// Runs the layer recursion (or the single arcsine map) from a base triple.
    double recursion(double k_xx, double k_xpxp, double k_xxp) const {
        if (spec_.family == KernelFamily::ArcSin) return erf_step(k_xx, k_xpxp, k_xxp, 1.0, 0.0);
        for (int l = 0; l < spec_.depth; ++l) {
            const double w = layer_weight_var_[l];
            const double b = layer_bias_var_[l];
            double next_xx, next_xpxp, next_xxp;
            if (spec_.family == KernelFamily::NNGP_ReLU) {
                next_xx = 0.5 * w * k_xx + b;
                next_xpxp = 0.5 * w * k_xpxp + b;
                next_xxp = relu_step(k_xx, k_xpxp, k_xxp, w, b);
            } else {
                next_xx = erf_step(k_xx, k_xx, k_xx, w, b);
                next_xpxp = erf_step(k_xpxp, k_xpxp, k_xpxp, w, b);
                next_xxp = erf_step(k_xx, k_xpxp, k_xxp, w, b);
            }
            k_xx = next_xx;
            k_xpxp = next_xpxp;
            k_xxp = next_xxp;
        }
        return k_xxp;
    }

    /// Column i holds k^l(x_i, x_i) for l = 0..L (arcsine: l = 0 only).
    Eigen::MatrixXd diagonal_chain(const Eigen::MatrixXd& X) const {
        const int levels = spec_.family == KernelFamily::ArcSin ? 1 : spec_.depth + 1;
        Eigen::MatrixXd C(levels, X.rows());
        C.row(0) = ((X.array().square().rowwise() * input_weight_var_.transpose().array()).rowwise().sum() +
                    input_bias_var_)
                       .transpose();
        for (int l = 1; l < levels; ++l)
            for (Eigen::Index i = 0; i < X.rows(); ++i) {
                const double k = C(l - 1, i);
                const double w = layer_weight_var_[l - 1], b = layer_bias_var_[l - 1];
                C(l, i) = spec_.family == KernelFamily::NNGP_ReLU ? 0.5 * w * k + b : erf_step(k, k, k, w, b);
            }
        return C;
    }

    /// Entry (i, j) = k(XA_i, XB_j). With `symmetric` (XA == XB) only one triangle is evaluated.
    Eigen::MatrixXd gram(const Eigen::MatrixXd& XA, const Eigen::MatrixXd& XB, bool symmetric = false) const {
        if (XA.cols() != spec_.input_dim || XB.cols() != spec_.input_dim)
            throw InputError("gram: point dimension does not match input_dim");
        const Eigen::Index na = XA.rows(), nb = XB.rows();
        Eigen::MatrixXd K(na, nb);
        if (is_stationary(spec_.family)) {
            const Eigen::MatrixXd A = XA * inv_length_.asDiagonal(), B = XB * inv_length_.asDiagonal();
            for (Eigen::Index j = 0; j < nb; ++j)
                for (Eigen::Index i = 0; i < (symmetric ? j + 1 : na); ++i) {
                    const double v = stationary((A.row(i) - B.row(j)).squaredNorm());
                    K(i, j) = v;
                    if (symmetric) K(j, i) = v;
                }
            return K;
        }
        const Eigen::MatrixXd base = ((XA * input_weight_var_.asDiagonal()) * XB.transpose()).array() + input_bias_var_;
        const Eigen::MatrixXd ca = diagonal_chain(XA);
        const Eigen::MatrixXd cb = symmetric ? ca : diagonal_chain(XB);
        for (Eigen::Index j = 0; j < nb; ++j)
            for (Eigen::Index i = 0; i < (symmetric ? j + 1 : na); ++i) {
                double k = base(i, j);
                if (spec_.family == KernelFamily::ArcSin) {
                    k = erf_step(ca(0, i), cb(0, j), k, 1.0, 0.0);
                } else {
                    for (int l = 0; l < spec_.depth; ++l) {
                        const double w = layer_weight_var_[l], b = layer_bias_var_[l];
                        k = spec_.family == KernelFamily::NNGP_ReLU ? relu_step(ca(l, i), cb(l, j), k, w, b)
                                                                    : erf_step(ca(l, i), cb(l, j), k, w, b);
                    }
                }
                K(i, j) = k;
                if (symmetric) K(j, i) = k;
            }
        return K;
    }

    /// Mixed partials d^i/dx_a^i d^j/dx'_b^j k(x, x') for i <= Ds, j <= Dt as a TaylorJet.
    /// `a` is ignored when Ds == 0 and `b` when Dt == 0.
    template <int Ds, int Dt>
    TaylorJet<Ds, Dt> pair_jet(const Point& x, const Point& xp, int a, int b) const {
        using Jet = TaylorJet<Ds, Dt>;
        detail::check_dims(x.size(), xp.size(), spec_.input_dim);
        if constexpr (Ds + Dt == 0) {
            return Jet((*this)(x, xp));
        } else {
            if ((Ds > 0 && (a < 0 || a >= spec_.input_dim)) || (Dt > 0 && (b < 0 || b >= spec_.input_dim)))
                throw InputError("pair_jet: coordinate index out of range");
            switch (spec_.family) {
                case KernelFamily::NNGP_Erf:
                case KernelFamily::ArcSin: {
                    // k(x, x) depends on s only and k(x', x') on t only, so they run in one-sided jets
                    TaylorJet<Ds, 0> k_xx(base(x, x));
                    TaylorJet<0, Dt> k_xpxp(base(xp, xp));
                    Jet k_xxp(base(x, xp));
                    if constexpr (Ds > 0) {
                        k_xx(1, 0) = 2.0 * input_weight_var_[a] * x[a];
                        if constexpr (Ds >= 2) k_xx(2, 0) = input_weight_var_[a];
                        k_xxp(1, 0) = input_weight_var_[a] * xp[a];
                    }
                    if constexpr (Dt > 0) {
                        k_xpxp(0, 1) = 2.0 * input_weight_var_[b] * xp[b];
                        if constexpr (Dt >= 2) k_xpxp(0, 2) = input_weight_var_[b];
                        k_xxp(0, 1) = input_weight_var_[b] * x[b];
                    }
                    if constexpr (Ds > 0 && Dt > 0) {
                        if (a == b) k_xxp(1, 1) = input_weight_var_[a];
                    }
                    if (spec_.family == KernelFamily::ArcSin) return erf_step_split(k_xx, k_xpxp, k_xxp, 1.0, 0.0);
                    for (int l = 0; l < spec_.depth; ++l) {
                        const double w = layer_weight_var_[l];
                        const double bv = layer_bias_var_[l];
                        Jet next_xxp = erf_step_split(k_xx, k_xpxp, k_xxp, w, bv);
                        if (l + 1 < spec_.depth) {
                            k_xx = erf_step(k_xx, k_xx, k_xx, w, bv);
                            k_xpxp = erf_step(k_xpxp, k_xpxp, k_xpxp, w, bv);
                        }
                        k_xxp = next_xxp;
                    }
                    return k_xxp;
                }
                case KernelFamily::SE: {
                    Jet q(0.0);
                    for (int c = 0; c < spec_.input_dim; ++c) {
                        Jet r(x[c] - xp[c]);
                        if constexpr (Ds > 0) {
                            if (c == a) r(1, 0) = 1.0;
                        }
                        if constexpr (Dt > 0) {
                            if (c == b) r(0, 1) = -1.0;
                        }
                        r *= inv_length_[c];
                        q += r * r;
                    }
                    return signal_var_ * exp(-0.5 * q);
                }
                default:
                    throw ConfigError("kernel derivatives are not available for " + spec_.name() +
                                      " (only nngp-erf, arcsin and se support differential operators)");
            }
        }
    }

private:
    double stationary(double r2) const {
        switch (spec_.family) {
            case KernelFamily::SE: return signal_var_ * std::exp(-0.5 * r2);
            case KernelFamily::Matern32: {
                const double r = std::sqrt(3.0 * r2);
                return signal_var_ * (1.0 + r) * std::exp(-r);
            }
            default: {
                const double r = std::sqrt(5.0 * r2);
                return signal_var_ * (1.0 + r + 5.0 * r2 / 3.0) * std::exp(-r);
            }
        }
    }

    double scaled_sq_dist(const Point& x, const Point& xp) const {
        return ((x - xp).array() * inv_length_.array()).square().sum();
    }

    KernelSpec spec_;
    Eigen::VectorXd input_weight_var_;
    double input_bias_var_ = 0.0;
    Eigen::VectorXd layer_weight_var_;
    Eigen::VectorXd layer_bias_var_;
    Eigen::VectorXd inv_length_;
    double signal_var_ = 1.0;
};

/// k^0(x, x') = sum_j sigma^2_{w,0,j} x_j x'_j + sigma^2_{b,0}.
inline double base_kernel(const Point& x, const Point& xp, const HyperParams& hp) {
    const auto d = hp.log_weight_var_input.size();
    detail::check_dims(x.size(), xp.size(), d);
    return (x.array() * xp.array() * hp.log_weight_var_input.array().exp()).sum() + std::exp(hp.log_bias_var_input);
}

inline double nngp_kernel(const Point& x, const Point& xp, const KernelSpec& spec, const HyperParams& hp) {
    if (!is_nngp(spec.family)) throw ConfigError("nngp_kernel: family must be nngp-erf or nngp-relu");
    return Kernel(spec, hp)(x, xp);
}

/// Single-hidden-layer error-function kernel, (2/pi) asin(2k0 / sqrt((1+2k0(x,x))(1+2k0(x',x')))).
inline double arcsin_kernel(const Point& x, const Point& xp, const HyperParams& hp) {
    return Kernel(KernelSpec::arcsin(static_cast<int>(x.size())), hp)(x, xp);
}

inline double se_kernel(const Point& x, const Point& xp, const HyperParams& hp) {
    const bool ard = hp.aux.size() > 2;
    return Kernel(KernelSpec::se(static_cast<int>(x.size()), ard), hp)(x, xp);
}

inline double matern52_kernel(const Point& x, const Point& xp, const HyperParams& hp) {
    const bool ard = hp.aux.size() > 2;
    return Kernel(KernelSpec::matern52(static_cast<int>(x.size()), ard), hp)(x, xp);
}

/// Entry (i, j) = k(X_i, X'_j); rows of X and X' are points.
inline Eigen::MatrixXd gram_matrix(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Xp, const Kernel& kernel) {
    return kernel.gram(X, Xp);
}

/// Symmetric Gram matrix of one point set; only the upper triangle is evaluated.
inline Eigen::MatrixXd gram_matrix(const Eigen::MatrixXd& X, const Kernel& kernel) { return kernel.gram(X, X, true); }

inline Eigen::MatrixXd gram_matrix(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Xp, const KernelSpec& spec,
                                   const HyperParams& hp) {
    return gram_matrix(X, Xp, Kernel(spec, hp));
}

}  // namespace nngp
