#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <string_view>

namespace nngp {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed arguments: dimension mismatches, out-of-range counts.
class InputError : public Error {
public:
    using Error::Error;
};

/// A formula was evaluated outside its mathematical domain.
class DomainError : public Error {
public:
    using Error::Error;
};

/// Linear algebra failed (e.g. Cholesky after maximal jitter).
class NumericalError : public Error {
public:
    using Error::Error;
};

class TrainingError : public Error {
public:
    using Error::Error;
};

/// Invalid combination of settings (unknown key, unsupported kernel for an operator, ...).
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Smallest observation-noise variance ever handed to the covariance.
inline constexpr double kNoiseFloor = 1e-12;

enum class KernelFamily { SE, Matern32, Matern52, ArcSin, NNGP_Erf, NNGP_ReLU };

inline std::string to_string(KernelFamily f) {
    switch (f) {
        case KernelFamily::SE: return "se";
        case KernelFamily::Matern32: return "matern32";
        case KernelFamily::Matern52: return "matern52";
        case KernelFamily::ArcSin: return "arcsin";
        case KernelFamily::NNGP_Erf: return "nngp-erf";
        case KernelFamily::NNGP_ReLU: return "nngp-relu";
    }
    return "?";
}

inline KernelFamily parse_family(std::string_view name) {
    if (name == "se") return KernelFamily::SE;
    if (name == "matern32") return KernelFamily::Matern32;
    if (name == "matern52" || name == "matern") return KernelFamily::Matern52;
    if (name == "arcsin") return KernelFamily::ArcSin;
    if (name == "nngp-erf" || name == "erf") return KernelFamily::NNGP_Erf;
    if (name == "nngp-relu" || name == "relu") return KernelFamily::NNGP_ReLU;
    throw ConfigError("unknown kernel family '" + std::string(name) + "'");
}

inline bool is_nngp(KernelFamily f) { return f == KernelFamily::NNGP_Erf || f == KernelFamily::NNGP_ReLU; }
inline bool is_stationary(KernelFamily f) {
    return f == KernelFamily::SE || f == KernelFamily::Matern32 || f == KernelFamily::Matern52;
}

/// Covariance family plus its fixed structure.
struct KernelSpec {
    KernelFamily family = KernelFamily::NNGP_Erf;
    int depth = 0;      // hidden layers L, NNGP families only
    int input_dim = 1;  // d_in
    bool ard = false;   // per-dimension length-scales for SE/Matern

    static KernelSpec nngp_erf(int input_dim, int depth) { return {KernelFamily::NNGP_Erf, depth, input_dim, false}; }
    static KernelSpec nngp_relu(int input_dim, int depth) { return {KernelFamily::NNGP_ReLU, depth, input_dim, false}; }
    static KernelSpec arcsin(int input_dim) { return {KernelFamily::ArcSin, 0, input_dim, false}; }
    static KernelSpec se(int input_dim, bool ard = false) { return {KernelFamily::SE, 0, input_dim, ard}; }
    static KernelSpec matern52(int input_dim, bool ard = false) { return {KernelFamily::Matern52, 0, input_dim, ard}; }

    void validate() const {
        if (input_dim < 1) throw InputError("KernelSpec: input_dim must be >= 1");
        if (is_nngp(family) && depth < 1) throw InputError("KernelSpec: NNGP depth must be >= 1");
        if (!is_nngp(family) && depth != 0) throw InputError("KernelSpec: depth is only meaningful for NNGP families");
    }

    /// Number of covariance hyperparameters (noise variances excluded).
    int kernel_param_count() const {
        switch (family) {
            case KernelFamily::NNGP_Erf:
            case KernelFamily::NNGP_ReLU: return input_dim + 1 + 2 * depth;
            case KernelFamily::ArcSin: return input_dim + 1;
            default: return (ard ? input_dim : 1) + 1;
        }
    }

    std::string name() const {
        auto n = to_string(family);
        if (is_nngp(family)) n += "-L" + std::to_string(depth);
        if (ard && is_stationary(family)) n += "-ard";
        return n;
    }
};

/// Log-space hyperparameters of a kernel together with the observation-noise variances.
///
/// The flat layout used by the optimizer is
///   NNGP:    [w0_1..w0_d, b0, w_1..w_L, b_1..b_L, noise...]
///   ArcSin:  [w0_1..w0_d, b0, noise...]
///   SE/Mat.: [log ell (1 or d), log s^2, noise...]
struct HyperParams {
    Eigen::VectorXd log_weight_var_input;
    double log_bias_var_input = 0.0;
    Eigen::VectorXd log_weight_var_layer;
    Eigen::VectorXd log_bias_var_layer;
    Eigen::VectorXd log_noise_vars;
    Eigen::VectorXd aux;

    static HyperParams zeros(const KernelSpec& spec, int n_noise) {
        return from_vector(spec, n_noise, Eigen::VectorXd::Zero(spec.kernel_param_count() + n_noise));
    }

    /// Natural-scale constructor for NNGP/arcsine kernels with uniform variances.
    static HyperParams uniform(const KernelSpec& spec, double weight_var, double bias_var,
                               Eigen::VectorXd noise_vars = {}) {
        HyperParams hp;
        hp.log_weight_var_input = Eigen::VectorXd::Constant(spec.input_dim, std::log(weight_var));
        hp.log_bias_var_input = std::log(bias_var);
        hp.log_weight_var_layer = Eigen::VectorXd::Constant(spec.depth, std::log(weight_var));
        hp.log_bias_var_layer = Eigen::VectorXd::Constant(spec.depth, std::log(bias_var));
        hp.log_noise_vars = noise_vars.array().log().matrix();
        return hp;
    }

    static HyperParams stationary(const KernelSpec& spec, double length_scale, double signal_var,
                                  Eigen::VectorXd noise_vars = {}) {
        HyperParams hp;
        hp.aux = Eigen::VectorXd::Constant((spec.ard ? spec.input_dim : 1) + 1, std::log(length_scale));
        hp.aux[hp.aux.size() - 1] = std::log(signal_var);
        hp.log_noise_vars = noise_vars.array().log().matrix();
        return hp;
    }

    static HyperParams from_vector(const KernelSpec& spec, int n_noise, const Eigen::VectorXd& v) {
        const int nk = spec.kernel_param_count();
        if (v.size() != nk + n_noise) throw InputError("HyperParams: flat vector has wrong length");
        HyperParams hp;
        if (is_nngp(spec.family) || spec.family == KernelFamily::ArcSin) {
            const int d = spec.input_dim;
            hp.log_weight_var_input = v.head(d);
            hp.log_bias_var_input = v[d];
            hp.log_weight_var_layer = v.segment(d + 1, spec.depth);
            hp.log_bias_var_layer = v.segment(d + 1 + spec.depth, spec.depth);
        } else {
            hp.aux = v.head(nk);
        }
        hp.log_noise_vars = v.tail(n_noise);
        return hp;
    }

    Eigen::VectorXd to_vector() const {
        Eigen::VectorXd v(size());
        Eigen::Index k = 0;
        auto put = [&](const Eigen::VectorXd& s) {
            v.segment(k, s.size()) = s;
            k += s.size();
        };
        if (aux.size() > 0) {
            put(aux);
        } else {
            put(log_weight_var_input);
            v[k++] = log_bias_var_input;
            put(log_weight_var_layer);
            put(log_bias_var_layer);
        }
        put(log_noise_vars);
        return v;
    }

    int size() const {
        if (aux.size() > 0) return static_cast<int>(aux.size() + log_noise_vars.size());
        return static_cast<int>(log_weight_var_input.size() + 1 + log_weight_var_layer.size() +
                                log_bias_var_layer.size() + log_noise_vars.size());
    }

    int noise_count() const { return static_cast<int>(log_noise_vars.size()); }

    double noise_var(int k) const { return std::max(std::exp(log_noise_vars[k]), kNoiseFloor); }

    /// Throws if the parameter layout does not fit `spec` or a value is not finite.
    void check(const KernelSpec& spec) const {
        if (size() - noise_count() != spec.kernel_param_count())
            throw InputError("HyperParams: parameter count does not match " + spec.name());
        if (!to_vector().allFinite()) throw InputError("HyperParams: non-finite log-parameter");
    }
};

}  // namespace nngp
