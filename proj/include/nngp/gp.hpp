#pragma once

#include "nngp/kernel_jets.hpp"
#include "nngp/kernels.hpp"
#include "nngp/optimize.hpp"
#include "nngp/sampling.hpp"
#include "nngp/types.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <optional>
#include <sstream>
#include <vector>

namespace nngp {

/// One group of observations sharing a noise variance: values of `op(i) u` at `locations.row(i)`.
struct ObservationBlock {
    Eigen::MatrixXd locations;
    Eigen::VectorXd values;
    int noise_index = 0;
    std::vector<LinearOp> operators;  // empty: identity; one entry: shared; otherwise one per point

    const LinearOp& op(Eigen::Index i) const {
        static const LinearOp identity{};
        if (operators.empty()) return identity;
        return operators.size() == 1 ? operators.front() : operators[static_cast<std::size_t>(i)];
    }

    bool identity_only() const {
        for (const auto& o : operators)
            if (o.has_derivatives() || o.identity != 1.0) return false;
        return true;
    }

    Eigen::Index size() const { return locations.rows(); }
};

struct Observations {
    std::vector<ObservationBlock> blocks;

    Eigen::Index total() const {
        Eigen::Index n = 0;
        for (const auto& b : blocks) n += b.size();
        return n;
    }

    Eigen::Index offset(std::size_t block) const {
        Eigen::Index n = 0;
        for (std::size_t k = 0; k < block; ++k) n += blocks[k].size();
        return n;
    }

    int noise_count() const {
        int n = 0;
        for (const auto& b : blocks) n = std::max(n, b.noise_index + 1);
        return n;
    }

    Eigen::VectorXd stacked_values() const {
        Eigen::VectorXd y(total());
        Eigen::Index k = 0;
        for (const auto& b : blocks) {
            y.segment(k, b.size()) = b.values;
            k += b.size();
        }
        return y;
    }

    void validate(int dim) const {
        if (total() == 0) throw InputError("Observations: at least one nonempty block is required");
        for (const auto& b : blocks) {
            if (b.locations.rows() != b.values.size()) throw InputError("Observations: locations/values size mismatch");
            if (b.size() > 0 && b.locations.cols() != dim)
                throw InputError("Observations: location dimension does not match input_dim");
            if (b.operators.size() > 1 && static_cast<Eigen::Index>(b.operators.size()) != b.size())
                throw InputError("Observations: need one operator per point or a single shared operator");
            if (b.noise_index < 0) throw InputError("Observations: negative noise index");
            for (const auto& o : b.operators) o.check(dim);
        }
    }

    bool identity_only() const {
        for (const auto& b : blocks)
            if (!b.identity_only()) return false;
        return true;
    }
};

/// Points at which `op(i) u` is predicted.
struct QuerySet {
    Eigen::MatrixXd points;
    std::vector<LinearOp> operators;

    const LinearOp& op(Eigen::Index i) const {
        static const LinearOp identity{};
        if (operators.empty()) return identity;
        return operators.size() == 1 ? operators.front() : operators[static_cast<std::size_t>(i)];
    }
};

struct Posterior {
    Eigen::VectorXd mean;
    Eigen::MatrixXd covariance;  // empty when only the diagonal was requested
    Eigen::VectorXd variance;
    Eigen::MatrixXd query_points;
    /// Diagonal before the propagated-uncertainty term was added (equal to `variance` otherwise).
    Eigen::VectorXd variance_without_propagation;

    /// Standard deviations with small negative variances clipped to zero.
    Eigen::VectorXd stddev() const { return variance.cwiseMax(0.0).cwiseSqrt(); }
};

// ---------------------------------------------------------------------------------------------
// covariance assembly

namespace detail {

template <class OpA, class OpB>
Eigen::MatrixXd covariance_block(const Kernel& kernel, const Eigen::MatrixXd& XA, const OpA& opA,
                                 const Eigen::MatrixXd& XB, const OpB& opB, bool symmetric) {
    bool plain = true;
    for (Eigen::Index i = 0; i < XA.rows() && plain; ++i) plain = !opA(i).has_derivatives();
    for (Eigen::Index j = 0; j < XB.rows() && plain; ++j) plain = !opB(j).has_derivatives();
    if (plain) {
        Eigen::MatrixXd K = kernel.gram(XA, XB, symmetric);
        for (Eigen::Index j = 0; j < XB.rows(); ++j)
            for (Eigen::Index i = 0; i < XA.rows(); ++i) K(i, j) *= opA(i).identity * opB(j).identity;
        return K;
    }
    Eigen::MatrixXd K(XA.rows(), XB.rows());
    for (Eigen::Index j = 0; j < XB.rows(); ++j) {
        const Eigen::VectorXd xb = XB.row(j).transpose();
        const Eigen::Index i_end = symmetric ? j + 1 : XA.rows();
        for (Eigen::Index i = 0; i < i_end; ++i) {
            const double v = apply_operator_pair(kernel, opA(i), XA.row(i).transpose(), opB(j), xb);
            K(i, j) = v;
            if (symmetric) K(j, i) = v;
        }
    }
    return K;
}

}  // namespace detail

/// Noise-free block covariance of the observations.
inline Eigen::MatrixXd assemble_signal(const Observations& obs, const Kernel& kernel) {
    const Eigen::Index n = obs.total();
    Eigen::MatrixXd K(n, n);
    Eigen::Index ro = 0;
    for (std::size_t p = 0; p < obs.blocks.size(); ++p) {
        const auto& bp = obs.blocks[p];
        Eigen::Index co = ro;
        for (std::size_t q = p; q < obs.blocks.size(); ++q) {
            const auto& bq = obs.blocks[q];
            if (bp.size() > 0 && bq.size() > 0) {
                auto opp = [&](Eigen::Index i) -> const LinearOp& { return bp.op(i); };
                auto opq = [&](Eigen::Index i) -> const LinearOp& { return bq.op(i); };
                const Eigen::MatrixXd B =
                    detail::covariance_block(kernel, bp.locations, opp, bq.locations, opq, p == q);
                K.block(ro, co, bp.size(), bq.size()) = B;
                if (p != q) K.block(co, ro, bq.size(), bp.size()) = B.transpose();
            }
            co += bq.size();
        }
        ro += bp.size();
    }
    return K;
}

inline void add_noise(Eigen::MatrixXd& K, const Observations& obs, const HyperParams& hp) {
    if (hp.noise_count() < obs.noise_count()) throw InputError("HyperParams: fewer noise variances than blocks need");
    Eigen::Index k = 0;
    for (const auto& b : obs.blocks) {
        const double nv = hp.noise_var(b.noise_index);
        for (Eigen::Index i = 0; i < b.size(); ++i, ++k) K(k, k) += nv;
    }
}

/// K_oo: operator-applied kernel blocks plus the per-block noise variances on the diagonal.
inline Eigen::MatrixXd assemble_blocks(const Observations& obs, const KernelSpec& spec, const HyperParams& hp) {
    obs.validate(spec.input_dim);
    Eigen::MatrixXd K = assemble_signal(obs, Kernel(spec, hp));
    add_noise(K, obs, hp);
    return K;
}

/// K_qo, rows are query points.
inline Eigen::MatrixXd cross_covariance(const QuerySet& query, const Observations& obs, const Kernel& kernel) {
    Eigen::MatrixXd K(query.points.rows(), obs.total());
    auto opq = [&](Eigen::Index i) -> const LinearOp& { return query.op(i); };
    Eigen::Index co = 0;
    for (const auto& b : obs.blocks) {
        if (b.size() > 0 && query.points.rows() > 0) {
            auto opb = [&](Eigen::Index i) -> const LinearOp& { return b.op(i); };
            K.middleCols(co, b.size()) = detail::covariance_block(kernel, query.points, opq, b.locations, opb, false);
        }
        co += b.size();
    }
    return K;
}

inline Eigen::MatrixXd prior_covariance(const QuerySet& query, const Kernel& kernel) {
    auto opq = [&](Eigen::Index i) -> const LinearOp& { return query.op(i); };
    return detail::covariance_block(kernel, query.points, opq, query.points, opq, true);
}

inline Eigen::VectorXd prior_variance(const QuerySet& query, const Kernel& kernel) {
    Eigen::VectorXd v(query.points.rows());
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        const Eigen::VectorXd x = query.points.row(i).transpose();
        v[i] = apply_operator_pair(kernel, query.op(i), x, query.op(i), x);
    }
    return v;
}

// ---------------------------------------------------------------------------------------------
// factorization

struct JitterPolicy {
    double initial = 1e-10;  // relative to the mean diagonal
    double maximum = 1e-6;
    double growth = 10.0;
};

struct CholeskyFactor {
    Eigen::LLT<Eigen::MatrixXd> llt;
    double jitter = 0.0;  // absolute amount added to the diagonal

    Eigen::MatrixXd solve(const Eigen::MatrixXd& b) const { return llt.solve(b); }
    Eigen::VectorXd solve(const Eigen::VectorXd& b) const { return llt.solve(b); }
    double log_det() const { return 2.0 * llt.matrixLLT().diagonal().array().log().sum(); }
};

/// Cholesky of K, retried with K + jitter I and an escalating jitter on failure. Returns nullopt
/// when even the largest jitter does not give a positive definite matrix.
inline std::optional<CholeskyFactor> try_factorize(const Eigen::MatrixXd& K, const JitterPolicy& policy = {}) {
    if (!K.allFinite()) return std::nullopt;
    const double mean_diag = K.rows() > 0 ? K.diagonal().mean() : 1.0;
    if (!(mean_diag > 0.0)) return std::nullopt;
    for (double rel = 0.0; rel <= policy.maximum * (1.0 + 1e-9); rel = rel == 0.0 ? policy.initial : rel * policy.growth) {
        CholeskyFactor f;
        f.jitter = rel * mean_diag;
        Eigen::MatrixXd Kj = K;
        Kj.diagonal().array() += f.jitter;
        f.llt.compute(Kj);
        if (f.llt.info() == Eigen::Success && f.llt.matrixLLT().diagonal().allFinite() &&
            (f.llt.matrixLLT().diagonal().array() > 0.0).all())
            return f;
    }
    return std::nullopt;
}

inline CholeskyFactor factorize(const Eigen::MatrixXd& K, const JitterPolicy& policy = {}) {
    if (auto f = try_factorize(K, policy)) return std::move(*f);
    std::ostringstream msg;
    msg << "Cholesky factorization failed after maximal jitter (n = " << K.rows();
    if (K.allFinite()) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(K, Eigen::EigenvaluesOnly);
        msg << ", min eigenvalue ~ " << es.eigenvalues().minCoeff() << ", max " << es.eigenvalues().maxCoeff();
    } else {
        msg << ", matrix has non-finite entries";
    }
    msg << ")";
    throw NumericalError(msg.str());
}

// ---------------------------------------------------------------------------------------------
// posterior

/// Covariance of already-uncertain observation values (block `block`), folded into the
/// posterior covariance as K_qo K_oo^-1 diag(0, C) K_oo^-1 K_oq.
/// B with B B^T equal to the symmetric part of C after clipping negative eigenvalues to zero.
inline Eigen::MatrixXd psd_factor(const Eigen::MatrixXd& C) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (C + C.transpose()));
    if (es.info() != Eigen::Success) throw NumericalError("psd_factor: eigen-decomposition failed");
    return es.eigenvectors() * es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();
}

/// Nearest (Frobenius) positive semidefinite matrix to the symmetric part of C.
inline Eigen::MatrixXd psd_projection(const Eigen::MatrixXd& C) {
    const Eigen::MatrixXd B = psd_factor(C);
    return B * B.transpose();
}

struct PropagatedCovariance {
    std::size_t block = 0;
    Eigen::MatrixXd covariance;
};

struct PosteriorOptions {
    bool full_covariance = true;
    std::optional<PropagatedCovariance> propagated;
};

inline Posterior posterior(const Observations& obs, const QuerySet& query, const KernelSpec& spec,
                           const HyperParams& hp, const PosteriorOptions& opt = {}) {
    Posterior post;
    post.query_points = query.points;
    const Eigen::Index nq = query.points.rows();
    if (nq == 0) {
        post.mean.resize(0);
        post.variance.resize(0);
        post.variance_without_propagation.resize(0);
        if (opt.full_covariance) post.covariance.resize(0, 0);
        return post;
    }
    obs.validate(spec.input_dim);
    for (const auto& o : query.operators) o.check(spec.input_dim);
    const Kernel kernel(spec, hp);
    Eigen::MatrixXd Koo = assemble_signal(obs, kernel);
    add_noise(Koo, obs, hp);
    const CholeskyFactor F = factorize(Koo);
    const Eigen::MatrixXd Kqo = cross_covariance(query, obs, kernel);
    const Eigen::MatrixXd W = F.solve(Eigen::MatrixXd(Kqo.transpose()));  // K_oo^-1 K_oq
    post.mean = Kqo * F.solve(obs.stacked_values());

    if (opt.full_covariance) {
        Eigen::MatrixXd C = prior_covariance(query, kernel) - Kqo * W;
        post.covariance = 0.5 * (C + C.transpose());
        post.variance = post.covariance.diagonal();
    } else {
        post.variance = prior_variance(query, kernel) - (Kqo.transpose().array() * W.array()).colwise().sum().transpose().matrix();
    }
    post.variance_without_propagation = post.variance;

    if (opt.propagated) {
        const auto& pc = *opt.propagated;
        if (pc.block >= obs.blocks.size()) throw InputError("posterior: propagated block index out of range");
        const Eigen::Index n_p = obs.blocks[pc.block].size();
        if (pc.covariance.rows() != n_p || pc.covariance.cols() != n_p)
            throw InputError("posterior: propagated covariance has the wrong size");
        // C = B B^T, so the added diagonal is a sum of squares and never negative
        const Eigen::MatrixXd G = psd_factor(pc.covariance).transpose() * W.middleRows(obs.offset(pc.block), n_p);
        post.variance += G.colwise().squaredNorm().transpose();
        if (opt.full_covariance) {
            post.covariance += G.transpose() * G;
            post.covariance.diagonal() = post.variance;
        }
    }
    return post;
}

// ---------------------------------------------------------------------------------------------
// marginal likelihood

/// Value handed to the optimizer when K_oo cannot be factorized.
inline constexpr double kNlmlPenalty = 1e10;

inline double nlml_from_factor(const CholeskyFactor& F, const Eigen::VectorXd& y) {
    const Eigen::VectorXd alpha = F.solve(y);
    return 0.5 * y.dot(alpha) + 0.5 * F.log_det() + 0.5 * static_cast<double>(y.size()) * std::log(2.0 * std::numbers::pi);
}

/// 1/2 o^T K^-1 o + 1/2 log|K| + N/2 log(2 pi); the penalty value if K cannot be factorized.
inline double nlml(const Observations& obs, const KernelSpec& spec, const HyperParams& hp) {
    obs.validate(spec.input_dim);
    Eigen::MatrixXd K;
    try {
        K = assemble_blocks(obs, spec, hp);
    } catch (const DomainError&) {
        return kNlmlPenalty;
    }
    const auto F = try_factorize(K);
    if (!F) return kNlmlPenalty;
    const double v = nlml_from_factor(*F, obs.stacked_values());
    return std::isfinite(v) ? v : kNlmlPenalty;
}

enum class GradientMode { Auto, FiniteDifference, Analytic };

struct NlmlEvaluation {
    double value = kNlmlPenalty;
    Eigen::VectorXd gradient;  // over the flat log-parameter vector
    bool ok = false;
};

namespace detail {

inline std::optional<Eigen::MatrixXd> signal_or_nullopt(const Observations& obs, const KernelSpec& spec,
                                                        const HyperParams& hp) {
    try {
        Eigen::MatrixXd K = assemble_signal(obs, Kernel(spec, hp));
        if (!K.allFinite()) return std::nullopt;
        return K;
    } catch (const DomainError&) {
        return std::nullopt;
    }
}

/// dK_signal / d(log parameter p) for stationary kernels on identity-only blocks.
inline std::vector<Eigen::MatrixXd> stationary_derivatives(const Observations& obs, const KernelSpec& spec,
                                                           const HyperParams& hp, const Eigen::MatrixXd& Ks) {
    const Kernel kernel(spec, hp);
    Eigen::MatrixXd X(obs.total(), spec.input_dim);
    Eigen::Index k = 0;
    for (const auto& b : obs.blocks) {
        X.middleRows(k, b.size()) = b.locations;
        k += b.size();
    }
    const Eigen::Index n = X.rows();
    const int n_len = static_cast<int>(hp.aux.size()) - 1;
    std::vector<Eigen::MatrixXd> out(static_cast<std::size_t>(n_len + 1), Eigen::MatrixXd::Zero(n, n));
    const double s2 = kernel.signal_var();
    for (Eigen::Index j = 0; j < n; ++j)
        for (Eigen::Index i = 0; i < n; ++i) {
            Eigen::VectorXd z2(spec.input_dim);
            for (int c = 0; c < spec.input_dim; ++c) {
                const double r = (X(i, c) - X(j, c)) / kernel.length_scale(c);
                z2[c] = r * r;
            }
            const double q2 = z2.sum();
            double factor = 0.0;  // dk/dlog ell_c = factor * z2_c
            switch (spec.family) {
                case KernelFamily::SE: factor = Ks(i, j); break;
                case KernelFamily::Matern32: factor = 3.0 * s2 * std::exp(-std::sqrt(3.0 * q2)); break;
                case KernelFamily::Matern52: {
                    const double r = std::sqrt(5.0 * q2);
                    factor = 5.0 / 3.0 * s2 * (1.0 + r) * std::exp(-r);
                    break;
                }
                default: throw ConfigError("analytic gradient is only available for SE/Matern kernels");
            }
            if (n_len == 1)
                out[0](i, j) = factor * q2;
            else
                for (int c = 0; c < n_len; ++c) out[static_cast<std::size_t>(c)](i, j) = factor * z2[c];
        }
    out[static_cast<std::size_t>(n_len)] = Ks;
    return out;
}

}  // namespace detail

/// NLML and its gradient over the flat log-parameter vector.
///
/// With finite differences, the kernel matrix is differentiated by central differences of step
/// `fd_step` per log-parameter (one-sided if a stencil point is not finite) and contracted
/// exactly: d nlml = -1/2 tr((alpha alpha^T - K^-1) dK). Noise derivatives are exact.
inline NlmlEvaluation nlml_and_gradient(const Observations& obs, const KernelSpec& spec, const Eigen::VectorXd& theta,
                                        GradientMode mode = GradientMode::Auto, double fd_step = 1e-4) {
    const int n_noise = static_cast<int>(theta.size()) - spec.kernel_param_count();
    NlmlEvaluation ev;
    ev.gradient = Eigen::VectorXd::Zero(theta.size());
    if (!theta.allFinite()) return ev;
    const HyperParams hp = HyperParams::from_vector(spec, n_noise, theta);
    auto Ks = detail::signal_or_nullopt(obs, spec, hp);
    if (!Ks) return ev;
    Eigen::MatrixXd K = *Ks;
    add_noise(K, obs, hp);
    const auto F = try_factorize(K);
    if (!F) return ev;
    const Eigen::VectorXd y = obs.stacked_values();
    const Eigen::VectorXd alpha = F->solve(y);
    ev.value = 0.5 * y.dot(alpha) + 0.5 * F->log_det() +
               0.5 * static_cast<double>(y.size()) * std::log(2.0 * std::numbers::pi);
    if (!std::isfinite(ev.value)) {
        ev.value = kNlmlPenalty;
        return ev;
    }
    const Eigen::Index n = y.size();
    Eigen::MatrixXd Wm = alpha * alpha.transpose() - F->solve(Eigen::MatrixXd(Eigen::MatrixXd::Identity(n, n)));

    const int nk = spec.kernel_param_count();
    const bool analytic = mode == GradientMode::Analytic ||
                          (mode == GradientMode::Auto && is_stationary(spec.family) && obs.identity_only());
    if (analytic) {
        if (!is_stationary(spec.family) || !obs.identity_only())
            throw ConfigError("analytic NLML gradient needs an SE/Matern kernel and identity-only blocks");
        const auto dK = detail::stationary_derivatives(obs, spec, hp, *Ks);
        for (int p = 0; p < nk; ++p) ev.gradient[p] = -0.5 * (Wm.array() * dK[static_cast<std::size_t>(p)].array()).sum();
    } else {
        for (int p = 0; p < nk; ++p) {
            Eigen::VectorXd tp = theta, tm = theta;
            tp[p] += fd_step;
            tm[p] -= fd_step;
            auto Kp = detail::signal_or_nullopt(obs, spec, HyperParams::from_vector(spec, n_noise, tp));
            auto Km = detail::signal_or_nullopt(obs, spec, HyperParams::from_vector(spec, n_noise, tm));
            Eigen::MatrixXd dK;
            if (Kp && Km)
                dK = (*Kp - *Km) / (2.0 * fd_step);
            else if (Kp)
                dK = (*Kp - *Ks) / fd_step;
            else if (Km)
                dK = (*Ks - *Km) / fd_step;
            else
                continue;
            ev.gradient[p] = -0.5 * (Wm.array() * dK.array()).sum();
        }
    }
    Eigen::Index k = 0;
    for (const auto& b : obs.blocks) {
        const double nv = hp.noise_var(b.noise_index);
        const bool active = std::exp(hp.log_noise_vars[b.noise_index]) > kNoiseFloor;
        if (active)
            for (Eigen::Index i = 0; i < b.size(); ++i) ev.gradient[nk + b.noise_index] -= 0.5 * nv * Wm(k + i, k + i);
        k += b.size();
    }
    ev.ok = ev.gradient.allFinite();
    if (!ev.ok) ev.gradient.setZero();
    return ev;
}

inline Eigen::VectorXd nlml_grad_fd(const Observations& obs, const KernelSpec& spec, const HyperParams& hp,
                                    double fd_step = 1e-4) {
    return nlml_and_gradient(obs, spec, hp.to_vector(), GradientMode::FiniteDifference, fd_step).gradient;
}

inline Eigen::VectorXd nlml_grad_analytic(const Observations& obs, const KernelSpec& spec, const HyperParams& hp) {
    return nlml_and_gradient(obs, spec, hp.to_vector(), GradientMode::Analytic).gradient;
}

// ---------------------------------------------------------------------------------------------
// training

struct TrainOptions {
    int restarts = 10;
    int max_evaluations = 200;
    double fd_step = 1e-4;
    double init_lo = -2.0;  // Halton inits are mapped affinely onto [init_lo, init_hi] per log-parameter
    double init_hi = 2.0;
    GradientMode gradient = GradientMode::Auto;
    /// Restart 0 starts here verbatim when set (full flat vector, fixed entries included).
    std::optional<Eigen::VectorXd> warm_start;
    /// Flat index -> log value held constant during optimization.
    std::map<int, double> fixed;
    /// Optional box [lo, hi] on every free log-parameter; points outside it get the penalty value,
    /// so the line search treats the box edge like a failed factorization.
    std::optional<std::pair<double, double>> bounds;
    MinimizeOptions line_search{};
};

struct RestartRecord {
    int init_index = 0;  // Halton index (1-based), or 0 for a warm start
    double initial_nlml = 0.0;
    double final_nlml = 0.0;
    int evaluations = 0;
};

struct TrainResult {
    HyperParams theta;
    double nlml = 0.0;
    std::vector<RestartRecord> restarts;
    int best_restart = 0;

    int total_evaluations() const {
        int n = 0;
        for (const auto& r : restarts) n += r.evaluations;
        return n;
    }
};

/// Maximum-likelihood hyperparameters: conjugate gradients from each deterministic start,
/// keeping the run with the smallest final NLML.
inline TrainResult train(const Observations& obs, const KernelSpec& spec, const TrainOptions& opt = {}) {
    spec.validate();
    obs.validate(spec.input_dim);
    if (opt.restarts < 1) throw InputError("train: need at least one restart");
    const int n_noise = obs.noise_count();
    const int P = spec.kernel_param_count() + n_noise;
    std::vector<int> free_idx;
    for (int p = 0; p < P; ++p)
        if (!opt.fixed.contains(p)) free_idx.push_back(p);
    if (free_idx.empty()) throw InputError("train: every parameter is fixed");
    const int nf = static_cast<int>(free_idx.size());

    auto expand = [&](const Eigen::VectorXd& free) {
        Eigen::VectorXd full(P);
        for (const auto& [p, v] : opt.fixed) full[p] = v;
        for (int i = 0; i < nf; ++i) full[free_idx[static_cast<std::size_t>(i)]] = free[i];
        return full;
    };
    auto objective = [&](const Eigen::VectorXd& free) {
        if (opt.bounds && ((free.array() < opt.bounds->first).any() || (free.array() > opt.bounds->second).any()))
            return std::make_pair(kNlmlPenalty, Eigen::VectorXd(Eigen::VectorXd::Zero(nf)));
        const auto ev = nlml_and_gradient(obs, spec, expand(free), opt.gradient, opt.fd_step);
        Eigen::VectorXd g(nf);
        for (int i = 0; i < nf; ++i) g[i] = ev.gradient[free_idx[static_cast<std::size_t>(i)]];
        return std::make_pair(ev.value, g);
    };

    const PointSet inits = halton(opt.restarts, nf);
    TrainResult result;
    double best = std::numeric_limits<double>::infinity();
    Eigen::VectorXd best_full;
    for (int r = 0; r < opt.restarts; ++r) {
        Eigen::VectorXd x0(nf);
        RestartRecord rec;
        if (r == 0 && opt.warm_start) {
            if (opt.warm_start->size() != P) throw InputError("train: warm start has the wrong length");
            for (int i = 0; i < nf; ++i) x0[i] = (*opt.warm_start)[free_idx[static_cast<std::size_t>(i)]];
            rec.init_index = 0;
        } else {
            x0 = (opt.init_lo + (opt.init_hi - opt.init_lo) * inits.points.row(r).array()).matrix().transpose();
            rec.init_index = r + 1;
        }
        MinimizeOptions mo = opt.line_search;
        mo.max_evaluations = opt.max_evaluations;
        const MinimizeResult mr = minimize(objective, x0, mo);
        rec.initial_nlml = mr.f_start;
        rec.final_nlml = mr.f;
        rec.evaluations = mr.evaluations;
        result.restarts.push_back(rec);
        if (mr.f < best) {
            best = mr.f;
            best_full = expand(mr.x);
            result.best_restart = r;
        }
    }
    if (!(best < kNlmlPenalty)) throw TrainingError("train: no restart reached a finite negative log marginal likelihood");
    result.theta = HyperParams::from_vector(spec, n_noise, best_full);
    result.nlml = best;
    return result;
}

}  // namespace nngp
