#pragma once

#include "nngp/gp.hpp"
#include "nngp/quadrature.hpp"
#include "nngp/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

namespace nngp {

/// ||approx - exact||_2 / ||exact||_2.
inline double relative_l2_error(const Eigen::VectorXd& approx, const Eigen::VectorXd& exact) {
    if (approx.size() != exact.size()) throw InputError("relative_l2_error: length mismatch");
    const double n = exact.norm();
    if (!(n > 0.0)) throw InputError("relative_l2_error: reference vector has zero norm");
    return (approx - exact).norm() / n;
}

// ---------------------------------------------------------------------------------------------
// Poisson: -Laplace(u) = f on (0,1)^2, u = g on the boundary

enum class FabricatedSolution { S1, S2 };

inline std::string to_string(FabricatedSolution s) { return s == FabricatedSolution::S1 ? "s1" : "s2"; }

inline FabricatedSolution parse_solution(const std::string& s) {
    if (s == "s1" || s == "1") return FabricatedSolution::S1;
    if (s == "s2" || s == "2") return FabricatedSolution::S2;
    throw ConfigError("unknown fabricated solution '" + s + "' (expected s1 or s2)");
}

/// S1: sin(pi x)(y^2 + e^-y);  S2: sin(pi x) cos(2 pi (y^2 + x)).
inline double poisson_exact(FabricatedSolution s, double x, double y) {
    constexpr double pi = std::numbers::pi;
    if (s == FabricatedSolution::S1) return std::sin(pi * x) * (y * y + std::exp(-y));
    return std::sin(pi * x) * std::cos(2 * pi * (y * y + x));
}

/// f = -Laplace(u) of the fabricated solution, worked out by hand.
inline double poisson_source(FabricatedSolution s, double x, double y) {
    constexpr double pi = std::numbers::pi;
    const double sx = std::sin(pi * x), cx = std::cos(pi * x);
    if (s == FabricatedSolution::S1) {
        const double ey = std::exp(-y);
        return sx * (pi * pi * (y * y + ey) - 2.0 - ey);
    }
    const double phi = 2 * pi * (y * y + x);
    const double cp = std::cos(phi), sp = std::sin(phi);
    return 5 * pi * pi * sx * cp + 4 * pi * pi * cx * sp + sx * (16 * pi * pi * y * y * cp + 4 * pi * sp);
}

struct PoissonOptions {
    FabricatedSolution solution = FabricatedSolution::S1;
    KernelSpec spec = KernelSpec::nngp_erf(2, 1);
    int n_boundary = 24;  // N_u, equispaced on the boundary
    int n_interior = 25;  // N_f, first Halton points
    int grid = 21;        // test grid is grid x grid
    int cut_points = 101; // samples on the diagonal y = x
    /// Log noise variances held fixed during training (index 0: boundary, 1: source); learned if unset.
    std::optional<double> fixed_log_noise_boundary;
    std::optional<double> fixed_log_noise_source;
    TrainOptions train{};
    /// Overrides of the data (tests use these for zero-data checks); empty means the fabricated solution.
    std::optional<double> constant_boundary_value;
    std::optional<double> constant_source_value;
};

struct PoissonResult {
    Observations data;
    TrainResult training;
    Posterior grid;              // u on the test grid, diagonal covariance only
    Eigen::VectorXd grid_exact;
    double grid_error = 0.0;
    Posterior cut;               // u on the cut line
    Eigen::VectorXd cut_exact;
    double cut_error = 0.0;
    double cut_mean_std = 0.0;
    Eigen::VectorXd boundary_std;  // posterior std at the boundary training inputs
};

inline Eigen::MatrixXd cut_line(int n) {
    const Eigen::VectorXd t = linspace(0.0, 1.0, n);
    Eigen::MatrixXd P(n, 2);
    P << t, t;
    return P;
}

inline Observations poisson_observations(const PoissonOptions& opt) {
    if (opt.n_interior < 1) throw InputError("poisson: need at least one interior point");
    const Eigen::MatrixXd Xu = boundary_equispaced(opt.n_boundary).points;
    const Eigen::MatrixXd Xf = halton(opt.n_interior, 2).points;
    Eigen::VectorXd u(Xu.rows()), f(Xf.rows());
    for (Eigen::Index i = 0; i < Xu.rows(); ++i)
        u[i] = opt.constant_boundary_value.value_or(poisson_exact(opt.solution, Xu(i, 0), Xu(i, 1)));
    for (Eigen::Index i = 0; i < Xf.rows(); ++i)
        f[i] = opt.constant_source_value.value_or(poisson_source(opt.solution, Xf(i, 0), Xf(i, 1)));
    Observations obs;
    obs.blocks.push_back({Xu, u, 0, {}});
    obs.blocks.push_back({Xf, f, 1, {LinearOp::negative_laplacian(2)}});
    return obs;
}

/// Trains the two-block (boundary values, source values) GP and predicts u on the test grid and the cut line.
inline PoissonResult poisson_solve(const PoissonOptions& opt) {
    if (opt.spec.input_dim != 2) throw ConfigError("poisson: kernel input_dim must be 2");
    if (opt.spec.family == KernelFamily::NNGP_ReLU)
        throw ConfigError("poisson: the ReLU kernel has no Laplacian at coincident points; use nngp-erf or se");
    PoissonResult res;
    res.data = poisson_observations(opt);
    TrainOptions topt = opt.train;
    const int nk = opt.spec.kernel_param_count();
    if (opt.fixed_log_noise_boundary) topt.fixed[nk] = *opt.fixed_log_noise_boundary;
    if (opt.fixed_log_noise_source) topt.fixed[nk + 1] = *opt.fixed_log_noise_source;
    res.training = train(res.data, opt.spec, topt);
    const HyperParams& hp = res.training.theta;

    PosteriorOptions diag;
    diag.full_covariance = false;
    const Eigen::MatrixXd G = square_grid(opt.grid);
    res.grid = posterior(res.data, QuerySet{G, {}}, opt.spec, hp, diag);
    res.grid_exact.resize(G.rows());
    for (Eigen::Index i = 0; i < G.rows(); ++i) res.grid_exact[i] = poisson_exact(opt.solution, G(i, 0), G(i, 1));

    const Eigen::MatrixXd C = cut_line(opt.cut_points);
    res.cut = posterior(res.data, QuerySet{C, {}}, opt.spec, hp, diag);
    res.cut_exact.resize(C.rows());
    for (Eigen::Index i = 0; i < C.rows(); ++i) res.cut_exact[i] = poisson_exact(opt.solution, C(i, 0), C(i, 1));
    res.cut_mean_std = res.cut.stddev().mean();

    const auto& bu = res.data.blocks[0];
    res.boundary_std = posterior(res.data, QuerySet{bu.locations, {}}, opt.spec, hp, diag).stddev();

    if (!opt.constant_boundary_value && !opt.constant_source_value) {
        res.grid_error = relative_l2_error(res.grid.mean, res.grid_exact);
        res.cut_error = relative_l2_error(res.cut.mean, res.cut_exact);
    }
    return res;
}

// ---------------------------------------------------------------------------------------------
// Burgers: u_t + u u_x = nu u_xx on [-1, 1], u(+-1, t) = 0, u(x, 0) = -sin(pi x)

/// Cole-Hopf solution by Gauss-Hermite quadrature in s, with eta = 2 sqrt(nu t) s:
///   u = -sum w sin(pi (x - eta)) F(x - eta) / sum w F(x - eta),  F(y) = exp(-cos(pi y) / (2 pi nu)).
inline Eigen::VectorXd burgers_reference(const Eigen::VectorXd& x, double t, double nu = 0.01 / std::numbers::pi,
                                         int nodes = 128) {
    if (t < 0.0) throw InputError("burgers_reference: t must be nonnegative");
    if (!(nu > 0.0)) throw InputError("burgers_reference: viscosity must be positive");
    constexpr double pi = std::numbers::pi;
    Eigen::VectorXd u(x.size());
    if (t == 0.0) {
        for (Eigen::Index i = 0; i < x.size(); ++i) u[i] = -std::sin(pi * x[i]);
        return u;
    }
    const QuadratureRule& gh = detail::cached_rule(true, nodes);
    const double scale = 2.0 * std::sqrt(nu * t);
    const std::size_t n = gh.nodes.size();
    std::vector<double> expo(n);
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        double top = -std::numeric_limits<double>::infinity();
        for (std::size_t k = 0; k < n; ++k) {
            expo[k] = -std::cos(pi * (x[i] - scale * gh.nodes[k])) / (2 * pi * nu);
            top = std::max(top, expo[k]);
        }
        double num = 0.0, den = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
            const double y = x[i] - scale * gh.nodes[k];
            const double w = gh.weights[k] * std::exp(expo[k] - top);
            num += w * std::sin(pi * y);
            den += w;
        }
        u[i] = -num / den;
    }
    return u;
}

/// Per-point operator I - dt (nu d^2/dx^2 - mu(x_i) d/dx), the backward-Euler step of the
/// Burgers equation linearized about the previous mean mu.
inline std::vector<LinearOp> burgers_step_operators(const Eigen::VectorXd& mu_prev, double dt, double nu) {
    std::vector<LinearOp> ops(static_cast<std::size_t>(mu_prev.size()));
    for (Eigen::Index i = 0; i < mu_prev.size(); ++i) {
        auto& op = ops[static_cast<std::size_t>(i)];
        op.identity = 1.0;
        op.terms = {{dt * mu_prev[i], -dt * nu}};
    }
    return ops;
}

/// L_x = nu d^2/dx^2 - mu(x_i) d/dx at each point.
inline std::vector<LinearOp> burgers_linearized_operator(const Eigen::VectorXd& mu_at_points,
                                                         double nu = 0.01 / std::numbers::pi) {
    std::vector<LinearOp> ops(static_cast<std::size_t>(mu_at_points.size()));
    for (Eigen::Index i = 0; i < mu_at_points.size(); ++i) {
        auto& op = ops[static_cast<std::size_t>(i)];
        op.identity = 0.0;
        op.terms = {{-mu_at_points[i], nu}};
    }
    return ops;
}

struct BurgersOptions {
    KernelSpec spec = KernelSpec::nngp_erf(1, 1);
    int n_initial = 24;     // N^0
    int n_train = 31;       // N^n
    double noise_std0 = 0.0;
    double dt = 0.01;
    double nu = 0.01 / std::numbers::pi;
    int steps = 100;
    int n_test = 400;
    std::uint64_t seed = 1;
    bool resample = false;  // draw new interior points every step
    std::vector<int> record_steps = {25, 50, 75, 100};
    TrainOptions first_train{};  // step 1
    TrainOptions later_train{};  // steps 2.., warm-started from the previous step
    int reference_nodes = 128;

    BurgersOptions() {
        later_train.restarts = 1;
        later_train.max_evaluations = 10;
        later_train.line_search.initial_step = 0.5;
    }
};

struct TimeStepState {
    Eigen::MatrixXd X_prev;
    Eigen::VectorXd mu_prev;
    Eigen::MatrixXd cov_prev;
    Eigen::VectorXd theta_prev;  // empty before the first step
    int step = 0;
    double time = 0.0;
};

struct BurgersStepOutput {
    TimeStepState next;
    TrainResult training;
    Posterior train_posterior;  // at X^n, full covariance, propagated uncertainty included
    Posterior test_posterior;   // at the test grid, diagonal only, propagated uncertainty included
    /// min over every query of (augmented variance - unaugmented variance)
    double min_propagation_gap = 0.0;
};

/// One backward-Euler step: condition u^n on the boundary values and on
/// (I - dt L_x) u^n (X^{n-1}) = mu^{n-1}, then predict u^n at X^n and the test points.
inline BurgersStepOutput burgers_step(const TimeStepState& state, const Eigen::MatrixXd& X_next,
                                      const Eigen::MatrixXd& X_test, const BurgersOptions& opt, bool first) {
    if (opt.spec.input_dim != 1) throw ConfigError("burgers: kernel input_dim must be 1");
    Observations obs;
    Eigen::MatrixXd xb(2, 1);
    xb << -1.0, 1.0;
    obs.blocks.push_back({xb, Eigen::VectorXd::Zero(2), 0, {}});
    obs.blocks.push_back({state.X_prev, state.mu_prev, 1, burgers_step_operators(state.mu_prev, opt.dt, opt.nu)});

    TrainOptions topt = first ? opt.first_train : opt.later_train;
    if (state.theta_prev.size() > 0) topt.warm_start = state.theta_prev;

    BurgersStepOutput out;
    try {
        out.training = train(obs, opt.spec, topt);
        PosteriorOptions full;
        full.propagated = PropagatedCovariance{1, state.cov_prev};
        out.train_posterior = posterior(obs, QuerySet{X_next, {}}, opt.spec, out.training.theta, full);
        PosteriorOptions diag = full;
        diag.full_covariance = false;
        out.test_posterior = posterior(obs, QuerySet{X_test, {}}, opt.spec, out.training.theta, diag);
    } catch (const Error& e) {
        throw NumericalError("burgers step " + std::to_string(state.step + 1) + ": " + e.what());
    }
    out.min_propagation_gap = std::min(
        (out.train_posterior.variance - out.train_posterior.variance_without_propagation).minCoeff(),
        (out.test_posterior.variance - out.test_posterior.variance_without_propagation).minCoeff());

    out.next.X_prev = X_next;
    out.next.mu_prev = out.train_posterior.mean;
    out.next.cov_prev = psd_projection(out.train_posterior.covariance);
    out.next.theta_prev = out.training.theta.to_vector();
    out.next.step = state.step + 1;
    out.next.time = static_cast<double>(out.next.step) * opt.dt;
    return out;
}

struct BurgersRecord {
    int step = 0;
    double time = 0.0;
    double error = 0.0;     // relative l2 error of the test-grid mean against Cole-Hopf
    double mean_std = 0.0;  // mean posterior std over the test grid
    Eigen::VectorXd mean;
    Eigen::VectorXd stddev;
    Eigen::VectorXd exact;
};

struct BurgersResult {
    Eigen::VectorXd test_points;
    Eigen::MatrixXd initial_points;
    Eigen::VectorXd initial_values;
    Eigen::MatrixXd train_points;
    std::vector<BurgersRecord> records;  // recorded steps only
    std::vector<double> step_errors;     // every completed step
    std::vector<double> step_nlml;
    double min_propagation_gap = std::numeric_limits<double>::infinity();
    int completed_steps = 0;
    std::string failure;  // empty unless a step failed; earlier records are kept
};

/// Marches `steps` backward-Euler GP steps from u(x, 0) = -sin(pi x).
inline BurgersResult burgers_march(const BurgersOptions& opt) {
    if (opt.n_initial < 1 || opt.n_train < 1 || opt.steps < 1 || opt.n_test < 2)
        throw InputError("burgers: point counts and step count must be positive");
    if (!(opt.dt > 0.0) || !(opt.nu > 0.0) || opt.noise_std0 < 0.0) throw InputError("burgers: invalid dt, nu or noise");
    constexpr double pi = std::numbers::pi;
    BurgersResult res;
    res.test_points = linspace(-1.0, 1.0, opt.n_test);
    const Eigen::MatrixXd X_test = res.test_points;

    // stream 0: initial locations, 1: initial noise, 2..: interior locations
    Rng rng(opt.seed + 1);
    res.initial_points = latin_hypercube(opt.n_initial, 1, opt.seed).scaled(-1.0, 1.0);
    res.initial_values.resize(opt.n_initial);
    for (int i = 0; i < opt.n_initial; ++i)
        res.initial_values[i] = -std::sin(pi * res.initial_points(i, 0)) + opt.noise_std0 * rng.normal();

    std::uint64_t draws = 0;
    auto draw_interior = [&] { return latin_hypercube(opt.n_train, 1, opt.seed + 2 + draws++).scaled(-1.0, 1.0); };
    res.train_points = draw_interior();

    TimeStepState state;
    state.X_prev = res.initial_points;
    state.mu_prev = res.initial_values;
    state.cov_prev = opt.noise_std0 * opt.noise_std0 * Eigen::MatrixXd::Identity(opt.n_initial, opt.n_initial);

    for (int n = 1; n <= opt.steps; ++n) {
        const Eigen::MatrixXd X_next = (opt.resample && n > 1) ? draw_interior() : res.train_points;
        BurgersStepOutput out;
        try {
            out = burgers_step(state, X_next, X_test, opt, n == 1);
        } catch (const Error& e) {
            res.failure = e.what();
            break;
        }
        state = std::move(out.next);
        res.completed_steps = n;
        res.min_propagation_gap = std::min(res.min_propagation_gap, out.min_propagation_gap);
        const Eigen::VectorXd exact = burgers_reference(res.test_points, state.time, opt.nu, opt.reference_nodes);
        const double err = relative_l2_error(out.test_posterior.mean, exact);
        res.step_errors.push_back(err);
        res.step_nlml.push_back(out.training.nlml);
        if (std::find(opt.record_steps.begin(), opt.record_steps.end(), n) != opt.record_steps.end()) {
            BurgersRecord rec;
            rec.step = n;
            rec.time = state.time;
            rec.error = err;
            rec.mean = out.test_posterior.mean;
            rec.stddev = out.test_posterior.stddev();
            rec.mean_std = rec.stddev.mean();
            rec.exact = exact;
            res.records.push_back(std::move(rec));
        }
    }
    return res;
}

}  // namespace nngp
