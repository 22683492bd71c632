#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <optional>
#include <utility>

namespace nngp {

struct MinimizeOptions {
    int max_evaluations = 200;  // objective evaluations, including the initial one
    double c1 = 1e-4;           // sufficient decrease (Wolfe-Powell rho)
    double c2 = 0.1;            // curvature (Wolfe-Powell sigma)
    double interpolate = 0.1;   // stay this fraction away from bracket ends
    double extrapolate = 3.0;   // at most this many times the current step
    int max_line_evals = 20;
    double max_slope_ratio = 100.0;
    double gradient_tolerance = 1e-10;
    double min_descent_cosine = 1e-3;  // below this cos(angle(-g, s)) the search restarts along -g
    /// Length |x3 s| of the first trial step; unset keeps minimize.m's 1 / (1 + |g|^2), which is
    /// tiny when a warm start sits where the gradient is large.
    std::optional<double> initial_step;
};

struct MinimizeResult {
    Eigen::VectorXd x;
    double f = 0.0;
    double f_start = 0.0;  // objective at the starting point
    int evaluations = 0;
    int iterations = 0;
};

/// Nonlinear conjugate gradients (Polak-Ribiere) with a cubic-interpolation line search
/// enforcing the strong Wolfe conditions. `fg(x)` returns {f(x), grad f(x)}.
///
/// Follows the structure of Rasmussen's `minimize`: extrapolate until the bracket holds a
/// Wolfe point, then interpolate within it; a failed line search restarts along steepest
/// descent, two consecutive failures end the run.
template <class FG>
MinimizeResult minimize(FG&& fg, Eigen::VectorXd x, const MinimizeOptions& opt = {}) {
    using Vec = Eigen::VectorXd;
    const double RHO = opt.c1, SIG = opt.c2, INT = opt.interpolate, EXT = opt.extrapolate;
    auto finite = [](double f, const Vec& g) { return std::isfinite(f) && g.allFinite(); };

    MinimizeResult res;
    int evals = 0;
    auto [f0, df0] = fg(x);
    ++evals;
    res.f_start = f0;
    if (!finite(f0, df0)) {
        res.x = x;
        res.f = f0;
        res.evaluations = evals;
        return res;
    }
    Vec s = -df0;
    double d0 = -s.squaredNorm();
    double x3 = opt.initial_step ? *opt.initial_step / s.norm() : 1.0 / (1.0 - d0);
    bool ls_failed = false;

    while (evals < opt.max_evaluations) {
        if (df0.norm() < opt.gradient_tolerance) break;
        ++res.iterations;
        Vec X0 = x;
        double F0 = f0;
        Vec dF0 = df0;
        int M = std::min(opt.max_line_evals, opt.max_evaluations - evals);

        double x1 = 0, f1 = 0, d1 = 0, x2 = 0, f2 = 0, d2 = 0, f3 = 0, d3 = 0, x4 = 0, f4 = 0, d4 = 0;
        Vec df3;
        // extrapolation
        while (true) {
            x2 = 0;
            f2 = f0;
            d2 = d0;
            f3 = f0;
            df3 = df0;
            bool success = false;
            while (!success && M > 0) {
                --M;
                ++evals;
                auto [fv, gv] = fg(x + x3 * s);
                if (finite(fv, gv)) {
                    f3 = fv;
                    df3 = std::move(gv);
                    success = true;
                } else {
                    x3 = 0.5 * (x2 + x3);
                }
            }
            if (f3 < F0) {
                X0 = x + x3 * s;
                F0 = f3;
                dF0 = df3;
            }
            d3 = df3.dot(s);
            if (d3 > SIG * d0 || f3 > f0 + x3 * RHO * d0 || M == 0) break;
            x1 = x2;
            f1 = f2;
            d1 = d2;
            x2 = x3;
            f2 = f3;
            d2 = d3;
            const double A = 6 * (f1 - f2) + 3 * (d2 + d1) * (x2 - x1);
            const double B = 3 * (f2 - f1) - (2 * d1 + d2) * (x2 - x1);
            const double disc = B * B - A * d1 * (x2 - x1);
            x3 = disc >= 0 ? x1 - d1 * (x2 - x1) * (x2 - x1) / (B + std::sqrt(disc))
                           : std::numeric_limits<double>::quiet_NaN();
            if (!std::isfinite(x3) || x3 < 0)
                x3 = x2 * EXT;
            else if (x3 > x2 * EXT)
                x3 = x2 * EXT;
            else if (x3 < x2 + INT * (x2 - x1))
                x3 = x2 + INT * (x2 - x1);
        }
        // interpolation
        while ((std::abs(d3) > -SIG * d0 || f3 > f0 + x3 * RHO * d0) && M > 0) {
            if (d3 > 0 || f3 > f0 + x3 * RHO * d0) {
                x4 = x3;
                f4 = f3;
                d4 = d3;
            } else {
                x2 = x3;
                f2 = f3;
                d2 = d3;
            }
            if (f4 > f0) {
                x3 = x2 - (0.5 * d2 * (x4 - x2) * (x4 - x2)) / (f4 - f2 - d2 * (x4 - x2));
            } else {
                const double A = 6 * (f2 - f4) / (x4 - x2) + 3 * (d4 + d2);
                const double B = 3 * (f4 - f2) - (2 * d2 + d4) * (x4 - x2);
                const double disc = B * B - A * d2 * (x4 - x2) * (x4 - x2);
                x3 = disc >= 0 ? x2 + (std::sqrt(disc) - B) / A : std::numeric_limits<double>::quiet_NaN();
            }
            if (!std::isfinite(x3)) x3 = 0.5 * (x2 + x4);
            x3 = std::max(std::min(x3, x4 - INT * (x4 - x2)), x2 + INT * (x4 - x2));
            auto [fv, gv] = fg(x + x3 * s);
            --M;
            ++evals;
            if (finite(fv, gv)) {
                f3 = fv;
                df3 = std::move(gv);
            } else {
                // treat as a very bad point so the bracket shrinks toward x2
                f3 = std::numeric_limits<double>::max();
                df3 = Vec::Zero(x.size());
            }
            if (f3 < F0) {
                X0 = x + x3 * s;
                F0 = f3;
                dF0 = df3;
            }
            d3 = df3.dot(s);
        }

        if (std::abs(d3) < -SIG * d0 && f3 < f0 + x3 * RHO * d0) {
            x += x3 * s;
            f0 = f3;
            const double beta = (df3.squaredNorm() - df0.dot(df3)) / df0.squaredNorm();
            s = beta * s - df3;
            df0 = df3;
            d3 = d0;
            d0 = df0.dot(s);
            // also restart when the new direction is almost orthogonal to the gradient
            if (d0 > -opt.min_descent_cosine * df0.norm() * s.norm()) {
                s = -df0;
                d0 = -s.squaredNorm();
            }
            x3 = x3 * std::min(opt.max_slope_ratio, d3 / (d0 - std::numeric_limits<double>::min()));
            ls_failed = false;
        } else {
            x = X0;
            f0 = F0;
            df0 = dF0;
            if (ls_failed || evals >= opt.max_evaluations) break;
            s = -df0;
            d0 = -s.squaredNorm();
            x3 = 1.0 / (1.0 - d0);
            ls_failed = true;
        }
    }
    res.x = std::move(x);
    res.f = f0;
    res.evaluations = evals;
    return res;
}

}  // namespace nngp
