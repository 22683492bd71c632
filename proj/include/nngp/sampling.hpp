#pragma once

#include "nngp/types.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <numbers>
#include <numeric>
#include <random>
#include <vector>

namespace nngp {

enum class Generator { Halton, LatinHypercube, Equispaced };

/// Rows are points; coordinates lie in the closed unit cube unless mapped afterwards.
struct PointSet {
    Eigen::MatrixXd points;
    Generator generator = Generator::Halton;
    std::uint64_t seed = 0;

    Eigen::Index size() const { return points.rows(); }
    Eigen::Index dim() const { return points.cols(); }

    /// Affine map of every coordinate from [0, 1] to [lo, hi].
    Eigen::MatrixXd scaled(double lo, double hi) const { return (points.array() * (hi - lo) + lo).matrix(); }
};

/// Seeded generator with platform-independent conversions (std distributions are not).
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    /// Uniform on [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    /// Uniform integer in [0, n).
    std::uint64_t below(std::uint64_t n) {
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t r;
        do {
            r = engine_();
        } while (r >= limit);
        return r % n;
    }

    /// Standard normal by Box-Muller.
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1;
        do {
            u1 = uniform();
        } while (u1 <= 0.0);
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        spare_ = r * std::sin(2.0 * std::numbers::pi * u2);
        has_spare_ = true;
        return r * std::cos(2.0 * std::numbers::pi * u2);
    }

    std::vector<std::size_t> permutation(std::size_t n) {
        std::vector<std::size_t> p(n);
        std::iota(p.begin(), p.end(), std::size_t{0});
        for (std::size_t i = n; i > 1; --i) std::swap(p[i - 1], p[below(i)]);
        return p;
    }

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

inline std::vector<std::uint64_t> first_primes(int count) {
    std::vector<std::uint64_t> primes;
    for (std::uint64_t c = 2; static_cast<int>(primes.size()) < count; ++c) {
        bool prime = true;
        for (auto p : primes) {
            if (p * p > c) break;
            if (c % p == 0) {
                prime = false;
                break;
            }
        }
        if (prime) primes.push_back(c);
    }
    return primes;
}

/// Digit-reversed index in the given base, built as an exact integer ratio.
inline double radical_inverse(std::uint64_t index, std::uint64_t base) {
    std::uint64_t num = 0, den = 1;
    while (index > 0) {
        num = num * base + index % base;
        den *= base;
        index /= base;
    }
    return static_cast<double>(num) / static_cast<double>(den);
}

/// First n Halton points (indices 1..n, unscrambled, bases = first d primes).
inline PointSet halton(int n, int d) {
    if (n < 1 || d < 1) throw InputError("halton: n and d must be positive");
    const auto primes = first_primes(d);
    PointSet ps;
    ps.generator = Generator::Halton;
    ps.points.resize(n, d);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < d; ++j) ps.points(i, j) = radical_inverse(static_cast<std::uint64_t>(i) + 1, primes[j]);
    return ps;
}

/// One point per stratum [k/n, (k+1)/n) in every coordinate, jittered uniformly inside the stratum.
inline PointSet latin_hypercube(int n, int d, std::uint64_t seed) {
    if (n < 1 || d < 1) throw InputError("latin_hypercube: n and d must be positive");
    Rng rng(seed);
    PointSet ps;
    ps.generator = Generator::LatinHypercube;
    ps.seed = seed;
    ps.points.resize(n, d);
    for (int j = 0; j < d; ++j) {
        const auto perm = rng.permutation(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) ps.points(i, j) = (static_cast<double>(perm[i]) + rng.uniform()) / n;
    }
    return ps;
}

/// n_u points at equal arc-length spacing around the unit square, starting at the corner (0, 0)
/// and running counter-clockwise. Multiples of 4 place every corner exactly once.
inline PointSet boundary_equispaced(int n_u) {
    if (n_u < 4) throw InputError("boundary_equispaced: need at least 4 points");
    PointSet ps;
    ps.generator = Generator::Equispaced;
    ps.points.resize(n_u, 2);
    for (int k = 0; k < n_u; ++k) {
        // exact rational position along the perimeter, in units of one side
        const int side = (4 * k) / n_u;
        const double f = static_cast<double>(4 * k - side * n_u) / n_u;
        switch (side) {
            case 0: ps.points.row(k) << f, 0.0; break;
            case 1: ps.points.row(k) << 1.0, f; break;
            case 2: ps.points.row(k) << 1.0 - f, 1.0; break;
            default: ps.points.row(k) << 0.0, 1.0 - f; break;
        }
    }
    return ps;
}

inline Eigen::VectorXd linspace(double lo, double hi, int n) {
    if (n < 1) throw InputError("linspace: n must be positive");
    if (n == 1) return Eigen::VectorXd::Constant(1, lo);
    return Eigen::VectorXd::LinSpaced(n, lo, hi);
}

/// Regular tensor grid of n x n points over [lo, hi]^2, x running fastest.
inline Eigen::MatrixXd square_grid(int n, double lo = 0.0, double hi = 1.0) {
    const Eigen::VectorXd t = linspace(lo, hi, n);
    Eigen::MatrixXd g(n * n, 2);
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) g.row(j * n + i) << t[i], t[j];
    return g;
}

}  // namespace nngp
