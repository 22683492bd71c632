#include "fd_oracle.hpp"
#include "nngp/kernel_jets.hpp"
#include "nngp/sampling.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace nngp;
using nngp_test::fd_mixed;

namespace {

Eigen::VectorXd vec(std::initializer_list<double> v) {
    Eigen::VectorXd r(static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (double x : v) r[i++] = x;
    return r;
}

HyperParams unit_params(const KernelSpec& spec) { return HyperParams::uniform(spec, 1.6, 0.1); }

// |a - b| relative to the larger magnitude, with an absolute floor for entries near zero
double rel_err(double a, double b) { return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-2}); }

}  // namespace

TEST(JetBase, Examples) {
    const auto spec = KernelSpec::nngp_erf(2, 1);
    HyperParams hp = HyperParams::uniform(spec, 1.0, 0.5);
    const auto J = jet_base(vec({1, 2}), vec({3, 4}), hp);
    EXPECT_EQ(J.pair(0, 0)[1][1], 1.0);
    EXPECT_EQ(J.pair(0, 1)[1][1], 0.0);
    for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b) {
            EXPECT_EQ(J.pair(a, b)[2][0], 0.0);
            EXPECT_EQ(J.pair(a, b)[0][2], 0.0);
            EXPECT_EQ(J.pair(a, b)[0][0], 11.5);
        }
    EXPECT_EQ(J.pair(1, 0)[1][0], 4.0);
    EXPECT_EQ(J.pair(0, 1)[0][1], 2.0);

    HyperParams d23 = hp;
    d23.log_weight_var_input = vec({std::log(2.0), std::log(3.0)});
    EXPECT_DOUBLE_EQ(jet_base(vec({1, 1}), vec({0, 0}), d23).dxx[1][2], 6.0);
}

TEST(JetStep, ConstantKernelHasNoDerivatives) {
    KernelJet prev(2);
    for (auto& p : prev.pairs) p[0][0] = 0.4;
    for (auto& d : prev.dxx) d = {0.7, 0.0, 0.0};
    for (auto& d : prev.dxpxp) d = {0.9, 0.0, 0.0};
    const auto next = jet_step(prev, 1.6, 0.1);
    EXPECT_DOUBLE_EQ(next.value(), erf_step(0.7, 0.9, 0.4, 1.6, 0.1));
    for (const auto& p : next.pairs)
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j)
                if (i + j > 0) EXPECT_EQ(p[i][j], 0.0);
}

TEST(NngpJet, MatchesFiniteDifferences) {
    Rng rng(2024);
    for (int d = 1; d <= 2; ++d)
        for (int L = 1; L <= 3; ++L) {
            const auto spec = KernelSpec::nngp_erf(d, L);
            const auto hp = unit_params(spec);
            const Kernel kernel(spec, hp);
            nngp_test::ScalarKernel k = [&](const Eigen::VectorXd& x, const Eigen::VectorXd& y) { return kernel(x, y); };
            for (int trial = 0; trial < 8; ++trial) {
                Eigen::VectorXd x(d), xp(d);
                for (int c = 0; c < d; ++c) x[c] = rng.uniform(), xp[c] = rng.uniform();
                const auto J = nngp_jet(x, xp, spec, hp);
                for (int a = 0; a < d; ++a)
                    for (int b = 0; b < d; ++b)
                        for (int i = 0; i < 3; ++i)
                            for (int j = 0; j < 3; ++j) {
                                const double fd = nngp_test::fd_entry(k, x, xp, a, i, b, j);
                                const double tol = i + j <= 2 ? 1e-5 : 1e-3;
                                EXPECT_LT(rel_err(J.pair(a, b)[i][j], fd), tol)
                                    << "d=" << d << " L=" << L << " (" << a << "," << b << ")[" << i << "][" << j << "] jet "
                                    << J.pair(a, b)[i][j] << " fd " << fd;
                            }
                for (int a = 0; a < d; ++a)
                    for (int i = 1; i < 3; ++i) {
                        EXPECT_LT(rel_err(J.dxx[a][i], nngp_test::fd_diagonal(k, x, a, i, 1e-4)), 1e-5);
                        EXPECT_LT(rel_err(J.dxpxp[a][i], nngp_test::fd_diagonal(k, xp, a, i, 1e-4)), 1e-5);
                    }
            }
        }
}

TEST(NngpJet, ExchangeSymmetry) {
    const auto spec = KernelSpec::nngp_erf(2, 2);
    const auto hp = unit_params(spec);
    const Eigen::VectorXd x = vec({0.3, 0.8}), xp = vec({0.6, 0.1});
    const auto J = nngp_jet(x, xp, spec, hp);
    const auto S = nngp_jet(xp, x, spec, hp);
    const auto W = J.swapped();
    for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b)
            for (int i = 0; i < 3; ++i)
                for (int j = 0; j < 3; ++j) EXPECT_NEAR(W.pair(a, b)[i][j], S.pair(a, b)[i][j], 1e-12);
}

TEST(NngpJet, CoincidentPointsAreFiniteAndConsistent) {
    const auto spec = KernelSpec::nngp_erf(2, 3);
    const auto hp = unit_params(spec);
    const Eigen::VectorXd x = vec({0.45, 0.2});
    const auto J = nngp_jet(x, x, spec, hp);
    for (const auto& p : J.pairs)
        for (const auto& r : p)
            for (double v : r) EXPECT_TRUE(std::isfinite(v));
    // d/dx k(x, x) = d_x k + d_x' k at coincidence, both halves equal by symmetry
    for (int a = 0; a < 2; ++a) {
        EXPECT_NEAR(J.pair(a, a)[1][0], 0.5 * J.dxx[a][1], 1e-12);
        EXPECT_NEAR(J.pair(a, a)[2][0] + 2 * J.pair(a, a)[1][1] + J.pair(a, a)[0][2], J.dxx[a][2], 1e-10);
    }
}

TEST(NngpJet, ReluIsRejected) {
    const auto spec = KernelSpec::nngp_relu(1, 1);
    EXPECT_THROW(nngp_jet(vec({0.1}), vec({0.2}), spec, HyperParams::zeros(spec, 0)), ConfigError);
    const Kernel k(spec, HyperParams::zeros(spec, 0));
    EXPECT_THROW(apply_operator_pair(k, LinearOp::negative_laplacian(1), vec({0.1}), LinearOp::id(), vec({0.2})),
                 ConfigError);
}

TEST(ApplyOperatorPair, IdentityAndHarmonicBase) {
    const auto spec = KernelSpec::nngp_erf(2, 1);
    const auto hp = unit_params(spec);
    const Eigen::VectorXd x = vec({0.3, 0.8}), xp = vec({0.6, 0.1});
    const auto J = nngp_jet(x, xp, spec, hp);
    EXPECT_EQ(apply_operator_pair(J, LinearOp::id(), LinearOp::id()), J.pair(0, 0)[0][0]);
    EXPECT_EQ(apply_operator_pair(jet_base(x, xp, hp), LinearOp::negative_laplacian(2), LinearOp::id()), 0.0);
    LinearOp bad;
    bad.terms = {{0, 0}, {0, 0}, {1.0, 0}};
    EXPECT_THROW(apply_operator_pair(J, bad, LinearOp::id()), InputError);
}

TEST(ApplyOperatorPair, KernelPathMatchesJetPath) {
    Rng rng(5);
    LinearOp burgers;
    burgers.identity = 1.0;
    burgers.terms = {{0.3, -0.02}};
    for (int d = 1; d <= 2; ++d) {
        const auto spec = KernelSpec::nngp_erf(d, 2);
        const auto hp = unit_params(spec);
        const Kernel kernel(spec, hp);
        LinearOp mixed;
        mixed.identity = 0.7;
        mixed.terms.assign(d, {0.0, 0.0});
        mixed.terms[0] = {0.4, -1.0};
        const LinearOp ops[] = {LinearOp::id(), LinearOp::negative_laplacian(d), mixed, burgers};
        for (int trial = 0; trial < 5; ++trial) {
            Eigen::VectorXd x(d), xp(d);
            for (int c = 0; c < d; ++c) x[c] = rng.uniform(), xp[c] = rng.uniform();
            const auto J = nngp_jet(x, xp, spec, hp);
            for (const auto& l : ops)
                for (const auto& r : ops) {
                    const double via_jet = apply_operator_pair(J, l, r);
                    const double via_kernel = apply_operator_pair(kernel, l, x, r, xp);
                    EXPECT_NEAR(via_kernel, via_jet, 1e-10 * std::max(1.0, std::abs(via_jet)));
                }
        }
    }
}

TEST(ApplyOperatorPair, LaplacianPairMatchesFourthOrderDifferences) {
    const auto spec = KernelSpec::nngp_erf(2, 1);
    const auto hp = unit_params(spec);
    const Kernel kernel(spec, hp);
    nngp_test::ScalarKernel k = [&](const Eigen::VectorXd& x, const Eigen::VectorXd& y) { return kernel(x, y); };
    const Eigen::VectorXd x = vec({0.25, 0.6}), xp = vec({0.7, 0.35});
    const auto L = LinearOp::negative_laplacian(2);
    double fd = 0.0;
    for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b) fd += nngp_test::fd_entry(k, x, xp, a, 2, b, 2);
    EXPECT_NEAR(apply_operator_pair(kernel, L, x, L, xp), fd, 1e-3 * std::abs(fd));
}

TEST(ApplyOperatorPair, SquaredExponentialDerivatives) {
    const auto spec = KernelSpec::se(2);
    const auto hp = HyperParams::stationary(spec, 0.4, 1.3);
    const Kernel kernel(spec, hp);
    nngp_test::ScalarKernel k = [&](const Eigen::VectorXd& x, const Eigen::VectorXd& y) { return kernel(x, y); };
    const Eigen::VectorXd x = vec({0.25, 0.6}), xp = vec({0.4, 0.35});
    for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b) {
            const auto J = kernel.pair_jet<2, 2>(x, xp, a, b);
            for (int i = 0; i < 3; ++i)
                for (int j = 0; j < 3; ++j) {
                    const double fd = nngp_test::fd_entry(k, x, xp, a, i, b, j);
                    EXPECT_LT(rel_err(J.derivative(i, j), fd), i + j <= 2 ? 1e-5 : 1e-3) << a << b << i << j;
                }
        }
}
