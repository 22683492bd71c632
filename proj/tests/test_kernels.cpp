#include "nngp/kernels.hpp"
#include "nngp/sampling.hpp"

#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>

#include <cmath>
#include <numbers>

using namespace nngp;

namespace {

Eigen::VectorXd vec(std::initializer_list<double> v) {
    Eigen::VectorXd r(static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (double x : v) r[i++] = x;
    return r;
}

HyperParams base_params(Eigen::VectorXd lambda, double bias) {
    HyperParams hp;
    hp.log_weight_var_input = lambda.array().log().matrix();
    hp.log_bias_var_input = std::log(bias);
    return hp;
}

}  // namespace

TEST(BaseKernel, Examples) {
    EXPECT_DOUBLE_EQ(base_kernel(vec({0, 0}), vec({0, 0}), base_params(vec({2.0, 3.0}), 0.1)), 0.1);
    HyperParams unit = base_params(vec({1, 1}), 1.0);
    unit.log_bias_var_input = -1000.0;
    EXPECT_DOUBLE_EQ(base_kernel(vec({1, 2}), vec({3, 4}), unit), 11.0);
    EXPECT_NEAR(base_kernel(vec({1, 0}), vec({1, 0}), base_params(vec({1.6, 1.6}), 0.1)), 1.7, 1e-15);
}

TEST(BaseKernel, DimensionMismatchThrows) {
    EXPECT_THROW(base_kernel(vec({1, 2}), vec({1}), base_params(vec({1, 1}), 0.1)), InputError);
}

TEST(ReluStep, Examples) {
    EXPECT_NEAR(relu_step(2.0, 2.0, 2.0, 1.6, 0.1), 1.6 * 2.0 / 2 + 0.1, 1e-14);
    EXPECT_NEAR(relu_step(1.0, 1.0, 0.0, 1.6, 0.1), 0.354647908947032537, 1e-15);
    EXPECT_THROW(relu_step(0.0, 1.0, 0.0, 1.0, 0.1), DomainError);
    EXPECT_THROW(relu_step(1.0, 1.0, 1.5, 1.0, 0.1), DomainError);
    // rounding just past |cos| = 1 is clamped
    EXPECT_NO_THROW(relu_step(1.0, 1.0, 1.0 + 1e-14, 1.0, 0.1));
}

TEST(ErfStep, Examples) {
    EXPECT_EQ(erf_step(1.0, 2.0, 0.0, 1.6, 0.1), 0.1);
    EXPECT_NEAR(erf_step(1.0, 1.0, 1.0, 1.6, 0.1), 0.843294487036064007, 1e-15);
    EXPECT_THROW(erf_step(-0.5, 1.0, 0.0, 1.0, 0.1), DomainError);
}

TEST(ErfStep, OutputBounded) {
    Rng rng(7);
    for (int k = 0; k < 200; ++k) {
        const double a = 3 * rng.uniform(), b = 3 * rng.uniform();
        const double c = (2 * rng.uniform() - 1) * std::sqrt(a * b);
        const double w = 0.1 + 2 * rng.uniform(), bias = 0.1 + rng.uniform();
        const double v = erf_step(a, b, c, w, bias);
        EXPECT_GE(v, bias - w);
        EXPECT_LE(v, bias + w);
    }
}

TEST(NngpKernel, ErfOrthogonalInputsGiveBias) {
    const auto spec = KernelSpec::nngp_erf(2, 1);
    HyperParams hp = HyperParams::uniform(spec, 1.3, 0.4);
    hp.log_bias_var_input = -1000.0;
    hp.log_bias_var_layer[0] = std::log(0.4);
    EXPECT_NEAR(nngp_kernel(vec({1, 0}), vec({0, 1}), spec, hp), 0.4, 1e-15);
}

TEST(NngpKernel, ReluDiagonalRecursion) {
    const auto spec = KernelSpec::nngp_relu(2, 2);
    HyperParams hp = HyperParams::uniform(spec, 1.0, 0.2);
    hp.log_weight_var_layer = vec({std::log(1.5), std::log(0.7)});
    hp.log_bias_var_layer = vec({std::log(0.3), std::log(0.05)});
    const Eigen::VectorXd x = vec({0.4, -1.1});
    const double c = base_kernel(x, x, hp);
    EXPECT_NEAR(nngp_kernel(x, x, spec, hp), 0.7 * (1.5 * c / 2 + 0.3) / 2 + 0.05, 1e-14);
}

TEST(NngpKernel, SymmetricAndPositiveOnDiagonal) {
    Rng rng(11);
    for (auto fam : {KernelFamily::NNGP_Erf, KernelFamily::NNGP_ReLU})
        for (int L = 1; L <= 4; ++L) {
            const KernelSpec spec{fam, L, 3, false};
            Eigen::VectorXd theta(spec.kernel_param_count());
            for (auto& v : theta) v = 2 * rng.uniform() - 1;
            const auto hp = HyperParams::from_vector(spec, 0, theta);
            for (int k = 0; k < 20; ++k) {
                Eigen::VectorXd x(3), y(3);
                for (int i = 0; i < 3; ++i) x[i] = 2 * rng.uniform() - 1, y[i] = 2 * rng.uniform() - 1;
                EXPECT_EQ(nngp_kernel(x, y, spec, hp), nngp_kernel(y, x, spec, hp));
                EXPECT_GT(nngp_kernel(x, x, spec, hp), 0.0);
            }
        }
}

TEST(NngpKernel, ReducesToFixedVarianceKernel) {
    // the single-(sigma_w, sigma_b) network kernel, written out independently
    const double sw = 1.6, sb = 0.1;
    const int d = 2, L = 3;
    auto reference = [&](const Eigen::VectorXd& x, const Eigen::VectorXd& y, bool relu) {
        double kxx = sw / d * x.squaredNorm() + sb, kyy = sw / d * y.squaredNorm() + sb, kxy = sw / d * x.dot(y) + sb;
        for (int l = 0; l < L; ++l) {
            double nxx, nyy, nxy;
            if (relu) {
                const double t = std::acos(std::clamp(kxy / std::sqrt(kxx * kyy), -1.0, 1.0));
                nxy = sw / (2 * std::numbers::pi) * std::sqrt(kxx * kyy) * (std::sin(t) + (std::numbers::pi - t) * std::cos(t)) + sb;
                nxx = sw * kxx / 2 + sb;
                nyy = sw * kyy / 2 + sb;
            } else {
                auto f = [&](double a, double b, double c) {
                    return 2 * sw / std::numbers::pi * std::asin(2 * c / std::sqrt((1 + 2 * a) * (1 + 2 * b))) + sb;
                };
                nxy = f(kxx, kyy, kxy);
                nxx = f(kxx, kxx, kxx);
                nyy = f(kyy, kyy, kyy);
            }
            kxx = nxx, kyy = nyy, kxy = nxy;
        }
        return kxy;
    };
    const Eigen::VectorXd x = vec({0.3, -0.8}), y = vec({-0.5, 0.9});
    for (bool relu : {false, true}) {
        const KernelSpec spec{relu ? KernelFamily::NNGP_ReLU : KernelFamily::NNGP_Erf, L, d, false};
        HyperParams hp = HyperParams::uniform(spec, sw, sb);
        hp.log_weight_var_input.setConstant(std::log(sw / d));
        EXPECT_NEAR(nngp_kernel(x, y, spec, hp), reference(x, y, relu), 1e-14);
    }
}

TEST(ArcsinKernel, Examples) {
    const auto spec = KernelSpec::arcsin(1);
    HyperParams hp = HyperParams::uniform(spec, 1.0, 1.0);
    hp.log_bias_var_input = -1000.0;
    EXPECT_EQ(arcsin_kernel(vec({0.0}), vec({0.0}), hp), 0.0);

    hp = HyperParams::uniform(spec, 0.8, 0.3);
    const Eigen::VectorXd x = vec({0.5}), y = vec({-0.5});
    const double k0 = base_kernel(x, x, hp);
    EXPECT_NEAR(arcsin_kernel(x, x, hp), 2 / std::numbers::pi * std::asin(2 * k0 / (1 + 2 * k0)), 1e-15);
    EXPECT_LT(arcsin_kernel(x, x, hp), 1.0);
    // agrees with one erf layer, sigma_w = 1, sigma_b -> 0, applied to the same base kernel
    const double via_step = erf_step(base_kernel(x, x, hp), base_kernel(y, y, hp), base_kernel(x, y, hp), 1.0, 0.0);
    EXPECT_EQ(arcsin_kernel(x, y, hp), via_step);
}

TEST(StationaryKernels, Examples) {
    const Eigen::VectorXd x = vec({0.0, 0.0}), y = vec({1.0, 1.0});
    const auto se = KernelSpec::se(2);
    EXPECT_DOUBLE_EQ(se_kernel(x, x, HyperParams::stationary(se, 0.7, 2.5)), 2.5);
    EXPECT_NEAR(se_kernel(x, y, HyperParams::stationary(se, 1.0, 1.0)), std::exp(-1.0), 1e-15);
    const auto m = KernelSpec::matern52(1);
    EXPECT_NEAR(matern52_kernel(vec({0.0}), vec({1.0}), HyperParams::stationary(m, 1.0, 1.0)), 0.523994108831820311, 1e-15);
    EXPECT_DOUBLE_EQ(matern52_kernel(vec({0.3}), vec({0.3}), HyperParams::stationary(m, 1.0, 1.7)), 1.7);
}

TEST(StationaryKernels, ArdLengthScales) {
    KernelSpec spec = KernelSpec::se(2, true);
    HyperParams hp;
    hp.aux = vec({std::log(1.0), std::log(2.0), 0.0});
    const double k = Kernel(spec, hp)(vec({0, 0}), vec({1, 2}));
    EXPECT_NEAR(k, std::exp(-0.5 * (1.0 + 1.0)), 1e-15);
}

TEST(GramMatrix, Examples) {
    const auto spec = KernelSpec::nngp_erf(2, 2);
    const auto hp = HyperParams::uniform(spec, 1.6, 0.1);
    Eigen::MatrixXd X(1, 2);
    X << 0.2, 0.7;
    const Kernel k(spec, hp);
    EXPECT_EQ(gram_matrix(X, k)(0, 0), k(X.row(0).transpose(), X.row(0).transpose()));

    Eigen::MatrixXd D(2, 2);
    D << 0.2, 0.7, 0.2, 0.7;
    const auto G = gram_matrix(D, k);
    EXPECT_EQ(G(0, 0), G(0, 1));
    EXPECT_EQ(G(1, 0), G(1, 1));
    EXPECT_NEAR(G.determinant(), 0.0, 1e-14);

    const auto H = gram_matrix(halton(5, 2).points, k);
    EXPECT_EQ((H - H.transpose()).cwiseAbs().maxCoeff(), 0.0);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(H);
    EXPECT_GE(es.eigenvalues().minCoeff(), -1e-10);
}

TEST(GramMatrix, PositiveSemidefiniteAllFamilies) {
    Rng rng(3);
    Eigen::MatrixXd X(50, 2);
    for (Eigen::Index i = 0; i < X.size(); ++i) X.data()[i] = 2 * rng.uniform() - 1;
    const KernelSpec specs[] = {KernelSpec::nngp_erf(2, 3), KernelSpec::nngp_relu(2, 3), KernelSpec::arcsin(2),
                                KernelSpec::se(2), KernelSpec::matern52(2), {KernelFamily::Matern32, 0, 2, false}};
    for (const auto& spec : specs) {
        const auto hp = HyperParams::zeros(spec, 0);
        const auto G = gram_matrix(X, Kernel(spec, hp));
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(G);
        EXPECT_GE(es.eigenvalues().minCoeff(), -1e-8 * G.diagonal().maxCoeff()) << spec.name();
    }
}

TEST(GramMatrix, BlockPathMatchesPairwiseEvaluation) {
    Rng rng(11);
    Eigen::MatrixXd A(7, 3), B(5, 3);
    for (Eigen::Index i = 0; i < A.size(); ++i) A.data()[i] = 2 * rng.uniform() - 1;
    for (Eigen::Index i = 0; i < B.size(); ++i) B.data()[i] = 2 * rng.uniform() - 1;
    const KernelSpec specs[] = {KernelSpec::nngp_erf(3, 3), KernelSpec::nngp_relu(3, 2), KernelSpec::arcsin(3),
                                KernelSpec::se(3), KernelSpec::se(3, true), KernelSpec::matern52(3, true),
                                {KernelFamily::Matern32, 0, 3, false}};
    for (const auto& spec : specs) {
        Eigen::VectorXd theta(spec.kernel_param_count());
        for (Eigen::Index p = 0; p < theta.size(); ++p) theta[p] = rng.uniform() - 0.5;
        const Kernel k(spec, HyperParams::from_vector(spec, 0, theta));
        const Eigen::MatrixXd G = k.gram(A, B), S = k.gram(A, A, true);
        for (Eigen::Index i = 0; i < A.rows(); ++i) {
            for (Eigen::Index j = 0; j < B.rows(); ++j)
                EXPECT_NEAR(G(i, j), k(A.row(i).transpose(), B.row(j).transpose()), 1e-13) << spec.name();
            for (Eigen::Index j = 0; j < A.rows(); ++j)
                EXPECT_NEAR(S(i, j), k(A.row(i).transpose(), A.row(j).transpose()), 1e-13) << spec.name();
        }
        EXPECT_EQ((S - S.transpose()).cwiseAbs().maxCoeff(), 0.0) << spec.name();
    }
}

TEST(KernelSpec, ValidationAndCounts) {
    EXPECT_THROW((KernelSpec{KernelFamily::NNGP_Erf, 0, 2, false}.validate()), InputError);
    EXPECT_THROW((KernelSpec{KernelFamily::SE, 2, 2, false}.validate()), InputError);
    EXPECT_THROW((KernelSpec{KernelFamily::SE, 0, 0, false}.validate()), InputError);
    EXPECT_EQ(KernelSpec::nngp_relu(3, 4).kernel_param_count(), 3 + 1 + 8);
    EXPECT_EQ(KernelSpec::se(3, true).kernel_param_count(), 4);
    EXPECT_EQ(parse_family("nngp-erf"), KernelFamily::NNGP_Erf);
    EXPECT_THROW(parse_family("rbf2"), ConfigError);
}

TEST(HyperParams, FlatRoundTrip) {
    const auto spec = KernelSpec::nngp_erf(2, 3);
    Eigen::VectorXd v = Eigen::VectorXd::LinSpaced(spec.kernel_param_count() + 2, -1.0, 1.0);
    const auto hp = HyperParams::from_vector(spec, 2, v);
    EXPECT_EQ(hp.to_vector(), v);
    EXPECT_EQ(hp.noise_count(), 2);
    EXPECT_THROW(HyperParams::from_vector(spec, 1, v), InputError);
    HyperParams tiny = hp;
    tiny.log_noise_vars[0] = -100.0;
    EXPECT_EQ(tiny.noise_var(0), kNoiseFloor);
}
