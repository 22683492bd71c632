#include "nngp/quadrature.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

using namespace nngp;

TEST(GaussHermite, IntegratesGaussianMoments) {
    const auto rule = gauss_hermite(20);
    double m0 = 0, m2 = 0, m4 = 0;
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
        const double x = rule.nodes[i], w = rule.weights[i];
        m0 += w, m2 += w * x * x, m4 += w * x * x * x * x;
    }
    const double sp = std::sqrt(std::numbers::pi);
    EXPECT_NEAR(m0, sp, 1e-14);
    EXPECT_NEAR(m2, sp / 2, 1e-14);
    EXPECT_NEAR(m4, 3 * sp / 4, 1e-13);
}

TEST(GaussHermite, HighNodeCountStaysAccurate) {
    for (int n : {64, 128, 256}) {
        const auto rule = gauss_hermite(n);
        double m0 = 0, m2 = 0;
        for (std::size_t i = 0; i < rule.nodes.size(); ++i) m0 += rule.weights[i], m2 += rule.weights[i] * rule.nodes[i] * rule.nodes[i];
        EXPECT_NEAR(m0, std::sqrt(std::numbers::pi), 1e-13) << n;
        EXPECT_NEAR(m2, std::sqrt(std::numbers::pi) / 2, 1e-13) << n;
    }
}

TEST(GaussLegendre, IntegratesPolynomials) {
    const auto rule = gauss_legendre(5);
    double s = 0;
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) s += rule.weights[i] * std::pow(rule.nodes[i], 8);
    EXPECT_NEAR(s, 2.0 / 9.0, 1e-15);
}

TEST(NumericStep, IdentityActivationIsExact) {
    for (int nodes : {2, 3, 16})
        EXPECT_NEAR(numeric_step(1.3, 0.7, 0.4, 1.6, 0.1, Activation::identity(), nodes), 1.6 * 0.4 + 0.1, 1e-14);
    // piecewise table that is globally linear behaves like the identity
    const auto lin = Activation::table({-1.0, 0.0, 1.0}, {-2.0, 0.0, 2.0});
    EXPECT_NEAR(numeric_step(1.0, 1.0, 0.5, 1.0, 0.0, lin, 32), 4.0 * 0.5, 1e-12);
}

TEST(NumericStep, MatchesAnalyticSteps) {
    for (double rho : {-0.95, -0.3, 0.0, 0.5, 0.99}) {
        const double kxx = 1.7, kyy = 0.9;
        const double kxy = rho * std::sqrt(kxx * kyy);
        EXPECT_NEAR(numeric_step(kxx, kyy, kxy, 1.6, 0.1, Activation::erf()), erf_step(kxx, kyy, kxy, 1.6, 0.1), 1e-10);
        EXPECT_NEAR(numeric_step(kxx, kyy, kxy, 1.6, 0.1, Activation::relu()), relu_step(kxx, kyy, kxy, 1.6, 0.1), 1e-10);
    }
}

TEST(NumericStep, DegenerateCovarianceUsesUnivariatePath) {
    const double c = 1.3;
    const double exact = numeric_step(c, c, c, 1.6, 0.1, Activation::erf());
    const double near = numeric_step(c, c, c * (1 - 1e-9), 1.6, 0.1, Activation::erf());
    EXPECT_NEAR(exact, erf_step(c, c, c, 1.6, 0.1), 1e-10);
    EXPECT_NEAR(exact, near, 1e-8);
    EXPECT_NEAR(numeric_step(c, c, c, 1.6, 0.1, Activation::relu()), 0.8 * c + 0.1, 1e-12);
}

TEST(NumericStep, IndefiniteCovarianceThrows) {
    EXPECT_THROW(numeric_step(1.0, 1.0, 1.5, 1.0, 0.0, Activation::erf()), DomainError);
    EXPECT_THROW(numeric_step(-1.0, 1.0, 0.0, 1.0, 0.0, Activation::erf()), DomainError);
    EXPECT_THROW(numeric_step(1.0, 1.0, 0.0, 1.0, 0.0, Activation::erf(), 1), InputError);
}

TEST(NumericNngpKernel, DepthZeroIsBaseKernel) {
    const auto spec = KernelSpec::nngp_erf(2, 4);
    const auto hp = HyperParams::uniform(spec, 1.6, 0.1);
    Eigen::Vector2d x(0.6, 0.8), y(1.0, 0.0);
    EXPECT_EQ(numeric_nngp_kernel(x, y, hp, Activation::erf(), 0), base_kernel(x, y, hp));
}

TEST(NumericNngpKernel, NodeDoublingConverges) {
    const auto spec = KernelSpec::nngp_erf(2, 4);
    const auto hp = HyperParams::uniform(spec, 1.6, 0.1);
    for (double t : {0.1, 1.0, 2.5}) {
        Eigen::Vector2d x(1.0, 0.0), y(std::cos(t), std::sin(t));
        const double a = numeric_nngp_kernel(x, y, hp, Activation::erf(), 4, 32);
        const double b = numeric_nngp_kernel(x, y, hp, Activation::erf(), 4, 64);
        EXPECT_LT(std::abs(a - b), 1e-8);
        EXPECT_NEAR(b, nngp_kernel(x, y, spec, hp), 1e-6);
    }
}
