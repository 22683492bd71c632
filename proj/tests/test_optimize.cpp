#include "nngp/optimize.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace nngp;

TEST(Minimize, ConvexQuadratic) {
    Eigen::MatrixXd A(3, 3);
    A << 4, 1, 0, 1, 3, 0.5, 0, 0.5, 2;
    const Eigen::Vector3d b(1, -2, 0.5);
    const Eigen::VectorXd xs = A.ldlt().solve(b);
    int calls = 0, first_close = -1;
    auto fg = [&](const Eigen::VectorXd& x) {
        ++calls;
        if (first_close < 0 && (x - xs).norm() < 1e-6) first_close = calls;
        return std::make_pair(0.5 * x.dot(A * x) - b.dot(x), Eigen::VectorXd(A * x - b));
    };
    const auto r = minimize(fg, Eigen::VectorXd::Zero(3));
    EXPECT_LT((r.x - xs).norm(), 1e-6);
    ASSERT_GT(first_close, 0);
    EXPECT_LT(first_close, 50);
}

TEST(Minimize, Rosenbrock) {
    auto fg = [](const Eigen::VectorXd& x) {
        const double a = 1 - x[0], b = x[1] - x[0] * x[0];
        Eigen::VectorXd g(2);
        g << -2 * a - 400 * x[0] * b, 200 * b;
        return std::make_pair(a * a + 100 * b * b, g);
    };
    MinimizeOptions opt;
    opt.max_evaluations = 400;
    const auto r = minimize(fg, Eigen::Vector2d(-1.2, 1.0), opt);
    EXPECT_NEAR(r.x[0], 1.0, 1e-4);
    EXPECT_NEAR(r.x[1], 1.0, 1e-4);
}

TEST(Minimize, RespectsEvaluationCap) {
    int calls = 0;
    auto fg = [&](const Eigen::VectorXd& x) {
        ++calls;
        const double a = 1 - x[0], b = x[1] - x[0] * x[0];
        Eigen::VectorXd g(2);
        g << -2 * a - 400 * x[0] * b, 200 * b;
        return std::make_pair(a * a + 100 * b * b, g);
    };
    MinimizeOptions opt;
    opt.max_evaluations = 15;
    const auto r = minimize(fg, Eigen::Vector2d(-1.2, 1.0), opt);
    EXPECT_LE(calls, 15);
    EXPECT_EQ(r.evaluations, calls);
}

TEST(Minimize, NeverWorseThanStart) {
    // objective with a non-finite region the line search must back away from
    auto fg = [](const Eigen::VectorXd& x) {
        if (x[0] > 2.0) return std::make_pair(std::numeric_limits<double>::quiet_NaN(), Eigen::VectorXd(x));
        Eigen::VectorXd g(1);
        g << -std::exp(-x[0]) + 0.1;
        return std::make_pair(std::exp(-x[0]) + 0.1 * x[0], g);
    };
    const auto r = minimize(fg, Eigen::VectorXd::Zero(1));
    EXPECT_LE(r.f, 1.0);
    EXPECT_LE(r.x[0], 2.0);
    EXPECT_TRUE(std::isfinite(r.f));
}
