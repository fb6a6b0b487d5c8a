#include "exosyn/mma.hpp"
#include "test_util.hpp"

#include <catch2/catch_amalgamated.hpp>

using namespace exosyn;

TEST_CASE("box-constrained quadratic converges to the analytic optimum") {
    // Interior optima are the hardest case for MMA: once the asymptotes hit
    // their minimum-distance clamp the iterates enter a small bound cycle of
    // radius ~(1 - albefa) * 0.01 * range, so convergence is measured on the
    // objective; components pinned at a box bound resolve essentially exactly.
    const int n = 5;
    VecX target(n);
    target << 0.55, -0.3, 0.8, 0.25, 0.95; // component 1 clips at the bound
    const VecX xmin = VecX::Constant(n, 0.0);
    const VecX xmax = VecX::Constant(n, 1.0);
    const VecX expected = target.cwiseMax(xmin).cwiseMin(xmax);
    const auto f = [&](const VecX& v) { return (v - target).squaredNorm(); };
    const double f_star = f(expected);

    MmaOptimizer mma(xmin, xmax, 0);
    VecX x = VecX::Constant(n, 0.5);
    int used = 0;
    for (int it = 0; it < 50; ++it, ++used) {
        const VecX df0 = 2.0 * (x - target);
        x = mma.step(x, df0, VecX(), MatX());
        if (f(x) - f_star < 1e-3) break;
    }
    INFO("iterations used: " << used + 1 << ", objective gap " << f(x) - f_star);
    CHECK(f(x) - f_star < 1e-3);
    CHECK(used + 1 <= 50);
    CHECK(std::abs(x[1] - expected[1]) < 1e-4); // bound-pinned component
    CHECK((x - expected).lpNorm<Eigen::Infinity>() < 2e-2);
}

TEST_CASE("iterates always stay inside the variable bounds") {
    const int n = 4;
    const VecX xmin = VecX::Constant(n, 0.001);
    const VecX xmax = VecX::Constant(n, 1.0);
    MmaOptimizer mma(xmin, xmax, 1);
    VecX x = VecX::Constant(n, 0.5);
    for (int it = 0; it < 30; ++it) {
        // wild gradients trying to push the iterate out
        const VecX df0 = VecX::Constant(n, it % 2 == 0 ? -1e3 : 1e3);
        const VecX g = VecX::Constant(1, -0.5);
        const MatX dg = MatX::Ones(1, n);
        x = mma.step(x, df0, g, dg);
        CHECK((x.array() >= xmin.array() - 1e-12).all());
        CHECK((x.array() <= xmax.array() + 1e-12).all());
    }
}

TEST_CASE("constraint violation decreases from an infeasible start") {
    // minimize x1 + x2 subject to 1.5 - x1 - x2 <= 0, start deep infeasible
    const VecX xmin = VecX::Constant(2, 0.0);
    const VecX xmax = VecX::Constant(2, 2.0);
    MmaOptimizer mma(xmin, xmax, 1);
    VecX x = VecX::Constant(2, 0.1);

    std::vector<double> violation{1.5 - x.sum()};
    for (int it = 0; it < 12; ++it) {
        const VecX df0 = VecX::Ones(2);
        const VecX g = VecX::Constant(1, 1.5 - x.sum());
        const MatX dg = -MatX::Ones(1, 2);
        x = mma.step(x, df0, g, dg);
        violation.push_back(1.5 - x.sum());
    }
    // strictly decreasing violation until feasibility is reached
    bool reached_feasible = false;
    for (size_t i = 1; i < violation.size(); ++i) {
        if (violation[i - 1] > 0.0)
            CHECK(violation[i] < violation[i - 1]);
        if (violation[i] <= 0.0) reached_feasible = true;
    }
    CHECK(reached_feasible);
    // and the optimum sits on the constraint boundary
    for (int it = 0; it < 40; ++it) {
        const VecX df0 = VecX::Ones(2);
        const VecX g = VecX::Constant(1, 1.5 - x.sum());
        const MatX dg = -MatX::Ones(1, 2);
        x = mma.step(x, df0, g, dg);
    }
    CHECK(x.sum() == Catch::Approx(1.5).margin(2e-3));
}

TEST_CASE("zero gradient leaves a feasible iterate nearly unchanged") {
    const VecX xmin = VecX::Constant(3, 0.0);
    const VecX xmax = VecX::Constant(3, 1.0);
    MmaOptimizer mma(xmin, xmax, 1);
    const VecX x0 = VecX::Constant(3, 0.4);
    const VecX g = VecX::Constant(1, -1.0);
    const MatX dg = MatX::Zero(1, 3);
    const VecX x1 = mma.step(x0, VecX::Zero(3), g, dg);
    CHECK((x1 - x0).lpNorm<Eigen::Infinity>() < 1e-6);
}

TEST_CASE("input validation") {
    const VecX xmin = VecX::Constant(2, 0.0);
    const VecX xmax = VecX::Constant(2, 1.0);
    CHECK_THROWS_AS(MmaOptimizer(xmax, xmin, 1), std::invalid_argument);
    MmaOptimizer mma(xmin, xmax, 2);
    VecX bad = VecX::Constant(2, std::nan(""));
    CHECK_THROWS_AS(mma.step(VecX::Constant(2, 0.5), bad, VecX::Zero(2), MatX::Zero(2, 2)),
                    std::invalid_argument);
    CHECK_THROWS_AS(mma.step(VecX::Constant(2, 0.5), VecX::Zero(2), VecX::Zero(1),
                             MatX::Zero(1, 2)),
                    std::invalid_argument);
}
