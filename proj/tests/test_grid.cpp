#include "exosyn/design.hpp"
#include "test_util.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <map>
#include <set>

using namespace exosyn;
namespace tu = exosyn::testutil;

TEST_CASE("reference grid sizes") {
    const SphericalGrid g = build_grid(4, 2, kPi / 2, kPi / 4);
    CHECK(g.n_blocks() == 8);
    CHECK(g.n_springs() == 20);
    CHECK(g.n_nodes() == 15);
    CHECK(g.block_input == 0);
    CHECK(g.block_effector == 3);
    CHECK(g.fixed_node == g.anchor_node);
    // anchor corner sits on the -Y axis for the reference domain
    CHECK((g.node_point(g.anchor_node) - Vec3(0, -1, 0)).norm() < 1e-15);
}

TEST_CASE("single and double block grids") {
    const SphericalGrid one = build_grid(1, 1, kPi / 2, kPi / 4);
    CHECK(one.n_blocks() == 1);
    CHECK(one.n_springs() == 0);
    CHECK(one.n_nodes() == 4);

    const SphericalGrid g2 = build_grid(2, 1, kPi / 2, kPi / 4);
    CHECK(g2.n_blocks() == 2);
    CHECK(g2.n_springs() == 2);
    CHECK(g2.n_nodes() == 6);
    CHECK(g2.block_effector == 1);
}

TEST_CASE("invalid bounds are rejected") {
    CHECK_THROWS_AS(build_grid(0, 2, kPi / 2, kPi / 4), std::invalid_argument);
    CHECK_THROWS_AS(build_grid(4, 2, 0.0, kPi / 4), std::invalid_argument);
    CHECK_THROWS_AS(build_grid(4, 2, 4.0, kPi / 4), std::invalid_argument);
    CHECK_THROWS_AS(build_grid(4, 2, kPi / 2, kPi / 2), std::invalid_argument);
    CHECK_THROWS_AS(build_grid(4, 2, kPi / 2, kPi / 4, 0), std::invalid_argument);
}

TEST_CASE("every spring node is a shared corner and pairs carry two springs") {
    for (int np : {1, 2, 3, 4}) {
        for (int nt : {1, 2, 3}) {
            if (np * nt < 2) continue;
            const SphericalGrid g = build_grid(np, nt, kPi / 2, kPi / 4);
            std::map<std::pair<int, int>, int> per_pair;
            for (const Spring& s : g.springs) {
                const auto& ca = g.blocks[s.block_first];
                const auto& cb = g.blocks[s.block_second];
                CHECK(std::count(ca.begin(), ca.end(), s.node) == 1);
                CHECK(std::count(cb.begin(), cb.end(), s.node) == 1);
                per_pair[{s.block_first, s.block_second}]++;
            }
            int adjacent_pairs = 0;
            for (int a = 0; a < g.n_blocks(); ++a) {
                for (int b = a + 1; b < g.n_blocks(); ++b) {
                    std::set<int> shared;
                    for (int ca : g.blocks[a])
                        for (int cb : g.blocks[b])
                            if (ca == cb) shared.insert(ca);
                    if (shared.size() == 2) {
                        ++adjacent_pairs;
                        CHECK(per_pair[{a, b}] == 2);
                    } else {
                        CHECK(per_pair.count({a, b}) == 0);
                    }
                }
            }
            CHECK(g.n_springs() == 2 * adjacent_pairs);
        }
    }
}

TEST_CASE("stiffness law") {
    SolverParams p;
    CHECK(stiffness(1.0, p) == Catch::Approx(1e4));
    CHECK(stiffness(0.5, p) == Catch::Approx(1.25e3));
    CHECK(stiffness(0.001, p) == Catch::Approx(1e-5));
    CHECK_THROWS_AS(stiffness(0.0, p), std::invalid_argument);
    CHECK_THROWS_AS(stiffness(1.5, p), std::invalid_argument);

    double prev = 0.0;
    for (double xi = 0.001; xi <= 1.0; xi += 0.01) {
        const double k = stiffness(xi, p);
        CHECK(k > prev);
        prev = k;
    }
}

TEST_CASE("node placement respects the fixed node, bounds, and clamping") {
    const SphericalGrid g = build_grid(4, 2, kPi / 2, kPi / 4);
    const SolverParams p;
    DesignVector d = DesignVector::median(g);

    SECTION("median shape variables leave nodes at their initial position") {
        for (int node = 0; node < g.n_nodes(); ++node) {
            const NodePlacement np = node_placement(node, g, d, p);
            CHECK((np.position - g.node_point(node)).norm() < 1e-14);
        }
    }

    SECTION("fixed node ignores the design") {
        for (auto& x : d.xi_shape) x = tu::uniform(0.0, 1.0);
        const NodePlacement np = node_placement(g.fixed_node, g, d, p);
        CHECK((np.position - g.node_point(g.fixed_node)).norm() < 1e-15);
        CHECK(np.d_polar.norm() == 0.0);
        CHECK(np.d_azimuth.norm() == 0.0);
    }

    SECTION("positions stay unit norm for random designs") {
        for (int trial = 0; trial < 50; ++trial) {
            for (auto& x : d.xi_shape) x = tu::uniform(0.0, 1.0);
            for (int node = 0; node < g.n_nodes(); ++node) {
                const NodePlacement np = node_placement(node, g, d, p);
                CHECK(std::abs(np.position.norm() - 1.0) < 1e-12);
            }
        }
    }

    SECTION("altitude clamping holds nodes inside the band, azimuth is free") {
        // equator-row node pushed downward (positive polar variation)
        const int low_node = g.node_index(0, 2);
        const int base = shape_pair_base(low_node, g);
        d = DesignVector::median(g);
        d.xi_shape[base] = 1.0;
        NodePlacement np = node_placement(low_node, g, d, p);
        CHECK(np.clamped);
        CHECK(np.position[2] == Catch::Approx(0.0).margin(1e-15));
        CHECK(np.d_polar.norm() == 0.0);

        // top-row node pushed upward (negative polar variation)
        const int top_node = g.node_index(2, 2);
        const int tbase = shape_pair_base(top_node, g);
        d = DesignVector::median(g);
        d.xi_shape[tbase] = 0.0;
        np = node_placement(top_node, g, d, p);
        CHECK(np.clamped);
        CHECK(np.position[2] == Catch::Approx(std::cos(g.theta_upper())).margin(1e-15));

        // azimuth may leave the band
        const int right_node = g.node_index(0, 4);
        const int rbase = shape_pair_base(right_node, g);
        d = DesignVector::median(g);
        d.xi_shape[rbase + 1] = 1.0; // +pi/8 past the Phi = 0 edge
        np = node_placement(right_node, g, d, p);
        CHECK(!np.clamped);
        CHECK(np.position[1] > 0.0);
    }

    SECTION("placement derivatives match central differences") {
        d = tu::random_interior_design(g);
        for (int node = 0; node < g.n_nodes(); ++node) {
            const int base = shape_pair_base(node, g);
            if (base < 0) continue;
            const NodePlacement np = node_placement(node, g, d, p);
            const double h = 1e-7;
            for (int off = 0; off < 2; ++off) {
                DesignVector dp = d, dm = d;
                dp.xi_shape[base + off] += h;
                dm.xi_shape[base + off] -= h;
                const Vec3 fd = (node_placement(node, g, dp, p).position -
                                 node_placement(node, g, dm, p).position) / (2 * h);
                const Vec3& analytic = off == 0 ? np.d_polar : np.d_azimuth;
                CHECK((fd - analytic).norm() < 1e-7);
            }
        }
    }
}
