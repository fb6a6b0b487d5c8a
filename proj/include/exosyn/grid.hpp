////////////////////////////////////////////////////////////////////////////////
// grid.hpp
////////////////////////////////////////////////////////////////////////////////
/*! @file
//  Spherical ground model geometry: a band of the unit sphere
//  { (Theta, Phi) : pi/2 - theta_span <= Theta <= pi/2, -phi_span <= Phi <= 0 }
//  uniformly discretized into n_azimuth x n_polar rigid blocks. Adjacent
//  blocks share an edge with two corner nodes; each shared corner carries one
//  zero-length spring, so every edge-adjacent block pair contributes exactly
//  two springs. Block 0 (lower-left: equator row, Phi = -phi_span column) is
//  the input block; its lower-left corner node is the anchor node, which is
//  also the one node whose coordinates never vary during synthesis.
*/
////////////////////////////////////////////////////////////////////////////////
#ifndef EXOSYN_GRID_HPP
#define EXOSYN_GRID_HPP

#include "exosyn/geometry.hpp"

#include <array>
#include <stdexcept>
#include <string>
#include <vector>

namespace exosyn {

/// Zero-length spring joining two blocks at a shared corner node.
struct Spring {
    int node;         // grid node the spring sits at
    int block_first;  // the (m,1) role in the energy expression
    int block_second; // the (m,2) role
};

struct SphericalGrid {
    int n_azimuth = 0; // blocks along Phi
    int n_polar = 0;   // blocks along Theta
    double phi_span = 0.0;
    double theta_span = 0.0;

    std::vector<double> node_theta; // initial polar angle per node
    std::vector<double> node_phi;   // initial azimuth per node
    std::vector<std::array<int, 4>> blocks; // corner nodes, CCW from lower-left
    std::vector<Spring> springs;

    int anchor_node = 0;
    int fixed_node = 0;
    int block_input = 0;    // block I, carries the actuator
    int block_effector = 0; // block A, carries the end-effector

    int n_blocks() const { return static_cast<int>(blocks.size()); }
    int n_springs() const { return static_cast<int>(springs.size()); }
    int n_nodes() const { return static_cast<int>(node_theta.size()); }

    int node_index(int row, int col) const { return row * (n_azimuth + 1) + col; }
    int block_index(int row, int col) const { return row * n_azimuth + col; }

    /// Undisplaced node position on the unit sphere.
    Vec3 node_point(int node) const { return spherical_point(node_theta[node], node_phi[node]); }

    double theta_lower() const { return kPi / 2.0; }               // equator edge
    double theta_upper() const { return kPi / 2.0 - theta_span; }  // top edge

    /// Number of unknown state components once the effector pose is prescribed.
    int n_free_dofs() const { return 3 * (n_blocks() - 1); }
};

/// Builds the uniform grid. The effector block defaults to the fourth block
/// (the lower-right block of the reference 4x2 layout) or the last block on
/// smaller grids; pass block_effector >= 0 to override.
inline SphericalGrid build_grid(int n_azimuth, int n_polar, double phi_span,
                                double theta_span, int block_effector = -1) {
    if (n_azimuth < 1 || n_polar < 1)
        throw std::invalid_argument("build_grid: block counts must be >= 1, got " +
                                    std::to_string(n_azimuth) + "x" + std::to_string(n_polar));
    if (!(phi_span > 0.0) || phi_span > kPi)
        throw std::invalid_argument("build_grid: phi_span must lie in (0, pi]");
    if (!(theta_span > 0.0) || theta_span >= kPi / 2.0)
        throw std::invalid_argument("build_grid: theta_span must lie in (0, pi/2)");

    SphericalGrid g;
    g.n_azimuth = n_azimuth;
    g.n_polar = n_polar;
    g.phi_span = phi_span;
    g.theta_span = theta_span;

    const double dtheta = theta_span / n_polar;
    const double dphi = phi_span / n_azimuth;

    // Node rows start at the equator (Theta = pi/2) and climb toward the top
    // edge; columns run from Phi = -phi_span to Phi = 0.
    for (int r = 0; r <= n_polar; ++r) {
        for (int c = 0; c <= n_azimuth; ++c) {
            g.node_theta.push_back(kPi / 2.0 - r * dtheta);
            g.node_phi.push_back(-phi_span + c * dphi);
        }
    }

    for (int r = 0; r < n_polar; ++r) {
        for (int c = 0; c < n_azimuth; ++c) {
            g.blocks.push_back({g.node_index(r, c), g.node_index(r, c + 1),
                                g.node_index(r + 1, c + 1), g.node_index(r + 1, c)});
        }
    }

    // Two springs per edge-adjacent pair, one at each shared corner node.
    for (int r = 0; r < n_polar; ++r) {
        for (int c = 0; c < n_azimuth; ++c) {
            const int b = g.block_index(r, c);
            if (c + 1 < n_azimuth) {
                const int nb = g.block_index(r, c + 1);
                g.springs.push_back({g.node_index(r, c + 1), b, nb});
                g.springs.push_back({g.node_index(r + 1, c + 1), b, nb});
            }
            if (r + 1 < n_polar) {
                const int nb = g.block_index(r + 1, c);
                g.springs.push_back({g.node_index(r + 1, c), b, nb});
                g.springs.push_back({g.node_index(r + 1, c + 1), b, nb});
            }
        }
    }

    g.anchor_node = g.node_index(0, 0);
    g.fixed_node = g.anchor_node;
    g.block_input = 0;
    if (block_effector >= 0) {
        if (block_effector >= g.n_blocks() ||
            (block_effector == g.block_input && g.n_blocks() > 1))
            throw std::invalid_argument("build_grid: invalid effector block index");
        g.block_effector = block_effector;
    } else {
        g.block_effector = g.n_blocks() >= 4 ? 3 : g.n_blocks() - 1;
    }
    return g;
}

} // namespace exosyn

#endif // EXOSYN_GRID_HPP
