////////////////////////////////////////////////////////////////////////////////
// design.hpp
////////////////////////////////////////////////////////////////////////////////
/*! @file
//  Design variables and their mapping onto the ground model.
//
//  Topology variables (one per spring, in [xi_min, 1]) set spring stiffness
//  through the penalized law k = k_max * xi^p. Shape variables (two per
//  movable node, in [0, 1]) interpolate polar/azimuth coordinate variations
//  between their bounds; the anchor node is excluded and node motion is
//  clamped to the design band in the altitude (polar) direction only.
*/
////////////////////////////////////////////////////////////////////////////////
#ifndef EXOSYN_DESIGN_HPP
#define EXOSYN_DESIGN_HPP

#include "exosyn/grid.hpp"

#include <stdexcept>
#include <vector>

namespace exosyn {

struct SolverParams {
    double penal = 3.0;
    double xi_min = 0.001;
    double k_max = 1e4;
    double F0 = 1.0;
    double constraint_tol = 2e-4; // epsilon of the synthesis constraints
    double theta_var_max = kPi / 8.0;
    double theta_var_min = -kPi / 8.0;
    double phi_var_max = kPi / 8.0;
    double phi_var_min = -kPi / 8.0;
    double perturb_angle = 1e-3; // end-effector virtual rotation

    /// Uniform rescale of the node-variation bounds (Case 3 uses 0.45).
    void scale_shape_bounds(double s) {
        theta_var_max *= s;
        theta_var_min *= s;
        phi_var_max *= s;
        phi_var_min *= s;
    }
};

inline double stiffness(double xi, const SolverParams& p) {
    if (xi < p.xi_min - 1e-12 || xi > 1.0 + 1e-12)
        throw std::invalid_argument("stiffness: topology variable outside [xi_min, 1]");
    return p.k_max * std::pow(xi, p.penal);
}

inline double stiffness_derivative(double xi, const SolverParams& p) {
    return p.k_max * p.penal * std::pow(xi, p.penal - 1.0);
}

/// Stacked design vector: N_s topology variables followed by 2(N_N - 1)
/// shape variables ordered by node index (skipping the fixed node), polar
/// variation first within each pair.
struct DesignVector {
    VecX xi_topology;
    VecX xi_shape;

    int size() const { return static_cast<int>(xi_topology.size() + xi_shape.size()); }

    VecX stacked() const {
        VecX x(size());
        x << xi_topology, xi_shape;
        return x;
    }

    static DesignVector from_stacked(const VecX& x, const SphericalGrid& g) {
        DesignVector d;
        d.xi_topology = x.head(g.n_springs());
        d.xi_shape = x.tail(2 * (g.n_nodes() - 1));
        return d;
    }

    static DesignVector median(const SphericalGrid& g) {
        DesignVector d;
        d.xi_topology = VecX::Constant(g.n_springs(), 0.5);
        d.xi_shape = VecX::Constant(2 * (g.n_nodes() - 1), 0.5);
        return d;
    }

    void validate(const SphericalGrid& g, const SolverParams& p) const {
        if (xi_topology.size() != g.n_springs() ||
            xi_shape.size() != 2 * (g.n_nodes() - 1))
            throw std::invalid_argument("DesignVector: size mismatch with grid");
        for (int m = 0; m < xi_topology.size(); ++m)
            if (xi_topology[m] < p.xi_min - 1e-12 || xi_topology[m] > 1.0 + 1e-12)
                throw std::invalid_argument("DesignVector: topology variable out of bounds");
        for (int i = 0; i < xi_shape.size(); ++i)
            if (xi_shape[i] < -1e-12 || xi_shape[i] > 1.0 + 1e-12)
                throw std::invalid_argument("DesignVector: shape variable out of bounds");
    }
};

/// First shape-variable index of a movable node (its pair occupies
/// shape_pair_base, shape_pair_base + 1); -1 for the fixed node.
inline int shape_pair_base(int node, const SphericalGrid& g) {
    if (node == g.fixed_node) return -1;
    return 2 * (node > g.fixed_node ? node - 1 : node);
}

struct NodePlacement {
    Vec3 position;      // unit vector
    Vec3 d_polar;       // d position / d xi(polar pair entry)
    Vec3 d_azimuth;     // d position / d xi(azimuth pair entry)
    bool clamped = false;
};

/// Displaced position of a node under the current shape variables, with
/// derivatives w.r.t. its two shape variables. Clamping to the design band
/// acts on the polar coordinate only and zeroes the corresponding derivative.
inline NodePlacement node_placement(int node, const SphericalGrid& g,
                                    const DesignVector& d, const SolverParams& p) {
    NodePlacement out;
    const double theta0 = g.node_theta[node];
    const double phi0 = g.node_phi[node];
    const int base = shape_pair_base(node, g);
    if (base < 0) {
        out.position = spherical_point(theta0, phi0);
        out.d_polar = out.d_azimuth = Vec3::Zero();
        return out;
    }

    const double xi_t = d.xi_shape[base];
    const double xi_p = d.xi_shape[base + 1];
    const double var_t = p.theta_var_max * xi_t + p.theta_var_min * (1.0 - xi_t);
    const double var_p = p.phi_var_max * xi_p + p.phi_var_min * (1.0 - xi_p);

    double theta = theta0 + var_t;
    double dtheta_dxi = p.theta_var_max - p.theta_var_min;
    if (theta < g.theta_upper()) {
        theta = g.theta_upper();
        dtheta_dxi = 0.0;
        out.clamped = true;
    } else if (theta > g.theta_lower()) {
        theta = g.theta_lower();
        dtheta_dxi = 0.0;
        out.clamped = true;
    }
    const double phi = phi0 + var_p;
    const double dphi_dxi = p.phi_var_max - p.phi_var_min;

    out.position = spherical_point(theta, phi);
    const Vec3 dpos_dtheta(std::cos(theta) * std::cos(phi),
                           std::cos(theta) * std::sin(phi),
                           -std::sin(theta));
    const Vec3 dpos_dphi(-std::sin(theta) * std::sin(phi),
                         std::sin(theta) * std::cos(phi), 0.0);
    out.d_polar = dpos_dtheta * dtheta_dxi;
    out.d_azimuth = dpos_dphi * dphi_dxi;
    return out;
}

/// Per-evaluation cache of the design-dependent quantities: spring
/// stiffnesses (with derivatives) and displaced node positions (with shape
/// derivatives).
struct DesignCache {
    std::vector<double> k;
    std::vector<double> dk_dxi;
    std::vector<NodePlacement> nodes;

    DesignCache(const SphericalGrid& g, const DesignVector& d, const SolverParams& p) {
        k.resize(g.n_springs());
        dk_dxi.resize(g.n_springs());
        for (int m = 0; m < g.n_springs(); ++m) {
            k[m] = stiffness(d.xi_topology[m], p);
            dk_dxi[m] = stiffness_derivative(d.xi_topology[m], p);
        }
        nodes.reserve(g.n_nodes());
        for (int l = 0; l < g.n_nodes(); ++l) nodes.push_back(node_placement(l, g, d, p));
    }
};

} // namespace exosyn

#endif // EXOSYN_DESIGN_HPP
