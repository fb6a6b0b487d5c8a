////////////////////////////////////////////////////////////////////////////////
// model.hpp
////////////////////////////////////////////////////////////////////////////////
/*! @file
//  Strain energy, internal force, and tangent stiffness of the
//  spring-connected spherical rigid block model.
//
//  Each spring m stores U_m = 1/2 k_m |A_second s_m - A_first s_m|^2 where
//  s_m is the (shape-displaced) shared corner and A_* are the orientation
//  matrices of the two incident blocks. The anchor spring ties the input
//  block's anchor corner to the ground at full stiffness. The unknown vector
//  stacks the Tait-Bryan triples of every block except the effector block,
//  whose pose is prescribed.
*/
////////////////////////////////////////////////////////////////////////////////
#ifndef EXOSYN_MODEL_HPP
#define EXOSYN_MODEL_HPP

#include "exosyn/design.hpp"

#include <vector>

namespace exosyn {

/// Orientation state of every block, effector included.
struct SystemState {
    std::vector<Vec3> q; // (rho, theta, phi) per block

    static SystemState zeros(const SphericalGrid& g) {
        SystemState s;
        s.q.assign(g.n_blocks(), Vec3::Zero());
        return s;
    }
};

/// First DOF index of a block inside the free vector (effector excluded);
/// -1 for the effector block itself.
inline int free_dof_base(int block, const SphericalGrid& g) {
    if (block == g.block_effector) return -1;
    return 3 * (block > g.block_effector ? block - 1 : block);
}

inline VecX pack_free(const SystemState& s, const SphericalGrid& g) {
    VecX v(g.n_free_dofs());
    for (int b = 0; b < g.n_blocks(); ++b) {
        const int at = free_dof_base(b, g);
        if (at >= 0) v.segment<3>(at) = s.q[b];
    }
    return v;
}

inline SystemState unpack_free(const VecX& v, const Vec3& q_effector, const SphericalGrid& g) {
    SystemState s = SystemState::zeros(g);
    for (int b = 0; b < g.n_blocks(); ++b) {
        const int at = free_dof_base(b, g);
        s.q[b] = at >= 0 ? Vec3(v.segment<3>(at)) : q_effector;
    }
    return s;
}

/// Per-state cache: orientation matrices and their angle partials per block.
struct StateCache {
    std::vector<RotationDerivatives> rot;

    StateCache(const SystemState& s) {
        rot.reserve(s.q.size());
        for (const Vec3& q : s.q) rot.push_back(rotation_derivatives(q));
    }
};

inline double total_energy(const SphericalGrid& g, const DesignCache& dc,
                           const StateCache& sc, const SolverParams& p) {
    double u_total = 0.0;
    for (int m = 0; m < g.n_springs(); ++m) {
        const Spring& sp = g.springs[m];
        const Vec3& s = dc.nodes[sp.node].position;
        const Vec3 u = sc.rot[sp.block_second].A * s - sc.rot[sp.block_first].A * s;
        u_total += 0.5 * dc.k[m] * u.squaredNorm();
    }
    const Vec3& so = dc.nodes[g.anchor_node].position;
    const Vec3 uo = sc.rot[g.block_input].A * so - so;
    u_total += 0.5 * p.k_max * uo.squaredNorm();
    return u_total;
}

/// Gradient of the energy w.r.t. the free state vector.
inline VecX internal_force(const SphericalGrid& g, const DesignCache& dc,
                           const StateCache& sc, const SolverParams& p) {
    VecX f = VecX::Zero(g.n_free_dofs());
    for (int m = 0; m < g.n_springs(); ++m) {
        const Spring& sp = g.springs[m];
        const Vec3& s = dc.nodes[sp.node].position;
        const Vec3 u = sc.rot[sp.block_second].A * s - sc.rot[sp.block_first].A * s;
        for (const auto& [block, sign] : {std::pair{sp.block_second, 1.0},
                                          std::pair{sp.block_first, -1.0}}) {
            const int at = free_dof_base(block, g);
            if (at < 0) continue;
            for (int i = 0; i < 3; ++i)
                f[at + i] += dc.k[m] * sign * (sc.rot[block].d[i] * s).dot(u);
        }
    }
    const Vec3& so = dc.nodes[g.anchor_node].position;
    const Vec3 uo = sc.rot[g.block_input].A * so - so;
    const int at = free_dof_base(g.block_input, g);
    if (at >= 0)
        for (int i = 0; i < 3; ++i)
            f[at + i] += p.k_max * (sc.rot[g.block_input].d[i] * so).dot(uo);
    return f;
}

/// Hessian of the energy w.r.t. the free state vector (symmetric).
inline MatX energy_hessian(const SphericalGrid& g, const DesignCache& dc,
                           const StateCache& sc, const SolverParams& p) {
    MatX h = MatX::Zero(g.n_free_dofs(), g.n_free_dofs());
    for (int m = 0; m < g.n_springs(); ++m) {
        const Spring& sp = g.springs[m];
        const Vec3& s = dc.nodes[sp.node].position;
        const Vec3 u = sc.rot[sp.block_second].A * s - sc.rot[sp.block_first].A * s;
        const std::pair<int, double> roles[2] = {{sp.block_second, 1.0}, {sp.block_first, -1.0}};
        for (const auto& [bn, sn] : roles) {
            const int an = free_dof_base(bn, g);
            if (an < 0) continue;
            for (const auto& [bm, sm] : roles) {
                const int am = free_dof_base(bm, g);
                if (am < 0) continue;
                for (int i = 0; i < 3; ++i) {
                    const Vec3 dn_s = sc.rot[bn].d[i] * s;
                    for (int j = 0; j < 3; ++j) {
                        double val = sn * sm * dn_s.dot(sc.rot[bm].d[j] * s);
                        if (bn == bm) val += sn * (sc.rot[bn].d2[i][j] * s).dot(u);
                        h(an + i, am + j) += dc.k[m] * val;
                    }
                }
            }
        }
    }
    const Vec3& so = dc.nodes[g.anchor_node].position;
    const Vec3 uo = sc.rot[g.block_input].A * so - so;
    const int at = free_dof_base(g.block_input, g);
    if (at >= 0) {
        const auto& rot = sc.rot[g.block_input];
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j)
                h(at + i, at + j) += p.k_max * ((rot.d[i] * so).dot(rot.d[j] * so) +
                                                (rot.d2[i][j] * so).dot(uo));
    }
    return h;
}

/// Partial of the internal force w.r.t. every design variable at fixed state,
/// as an n_free x n_design matrix (topology columns first, then shape pairs).
inline MatX internal_force_design_jacobian(const SphericalGrid& g, const DesignCache& dc,
                                           const StateCache& sc, const SolverParams& p) {
    const int n_xi = g.n_springs() + 2 * (g.n_nodes() - 1);
    MatX dfdxi = MatX::Zero(g.n_free_dofs(), n_xi);
    for (int m = 0; m < g.n_springs(); ++m) {
        const Spring& sp = g.springs[m];
        const NodePlacement& np = dc.nodes[sp.node];
        const Vec3& s = np.position;
        const Mat3 rel = sc.rot[sp.block_second].A - sc.rot[sp.block_first].A;
        const Vec3 u = rel * s;
        const int base = shape_pair_base(sp.node, g);
        for (const auto& [block, sign] : {std::pair{sp.block_second, 1.0},
                                          std::pair{sp.block_first, -1.0}}) {
            const int at = free_dof_base(block, g);
            if (at < 0) continue;
            for (int i = 0; i < 3; ++i) {
                const Mat3& di = sc.rot[block].d[i];
                dfdxi(at + i, m) += dc.dk_dxi[m] * sign * (di * s).dot(u);
                if (base < 0) continue;
                const Vec3 dis = di * s;
                for (const auto& [col, ds] : {std::pair{base, np.d_polar},
                                              std::pair{base + 1, np.d_azimuth}}) {
                    dfdxi(at + i, g.n_springs() + col) +=
                        dc.k[m] * sign * ((di * ds).dot(u) + dis.dot(rel * ds));
                }
            }
        }
    }
    // Anchor spring: its node is the fixed node, so only stateless terms and
    // no design dependence remain.
    return dfdxi;
}

/// Partial of the energy w.r.t. every design variable at fixed state.
inline VecX energy_design_gradient(const SphericalGrid& g, const DesignCache& dc,
                                   const StateCache& sc, const SolverParams& p) {
    const int n_xi = g.n_springs() + 2 * (g.n_nodes() - 1);
    VecX dudxi = VecX::Zero(n_xi);
    for (int m = 0; m < g.n_springs(); ++m) {
        const Spring& sp = g.springs[m];
        const NodePlacement& np = dc.nodes[sp.node];
        const Mat3 rel = sc.rot[sp.block_second].A - sc.rot[sp.block_first].A;
        const Vec3 u = rel * np.position;
        dudxi[m] += 0.5 * dc.dk_dxi[m] * u.squaredNorm();
        const int base = shape_pair_base(sp.node, g);
        if (base < 0) continue;
        dudxi[g.n_springs() + base] += dc.k[m] * u.dot(rel * np.d_polar);
        dudxi[g.n_springs() + base + 1] += dc.k[m] * u.dot(rel * np.d_azimuth);
    }
    return dudxi;
}

} // namespace exosyn

#endif // EXOSYN_MODEL_HPP
