////////////////////////////////////////////////////////////////////////////////
// equilibrium.hpp
////////////////////////////////////////////////////////////////////////////////
/*! @file
//  Static equilibrium of the block model under a prescribed effector pose.
//
//  The effector block follows a given Tait-Bryan triple while a resistive
//  moment M = F0 * (w x w_prev) acts on the input block, where w is the
//  current position of the input block's tracking point A*[0,0,1] and w_prev
//  is its position at the previously converged time step. The moment enters
//  the equilibrium equations as the generalized force conjugate to the input
//  block's angle triple. Solved with damped Newton on the analytic tangent,
//  warm-started across time steps; failed steps retry once with a regularized
//  tangent and subdivide the pose increment before giving up.
*/
////////////////////////////////////////////////////////////////////////////////
#ifndef EXOSYN_EQUILIBRIUM_HPP
#define EXOSYN_EQUILIBRIUM_HPP

#include "exosyn/model.hpp"

#include <Eigen/LU>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace exosyn {

/// Columns of the map from angle rates (rho', theta', phi') to the world
/// angular velocity of a block: omega = B(q) qdot. Its transpose converts an
/// applied world moment into the generalized force conjugate to q. At q = 0 it
/// reduces to picking the (y, z, x) moment components in that order.
struct AngularVelocityMap {
    Mat3 B;
    std::array<Mat3, 3> dB; // dB/drho, dB/dtheta, dB/dphi

    explicit AngularVelocityMap(const Vec3& q) {
        const Mat3 ry = rot_y(q[0]), rz = rot_z(q[1]);
        const Mat3 dry = drot_y(q[0]), drz = drot_z(q[1]);
        const Vec3 ex = Vec3::UnitX(), ey = Vec3::UnitY(), ez = Vec3::UnitZ();
        B.col(0) = ey;
        B.col(1) = ry * ez;
        B.col(2) = ry * rz * ex;
        dB[0].setZero();
        dB[0].col(1) = dry * ez;
        dB[0].col(2) = dry * rz * ex;
        dB[1].setZero();
        dB[1].col(2) = ry * drz * ex;
        dB[2].setZero();
    }
};

/// Resistive moment on the input block and its conversion to a generalized
/// force, with the partials needed by the Newton tangent and the design
/// sensitivities.
struct ResistiveLoad {
    double F0 = 0.0;
    Vec3 w_prev = Vec3::UnitZ();

    struct Eval {
        Vec3 w;            // current tracking point
        Vec3 moment;       // world moment on the input block
        Vec3 force;        // generalized force conjugate to q_I
        Mat3 dforce_dq;    // w.r.t. the input block's triple
        Mat3 dforce_dwprev;
    };

    Eval eval(const RotationDerivatives& rot_input, const Vec3& q_input) const {
        Eval e;
        const Vec3 ez = Vec3::UnitZ();
        e.w = rot_input.A * ez;
        e.moment = F0 * e.w.cross(w_prev);
        const AngularVelocityMap map(q_input);
        e.force = map.B.transpose() * e.moment;
        for (int j = 0; j < 3; ++j) {
            const Vec3 dw = rot_input.d[j] * ez;
            const Vec3 dmoment = F0 * dw.cross(w_prev);
            e.dforce_dq.col(j) =
                map.dB[j].transpose() * e.moment + map.B.transpose() * dmoment;
        }
        e.dforce_dwprev = map.B.transpose() * (F0 * cross_matrix(e.w));
        return e;
    }
};

struct NewtonOptions {
    double tol = 1e-5;            // infinity norm of the residual
    int max_iterations = 200;
    double regularization = 1e-4; // added to the tangent diagonal on retry
    int max_backtracks = 40;
    int max_subdivisions = 6;     // pose-increment halvings in trajectories

    static NewtonOptions defaults(const SolverParams& p) {
        NewtonOptions o;
        o.tol = 1e-9 * p.k_max;
        o.regularization = 1e-8 * p.k_max;
        return o;
    }
};

class EquilibriumFailure : public std::runtime_error {
public:
    EquilibriumFailure(const std::string& what, double residual, int step = -1)
        : std::runtime_error(what), residual_inf(residual), time_step(step) {}
    double residual_inf;
    int time_step; // -1 when not part of a trajectory
};

struct EquilibriumResult {
    VecX v;
    SystemState state;
    double residual_inf = 0.0;
    int iterations = 0;
};

namespace detail {

inline VecX equilibrium_residual(const VecX& v, const Vec3& q_effector,
                                 const SphericalGrid& g, const DesignCache& dc,
                                 const SolverParams& p, const ResistiveLoad* load) {
    const SystemState state = unpack_free(v, q_effector, g);
    const StateCache sc(state);
    VecX r = internal_force(g, dc, sc, p);
    if (load && load->F0 != 0.0) {
        const int at = free_dof_base(g.block_input, g);
        const auto e = load->eval(sc.rot[g.block_input], state.q[g.block_input]);
        r.segment<3>(at) -= e.force;
    }
    return r;
}

inline MatX equilibrium_tangent(const VecX& v, const Vec3& q_effector,
                                const SphericalGrid& g, const DesignCache& dc,
                                const SolverParams& p, const ResistiveLoad* load) {
    const SystemState state = unpack_free(v, q_effector, g);
    const StateCache sc(state);
    MatX k = energy_hessian(g, dc, sc, p);
    if (load && load->F0 != 0.0) {
        const int at = free_dof_base(g.block_input, g);
        const auto e = load->eval(sc.rot[g.block_input], state.q[g.block_input]);
        k.block<3, 3>(at, at) -= e.dforce_dq;
    }
    return k;
}

} // namespace detail

/// Solves F_int(v) = F_ext(v) for the free block states at a prescribed
/// effector pose. Throws EquilibriumFailure on non-convergence.
inline EquilibriumResult solve_equilibrium(const Vec3& q_effector, const SphericalGrid& g,
                                           const DesignCache& dc, const SolverParams& p,
                                           const ResistiveLoad* load, const VecX& warm_start,
                                           const NewtonOptions& opts) {
    VecX v = warm_start.size() == g.n_free_dofs() ? warm_start
                                                  : VecX::Zero(g.n_free_dofs());
    VecX r = detail::equilibrium_residual(v, q_effector, g, dc, p, load);
    double phi = 0.5 * r.squaredNorm();

    const auto try_direction = [&](const VecX& dir) {
        double alpha = 1.0;
        for (int bt = 0; bt < opts.max_backtracks; ++bt, alpha *= 0.5) {
            const VecX v_try = v + alpha * dir;
            const VecX r_try = detail::equilibrium_residual(v_try, q_effector, g, dc, p, load);
            const double phi_try = 0.5 * r_try.squaredNorm();
            if (phi_try <= (1.0 - 1e-4 * alpha) * phi) {
                v = v_try;
                r = r_try;
                phi = phi_try;
                return true;
            }
        }
        return false;
    };

    for (int it = 0; it < opts.max_iterations; ++it) {
        if (r.lpNorm<Eigen::Infinity>() <= opts.tol) {
            EquilibriumResult res;
            res.v = v;
            res.state = unpack_free(v, q_effector, g);
            res.residual_inf = r.lpNorm<Eigen::Infinity>();
            res.iterations = it;
            return res;
        }

        const MatX k = detail::equilibrium_tangent(v, q_effector, g, dc, p, load);
        bool accepted = false;
        // plain Newton, then increasingly shifted tangents, then the merit
        // gradient -K^T r as a last resort on indefinite configurations
        double mu = 0.0;
        for (int attempt = 0; attempt < 4 && !accepted; ++attempt) {
            MatX ks = k;
            ks.diagonal().array() += mu;
            const Eigen::FullPivLU<MatX> lu(ks);
            if (lu.isInvertible() && try_direction(lu.solve(-r))) {
                accepted = true;
                break;
            }
            mu = mu == 0.0 ? opts.regularization : 100.0 * mu;
        }
        if (!accepted) {
            const VecX steepest = -k.transpose() * r;
            if (steepest.norm() > 1e-300)
                accepted = try_direction(steepest / std::max(1.0, steepest.norm()));
        }
        if (!accepted)
            throw EquilibriumFailure("equilibrium Newton stalled (no descent direction)",
                                     r.lpNorm<Eigen::Infinity>());
    }
    throw EquilibriumFailure("equilibrium Newton exceeded " +
                                 std::to_string(opts.max_iterations) + " iterations",
                             r.lpNorm<Eigen::Infinity>());
}

struct TrajectoryResult {
    std::vector<EquilibriumResult> steps;
    std::vector<Vec3> w;          // tracking point per step, w[0] is undeformed
    std::vector<Vec3> forces;     // generalized resistive force at each step
    std::vector<Vec3> moments;    // world resistive moment at each step
};

/// Sequentially solves the prescribed effector poses. The resistive moment at
/// step t uses the converged tracking point of step t-1; each solve warm
/// starts from the previous state. A failing step is retried through halved
/// pose increments (the load keeps the step's w_prev) before the failure is
/// reported with its time step.
inline TrajectoryResult run_trajectory(const std::vector<Vec3>& poses, const SphericalGrid& g,
                                       const DesignCache& dc, const SolverParams& p,
                                       double F0, const NewtonOptions& opts) {
    TrajectoryResult out;
    out.w.push_back(Vec3::UnitZ());
    VecX warm = VecX::Zero(g.n_free_dofs());
    Vec3 pose_prev = Vec3::Zero();

    for (size_t t = 0; t < poses.size(); ++t) {
        const ResistiveLoad load{F0, out.w.back()};
        std::optional<EquilibriumResult> result;
        try {
            result = solve_equilibrium(poses[t], g, dc, p, &load, warm, opts);
        } catch (const EquilibriumFailure&) {
            // Continuation fallback 1: walk the pose increment in 2^d pieces.
            for (int depth = 1; depth <= opts.max_subdivisions && !result; ++depth) {
                const int pieces = 1 << depth;
                VecX v_sub = warm;
                try {
                    for (int s = 1; s <= pieces; ++s) {
                        const Vec3 pose =
                            pose_prev + (poses[t] - pose_prev) * (double(s) / pieces);
                        auto sub = solve_equilibrium(pose, g, dc, p, &load, v_sub, opts);
                        v_sub = sub.v;
                        if (s == pieces) result = sub;
                    }
                } catch (const EquilibriumFailure&) {
                    result.reset();
                }
            }
            // Continuation fallback 2: reach the pose unloaded, then ramp the
            // resistive moment; equilibrium folds under load often connect
            // through the (pose, load) product space.
            if (!result) {
                try {
                    VecX v_sub = warm;
                    for (int s = 0; s <= 8; ++s) {
                        const ResistiveLoad ramp{F0 * (double(s) / 8), out.w.back()};
                        auto sub = solve_equilibrium(poses[t], g, dc, p, &ramp, v_sub, opts);
                        v_sub = sub.v;
                        if (s == 8) result = sub;
                    }
                } catch (const EquilibriumFailure&) {
                    result.reset();
                }
            }
            if (!result)
                throw EquilibriumFailure(
                    "trajectory step " + std::to_string(t + 1) + " failed to converge",
                    -1.0, static_cast<int>(t + 1));
        }

        const StateCache sc(result->state);
        const auto e = load.eval(sc.rot[g.block_input], result->state.q[g.block_input]);
        out.w.push_back(e.w);
        out.forces.push_back(e.force);
        out.moments.push_back(e.moment);
        warm = result->v;
        pose_prev = poses[t];
        out.steps.push_back(std::move(*result));
    }
    return out;
}

} // namespace exosyn

#endif // EXOSYN_EQUILIBRIUM_HPP
