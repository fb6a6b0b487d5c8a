////////////////////////////////////////////////////////////////////////////////
// response.hpp
////////////////////////////////////////////////////////////////////////////////
/*! @file
//  Optimization response of a design over a case trajectory.
//
//  Objective side: the reverse work transmittance efficiency
//  zeta_t = W_out(t) / (W_out(t) + U_t), where W_out accumulates the work the
//  resistive moment extracts at the input block and U_t is the stored spring
//  energy. Constraint side: at every step the effector pose is perturbed by a
//  small rotation about each global axis; the input block's response rotation
//  is compared against the target rotation kappa_alpha * dtheta about the
//  input moment axis through the displacement of three orthonormal tracking
//  points. psi(0..2), psi(3..5), psi(6..8) collect the X-, Y-, Z-perturbation
//  mismatches of the three points. The direct moment direction/magnitude
//  errors are evaluated from the same perturbed solves via virtual work and
//  reported as diagnostics only.
*/
////////////////////////////////////////////////////////////////////////////////
#ifndef EXOSYN_RESPONSE_HPP
#define EXOSYN_RESPONSE_HPP

#include "exosyn/cases.hpp"
#include "exosyn/equilibrium.hpp"

#include <array>
#include <cmath>
#include <vector>

namespace exosyn {

inline Vec3 resistive_moment(const Vec3& w_t, const Vec3& w_prev, double F0) {
    return F0 * w_t.cross(w_prev);
}

/// Generalized force conjugate to a block's angle triple for a world moment.
inline Vec3 generalized_force(const Vec3& moment, const Vec3& q) {
    return AngularVelocityMap(q).B.transpose() * moment;
}

/// Cumulative output work at the input block: each step contributes the
/// resistive force dotted with the backward step of the block's triple.
inline double output_work(const std::vector<Vec3>& forces,
                          const std::vector<Vec3>& q_input, int upto) {
    double w = 0.0;
    for (int t = 0; t < upto; ++t) {
        const Vec3 q_before = t == 0 ? Vec3::Zero() : q_input[t - 1];
        w += forces[t].dot(q_before - q_input[t]);
    }
    return w;
}

inline double efficiency(double w_out, double energy, bool* degenerate = nullptr) {
    const double denom = w_out + energy;
    if (std::abs(denom) < 1e-14) {
        if (degenerate) *degenerate = true;
        return 0.0;
    }
    if (degenerate) *degenerate = false;
    return w_out / denom;
}

/// Small end-effector perturbation about a global axis (0 = X, 1 = Y, 2 = Z):
/// the perturbed prescribed pose in Tait-Bryan form.
inline Vec3 perturbed_effector_pose(const Vec3& q_effector, int axis, double dtheta) {
    const Vec3 unit = Vec3::Unit(axis);
    const Mat3 a_pert = axis_angle_matrix(unit, dtheta) * rotation_matrix(q_effector);
    return tait_bryan_from_matrix(a_pert);
}

/// Displacements of the tracking points p_j = e_j under the relative rotation
/// from the base to the perturbed input-block orientation (columns of
/// A_rel - I, identical to applying the Chasles axis-angle exponential).
inline std::array<Vec3, 3> position_variations(const Mat3& a_base, const Mat3& a_pert) {
    const Mat3 rel = a_pert * a_base.transpose() - Mat3::Identity();
    return {rel.col(0), rel.col(1), rel.col(2)};
}

/// Target displacements: the input block should rotate by kappa * dtheta
/// about the input moment axis.
inline std::array<Vec3, 3> target_variations(double kappa, double dtheta,
                                             const Vec3& input_direction) {
    const Mat3 rel = axis_angle_matrix(input_direction, kappa * dtheta) - Mat3::Identity();
    return {rel.col(0), rel.col(1), rel.col(2)};
}

struct MomentDiagnostics {
    double psi_direction = 0.0;     // squared direction cosine minus one, in [-1, 0]
    double psi_direction_abs = 0.0; // reported alongside, |psi_direction|
    double psi_magnitude = 0.0;
    bool valid = false;
};

/// Direct moment errors (diagnostic only): direction via the squared cosine
/// between measured and target output moments, magnitude relative to the
/// input moment magnitude (= 1 in kappa units).
inline MomentDiagnostics diagnostic_moment_error(const Vec3& m_out, const Vec3& m_target) {
    MomentDiagnostics d;
    if (m_out.norm() < 1e-300 || m_target.norm() < 1e-300) return d;
    const double c = m_out.normalized().dot(m_target.normalized());
    d.psi_direction = c * c - 1.0;
    d.psi_direction_abs = std::abs(d.psi_direction);
    d.psi_magnitude = std::abs(m_out.norm() - m_target.norm());
    d.valid = true;
    return d;
}

struct StepResponse {
    double zeta = 0.0;
    double work_out = 0.0;
    double energy = 0.0;
    bool degenerate = false;
    std::array<double, 9> psi{}; // [axis * 3 + point]
    Vec3 kappa_measured = Vec3::Zero();
    MomentDiagnostics diagnostics;
};

struct ResponseReport {
    std::vector<StepResponse> steps;
    double zeta_bar = 0.0;
    double max_psi_flexion = 0.0;   // X-perturbation group
    double max_psi_abduction = 0.0; // Y-perturbation group
    double max_psi_rotation = 0.0;  // Z-perturbation group

    double max_psi() const {
        return std::max({max_psi_flexion, max_psi_abduction, max_psi_rotation});
    }
    bool feasible(double tol) const { return max_psi() <= tol; }
};

/// Everything the sensitivity pass needs from one response evaluation.
struct ResponseWorkspace {
    TrajectoryResult base;
    std::vector<Vec3> q_input;                     // input block triple per step
    std::vector<std::array<EquilibriumResult, 3>> perturbed; // [t][axis]
    std::vector<std::array<Vec3, 3>> pose_perturbed;
    ResponseReport report;
};

inline ResponseWorkspace evaluate_response(const MomentCase& mc, const SphericalGrid& g,
                                           const DesignCache& dc, const SolverParams& p,
                                           const NewtonOptions& opts,
                                           bool with_perturbations = true) {
    mc.validate();
    ResponseWorkspace ws;
    ws.base = run_trajectory(mc.poses, g, dc, p, p.F0, opts);
    const int T = mc.steps();

    ws.report.steps.resize(T);
    for (int t = 0; t < T; ++t) ws.q_input.push_back(ws.base.steps[t].state.q[g.block_input]);

    double zeta_sum = 0.0;
    int zeta_count = 0;
    for (int t = 0; t < T; ++t) {
        StepResponse& step = ws.report.steps[t];
        const StateCache sc(ws.base.steps[t].state);
        step.energy = total_energy(g, dc, sc, p);
        step.work_out = output_work(ws.base.forces, ws.q_input, t + 1);
        step.zeta = efficiency(step.work_out, step.energy, &step.degenerate);
        // A degenerate first step of an all-zero pose carries no information
        // and is left out of the average; any other degenerate step counts.
        const bool skip = step.degenerate && t == 0 && mc.poses[0].isZero(0.0);
        if (!skip) {
            zeta_sum += step.zeta;
            ++zeta_count;
        }
    }
    ws.report.zeta_bar = zeta_count > 0 ? zeta_sum / zeta_count : 0.0;

    if (!with_perturbations) return ws;

    ws.perturbed.resize(T);
    ws.pose_perturbed.resize(T);
    for (int t = 0; t < T; ++t) {
        StepResponse& step = ws.report.steps[t];
        const Mat3 a_base = rotation_matrix(ws.q_input[t]);
        for (int axis = 0; axis < 3; ++axis) {
            const Vec3 pose = perturbed_effector_pose(mc.poses[t], axis, p.perturb_angle);
            ws.pose_perturbed[t][axis] = pose;
            const ResistiveLoad load{p.F0, ws.base.w[t]};
            try {
                ws.perturbed[t][axis] = solve_equilibrium(pose, g, dc, p, &load,
                                                          ws.base.steps[t].v, opts);
            } catch (EquilibriumFailure& f) {
                // continuation through a halved perturbation angle
                try {
                    const Vec3 half =
                        perturbed_effector_pose(mc.poses[t], axis, 0.5 * p.perturb_angle);
                    const auto mid = solve_equilibrium(half, g, dc, p, &load,
                                                       ws.base.steps[t].v, opts);
                    ws.perturbed[t][axis] = solve_equilibrium(pose, g, dc, p, &load, mid.v, opts);
                } catch (const EquilibriumFailure&) {
                    f.time_step = t + 1;
                    throw;
                }
            }
            const Vec3 q_pert = ws.perturbed[t][axis].state.q[g.block_input];
            const Mat3 a_pert = rotation_matrix(q_pert);
            const auto moved = position_variations(a_base, a_pert);
            const auto target =
                target_variations(mc.kappa[t][axis], p.perturb_angle, mc.input_direction);
            for (int j = 0; j < 3; ++j)
                step.psi[axis * 3 + j] = (moved[j] - target[j]).norm();
            // Virtual work: the measured output moment component about the
            // perturbation axis, in units of the input moment magnitude.
            const Vec3 dtheta_act = relative_rotation_vector(a_pert, a_base);
            step.kappa_measured[axis] = mc.input_direction.dot(dtheta_act) / p.perturb_angle;
        }
        step.diagnostics = diagnostic_moment_error(step.kappa_measured, mc.kappa[t]);
    }

    for (int t = 0; t < T; ++t) {
        const auto& psi = ws.report.steps[t].psi;
        for (int j = 0; j < 3; ++j) {
            ws.report.max_psi_flexion = std::max(ws.report.max_psi_flexion, psi[j]);
            ws.report.max_psi_abduction = std::max(ws.report.max_psi_abduction, psi[3 + j]);
            ws.report.max_psi_rotation = std::max(ws.report.max_psi_rotation, psi[6 + j]);
        }
    }
    return ws;
}

} // namespace exosyn

#endif // EXOSYN_RESPONSE_HPP
