////////////////////////////////////////////////////////////////////////////////
// sensitivity.hpp
////////////////////////////////////////////////////////////////////////////////
/*! @file
//  Analytic design sensitivities of the response by direct differentiation.
//
//  For every time step the converged equilibrium residual
//  R_t(v_t, v_{t-1}, xi) = F_int(v_t; xi) - F_ext(q_I(v_t), w(v_{t-1})) = 0
//  is differentiated: (J_t - dF_ext/dv_t) dv_t/dxi = -(dF_int/dxi
//  - dF_ext/dw_prev * dw_prev/dxi). The w_prev coupling makes the recursion
//  march forward through the trajectory; a frozen-w variant that drops the
//  coupling is kept for comparison (finite differences arbitrate). Perturbed
//  states differentiate the same way and chain through the relative-rotation
//  mismatch into the constraint gradients; the constraint targets carry no
//  design dependence. With a few dozen design variables and ~20 unknowns the
//  direct method needs one factorization per (step, perturbation).
*/
////////////////////////////////////////////////////////////////////////////////
#ifndef EXOSYN_SENSITIVITY_HPP
#define EXOSYN_SENSITIVITY_HPP

#include "exosyn/response.hpp"

#include <Eigen/LU>
#include <functional>

namespace exosyn {

struct GradientBundle {
    VecX dzeta_bar;                    // length n_design
    MatX dpsi;                         // (9 * T) x n_design, row t*9 + axis*3 + point
    std::vector<MatX> state_sensitivities; // dv_t/dxi per step

    int psi_row(int t, int axis, int point) const { return t * 9 + axis * 3 + point; }
};

namespace detail {

/// d w / d xi for the tracking point w = A(q_I) e_z given the block-I rows of
/// a state sensitivity.
inline MatX tracking_point_sensitivity(const RotationDerivatives& rot_input,
                                       const MatX& x_input_rows) {
    MatX dw(3, x_input_rows.cols());
    dw.setZero();
    const Vec3 ez = Vec3::UnitZ();
    for (int i = 0; i < 3; ++i) dw += (rot_input.d[i] * ez) * x_input_rows.row(i);
    return dw;
}

} // namespace detail

/// Direct-differentiation gradients of zeta_bar and of every per-step
/// constraint. `ws` must come from evaluate_response with perturbations.
inline GradientBundle compute_response_gradients(const MomentCase& mc, const SphericalGrid& g,
                                                 const DesignCache& dc, const SolverParams& p,
                                                 const ResponseWorkspace& ws,
                                                 bool chain_previous_step = true) {
    const int T = mc.steps();
    const int n = g.n_free_dofs();
    const int n_xi = g.n_springs() + 2 * (g.n_nodes() - 1);
    const int input_base = free_dof_base(g.block_input, g);

    GradientBundle out;
    out.dzeta_bar = VecX::Zero(n_xi);
    out.dpsi = MatX::Zero(9 * T, n_xi);
    out.state_sensitivities.reserve(T);

    MatX x_prev_input = MatX::Zero(3, n_xi); // block-I rows of dv_{t-1}/dxi
    RotationDerivatives rot_prev_input = rotation_derivatives(Vec3::Zero());
    VecX dwork_cum = VecX::Zero(n_xi);

    for (int t = 0; t < T; ++t) {
        const SystemState& state = ws.base.steps[t].state;
        const StateCache sc(state);
        const auto& rot_input = sc.rot[g.block_input];
        const ResistiveLoad load{p.F0, ws.base.w[t]};
        const auto ld = load.eval(rot_input, state.q[g.block_input]);

        // dw_{t-1}/dxi from the previous step's state sensitivity
        MatX dw_prev = MatX::Zero(3, n_xi);
        if (t > 0) dw_prev = detail::tracking_point_sensitivity(rot_prev_input, x_prev_input);

        MatX k = energy_hessian(g, dc, sc, p);
        k.block<3, 3>(input_base, input_base) -= ld.dforce_dq;
        MatX rhs = internal_force_design_jacobian(g, dc, sc, p);
        // The w_prev coupling of the equilibrium itself; the frozen variant
        // treats each step's equilibrium as independent of the previous state.
        if (chain_previous_step) rhs.middleRows<3>(input_base) -= ld.dforce_dwprev * dw_prev;

        const Eigen::FullPivLU<MatX> lu(k);
        const MatX x_t = lu.solve(-rhs);
        const MatX x_input = x_t.middleRows<3>(input_base);

        // energy and work sensitivities
        const VecX f_int = internal_force(g, dc, sc, p);
        const VecX du = energy_design_gradient(g, dc, sc, p) + x_t.transpose() * f_int;

        const Vec3 q_before = t == 0 ? Vec3::Zero() : ws.q_input[t - 1];
        const Vec3 q_step = q_before - ws.q_input[t];
        // The work increment's explicit previous-step dependence always
        // chains; only the equilibrium recursion is gated above.
        MatX df_t = ld.dforce_dq * x_input + ld.dforce_dwprev * dw_prev;
        VecX dwork_step = df_t.transpose() * q_step;
        dwork_step += (x_prev_input - x_input).transpose() * ws.base.forces[t];
        dwork_cum += dwork_step;

        const StepResponse& step = ws.report.steps[t];
        if (!step.degenerate) {
            const double denom = step.work_out + step.energy;
            out.dzeta_bar +=
                (step.energy * dwork_cum - step.work_out * du) / (denom * denom);
        }

        // constraint gradients from the three perturbed solves
        const Mat3 a_base_t = rot_input.A;
        for (int axis = 0; axis < 3; ++axis) {
            const SystemState& pstate = ws.perturbed[t][axis].state;
            const StateCache psc(pstate);
            const auto& prot_input = psc.rot[g.block_input];
            const auto pld = load.eval(prot_input, pstate.q[g.block_input]);

            MatX pk = energy_hessian(g, dc, psc, p);
            pk.block<3, 3>(input_base, input_base) -= pld.dforce_dq;
            MatX prhs = internal_force_design_jacobian(g, dc, psc, p);
            if (chain_previous_step)
                prhs.middleRows<3>(input_base) -= pld.dforce_dwprev * dw_prev;
            const Eigen::FullPivLU<MatX> plu(pk);
            const MatX px = plu.solve(-prhs);
            const MatX px_input = px.middleRows<3>(input_base);

            const Mat3 a_pert = prot_input.A;
            const Mat3 target =
                axis_angle_matrix(mc.input_direction, mc.kappa[t][axis] * p.perturb_angle);
            const Mat3 mismatch = a_pert * a_base_t.transpose() - target;

            for (int c = 0; c < n_xi; ++c) {
                Mat3 da_pert = Mat3::Zero(), da_base = Mat3::Zero();
                for (int i = 0; i < 3; ++i) {
                    da_pert += prot_input.d[i] * px_input(i, c);
                    da_base += rot_input.d[i] * x_input(i, c);
                }
                const Mat3 drel =
                    da_pert * a_base_t.transpose() + a_pert * da_base.transpose();
                for (int j = 0; j < 3; ++j) {
                    const double norm = mismatch.col(j).norm();
                    if (norm < 1e-14) continue; // subgradient 0 at the kink
                    out.dpsi(out.psi_row(t, axis, j), c) =
                        mismatch.col(j).dot(drel.col(j)) / norm;
                }
            }
        }

        x_prev_input = x_input;
        rot_prev_input = rot_input;
        out.state_sensitivities.push_back(x_t);
    }

    // zeta_bar averages over the non-skipped steps
    int zeta_count = 0;
    for (int t = 0; t < T; ++t) {
        const StepResponse& step = ws.report.steps[t];
        if (!(step.degenerate && t == 0 && mc.poses[0].isZero(0.0))) ++zeta_count;
    }
    if (zeta_count > 0) out.dzeta_bar /= zeta_count;
    return out;
}

// ---------------------------------------------------------------------------
// Finite-difference oracle
// ---------------------------------------------------------------------------

/// Central-difference gradient of a scalar function of the stacked design.
inline VecX fd_gradient(const std::function<double(const VecX&)>& f, const VecX& x,
                        double step) {
    if (!(step > 0.0)) throw std::invalid_argument("fd_gradient: step must be positive");
    VecX grad(x.size());
    for (int i = 0; i < x.size(); ++i) {
        VecX xp = x, xm = x;
        xp[i] += step;
        xm[i] -= step;
        grad[i] = (f(xp) - f(xm)) / (2.0 * step);
    }
    return grad;
}

/// Central-difference Jacobian of a vector function of the stacked design.
inline MatX fd_jacobian(const std::function<VecX(const VecX&)>& f, const VecX& x,
                        double step) {
    if (!(step > 0.0)) throw std::invalid_argument("fd_jacobian: step must be positive");
    const VecX f0 = f(x);
    MatX jac(f0.size(), x.size());
    for (int i = 0; i < x.size(); ++i) {
        VecX xp = x, xm = x;
        xp[i] += step;
        xm[i] -= step;
        jac.col(i) = (f(xp) - f(xm)) / (2.0 * step);
    }
    return jac;
}

/// Re-evaluates zeta_bar at a stacked design (for oracle comparisons).
inline double zeta_bar_at(const VecX& stacked, const MomentCase& mc, const SphericalGrid& g,
                          const SolverParams& p, const NewtonOptions& opts) {
    const DesignVector d = DesignVector::from_stacked(stacked, g);
    const DesignCache dc(g, d, p);
    return evaluate_response(mc, g, dc, p, opts, false).report.zeta_bar;
}

/// Re-evaluates the flattened constraint vector (9 per step) at a design.
inline VecX psi_at(const VecX& stacked, const MomentCase& mc, const SphericalGrid& g,
                   const SolverParams& p, const NewtonOptions& opts) {
    const DesignVector d = DesignVector::from_stacked(stacked, g);
    const DesignCache dc(g, d, p);
    const auto ws = evaluate_response(mc, g, dc, p, opts, true);
    VecX psi(9 * mc.steps());
    for (int t = 0; t < mc.steps(); ++t)
        for (int i = 0; i < 9; ++i) psi[t * 9 + i] = ws.report.steps[t].psi[i];
    return psi;
}

} // namespace exosyn

#endif // EXOSYN_SENSITIVITY_HPP
