////////////////////////////////////////////////////////////////////////////////
// cases.hpp
////////////////////////////////////////////////////////////////////////////////
/*! @file
//  Built-in synthesis case definitions (effector pose sweeps with target
//  output-moment ratios) and the gait-cycle actuator torque profiles.
*/
////////////////////////////////////////////////////////////////////////////////
#ifndef EXOSYN_CASES_HPP
#define EXOSYN_CASES_HPP

#include "exosyn/geometry.hpp"

#include <array>
#include <stdexcept>
#include <vector>

namespace exosyn {

/// A case study: T prescribed effector poses and, per pose, the target output
/// moment expressed as ratios (kappa_x, kappa_y, kappa_z) of the input moment
/// magnitude. The input moment direction is fixed.
struct MomentCase {
    std::vector<Vec3> poses; // (rho, theta, phi) per time step
    std::vector<Vec3> kappa; // target ratios per time step, kappa_y = -1
    Vec3 input_direction{0.0, -1.0, 0.0};

    int steps() const { return static_cast<int>(poses.size()); }

    void validate() const {
        if (poses.empty() || poses.size() != kappa.size())
            throw std::invalid_argument("MomentCase: pose/target tables must match and be nonempty");
    }
};

/// The three built-in hip-mechanism case studies. All use seven flexion
/// poses; case 1 couples the flexion ratio to the pose angle, case 2 asks for
/// a direction-fixed abduction moment, case 3 tilts the leg and doubles the
/// flexion ratio sweep.
inline MomentCase case_study(int id) {
    MomentCase c;
    switch (id) {
    case 1:
        for (int t = 0; t < 7; ++t) {
            const double phi = -0.4 + 0.2 * t;
            c.poses.emplace_back(0.0, 0.0, phi);
            c.kappa.emplace_back(phi, -1.0, 0.0);
        }
        break;
    case 2:
        for (int t = 0; t < 7; ++t) {
            c.poses.emplace_back(0.0, 0.0, -0.4 + 0.2 * t);
            c.kappa.emplace_back(0.0, -1.0, 0.0);
        }
        break;
    case 3:
        for (int t = 0; t < 7; ++t) {
            c.poses.emplace_back(0.0, -0.2, -0.4 + 0.2 * t);
            c.kappa.emplace_back(-0.8 + 0.4 * t, -1.0, 0.0);
        }
        break;
    default:
        throw std::invalid_argument("case_study: id must be 1, 2, or 3");
    }
    return c;
}

// ---------------------------------------------------------------------------
// Actuator torque profiles: four amplified Gaussians per leg (the two peaks
// of the cycle plus the nearest spill-over peak of each neighboring cycle).
// ---------------------------------------------------------------------------

enum class Leg { Right, Left };

struct GaussianTerm {
    double sigma;
    double mu;
    double amplitude;
};

struct GaussianTorqueParams {
    std::array<GaussianTerm, 4> right;
    std::array<GaussianTerm, 4> left;
    double t_cycle_start = 0.53; // time (s) mapping to 0% gait
    double t_cycle_end = 1.73;   // time (s) mapping to 100% gait

    double cycle_seconds() const { return t_cycle_end - t_cycle_start; }
    double gait_percent_from_time(double t_sec) const {
        return (t_sec - t_cycle_start) / cycle_seconds() * 100.0;
    }
    double time_from_gait_percent(double x) const {
        return t_cycle_start + x / 100.0 * cycle_seconds();
    }
};

/// Time-domain parameter set (seconds / N*m*s amplitudes). This column is the
/// authoritative one; the published gait-percent column is reproduced by
/// gait_percent_torque_params() for the cross-parameterization check.
inline GaussianTorqueParams time_domain_torque_params() {
    GaussianTorqueParams p;
    p.right = {{{0.15, 0.9, -13.0}, {0.09, 1.2, -8.0}, {0.15, 2.1, -13.0}, {0.09, 2.4, -8.0}}};
    p.left = {{{0.2, 1.55, -20.0}, {0.09, 1.83, -9.0}, {0.2, 0.35, -20.0}, {0.09, 0.6, -9.0}}};
    return p;
}

/// Gait-percent parameter set as published (sigma/mu in % of cycle). The
/// published left-leg table permutes the in-cycle and neighbor-cycle rows and
/// drops the sign of the spill-over peak near -15%; the sign is restored here
/// since the summed profile is order-independent but not sign-independent.
inline GaussianTorqueParams gait_percent_torque_params() {
    GaussianTorqueParams p;
    p.right = {{{12.5, 30.83, -0.108}, {7.5, 55.83, -0.067}, {12.5, 130.83, -0.108}, {7.5, 155.83, -0.067}}};
    p.left = {{{16.67, -15.0, -0.167}, {7.5, 5.83, -0.075}, {16.67, 85.0, -0.1667}, {7.5, 108.33, -0.075}}};
    return p;
}

inline double gaussian_sum(const std::array<GaussianTerm, 4>& terms, double x) {
    double tau = 0.0;
    for (const GaussianTerm& g : terms) {
        const double z = (x - g.mu) / g.sigma;
        tau += g.amplitude / (g.sigma * std::sqrt(2.0 * kPi)) * std::exp(-0.5 * z * z);
    }
    return tau;
}

/// Assistive torque at a gait-cycle completion percentage (time-domain
/// parameters through the cycle anchor mapping; values in N*m).
inline double torque_profile(Leg leg, double x_gait_percent,
                             const GaussianTorqueParams& p = time_domain_torque_params()) {
    const double t = p.time_from_gait_percent(x_gait_percent);
    return gaussian_sum(leg == Leg::Right ? p.right : p.left, t);
}

/// Torque evaluated directly in the gait-percent parameterization. The
/// published amplitudes carry per-percent units, so this differs from the
/// time-domain value by a constant factor; shapes agree to table rounding.
inline double torque_profile_gait_domain(Leg leg, double x_gait_percent) {
    const GaussianTorqueParams p = gait_percent_torque_params();
    return gaussian_sum(leg == Leg::Right ? p.right : p.left, x_gait_percent);
}

} // namespace exosyn

#endif // EXOSYN_CASES_HPP
