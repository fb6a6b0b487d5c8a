////////////////////////////////////////////////////////////////////////////////
// geometry.hpp
////////////////////////////////////////////////////////////////////////////////
/*! @file
//  Rotation parameterization and basic spherical geometry used throughout the
//  synthesis engine.
//
//  Every rigid block orientation is parameterized by a Tait-Bryan triple
//  q = (rho, theta, phi) composed as A(q) = Ry(rho) * Rz(theta) * Rx(phi).
//  This file provides the composed matrix together with its first and second
//  partial derivatives w.r.t. the three angles (needed for internal forces and
//  the system Hessian), the inverse extraction of a triple from a matrix, the
//  axis-angle logarithm, and latitude/longitude conversions.
*/
////////////////////////////////////////////////////////////////////////////////
#ifndef EXOSYN_GEOMETRY_HPP
#define EXOSYN_GEOMETRY_HPP

#include <Eigen/Core>
#include <Eigen/Geometry>
#include <array>
#include <cmath>

namespace exosyn {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using VecX = Eigen::VectorXd;
using MatX = Eigen::MatrixXd;

constexpr double kPi = 3.14159265358979323846;

inline Mat3 rot_x(double a) {
    Mat3 m;
    m << 1, 0, 0,
         0, std::cos(a), -std::sin(a),
         0, std::sin(a),  std::cos(a);
    return m;
}

inline Mat3 rot_y(double a) {
    Mat3 m;
    m <<  std::cos(a), 0, std::sin(a),
          0, 1, 0,
         -std::sin(a), 0, std::cos(a);
    return m;
}

inline Mat3 rot_z(double a) {
    Mat3 m;
    m << std::cos(a), -std::sin(a), 0,
         std::sin(a),  std::cos(a), 0,
         0, 0, 1;
    return m;
}

// d/da of the single-axis factors.
inline Mat3 drot_x(double a) {
    Mat3 m;
    m << 0, 0, 0,
         0, -std::sin(a), -std::cos(a),
         0,  std::cos(a), -std::sin(a);
    return m;
}

inline Mat3 drot_y(double a) {
    Mat3 m;
    m << -std::sin(a), 0,  std::cos(a),
          0, 0, 0,
         -std::cos(a), 0, -std::sin(a);
    return m;
}

inline Mat3 drot_z(double a) {
    Mat3 m;
    m << -std::sin(a), -std::cos(a), 0,
          std::cos(a), -std::sin(a), 0,
          0, 0, 0;
    return m;
}

inline Mat3 ddrot_x(double a) { return -rot_x(a) + Mat3(Vec3(1, 0, 0).asDiagonal()); }
inline Mat3 ddrot_y(double a) { return -rot_y(a) + Mat3(Vec3(0, 1, 0).asDiagonal()); }
inline Mat3 ddrot_z(double a) { return -rot_z(a) + Mat3(Vec3(0, 0, 1).asDiagonal()); }

/// Block orientation matrix A = Ry(rho) Rz(theta) Rx(phi).
inline Mat3 rotation_matrix(const Vec3& q) {
    return rot_y(q[0]) * rot_z(q[1]) * rot_x(q[2]);
}

/// Orientation matrix together with all first and second angle partials.
/// d2[i][j] is symmetric in (i, j); all nine entries are stored for direct
/// indexing in the Hessian assembly.
struct RotationDerivatives {
    Mat3 A;
    std::array<Mat3, 3> d;
    std::array<std::array<Mat3, 3>, 3> d2;
};

inline RotationDerivatives rotation_derivatives(const Vec3& q) {
    const Mat3 ry = rot_y(q[0]), rz = rot_z(q[1]), rx = rot_x(q[2]);
    const Mat3 dry = drot_y(q[0]), drz = drot_z(q[1]), drx = drot_x(q[2]);
    const Mat3 ddry = ddrot_y(q[0]), ddrz = ddrot_z(q[1]), ddrx = ddrot_x(q[2]);

    RotationDerivatives r;
    r.A = ry * rz * rx;
    r.d[0] = dry * rz * rx;
    r.d[1] = ry * drz * rx;
    r.d[2] = ry * rz * drx;
    r.d2[0][0] = ddry * rz * rx;
    r.d2[1][1] = ry * ddrz * rx;
    r.d2[2][2] = ry * rz * ddrx;
    r.d2[0][1] = r.d2[1][0] = dry * drz * rx;
    r.d2[0][2] = r.d2[2][0] = dry * rz * drx;
    r.d2[1][2] = r.d2[2][1] = ry * drz * drx;
    return r;
}

/// Recovers (rho, theta, phi) with A = Ry Rz Rx from an orthogonal matrix.
/// theta is returned in [-pi/2, pi/2]; the gimbal-locked case |A(1,0)| = 1
/// resolves the free sum/difference into rho with phi = 0.
inline Vec3 tait_bryan_from_matrix(const Mat3& A) {
    const double s = std::clamp(A(1, 0), -1.0, 1.0);
    const double theta = std::asin(s);
    if (std::abs(s) > 1.0 - 1e-12) {
        // row/column degeneracy: only rho +/- phi is determined
        return Vec3(std::atan2(A(0, 2), -s * A(0, 1)), theta, 0.0);
    }
    return Vec3(std::atan2(-A(2, 0), A(0, 0)), theta, std::atan2(-A(1, 2), A(1, 1)));
}

inline Mat3 cross_matrix(const Vec3& w) {
    Mat3 m;
    m <<     0, -w[2],  w[1],
          w[2],     0, -w[0],
         -w[1],  w[0],     0;
    return m;
}

/// Rodrigues formula: exp(angle * [axis]_x) for a unit axis.
inline Mat3 axis_angle_matrix(const Vec3& axis, double angle) {
    const Mat3 k = cross_matrix(axis);
    return Mat3::Identity() + std::sin(angle) * k + (1.0 - std::cos(angle)) * k * k;
}

struct AxisAngle {
    Vec3 axis;    // unit
    double angle; // in [0, pi]
};

/// Logarithm of a rotation matrix. The zero rotation reports axis (0,0,1) by
/// convention; the angle = pi case recovers the axis from the symmetric part
/// (either sign is a valid representative there).
inline AxisAngle rotation_log(const Mat3& R) {
    const Vec3 skew(0.5 * (R(2, 1) - R(1, 2)),
                    0.5 * (R(0, 2) - R(2, 0)),
                    0.5 * (R(1, 0) - R(0, 1)));
    const double cos_a = std::clamp(0.5 * (R.trace() - 1.0), -1.0, 1.0);
    const double sin_a = skew.norm();
    const double angle = std::atan2(sin_a, cos_a);

    if (angle < 1e-12) return {Vec3(0, 0, 1), angle};
    if (angle < kPi - 1e-5) return {skew / sin_a, angle};

    // Near pi the skew part loses accuracy; use (R + R^T)/2 = cos I + (1-cos) ww^T.
    const Mat3 sym = 0.5 * (R + R.transpose());
    Vec3 w2 = ((sym - cos_a * Mat3::Identity()) / (1.0 - cos_a)).diagonal().cwiseMax(0.0);
    int k;
    w2.maxCoeff(&k);
    Vec3 axis = Vec3::Zero();
    axis[k] = std::sqrt(w2[k]);
    for (int i = 0; i < 3; ++i) {
        if (i != k) axis[i] = 0.5 * (sym(i, k) + sym(k, i)) / ((1.0 - cos_a) * axis[k]);
    }
    axis.normalize();
    if (sin_a > 1e-12 && skew.dot(axis) < 0.0) axis = -axis;
    return {axis, angle};
}

/// Rotation vector of the increment from base orientation A to perturbed
/// orientation A_tilde, expressed in the world frame: log(A_tilde * A^T).
inline Vec3 relative_rotation_vector(const Mat3& A_tilde, const Mat3& A) {
    const AxisAngle aa = rotation_log(A_tilde * A.transpose());
    return aa.angle * aa.axis;
}

/// Unit position vector on the sphere for polar angle theta, azimuth phi.
inline Vec3 spherical_point(double theta, double phi) {
    return Vec3(std::sin(theta) * std::cos(phi),
                std::sin(theta) * std::sin(phi),
                std::cos(theta));
}

struct LatLong {
    double latitude_deg;
    double longitude_deg;
};

/// Latitude/longitude (degrees) of a unit direction; poles report longitude 0.
inline LatLong direction_lat_long(const Vec3& d) {
    const double z = std::clamp(d[2], -1.0, 1.0);
    const double lat = 90.0 - std::acos(z) * 180.0 / kPi;
    if (std::abs(z) > 1.0 - 1e-12) return {lat, 0.0};
    return {lat, std::atan2(d[1], d[0]) * 180.0 / kPi};
}

inline Vec3 lat_long_direction(const LatLong& ll) {
    const double theta = (90.0 - ll.latitude_deg) * kPi / 180.0;
    const double phi = ll.longitude_deg * kPi / 180.0;
    return spherical_point(theta, phi);
}

inline double angle_between_deg(const Vec3& a, const Vec3& b) {
    const double c = std::clamp(a.normalized().dot(b.normalized()), -1.0, 1.0);
    return std::acos(c) * 180.0 / kPi;
}

} // namespace exosyn

#endif // EXOSYN_GEOMETRY_HPP
