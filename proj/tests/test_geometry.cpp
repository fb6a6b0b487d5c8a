#include "exosyn/geometry.hpp"
#include "test_util.hpp"

#include <catch2/catch_amalgamated.hpp>

using namespace exosyn;
namespace tu = exosyn::testutil;

TEST_CASE("rotation matrix composition order is Ry * Rz * Rx") {
    CHECK(rotation_matrix(Vec3::Zero()).isIdentity(1e-15));

    // First factor alone: a y-rotation by pi/2 takes e_z to e_x.
    const Vec3 mapped = rotation_matrix(Vec3(kPi / 2, 0, 0)) * Vec3(0, 0, 1);
    CHECK((mapped - Vec3(1, 0, 0)).norm() < 1e-15);

    // Middle row of the closed form: [sin(theta), cos(theta)cos(phi), -cos(theta)sin(phi)].
    const Vec3 q(0.3, -0.7, 0.45);
    const Mat3 a = rotation_matrix(q);
    CHECK(a(1, 0) == Catch::Approx(std::sin(q[1])).margin(1e-15));
    CHECK(a(1, 1) == Catch::Approx(std::cos(q[1]) * std::cos(q[2])).margin(1e-15));
    CHECK(a(1, 2) == Catch::Approx(-std::cos(q[1]) * std::sin(q[2])).margin(1e-15));
}

TEST_CASE("rotation matrices are orthogonal with unit determinant") {
    for (int trial = 0; trial < 1000; ++trial) {
        const Mat3 a = rotation_matrix(tu::random_vec3(-kPi, kPi));
        CHECK((a.transpose() * a - Mat3::Identity()).cwiseAbs().maxCoeff() < 1e-12);
        CHECK(std::abs(a.determinant() - 1.0) < 1e-12);
    }
}

TEST_CASE("angle partials of the rotation matrix match central differences") {
    for (int trial = 0; trial < 20; ++trial) {
        const Vec3 q = tu::random_vec3(-1.0, 1.0);
        const RotationDerivatives r = rotation_derivatives(q);
        const double h = 1e-6;
        for (int i = 0; i < 3; ++i) {
            Vec3 qp = q, qm = q;
            qp[i] += h;
            qm[i] -= h;
            const Mat3 fd = (rotation_matrix(qp) - rotation_matrix(qm)) / (2 * h);
            CHECK((r.d[i] - fd).cwiseAbs().maxCoeff() < 1e-9);
            const RotationDerivatives rp = rotation_derivatives(qp);
            const RotationDerivatives rm = rotation_derivatives(qm);
            for (int j = 0; j < 3; ++j) {
                const Mat3 fd2 = (rp.d[j] - rm.d[j]) / (2 * h);
                CHECK((r.d2[j][i] - fd2).cwiseAbs().maxCoeff() < 1e-8);
            }
        }
    }
}

TEST_CASE("tait-bryan extraction inverts the composition") {
    for (int trial = 0; trial < 200; ++trial) {
        const Vec3 q = tu::random_vec3(-1.2, 1.2);
        const Vec3 back = tait_bryan_from_matrix(rotation_matrix(q));
        CHECK((back - q).norm() < 1e-10);
    }
}

TEST_CASE("rotation log identity and round trips") {
    const AxisAngle at_id = rotation_log(Mat3::Identity());
    CHECK(at_id.angle == 0.0);
    CHECK((at_id.axis - Vec3(0, 0, 1)).norm() < 1e-15);

    for (int trial = 0; trial < 200; ++trial) {
        const Vec3 axis = tu::random_unit();
        const double angle = 0.3;
        const AxisAngle aa = rotation_log(axis_angle_matrix(axis, angle));
        CHECK(std::abs(aa.angle - angle) < 1e-10);
        CHECK((aa.axis - axis).norm() < 1e-10);
    }

    // angle = pi about e_x: either axis sign reproduces the matrix.
    const Mat3 half_turn = axis_angle_matrix(Vec3(1, 0, 0), kPi);
    const AxisAngle aa = rotation_log(half_turn);
    CHECK(std::abs(aa.angle - kPi) < 1e-10);
    CHECK((axis_angle_matrix(aa.axis, aa.angle) - half_turn).cwiseAbs().maxCoeff() < 1e-9);

    // generic near-pi angles keep round-trip accuracy
    for (int trial = 0; trial < 50; ++trial) {
        const Vec3 axis = tu::random_unit();
        const double angle = kPi - tu::uniform(0.0, 1e-6);
        const AxisAngle back = rotation_log(axis_angle_matrix(axis, angle));
        CHECK((axis_angle_matrix(back.axis, back.angle) -
               axis_angle_matrix(axis, angle)).cwiseAbs().maxCoeff() < 1e-9);
    }
}

TEST_CASE("relative rotation vector reproduces small increments") {
    const Vec3 q(0.2, -0.1, 0.35);
    const Mat3 base = rotation_matrix(q);
    const Vec3 axis = tu::random_unit();
    const double angle = 1e-3;
    const Mat3 pert = axis_angle_matrix(axis, angle) * base;
    const Vec3 rotvec = relative_rotation_vector(pert, base);
    CHECK((rotvec - angle * axis).norm() < 1e-12);
}

TEST_CASE("latitude/longitude conversions") {
    const LatLong minus_y = direction_lat_long(Vec3(0, -1, 0));
    CHECK(minus_y.latitude_deg == Catch::Approx(0.0).margin(1e-12));
    CHECK(minus_y.longitude_deg == Catch::Approx(-90.0).margin(1e-12));

    const LatLong pole = direction_lat_long(Vec3(0, 0, 1));
    CHECK(pole.latitude_deg == Catch::Approx(90.0).margin(1e-12));
    CHECK(pole.longitude_deg == 0.0);

    for (int trial = 0; trial < 100; ++trial) {
        const Vec3 d = tu::random_unit();
        const Vec3 back = lat_long_direction(direction_lat_long(d));
        CHECK((back - d).norm() < 1e-10);
    }
}

TEST_CASE("spherical point at the equator") {
    CHECK((spherical_point(kPi / 2, 0.0) - Vec3(1, 0, 0)).norm() < 1e-15);
}
