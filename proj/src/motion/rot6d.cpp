#include "stylegest/motion/rot6d.hpp"

#include <cmath>

namespace stylegest::motion {

namespace {

constexpr double kDegenerateTol = 1e-8;

double norm3(const Vec3& v) { return std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]); }

Vec3 cross(const Vec3& a, const Vec3& b) {
    return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}

}  // namespace

Mat3 matrix_from_rot6d(const Vec6& r6) {
    for (double v : r6)
        if (!std::isfinite(v)) throw DegenerateRotationError("matrix_from_rot6d: non-finite input");

    Vec3 a1{r6[0], r6[1], r6[2]};
    Vec3 a2{r6[3], r6[4], r6[5]};
    const double n1 = norm3(a1);
    if (n1 < kDegenerateTol) throw DegenerateRotationError("matrix_from_rot6d: first column near zero");
    Vec3 b1{a1[0] / n1, a1[1] / n1, a1[2] / n1};

    const double d = b1[0] * a2[0] + b1[1] * a2[1] + b1[2] * a2[2];
    Vec3 b2{a2[0] - d * b1[0], a2[1] - d * b1[1], a2[2] - d * b1[2]};
    const double n2 = norm3(b2);
    if (n2 < kDegenerateTol)
        throw DegenerateRotationError("matrix_from_rot6d: columns parallel after normalization");
    b2 = {b2[0] / n2, b2[1] / n2, b2[2] / n2};

    const Vec3 b3 = cross(b1, b2);
    return {b1[0], b2[0], b3[0],
            b1[1], b2[1], b3[1],
            b1[2], b2[2], b3[2]};
}

bool is_rotation(const Mat3& r, double tol) {
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) {
            double s = 0.0;
            for (int k = 0; k < 3; ++k) s += r[k * 3 + i] * r[k * 3 + j];
            if (std::abs(s - (i == j ? 1.0 : 0.0)) > tol) return false;
        }
    }
    const double det = r[0] * (r[4] * r[8] - r[5] * r[7]) - r[1] * (r[3] * r[8] - r[5] * r[6]) +
                       r[2] * (r[3] * r[7] - r[4] * r[6]);
    return std::abs(det - 1.0) <= tol;
}

Vec6 rot6d_from_matrix(const Mat3& r, double tol) {
    if (!is_rotation(r, tol))
        throw ValidationError("rot6d_from_matrix: input is not orthonormal with det +1");
    return {r[0], r[3], r[6], r[1], r[4], r[7]};
}

Mat3 mat3_mul(const Mat3& a, const Mat3& b) {
    Mat3 c{};
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            double s = 0.0;
            for (int k = 0; k < 3; ++k) s += a[i * 3 + k] * b[k * 3 + j];
            c[i * 3 + j] = s;
        }
    return c;
}

Mat3 mat3_transpose(const Mat3& a) {
    return {a[0], a[3], a[6], a[1], a[4], a[7], a[2], a[5], a[8]};
}

Vec3 mat3_apply(const Mat3& a, const Vec3& v) {
    return {a[0] * v[0] + a[1] * v[1] + a[2] * v[2],
            a[3] * v[0] + a[4] * v[1] + a[5] * v[2],
            a[6] * v[0] + a[7] * v[1] + a[8] * v[2]};
}

Mat3 rotation_x(double t) {
    const double c = std::cos(t), s = std::sin(t);
    return {1, 0, 0, 0, c, -s, 0, s, c};
}

Mat3 rotation_y(double t) {
    const double c = std::cos(t), s = std::sin(t);
    return {c, 0, s, 0, 1, 0, -s, 0, c};
}

Mat3 rotation_z(double t) {
    const double c = std::cos(t), s = std::sin(t);
    return {c, -s, 0, s, c, 0, 0, 0, 1};
}

Mat3 matrix_from_euler_zyx(double a, double b, double c) {
    return mat3_mul(rotation_z(a), mat3_mul(rotation_y(b), rotation_x(c)));
}

Vec3 euler_zyx_from_matrix(const Mat3& r) {
    const double b = std::asin(-r[6]);
    const double a = std::atan2(r[3], r[0]);
    const double c = std::atan2(r[7], r[8]);
    return {a, b, c};
}

}  // namespace stylegest::motion
