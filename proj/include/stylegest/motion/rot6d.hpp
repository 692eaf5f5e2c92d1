#pragma once

#include <array>

#include "stylegest/core/array.hpp"

namespace stylegest::motion {

using Mat3 = std::array<double, 9>;  // row-major
using Vec6 = std::array<double, 6>;
using Vec3 = std::array<double, 3>;

// Gram-Schmidt reconstruction of a rotation matrix from the 6-vector
// (first two columns). Throws DegenerateRotationError on zero or parallel
// column candidates.
Mat3 matrix_from_rot6d(const Vec6& r6);

// First two columns of R, flattened column-by-column. Validates that R is a
// rotation within `tol`.
Vec6 rot6d_from_matrix(const Mat3& r, double tol = 1e-4);

bool is_rotation(const Mat3& r, double tol);

Mat3 mat3_mul(const Mat3& a, const Mat3& b);
Mat3 mat3_transpose(const Mat3& a);
Vec3 mat3_apply(const Mat3& a, const Vec3& v);

// Intrinsic z-y-x composition: R = Rz(a) * Ry(b) * Rx(c).
Mat3 matrix_from_euler_zyx(double a, double b, double c);
// Inverse of the above; valid for |b| < pi/2.
Vec3 euler_zyx_from_matrix(const Mat3& r);

Mat3 rotation_x(double angle);
Mat3 rotation_y(double angle);
Mat3 rotation_z(double angle);

inline Vec6 identity_rot6d() { return {1, 0, 0, 0, 1, 0}; }

}  // namespace stylegest::motion
