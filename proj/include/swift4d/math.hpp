// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>

#include "swift4d/core.hpp"

namespace swift4d {

template <typename T> using Vec2 = Eigen::Matrix<T, 2, 1>;
template <typename T> using Vec3 = Eigen::Matrix<T, 3, 1>;
template <typename T> using Vec4 = Eigen::Matrix<T, 4, 1>;
template <typename T> using Mat2 = Eigen::Matrix<T, 2, 2>;
template <typename T> using Mat3 = Eigen::Matrix<T, 3, 3>;
template <typename T> using Mat4 = Eigen::Matrix<T, 4, 4>;

/// Rotation matrix from a unit quaternion stored as (w, x, y, z).
template <typename T>
Mat3<T> quat_to_rotmat(const Vec4<T>& q) {
    const T w = q[0], x = q[1], y = q[2], z = q[3];
    Mat3<T> r;
    r << T(1) - T(2) * (y * y + z * z), T(2) * (x * y - w * z), T(2) * (x * z + w * y),
         T(2) * (x * y + w * z), T(1) - T(2) * (x * x + z * z), T(2) * (y * z - w * x),
         T(2) * (x * z - w * y), T(2) * (y * z + w * x), T(1) - T(2) * (x * x + y * y);
    return r;
}

/// Chain rule through quat_to_rotmat: given dL/dR and the unit quaternion,
/// returns dL/dq (w, x, y, z components of the *unit* quaternion).
template <typename T>
Vec4<T> quat_rotmat_backward(const Vec4<T>& q, const Mat3<T>& dR) {
    const T w = q[0], x = q[1], y = q[2], z = q[3];
    Vec4<T> dq;
    dq[0] = T(2) * (-z * dR(0, 1) + y * dR(0, 2) + z * dR(1, 0) - x * dR(1, 2) - y * dR(2, 0) + x * dR(2, 1));
    dq[1] = T(2) * (y * dR(0, 1) + z * dR(0, 2) + y * dR(1, 0) - T(2) * x * dR(1, 1) - w * dR(1, 2) +
                    z * dR(2, 0) + w * dR(2, 1) - T(2) * x * dR(2, 2));
    dq[2] = T(2) * (-T(2) * y * dR(0, 0) + x * dR(0, 1) + w * dR(0, 2) + x * dR(1, 0) + z * dR(1, 2) -
                    w * dR(2, 0) + z * dR(2, 1) - T(2) * y * dR(2, 2));
    dq[3] = T(2) * (-T(2) * z * dR(0, 0) - w * dR(0, 1) + x * dR(0, 2) + w * dR(1, 0) - T(2) * z * dR(1, 1) +
                    y * dR(1, 2) + x * dR(2, 0) + y * dR(2, 1));
    return dq;
}

/// Chain rule through v_hat = v / |v|: maps dL/dv_hat to dL/dv.
template <typename T, int N>
Eigen::Matrix<T, N, 1> normalize_backward(const Eigen::Matrix<T, N, 1>& v,
                                          const Eigen::Matrix<T, N, 1>& dhat) {
    const T n = v.norm();
    const Eigen::Matrix<T, N, 1> hat = v / n;
    return (dhat - hat * hat.dot(dhat)) / n;
}

template <typename T>
bool all_finite(const T* p, size_t n) {
    for (size_t i = 0; i < n; ++i)
        if (!std::isfinite(double(p[i]))) return false;
    return true;
}

}  // namespace swift4d
