// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>

#include "swift4d/math.hpp"

namespace swift4d {

namespace sh_detail {
constexpr double kC0 = 0.28209479177387814;
constexpr double kC1 = 0.4886025119029199;
constexpr double kC2[5] = {1.0925484305920792, -1.0925484305920792, 0.31539156525252005,
                           -1.0925484305920792, 0.5462742152960396};
constexpr double kC3[7] = {-0.5900435899266435, 2.890611442640554, -0.4570457994644658,
                           0.3731763325901154, -0.4570457994644658, 1.445305721320277,
                           -0.5900435899266435};
}  // namespace sh_detail

/// Real SH basis values for a unit direction, degrees 0..3 (up to 16 terms).
template <typename T>
void sh_basis(int degree, const Vec3<T>& dir, T* out) {
    using namespace sh_detail;
    const T x = dir.x(), y = dir.y(), z = dir.z();
    out[0] = T(kC0);
    if (degree < 1) return;
    out[1] = T(-kC1) * y;
    out[2] = T(kC1) * z;
    out[3] = T(-kC1) * x;
    if (degree < 2) return;
    const T xx = x * x, yy = y * y, zz = z * z;
    out[4] = T(kC2[0]) * x * y;
    out[5] = T(kC2[1]) * y * z;
    out[6] = T(kC2[2]) * (T(2) * zz - xx - yy);
    out[7] = T(kC2[3]) * x * z;
    out[8] = T(kC2[4]) * (xx - yy);
    if (degree < 3) return;
    out[9] = T(kC3[0]) * y * (T(3) * xx - yy);
    out[10] = T(kC3[1]) * x * y * z;
    out[11] = T(kC3[2]) * y * (T(4) * zz - xx - yy);
    out[12] = T(kC3[3]) * z * (T(2) * zz - T(3) * xx - T(3) * yy);
    out[13] = T(kC3[4]) * x * (T(4) * zz - xx - yy);
    out[14] = T(kC3[5]) * z * (xx - yy);
    out[15] = T(kC3[6]) * x * (xx - yy);
}

/// d(basis_k)/d(dir) for each basis term; out[k] is the 3-gradient of term k.
template <typename T>
void sh_basis_grad(int degree, const Vec3<T>& dir, Vec3<T>* out) {
    using namespace sh_detail;
    const T x = dir.x(), y = dir.y(), z = dir.z();
    out[0].setZero();
    if (degree < 1) return;
    out[1] = Vec3<T>(T(0), T(-kC1), T(0));
    out[2] = Vec3<T>(T(0), T(0), T(kC1));
    out[3] = Vec3<T>(T(-kC1), T(0), T(0));
    if (degree < 2) return;
    const T xx = x * x, yy = y * y, zz = z * z;
    out[4] = T(kC2[0]) * Vec3<T>(y, x, T(0));
    out[5] = T(kC2[1]) * Vec3<T>(T(0), z, y);
    out[6] = T(kC2[2]) * Vec3<T>(T(-2) * x, T(-2) * y, T(4) * z);
    out[7] = T(kC2[3]) * Vec3<T>(z, T(0), x);
    out[8] = T(kC2[4]) * Vec3<T>(T(2) * x, T(-2) * y, T(0));
    if (degree < 3) return;
    out[9] = T(kC3[0]) * Vec3<T>(T(6) * x * y, T(3) * xx - T(3) * yy, T(0));
    out[10] = T(kC3[1]) * Vec3<T>(y * z, x * z, x * y);
    out[11] = T(kC3[2]) * Vec3<T>(T(-2) * x * y, T(4) * zz - xx - T(3) * yy, T(8) * y * z);
    out[12] = T(kC3[3]) * Vec3<T>(T(-6) * x * z, T(-6) * y * z, T(6) * zz - T(3) * xx - T(3) * yy);
    out[13] = T(kC3[4]) * Vec3<T>(T(4) * zz - T(3) * xx - yy, T(-2) * x * y, T(8) * x * z);
    out[14] = T(kC3[5]) * Vec3<T>(T(2) * x * z, T(-2) * y * z, xx - yy);
    out[15] = T(kC3[6]) * Vec3<T>(T(3) * xx - yy, T(-2) * x * y, T(0));
}

/// Evaluates RGB from SH coefficients (coefficient-major, 3 channels each)
/// for a unit view direction; the conventional +0.5 offset and clamp at 0.
template <typename T>
Vec3<T> sh_to_rgb(int degree, const T* coeffs, const Vec3<T>& dir) {
    T basis[16];
    sh_basis(degree, dir, basis);
    const int n = sh_coeff_count(degree);
    Vec3<T> rgb = Vec3<T>::Constant(T(0.5));
    for (int k = 0; k < n; ++k)
        for (int c = 0; c < 3; ++c) rgb[c] += basis[k] * coeffs[k * 3 + c];
    return rgb.cwiseMax(T(0));
}

/// Backward of sh_to_rgb. Accumulates into dcoeffs (same layout) and returns
/// dL/ddir (direction still unit-length; normalize_backward is the caller's).
template <typename T>
Vec3<T> sh_to_rgb_backward(int degree, const T* coeffs, const Vec3<T>& dir,
                           const Vec3<T>& drgb, T* dcoeffs) {
    T basis[16];
    Vec3<T> bgrad[16];
    sh_basis(degree, dir, basis);
    sh_basis_grad(degree, dir, bgrad);
    const int n = sh_coeff_count(degree);

    // Re-derive the clamp mask.
    Vec3<T> raw = Vec3<T>::Constant(T(0.5));
    for (int k = 0; k < n; ++k)
        for (int c = 0; c < 3; ++c) raw[c] += basis[k] * coeffs[k * 3 + c];
    Vec3<T> g = drgb;
    for (int c = 0; c < 3; ++c)
        if (raw[c] < T(0)) g[c] = T(0);

    Vec3<T> ddir = Vec3<T>::Zero();
    for (int k = 0; k < n; ++k) {
        T coeff_dot = T(0);
        for (int c = 0; c < 3; ++c) {
            dcoeffs[k * 3 + c] += basis[k] * g[c];
            coeff_dot += coeffs[k * 3 + c] * g[c];
        }
        ddir += bgrad[k] * coeff_dot;
    }
    return ddir;
}

}  // namespace swift4d
