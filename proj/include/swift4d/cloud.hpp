// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <numeric>
#include <vector>

#include "swift4d/math.hpp"

namespace swift4d {

template <typename T>
struct SceneConfig {
    T zeta = T(7.0);          // dynamic threshold on d
    T gamma = T(0.02);        // temporal-std mask threshold
    int sh_degree = 1;        // {0,1,2,3}
    Vec3<T> background = Vec3<T>::Zero();
    T near_clip = T(0.1);
    T far_clip = T(100.0);

    void validate() const {
        if (!std::isfinite(double(zeta))) throw InvalidParameterError("zeta must be finite");
        if (!(gamma > T(0) && gamma < T(1))) throw InvalidParameterError("gamma must be in (0,1)");
        if (sh_degree < 0 || sh_degree > 3) throw InvalidParameterError("sh degree must be in {0,1,2,3}");
    }
};

inline int sh_coeff_count(int degree) { return (degree + 1) * (degree + 1); }

/// Columnar store of per-Gaussian parameters. Scales are kept in log space
/// and opacity as a logit so optimizer steps are unconstrained; activations
/// are applied at use. Adam moments live alongside so structural edits
/// (densify/prune) keep them consistent.
template <typename T>
struct GaussianCloud {
    std::vector<Vec3<T>> means;
    std::vector<Vec4<T>> rotations;      // (w, x, y, z), kept unit norm
    std::vector<Vec3<T>> log_scales;
    std::vector<T> opacity_logits;
    std::vector<T> sh_coeffs;            // N * 3 * sh_coeff_count(degree), channel-major per coeff
    std::vector<T> dynamic_params;       // d, init 0
    std::vector<uint8_t> dynamic_flags;  // cache of d > zeta
    int sh_degree = 1;

    // Adam moment buffers, one pair per parameter group, same layout as the
    // parameter arrays.
    struct Moments {
        std::vector<Vec3<T>> means_m, means_v;
        std::vector<Vec4<T>> rot_m, rot_v;
        std::vector<Vec3<T>> scale_m, scale_v;
        std::vector<T> opacity_m, opacity_v;
        std::vector<T> sh_m, sh_v;
        std::vector<T> d_m, d_v;
    } moments;

    size_t size() const { return means.size(); }
    int sh_dim() const { return 3 * sh_coeff_count(sh_degree); }

    T* sh_ptr(size_t i) { return sh_coeffs.data() + i * sh_dim(); }
    const T* sh_ptr(size_t i) const { return sh_coeffs.data() + i * sh_dim(); }

    void resize(size_t n, int degree) {
        sh_degree = degree;
        means.assign(n, Vec3<T>::Zero());
        rotations.assign(n, Vec4<T>(T(1), T(0), T(0), T(0)));
        log_scales.assign(n, Vec3<T>::Zero());
        opacity_logits.assign(n, T(0));
        sh_coeffs.assign(n * sh_dim(), T(0));
        dynamic_params.assign(n, T(0));
        dynamic_flags.assign(n, 0);
        reset_moments();
    }

    void reset_moments() {
        const size_t n = size();
        moments.means_m.assign(n, Vec3<T>::Zero());
        moments.means_v.assign(n, Vec3<T>::Zero());
        moments.rot_m.assign(n, Vec4<T>::Zero());
        moments.rot_v.assign(n, Vec4<T>::Zero());
        moments.scale_m.assign(n, Vec3<T>::Zero());
        moments.scale_v.assign(n, Vec3<T>::Zero());
        moments.opacity_m.assign(n, T(0));
        moments.opacity_v.assign(n, T(0));
        moments.sh_m.assign(n * sh_dim(), T(0));
        moments.sh_v.assign(n * sh_dim(), T(0));
        moments.d_m.assign(n, T(0));
        moments.d_v.assign(n, T(0));
    }

    void renormalize_rotations() {
        for (auto& q : rotations) {
            const T n = q.norm();
            if (n > T(0)) q /= n;
        }
    }

    template <typename U>
    GaussianCloud<U> cast() const {
        GaussianCloud<U> out;
        out.sh_degree = sh_degree;
        const size_t n = size();
        out.means.resize(n);
        out.rotations.resize(n);
        out.log_scales.resize(n);
        for (size_t i = 0; i < n; ++i) {
            out.means[i] = means[i].template cast<U>();
            out.rotations[i] = rotations[i].template cast<U>();
            out.log_scales[i] = log_scales[i].template cast<U>();
        }
        out.opacity_logits.assign(opacity_logits.begin(), opacity_logits.end());
        out.sh_coeffs.assign(sh_coeffs.begin(), sh_coeffs.end());
        out.dynamic_params.assign(dynamic_params.begin(), dynamic_params.end());
        out.dynamic_flags = dynamic_flags;
        out.reset_moments();
        return out;
    }
};

/// 3D covariance from rotation and log-scale: R diag(exp(s))^2 R^T.
template <typename T>
Mat3<T> covariance3d(const Vec4<T>& rotation, const Vec3<T>& log_scale) {
    if (!all_finite(rotation.data(), 4) || !all_finite(log_scale.data(), 3))
        throw InvalidParameterError("covariance3d: non-finite input");
    const Mat3<T> r = quat_to_rotmat(rotation);
    const Vec3<T> e2 = (T(2) * log_scale).array().exp().matrix();
    return r * e2.asDiagonal() * r.transpose();
}

struct Partition {
    std::vector<size_t> dynamic;
    std::vector<size_t> static_;
};

/// Splits points by d > zeta (strict) and refreshes the dynamic_flags cache.
template <typename T>
Partition classify(GaussianCloud<T>& cloud, T zeta) {
    Partition part;
    const size_t n = cloud.size();
    part.dynamic.reserve(n);
    part.static_.reserve(n);
    cloud.dynamic_flags.resize(n);
    for (size_t i = 0; i < n; ++i) {
        const bool dyn = cloud.dynamic_params[i] > zeta;
        cloud.dynamic_flags[i] = dyn ? 1 : 0;
        (dyn ? part.dynamic : part.static_).push_back(i);
    }
    return part;
}

/// Bounding-sphere radius of the means; the base method's "scene extent"
/// knob that scales the position learning rate and split threshold.
template <typename T>
T scene_extent(const GaussianCloud<T>& cloud) {
    if (cloud.size() == 0) return T(1);
    Vec3<T> centroid = Vec3<T>::Zero();
    for (const auto& m : cloud.means) centroid += m;
    centroid /= T(cloud.size());
    T r2 = T(0);
    for (const auto& m : cloud.means) r2 = std::max(r2, (m - centroid).squaredNorm());
    return std::max(std::sqrt(r2), T(1e-3));
}

}  // namespace swift4d
