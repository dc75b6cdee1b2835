// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "swift4d/camera.hpp"
#include "swift4d/cloud.hpp"
#include "swift4d/rasterizer.hpp"
#include "swift4d/sh.hpp"

namespace swift4d::testutil {

/// Camera at the origin looking down +z with the given intrinsics.
template <typename T>
Camera<T> axis_camera(int w, int h, T fx, T fy) {
    Camera<T> cam;
    cam.width = w;
    cam.height = h;
    cam.fx = fx;
    cam.fy = fy;
    cam.cx = T(w) / T(2);
    cam.cy = T(h) / T(2);
    cam.world_to_camera = Mat4<T>::Identity();
    return cam;
}

template <typename T>
size_t add_point(GaussianCloud<T>& cloud, const Vec3<T>& pos, const Vec3<T>& log_scale,
                 T opacity_logit, const Vec3<T>& rgb, T d = T(0)) {
    const size_t i = cloud.size();
    cloud.means.push_back(pos);
    cloud.rotations.push_back(Vec4<T>(T(1), T(0), T(0), T(0)));
    cloud.log_scales.push_back(log_scale);
    cloud.opacity_logits.push_back(opacity_logit);
    for (int k = 0; k < sh_coeff_count(cloud.sh_degree); ++k)
        for (int c = 0; c < 3; ++c)
            cloud.sh_coeffs.push_back(k == 0 ? (rgb[c] - T(0.5)) / T(0.28209479177387814) : T(0));
    cloud.dynamic_params.push_back(d);
    cloud.dynamic_flags.push_back(0);
    return i;
}

template <typename T>
void finish_cloud(GaussianCloud<T>& cloud) {
    cloud.reset_moments();
}

/// The color a point added via add_point actually evaluates to on-axis
/// (degree 0: direction independent).
template <typename T>
Vec3<T> evaluated_color(const GaussianCloud<T>& cloud, size_t i) {
    return sh_to_rgb(cloud.sh_degree, cloud.sh_ptr(i), Vec3<T>(T(0), T(0), T(1)));
}

}  // namespace swift4d::testutil
