// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "swift4d/math.hpp"

namespace swift4d {

/// Pinhole camera with a world-to-camera rigid transform. The camera looks
/// down +z; image x grows right, y grows down. Pixel (row, col) has its
/// center at (col + 0.5, row + 0.5).
template <typename T>
struct Camera {
    int id = 0;
    int width = 0;
    int height = 0;
    T fx = T(0), fy = T(0);
    T cx = T(0), cy = T(0);
    Mat4<T> world_to_camera = Mat4<T>::Identity();

    Mat3<T> rotation() const { return world_to_camera.template block<3, 3>(0, 0); }
    Vec3<T> translation() const { return world_to_camera.template block<3, 1>(0, 3); }
    Vec3<T> position() const { return -rotation().transpose() * translation(); }

    Vec3<T> to_camera(const Vec3<T>& p_world) const { return rotation() * p_world + translation(); }

    /// Pinhole projection of a camera-space point (z > 0) to pixel coordinates.
    Vec2<T> project(const Vec3<T>& p_cam) const {
        return {fx * p_cam.x() / p_cam.z() + cx, fy * p_cam.y() / p_cam.z() + cy};
    }

    void validate() const {
        if (!(fx > T(0)) || !(fy > T(0)))
            throw InvalidParameterError("camera: focal lengths must be positive");
        if (!(cx >= T(0) && cx < T(width)) || !(cy >= T(0) && cy < T(height)))
            throw InvalidParameterError("camera: principal point outside image");
        const Mat3<T> r = rotation();
        const Mat3<T> err = r.transpose() * r - Mat3<T>::Identity();
        if (err.cwiseAbs().maxCoeff() >= T(1e-5))
            throw InvalidParameterError("camera: rotation block is not orthonormal");
        const Vec3<T> bottom = world_to_camera.template block<1, 3>(3, 0).transpose();
        if (bottom.norm() > T(1e-6) || std::abs(double(world_to_camera(3, 3) - T(1))) > 1e-6)
            throw InvalidParameterError("camera: last transform row must be (0,0,0,1)");
    }

    template <typename U>
    Camera<U> cast() const {
        Camera<U> c;
        c.id = id;
        c.width = width;
        c.height = height;
        c.fx = U(fx); c.fy = U(fy);
        c.cx = U(cx); c.cy = U(cy);
        c.world_to_camera = world_to_camera.template cast<U>();
        return c;
    }
};

/// Camera on a ring looking at a target, world z up.
template <typename T>
Camera<T> make_lookat_camera(int id, int width, int height, T fov_x_deg,
                             const Vec3<T>& position, const Vec3<T>& target) {
    Camera<T> cam;
    cam.id = id;
    cam.width = width;
    cam.height = height;
    cam.fx = T(width) / (T(2) * std::tan(fov_x_deg * T(M_PI) / T(360)));
    cam.fy = cam.fx;
    cam.cx = T(width) / T(2);
    cam.cy = T(height) / T(2);

    const Vec3<T> forward = (target - position).normalized();
    Vec3<T> up_world(T(0), T(0), T(1));
    if (std::abs(double(forward.dot(up_world))) > 0.999) up_world = Vec3<T>(T(0), T(1), T(0));
    const Vec3<T> x_cam = forward.cross(up_world).normalized();
    const Vec3<T> y_cam = forward.cross(x_cam).normalized();

    Mat4<T> w2c = Mat4<T>::Identity();
    w2c.template block<1, 3>(0, 0) = x_cam.transpose();
    w2c.template block<1, 3>(1, 0) = y_cam.transpose();
    w2c.template block<1, 3>(2, 0) = forward.transpose();
    w2c.template block<3, 1>(0, 3) = -(w2c.template block<3, 3>(0, 0) * position);
    cam.world_to_camera = w2c;
    return cam;
}

}  // namespace swift4d
