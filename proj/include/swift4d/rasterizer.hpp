// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>

#include "swift4d/camera.hpp"
#include "swift4d/cloud.hpp"
#include "swift4d/sh.hpp"

namespace swift4d {

/// Non-owning view of pre-activation splat parameter arrays. deform()
/// produces one of these with deformed values substituted for dynamic
/// points; for a canonical render it views the cloud directly.
template <typename T>
struct SplatArrays {
    const Vec3<T>* means = nullptr;
    const Vec4<T>* rotations = nullptr;  // raw, normalized at use
    const Vec3<T>* log_scales = nullptr;
    const T* opacity_logits = nullptr;
    const T* sh = nullptr;  // sh_dim per point
    const T* dynamic_params = nullptr;
    int sh_degree = 0;
    size_t count = 0;

    static SplatArrays from(const GaussianCloud<T>& cloud) {
        SplatArrays a;
        a.means = cloud.means.data();
        a.rotations = cloud.rotations.data();
        a.log_scales = cloud.log_scales.data();
        a.opacity_logits = cloud.opacity_logits.data();
        a.sh = cloud.sh_coeffs.data();
        a.dynamic_params = cloud.dynamic_params.data();
        a.sh_degree = cloud.sh_degree;
        a.count = cloud.size();
        return a;
    }
};

template <typename T>
struct ProjectedGaussian {
    Vec2<T> mean2d;
    T cov2d[3];   // regularized 2D covariance (m00, m01, m11)
    T conic[3];   // inverse of cov2d as (a, b, c); form a*dx^2 + 2b*dx*dy + c*dy^2
    T depth = T(0);
    T opacity = T(0);  // activated
    Vec3<T> color = Vec3<T>::Zero();
    T payload = T(0);  // dynamic parameter d of the source point
    int source = -1;
    int radius = 0;  // 3-sigma footprint radius in pixels
    Vec3<T> p_cam = Vec3<T>::Zero();
};

enum class PayloadMode { Color, DynamicValue };

template <typename T>
struct RasterizeOptions {
    PayloadMode mode = PayloadMode::Color;
    bool retain_records = true;
    Vec3<T> background = Vec3<T>::Zero();
    /// Optional per-source max blending weight accumulator (Eq. 9 style);
    /// must be sized to the cloud when provided.
    std::vector<T>* importance = nullptr;

    T alpha_clamp = T(0.99);
    T alpha_skip = T(1) / T(255);
    T early_stop_transmittance = T(1e-4);
};

template <typename T>
struct ContributionRecord {
    int32_t proj;  // index into the projected list
    T alpha;       // composited alpha_i(x), post-clamp
    T trans;       // prefix transmittance prod_{j<i} (1 - alpha_j)
};

template <typename T>
struct RenderOutput {
    Image<T> color;    // H x W x 3
    Image<T> alpha;    // H x W x 1, sum of blending weights
    Image<T> payload;  // H x W x 1, pre-sigmoid composite of d
    Image<T> final_t;  // H x W x 1, transmittance after the last splat

    bool has_records = false;
    std::vector<ContributionRecord<T>> records;  // pixel-major, see offsets
    std::vector<int32_t> rec_offset;             // per pixel start into records
    std::vector<int32_t> rec_count;              // per pixel record count
};

struct ProjectStats {
    int culled_depth = 0;
    int culled_frustum = 0;
};

constexpr int kTileSize = 16;
constexpr double kBlurFloor = 0.3;      // screen-space regularization added to cov2d
constexpr double kFootprintSigma = 3.0;

// ---------------------------------------------------------------------------
// Forward projection

template <typename T>
std::vector<ProjectedGaussian<T>> project(const SplatArrays<T>& arrays,
                                          const std::vector<size_t>& subset,
                                          const Camera<T>& camera, T near_clip, T far_clip,
                                          ProjectStats* stats = nullptr) {
    const Mat3<T> rot_w = camera.rotation();
    const Vec3<T> trans_w = camera.translation();
    const Vec3<T> cam_pos = camera.position();

    std::vector<ProjectedGaussian<T>> slots(subset.size());
    std::vector<uint8_t> valid(subset.size(), 0);
    std::vector<uint8_t> depth_cull(subset.size(), 0);

    parallel_chunks(subset.size(), [&](int, size_t begin, size_t end) {
        for (size_t k = begin; k < end; ++k) {
            const size_t i = subset[k];
            const Vec3<T> p_cam = rot_w * arrays.means[i] + trans_w;
            if (!(p_cam.z() > near_clip) || !(p_cam.z() < far_clip)) {
                depth_cull[k] = 1;
                continue;
            }
            ProjectedGaussian<T> pg;
            pg.source = int(i);
            pg.p_cam = p_cam;
            pg.depth = p_cam.z();
            pg.mean2d = camera.project(p_cam);

            const Vec4<T> q = arrays.rotations[i].normalized();
            const Mat3<T> r = quat_to_rotmat(q);
            const Vec3<T> e = arrays.log_scales[i].array().exp().matrix();
            const Mat3<T> m = r * e.asDiagonal();
            const Mat3<T> cov3 = m * m.transpose();
            const Mat3<T> v = rot_w * cov3 * rot_w.transpose();

            const T iz = T(1) / p_cam.z();
            const Vec3<T> j0(camera.fx * iz, T(0), -camera.fx * p_cam.x() * iz * iz);
            const Vec3<T> j1(T(0), camera.fy * iz, -camera.fy * p_cam.y() * iz * iz);
            pg.cov2d[0] = j0.dot(v * j0) + T(kBlurFloor);
            pg.cov2d[1] = j0.dot(v * j1);
            pg.cov2d[2] = j1.dot(v * j1) + T(kBlurFloor);

            const T det = pg.cov2d[0] * pg.cov2d[2] - pg.cov2d[1] * pg.cov2d[1];
            if (!(det > T(0))) {
                depth_cull[k] = 1;  // degenerate; only possible with non-finite inputs
                continue;
            }
            const T inv_det = T(1) / det;
            pg.conic[0] = pg.cov2d[2] * inv_det;
            pg.conic[1] = -pg.cov2d[1] * inv_det;
            pg.conic[2] = pg.cov2d[0] * inv_det;

            const T mid = T(0.5) * (pg.cov2d[0] + pg.cov2d[2]);
            const T half_diff = T(0.5) * (pg.cov2d[0] - pg.cov2d[2]);
            const T lambda_max = mid + std::sqrt(half_diff * half_diff + pg.cov2d[1] * pg.cov2d[1]);
            pg.radius = int(std::ceil(double(T(kFootprintSigma) * std::sqrt(lambda_max))));

            if (pg.mean2d.x() + T(pg.radius) < T(0) || pg.mean2d.x() - T(pg.radius) > T(camera.width) ||
                pg.mean2d.y() + T(pg.radius) < T(0) || pg.mean2d.y() - T(pg.radius) > T(camera.height))
                continue;  // footprint entirely outside the frame

            pg.opacity = sigmoid(arrays.opacity_logits[i]);
            const Vec3<T> dir = (arrays.means[i] - cam_pos).normalized();
            pg.color = sh_to_rgb(arrays.sh_degree, arrays.sh + size_t(i) * 3 * sh_coeff_count(arrays.sh_degree), dir);
            pg.payload = arrays.dynamic_params[i];

            slots[k] = pg;
            valid[k] = 1;
        }
    });

    std::vector<ProjectedGaussian<T>> out;
    out.reserve(subset.size());
    int n_depth = 0, n_frustum = 0;
    for (size_t k = 0; k < subset.size(); ++k) {
        if (valid[k])
            out.push_back(slots[k]);
        else
            (depth_cull[k] ? n_depth : n_frustum) += 1;
    }
    if (stats) {
        stats->culled_depth = n_depth;
        stats->culled_frustum = n_frustum;
    }
    return out;
}

template <typename T>
std::vector<size_t> all_indices(const SplatArrays<T>& arrays) {
    std::vector<size_t> idx(arrays.count);
    for (size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    return idx;
}

// ---------------------------------------------------------------------------
// Forward rasterization

template <typename T>
RenderOutput<T> rasterize(const std::vector<ProjectedGaussian<T>>& projected,
                          const Camera<T>& camera, const RasterizeOptions<T>& opts) {
    const int w = camera.width, h = camera.height;
    RenderOutput<T> out;
    out.color = Image<T>(w, h, 3);
    out.alpha = Image<T>(w, h, 1);
    out.payload = Image<T>(w, h, 1);
    out.final_t = Image<T>(w, h, 1, T(1));
    out.has_records = opts.retain_records;
    if (opts.retain_records) {
        out.rec_offset.assign(size_t(w) * h, 0);
        out.rec_count.assign(size_t(w) * h, 0);
    }

    // Depth order with a fixed tie-break on the source index.
    std::vector<int32_t> order(projected.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = int32_t(i);
    std::sort(order.begin(), order.end(), [&](int32_t a, int32_t b) {
        if (projected[a].depth != projected[b].depth) return projected[a].depth < projected[b].depth;
        return projected[a].source < projected[b].source;
    });

    const int tiles_x = (w + kTileSize - 1) / kTileSize;
    const int tiles_y = (h + kTileSize - 1) / kTileSize;
    const int n_tiles = tiles_x * tiles_y;

    // Bin in sorted order so per-tile lists stay depth-sorted.
    std::vector<std::vector<int32_t>> tile_lists(n_tiles);
    for (const int32_t pi : order) {
        const auto& pg = projected[pi];
        const int x0 = std::max(0, int(std::floor(double(pg.mean2d.x()) - pg.radius)));
        const int x1 = std::min(w - 1, int(std::ceil(double(pg.mean2d.x()) + pg.radius)));
        const int y0 = std::max(0, int(std::floor(double(pg.mean2d.y()) - pg.radius)));
        const int y1 = std::min(h - 1, int(std::ceil(double(pg.mean2d.y()) + pg.radius)));
        if (x1 < x0 || y1 < y0) continue;
        for (int ty = y0 / kTileSize; ty <= y1 / kTileSize; ++ty)
            for (int tx = x0 / kTileSize; tx <= x1 / kTileSize; ++tx)
                tile_lists[ty * tiles_x + tx].push_back(pi);
    }

    const bool dynamic_mode = opts.mode == PayloadMode::DynamicValue;
    const int n_threads = thread_count();
    std::vector<std::vector<T>> importance_partials;
    if (opts.importance) importance_partials.assign(n_threads, std::vector<T>(opts.importance->size(), T(0)));

    std::vector<std::vector<ContributionRecord<T>>> tile_records(opts.retain_records ? n_tiles : 0);

    parallel_chunks(size_t(n_tiles), [&](int tid, size_t begin, size_t end) {
        T* imp = opts.importance ? importance_partials[tid].data() : nullptr;
        for (size_t tile = begin; tile < end; ++tile) {
            const auto& list = tile_lists[tile];
            const int tx = int(tile) % tiles_x, ty = int(tile) / tiles_x;
            const int px0 = tx * kTileSize, px1 = std::min(w, px0 + kTileSize);
            const int py0 = ty * kTileSize, py1 = std::min(h, py0 + kTileSize);
            auto* recs = opts.retain_records ? &tile_records[tile] : nullptr;

            for (int py = py0; py < py1; ++py) {
                for (int px = px0; px < px1; ++px) {
                    const T cx = T(px) + T(0.5), cy = T(py) + T(0.5);
                    T trans = T(1);
                    Vec3<T> acc_color = Vec3<T>::Zero();
                    T acc_alpha = T(0), acc_payload = T(0);
                    int32_t count = 0;

                    for (const int32_t pi : list) {
                        if (trans < opts.early_stop_transmittance) break;
                        const auto& pg = projected[pi];
                        const T dx = cx - pg.mean2d.x(), dy = cy - pg.mean2d.y();
                        const T power = T(-0.5) * (pg.conic[0] * dx * dx + pg.conic[2] * dy * dy) -
                                        pg.conic[1] * dx * dy;
                        if (power > T(0)) continue;
                        const T alpha = std::min(opts.alpha_clamp, pg.opacity * std::exp(power));
                        if (alpha < opts.alpha_skip) continue;

                        const T weight = alpha * trans;
                        acc_color += weight * pg.color;
                        acc_alpha += weight;
                        if (dynamic_mode) acc_payload += weight * pg.payload;
                        if (imp) {
                            T& slot = imp[pg.source];
                            if (weight > slot) slot = weight;
                        }
                        if (recs) {
                            recs->push_back({pi, alpha, trans});
                            ++count;
                        }
                        trans *= (T(1) - alpha);
                    }

                    const size_t px_idx = size_t(py) * w + px;
                    acc_color += trans * opts.background;
                    for (int c = 0; c < 3; ++c) out.color.data[px_idx * 3 + c] = acc_color[c];
                    out.alpha.data[px_idx] = acc_alpha;
                    out.payload.data[px_idx] = acc_payload;
                    out.final_t.data[px_idx] = trans;
                    if (recs) out.rec_count[px_idx] = count;
                }
            }
        }
    });

    if (opts.importance) {
        auto& dst = *opts.importance;
        for (int t = 0; t < n_threads; ++t) {
            const auto& part = importance_partials[t];
            for (size_t i = 0; i < dst.size(); ++i)
                if (part[i] > dst[i]) dst[i] = part[i];
        }
    }

    if (opts.retain_records) {
        size_t total = 0;
        for (const auto& tr : tile_records) total += tr.size();
        out.records.resize(total);
        // Offsets follow the per-tile pixel walk order used above.
        size_t running = 0;
        for (int tile = 0; tile < n_tiles; ++tile) {
            const int tx = tile % tiles_x, ty = tile / tiles_x;
            const int px0 = tx * kTileSize, px1 = std::min(w, px0 + kTileSize);
            const int py0 = ty * kTileSize, py1 = std::min(h, py0 + kTileSize);
            size_t local = 0;
            for (int py = py0; py < py1; ++py)
                for (int px = px0; px < px1; ++px) {
                    const size_t px_idx = size_t(py) * w + px;
                    out.rec_offset[px_idx] = int32_t(running + local);
                    local += out.rec_count[px_idx];
                }
            if (!tile_records[tile].empty())
                std::copy(tile_records[tile].begin(), tile_records[tile].end(), out.records.begin() + running);
            running += tile_records[tile].size();
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Backward

template <typename T>
struct RasterGrads {
    std::vector<Vec3<T>> means;
    std::vector<Vec4<T>> rotations;
    std::vector<Vec3<T>> log_scales;
    std::vector<T> opacity_logits;
    std::vector<T> sh;
    std::vector<T> dynamic_params;
    /// Per-point norm of the screen-space mean gradient in the base method's
    /// NDC convention (pixels scaled by half image size); densification stat.
    std::vector<T> mean2d_grad_norm;

    explicit RasterGrads(size_t n = 0, int sh_degree = 0) { resize(n, sh_degree); }

    void resize(size_t n, int sh_degree) {
        means.assign(n, Vec3<T>::Zero());
        rotations.assign(n, Vec4<T>::Zero());
        log_scales.assign(n, Vec3<T>::Zero());
        opacity_logits.assign(n, T(0));
        sh.assign(n * 3 * sh_coeff_count(sh_degree), T(0));
        dynamic_params.assign(n, T(0));
        mean2d_grad_norm.assign(n, T(0));
    }
};

/// Gradients of a scalar loss through the compositing, projection, and
/// activation chain. grad_color (HxWx3) and grad_payload (HxWx1) may each be
/// null, meaning zero. The same arrays/projected/options as the forward pass
/// must be supplied, and the forward must have retained contribution records.
template <typename T>
RasterGrads<T> rasterize_backward(const SplatArrays<T>& arrays,
                                  const std::vector<ProjectedGaussian<T>>& projected,
                                  const RenderOutput<T>& output, const Camera<T>& camera,
                                  std::type_identity_t<const Image<T>*> grad_color,
                                  std::type_identity_t<const Image<T>*> grad_payload,
                                  const RasterizeOptions<T>& opts) {
    if (!output.has_records)
        throw ContractError("rasterize_backward: forward pass did not retain contribution records");

    const int w = camera.width, h = camera.height;
    const size_t n_pixels = size_t(w) * h;
    const size_t m = projected.size();
    RasterGrads<T> grads(arrays.count, arrays.sh_degree);
    if (m == 0) return grads;

    // Per-projected accumulators: [dcol(3), dd, dmu2d(2), dconic(3), dopacity_act]
    constexpr int kSlots = 10;
    const int n_threads = thread_count();
    std::vector<std::vector<T>> partials(n_threads);

    parallel_chunks(n_pixels, [&](int tid, size_t begin, size_t end) {
        auto& buf = partials[tid];
        buf.assign(m * kSlots, T(0));
        for (size_t px_idx = begin; px_idx < end; ++px_idx) {
            const int32_t count = output.rec_count[px_idx];
            if (count == 0) continue;
            const int32_t offset = output.rec_offset[px_idx];
            const int px = int(px_idx % w), py = int(px_idx / w);
            const T cx = T(px) + T(0.5), cy = T(py) + T(0.5);

            Vec3<T> gc = Vec3<T>::Zero();
            if (grad_color)
                for (int c = 0; c < 3; ++c) gc[c] = grad_color->data[px_idx * 3 + c];
            const T gp = grad_payload ? grad_payload->data[px_idx] : T(0);
            if (gc.isZero() && gp == T(0)) continue;

            // Suffix sums: contribution of everything behind the current splat.
            Vec3<T> suffix_rgb = output.final_t.data[px_idx] * opts.background;
            T suffix_pay = T(0);

            for (int32_t r = count - 1; r >= 0; --r) {
                const auto& rec = output.records[offset + r];
                const auto& pg = projected[rec.proj];
                T* acc = buf.data() + size_t(rec.proj) * kSlots;

                const T at = rec.alpha * rec.trans;
                acc[0] += gc[0] * at;
                acc[1] += gc[1] * at;
                acc[2] += gc[2] * at;
                acc[3] += gp * at;  // Appendix-B product: grad * (alpha_g * prod(1-alpha_j))

                const T inv_one_minus = T(1) / (T(1) - rec.alpha);
                T dalpha = gp * (pg.payload * rec.trans - suffix_pay * inv_one_minus);
                for (int c = 0; c < 3; ++c)
                    dalpha += gc[c] * (pg.color[c] * rec.trans - suffix_rgb[c] * inv_one_minus);

                suffix_rgb += (rec.alpha * rec.trans) * pg.color;
                suffix_pay += (rec.alpha * rec.trans) * pg.payload;

                const T dx = cx - pg.mean2d.x(), dy = cy - pg.mean2d.y();
                const T power = T(-0.5) * (pg.conic[0] * dx * dx + pg.conic[2] * dy * dy) -
                                pg.conic[1] * dx * dy;
                const T g = std::exp(power);
                if (pg.opacity * g > opts.alpha_clamp) continue;  // clamped: no geometry/opacity grad

                const T dg = dalpha * pg.opacity;  // dL/dg
                acc[9] += dalpha * g;              // dL/d(activated opacity)
                const T gg = dg * g;
                acc[4] += gg * (pg.conic[0] * dx + pg.conic[1] * dy);  // dmu2d.x
                acc[5] += gg * (pg.conic[1] * dx + pg.conic[2] * dy);  // dmu2d.y
                acc[6] += gg * (T(-0.5) * dx * dx);                    // dconic a
                acc[7] += gg * (-dx * dy);                             // dconic b
                acc[8] += gg * (T(-0.5) * dy * dy);                    // dconic c
            }
        }
    });

    // Deterministic reduction in thread order.
    std::vector<T> acc(m * kSlots, T(0));
    for (int t = 0; t < n_threads; ++t) {
        if (partials[t].empty()) continue;
        for (size_t i = 0; i < acc.size(); ++i) acc[i] += partials[t][i];
    }

    // Chain per projected splat back to 3D parameters.
    const Mat3<T> rot_w = camera.rotation();
    const Vec3<T> cam_pos = camera.position();
    const int sh_dim = 3 * sh_coeff_count(arrays.sh_degree);

    parallel_chunks(m, [&](int, size_t begin, size_t end) {
        for (size_t k = begin; k < end; ++k) {
            const T* a = acc.data() + k * kSlots;
            bool any = false;
            for (int s = 0; s < kSlots; ++s) any |= (a[s] != T(0));
            if (!any) continue;

            const auto& pg = projected[k];
            const size_t i = size_t(pg.source);

            grads.dynamic_params[i] += a[3];

            // Opacity activation.
            grads.opacity_logits[i] += a[9] * pg.opacity * (T(1) - pg.opacity);

            // Color -> SH coefficients and view direction.
            const Vec3<T> dcolor(a[0], a[1], a[2]);
            Vec3<T> dmean_world = Vec3<T>::Zero();
            if (!dcolor.isZero()) {
                const Vec3<T> v = arrays.means[i] - cam_pos;
                const Vec3<T> dir = v.normalized();
                const Vec3<T> ddir = sh_to_rgb_backward(arrays.sh_degree, arrays.sh + i * sh_dim, dir,
                                                        dcolor, grads.sh.data() + i * sh_dim);
                dmean_world += normalize_backward(v, ddir);
            }

            // Conic -> regularized 2D covariance.
            const T m00 = pg.cov2d[0], m01 = pg.cov2d[1], m11 = pg.cov2d[2];
            const T det = m00 * m11 - m01 * m01;
            const T inv_det2 = T(1) / (det * det);
            const T da = a[6], db = a[7], dc = a[8];
            const T dm00 = inv_det2 * (-m11 * m11 * da + m01 * m11 * db - m01 * m01 * dc);
            const T dm01 = inv_det2 * (T(2) * m01 * m11 * da - (det + T(2) * m01 * m01) * db +
                                       T(2) * m00 * m01 * dc);
            const T dm11 = inv_det2 * (-m01 * m01 * da + m00 * m01 * db - m00 * m00 * dc);

            // 2D covariance -> camera-space covariance V and Jacobian rows.
            const Vec4<T> q_raw = arrays.rotations[i];
            const Vec4<T> q = q_raw.normalized();
            const Mat3<T> rot = quat_to_rotmat(q);
            const Vec3<T> e = arrays.log_scales[i].array().exp().matrix();
            const Mat3<T> mmat = rot * e.asDiagonal();
            const Mat3<T> cov3 = mmat * mmat.transpose();
            const Mat3<T> v3 = rot_w * cov3 * rot_w.transpose();

            const T iz = T(1) / pg.p_cam.z();
            const T iz2 = iz * iz;
            const Vec3<T> j0(camera.fx * iz, T(0), -camera.fx * pg.p_cam.x() * iz2);
            const Vec3<T> j1(T(0), camera.fy * iz, -camera.fy * pg.p_cam.y() * iz2);

            const Mat3<T> dv = dm00 * (j0 * j0.transpose()) + dm11 * (j1 * j1.transpose()) +
                               dm01 * (j0 * j1.transpose());
            const Vec3<T> dj0 = T(2) * dm00 * (v3 * j0) + dm01 * (v3 * j1);
            const Vec3<T> dj1 = T(2) * dm11 * (v3 * j1) + dm01 * (v3 * j0);

            // V -> world covariance -> (rotation, scales).
            const Mat3<T> dcov3 = rot_w.transpose() * dv * rot_w;
            const Mat3<T> dmmat = (dcov3 + dcov3.transpose()) * mmat;
            const Mat3<T> drot = dmmat * e.asDiagonal();
            Vec3<T> ds;
            for (int c = 0; c < 3; ++c) ds[c] = rot.col(c).dot(dmmat.col(c)) * e[c];
            grads.log_scales[i] += ds;
            const Vec4<T> dq_unit = quat_rotmat_backward(q, drot);
            grads.rotations[i] += normalize_backward(q_raw, dq_unit);

            // Jacobian entries and the 2D mean -> camera-space point.
            Vec3<T> dp = Vec3<T>::Zero();
            dp.x() += dj0.z() * (-camera.fx * iz2);
            dp.y() += dj1.z() * (-camera.fy * iz2);
            dp.z() += dj0.x() * (-camera.fx * iz2) + dj0.z() * (T(2) * camera.fx * pg.p_cam.x() * iz2 * iz);
            dp.z() += dj1.y() * (-camera.fy * iz2) + dj1.z() * (T(2) * camera.fy * pg.p_cam.y() * iz2 * iz);

            const T dmu_x = a[4], dmu_y = a[5];
            dp.x() += dmu_x * camera.fx * iz;
            dp.z() -= dmu_x * camera.fx * pg.p_cam.x() * iz2;
            dp.y() += dmu_y * camera.fy * iz;
            dp.z() -= dmu_y * camera.fy * pg.p_cam.y() * iz2;

            dmean_world += rot_w.transpose() * dp;
            grads.means[i] += dmean_world;

            grads.mean2d_grad_norm[i] += std::sqrt(dmu_x * T(0.5) * T(camera.width) * dmu_x * T(0.5) * T(camera.width) +
                                                   dmu_y * T(0.5) * T(camera.height) * dmu_y * T(0.5) * T(camera.height));
        }
    });

    return grads;
}

/// Convenience: project + rasterize the whole cloud canonically.
template <typename T>
RenderOutput<T> render_cloud(const GaussianCloud<T>& cloud, const Camera<T>& camera,
                             const SceneConfig<T>& cfg, PayloadMode mode = PayloadMode::Color,
                             bool retain_records = false) {
    const auto arrays = SplatArrays<T>::from(cloud);
    const auto proj = project(arrays, all_indices(arrays), camera, cfg.near_clip, cfg.far_clip);
    RasterizeOptions<T> opts;
    opts.mode = mode;
    opts.retain_records = retain_records;
    opts.background = cfg.background;
    return rasterize(proj, camera, opts);
}

}  // namespace swift4d
