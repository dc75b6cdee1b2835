// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "swift4d/adam.hpp"
#include "swift4d/filters.hpp"
#include "swift4d/rasterizer.hpp"

namespace swift4d {

/// Per-view temporal-variance products: raw std map, smoothed variance map,
/// and the binarized dynamic-pixel mask.
template <typename T>
struct VarianceMaskSet {
    std::vector<Image<T>> std_maps;       // S_i, per-pixel temporal std (raw)
    std::vector<Image<T>> smoothed_var;   // V_i after the 31x31 Gaussian filter
    std::vector<Image<uint8_t>> masks;    // D_i in {0,1}
    T gamma = T(0.02);
    int frame_count = 0;

    size_t view_count() const { return masks.size(); }
};

constexpr int kVarianceKernelSize = 31;
constexpr double kVarianceKernelSigma = 5.0;

/// Temporal std per pixel (channel mean first), variance smoothing, then
/// thresholding the smoothed std against gamma (>= is dynamic).
template <typename T>
VarianceMaskSet<T> compute_masks(const std::vector<std::vector<Image<T>>>& videos, T gamma) {
    VarianceMaskSet<T> out;
    out.gamma = gamma;

    for (const auto& frames : videos) {
        if (frames.size() < 2) throw InvalidParameterError("compute_masks: need at least 2 frames per view");
        const int w = frames[0].width, h = frames[0].height;
        for (const auto& f : frames)
            if (f.width != w || f.height != h || f.channels != frames[0].channels)
                throw InvalidParameterError("compute_masks: mismatched frame dimensions");
    }
    if (!videos.empty()) out.frame_count = int(videos[0].size());

    out.std_maps.resize(videos.size());
    out.smoothed_var.resize(videos.size());
    out.masks.resize(videos.size());
    const auto kernel = gaussian_kernel<T>(kVarianceKernelSize, T(kVarianceKernelSigma));

    parallel_chunks(videos.size(), [&](int, size_t b, size_t e) {
        for (size_t view = b; view < e; ++view) {
            const auto& frames = videos[view];
            const int w = frames[0].width, h = frames[0].height, c = frames[0].channels;
            const size_t n_frames = frames.size();
            Image<T> variance(w, h, 1);
            Image<T> std_map(w, h, 1);

            for (int y = 0; y < h; ++y)
                for (int x = 0; x < w; ++x) {
                    T mean = T(0);
                    for (size_t t = 0; t < n_frames; ++t) {
                        T s = T(0);
                        for (int ch = 0; ch < c; ++ch) s += frames[t].at(y, x, ch);
                        mean += s / T(c);
                    }
                    mean /= T(n_frames);
                    T var = T(0);
                    for (size_t t = 0; t < n_frames; ++t) {
                        T s = T(0);
                        for (int ch = 0; ch < c; ++ch) s += frames[t].at(y, x, ch);
                        const T diff = s / T(c) - mean;
                        var += diff * diff;
                    }
                    var /= T(n_frames);  // population variance
                    variance.at(y, x, 0) = var;
                    std_map.at(y, x, 0) = std::sqrt(var);
                }

            Image<T> smooth = separable_filter(variance, kernel, Border::Reflect101);
            // Smoothing a non-negative field can dip epsilon-negative.
            for (auto& v : smooth.data) v = std::max(v, T(0));

            Image<uint8_t> mask(w, h, 1);
            for (size_t i = 0; i < mask.data.size(); ++i)
                mask.data[i] = std::sqrt(smooth.data[i]) >= gamma ? 1 : 0;

            out.std_maps[view] = std::move(std_map);
            out.smoothed_var[view] = std::move(smooth);
            out.masks[view] = std::move(mask);
        }
    });
    return out;
}

/// Binary cross-entropy of a sigmoid-activated map against a binary mask.
/// Returns the mean loss and the gradient w.r.t. the PRE-sigmoid composite,
/// which for BCE(sigmoid(x)) is (D_hat - D) / N.
template <typename T>
std::pair<T, Image<T>> bce_loss(const Image<T>& predicted, const Image<uint8_t>& target) {
    if (predicted.width != target.width || predicted.height != target.height)
        throw InvalidParameterError("bce_loss: shape mismatch");
    const size_t n = predicted.data.size();
    Image<T> grad(predicted.width, predicted.height, 1);
    double loss = 0.0;
    const T lo = T(1e-7), hi = T(1) - T(1e-7);
    for (size_t i = 0; i < n; ++i) {
        const T p = std::min(hi, std::max(lo, predicted.data[i]));
        const T d = T(target.data[i]);
        loss += double(-d * std::log(p) - (T(1) - d) * std::log(T(1) - p));
        grad.data[i] = (predicted.data[i] - d) / T(n);
    }
    return {T(loss / double(n)), std::move(grad)};
}

/// Stage 2: optimizes only the per-Gaussian dynamic parameter d against the
/// per-view masks, one randomly chosen view per iteration, Adam on d.
template <typename T>
std::vector<T> optimize_dynamic_params(GaussianCloud<T>& cloud, const std::vector<Camera<T>>& cameras,
                                       const VarianceMaskSet<T>& masks, int steps, T lr,
                                       const SceneConfig<T>& cfg, uint64_t seed = 0) {
    if (masks.view_count() == 0) throw InvalidParameterError("optimize_dynamic_params: empty mask set");
    if (masks.view_count() != cameras.size())
        throw InvalidParameterError("optimize_dynamic_params: camera/mask count mismatch");

    Rng rng(seed);
    std::vector<T> trace;
    trace.reserve(steps);
    const auto arrays = SplatArrays<T>::from(cloud);

    RasterizeOptions<T> opts;
    opts.mode = PayloadMode::DynamicValue;
    opts.background = cfg.background;

    for (int step = 0; step < steps; ++step) {
        const size_t view = size_t(rng.uniform_int(0, int(cameras.size()) - 1));
        const auto& cam = cameras[view];

        const auto proj = project(arrays, all_indices(arrays), cam, cfg.near_clip, cfg.far_clip);
        const auto out = rasterize(proj, cam, opts);

        Image<T> d_hat(out.payload.width, out.payload.height, 1);
        for (size_t i = 0; i < d_hat.data.size(); ++i) d_hat.data[i] = sigmoid(out.payload.data[i]);
        auto [loss, grad_pre] = bce_loss(d_hat, masks.masks[view]);
        trace.push_back(loss);

        auto grads = rasterize_backward(arrays, proj, out, cam, nullptr, &grad_pre, opts);
        adam_step(cloud.dynamic_params.data(), cloud.moments.d_m.data(), cloud.moments.d_v.data(),
                  grads.dynamic_params.data(), cloud.size(), lr, step + 1);
    }
    classify(cloud, cfg.zeta);
    return trace;
}

}  // namespace swift4d
