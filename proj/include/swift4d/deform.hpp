// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "swift4d/decoder.hpp"
#include "swift4d/hash_grid.hpp"
#include "swift4d/rasterizer.hpp"

namespace swift4d {

/// Deformed pre-activation parameter arrays at one timestamp. Static points
/// are bit-identical copies of the canonical cloud; dynamic points carry the
/// decoded deltas added in pre-activation space. Forward intermediates are
/// cached for deform_backward.
template <typename T>
struct DeformResult {
    std::vector<Vec3<T>> means;
    std::vector<Vec4<T>> rotations;
    std::vector<Vec3<T>> log_scales;
    std::vector<T> opacity_logits;
    std::vector<T> sh;

    std::vector<size_t> dynamic_indices;
    T t = T(0);
    bool has_cache = false;
    int cache_stride = 0;
    std::vector<T> cache;  // per dynamic point: f_h | fusion_hidden | f_d | 5 head hiddens

    SplatArrays<T> arrays(const GaussianCloud<T>& cloud) const {
        SplatArrays<T> a;
        a.means = means.data();
        a.rotations = rotations.data();
        a.log_scales = log_scales.data();
        a.opacity_logits = opacity_logits.data();
        a.sh = sh.data();
        a.dynamic_params = cloud.dynamic_params.data();
        a.sh_degree = cloud.sh_degree;
        a.count = means.size();
        return a;
    }
};

template <typename T>
DeformResult<T> deform(const GaussianCloud<T>& cloud, const std::vector<size_t>& dynamic_indices,
                       const HashGrid4D<T>& grid, const FeatureDecoder<T>& dec, T t,
                       bool retain_cache = true) {
    for (size_t i : dynamic_indices)
        if (i >= cloud.size()) throw InvalidParameterError("deform: dynamic index out of range");

    DeformResult<T> out;
    out.means = cloud.means;
    out.rotations = cloud.rotations;
    out.log_scales = cloud.log_scales;
    out.opacity_logits = cloud.opacity_logits;
    out.sh = cloud.sh_coeffs;
    out.dynamic_indices = dynamic_indices;
    out.t = t;

    const int f_dim = grid.feature_dim();
    const int hidden = dec.hidden;
    const int sh_dim = 3 * sh_coeff_count(cloud.sh_degree);
    out.cache_stride = f_dim + 7 * hidden;
    out.has_cache = retain_cache;
    if (retain_cache) out.cache.assign(dynamic_indices.size() * out.cache_stride, T(0));

    parallel_chunks(dynamic_indices.size(), [&](int, size_t kb, size_t ke) {
        std::vector<T> local(out.cache_stride);
        std::vector<T> delta(std::max(sh_dim, 4));
        for (size_t k = kb; k < ke; ++k) {
            const size_t i = dynamic_indices[k];
            T* buf = retain_cache ? out.cache.data() + k * out.cache_stride : local.data();
            T* f_h = buf;
            T* fusion_hidden = f_h + f_dim;
            T* f_d = fusion_hidden + hidden;
            T* head_hidden = f_d + hidden;  // 5 consecutive blocks of `hidden`

            encode(grid, cloud.means[i], t, f_h);
            dec.fusion.forward(f_h, f_d, fusion_hidden);

            dec.head_mean.forward(f_d, delta.data(), head_hidden + 0 * hidden);
            for (int a = 0; a < 3; ++a) out.means[i][a] += delta[a];
            dec.head_scale.forward(f_d, delta.data(), head_hidden + 1 * hidden);
            for (int a = 0; a < 3; ++a) out.log_scales[i][a] += delta[a];
            dec.head_rot.forward(f_d, delta.data(), head_hidden + 2 * hidden);
            for (int a = 0; a < 4; ++a) out.rotations[i][a] += delta[a];
            dec.head_opacity.forward(f_d, delta.data(), head_hidden + 3 * hidden);
            out.opacity_logits[i] += delta[0];
            dec.head_sh.forward(f_d, delta.data(), head_hidden + 4 * hidden);
            for (int a = 0; a < sh_dim; ++a) out.sh[i * sh_dim + a] += delta[a];
        }
    });
    return out;
}

namespace deform_detail {

template <typename T>
struct MlpGradStore {
    std::vector<T> gw1, gb1, gw2, gb2;
    void init(const Mlp<T>& m) {
        gw1.assign(m.l1.w.size(), T(0));
        gb1.assign(m.l1.b.size(), T(0));
        gw2.assign(m.l2.w.size(), T(0));
        gb2.assign(m.l2.b.size(), T(0));
    }
    typename Mlp<T>::GradBufs bufs() { return {gw1.data(), gb1.data(), gw2.data(), gb2.data()}; }
    void add_to(Mlp<T>& m) const {
        for (size_t i = 0; i < gw1.size(); ++i) m.l1.gw[i] += gw1[i];
        for (size_t i = 0; i < gb1.size(); ++i) m.l1.gb[i] += gb1[i];
        for (size_t i = 0; i < gw2.size(); ++i) m.l2.gw[i] += gw2[i];
        for (size_t i = 0; i < gb2.size(); ++i) m.l2.gb[i] += gb2[i];
    }
};

}  // namespace deform_detail

/// Chains gradients w.r.t. the deformed parameters back onto the canonical
/// cloud (in place in `grads`), the decoder's gradient accumulators, and the
/// sparse hash-table gradients. The canonical mean additionally receives the
/// through-encoder term.
template <typename T>
void deform_backward(const GaussianCloud<T>& cloud, const DeformResult<T>& fwd,
                     const HashGrid4D<T>& grid, FeatureDecoder<T>& dec, RasterGrads<T>& grads,
                     HashGridGrads<T>& grid_grads) {
    if (!fwd.has_cache) throw ContractError("deform_backward: forward cache missing");
    const int f_dim = grid.feature_dim();
    const int hidden = dec.hidden;
    const int sh_dim = 3 * sh_coeff_count(cloud.sh_degree);
    const size_t n_dyn = fwd.dynamic_indices.size();
    if (n_dyn == 0) return;

    const int n_threads = thread_count();
    std::vector<std::array<deform_detail::MlpGradStore<T>, 6>> stores(n_threads);
    std::vector<HashGridGrads<T>> grid_partials(n_threads);
    for (int th = 0; th < n_threads; ++th) {
        auto ms = dec.mlps();
        for (int m = 0; m < 6; ++m) stores[th][m].init(*ms[m]);
        grid_partials[th].init(grid);
    }

    parallel_chunks(n_dyn, [&](int tid, size_t kb, size_t ke) {
        std::vector<T> df_d(hidden), dpartial(hidden), scratch(std::max(hidden, f_dim));
        std::vector<T> df_h(f_dim);
        std::vector<T> dy(std::max(sh_dim, 4));
        auto& st = stores[tid];
        for (size_t k = kb; k < ke; ++k) {
            const size_t i = fwd.dynamic_indices[k];
            const T* buf = fwd.cache.data() + k * fwd.cache_stride;
            const T* f_h = buf;
            const T* fusion_hidden = f_h + f_dim;
            const T* f_d = fusion_hidden + hidden;
            const T* head_hidden = f_d + hidden;

            std::fill(df_d.begin(), df_d.end(), T(0));
            auto run_head = [&](const Mlp<T>& head, deform_detail::MlpGradStore<T>& store,
                                const T* upstream, int dim, const T* hcache) {
                for (int a = 0; a < dim; ++a) dy[a] = upstream[a];
                head.backward(f_d, hcache, dy.data(), dpartial.data(), store.bufs(), scratch.data());
                for (int a = 0; a < hidden; ++a) df_d[a] += dpartial[a];
            };
            run_head(dec.head_mean, st[1], grads.means[i].data(), 3, head_hidden + 0 * hidden);
            run_head(dec.head_scale, st[2], grads.log_scales[i].data(), 3, head_hidden + 1 * hidden);
            run_head(dec.head_rot, st[3], grads.rotations[i].data(), 4, head_hidden + 2 * hidden);
            run_head(dec.head_opacity, st[4], &grads.opacity_logits[i], 1, head_hidden + 3 * hidden);
            run_head(dec.head_sh, st[5], grads.sh.data() + i * sh_dim, sh_dim, head_hidden + 4 * hidden);

            dec.fusion.backward(f_h, fusion_hidden, df_d.data(), df_h.data(), st[0].bufs(),
                                scratch.data());
            const Vec3<T> dpos =
                encode_backward(grid, cloud.means[i], fwd.t, df_h.data(), grid_partials[tid], true);
            grads.means[i] += dpos;
        }
    });

    // Reduce per-thread stores in thread order.
    for (int th = 0; th < n_threads; ++th) {
        auto ms = dec.mlps();
        for (int m = 0; m < 6; ++m) stores[th][m].add_to(*ms[m]);
        for (int l = 0; l < grid.cfg.levels; ++l) {
            auto& dst = grid_grads.levels[l];
            const auto& src = grid_partials[th].levels[l];
            dst.slots.insert(dst.slots.end(), src.slots.begin(), src.slots.end());
            dst.values.insert(dst.values.end(), src.values.begin(), src.values.end());
        }
    }
}

}  // namespace swift4d
