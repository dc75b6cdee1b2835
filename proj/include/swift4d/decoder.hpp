// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "swift4d/adam.hpp"
#include "swift4d/cloud.hpp"

namespace swift4d {

/// Dense layer, weights row-major (out x in).
template <typename T>
struct Linear {
    int in = 0, out = 0;
    std::vector<T> w, b;
    std::vector<T> gw, gb;          // gradient accumulators
    std::vector<T> mw, vw, mb, vb;  // Adam moments

    void init(int in_dim, int out_dim, Rng& rng, bool zero) {
        in = in_dim;
        out = out_dim;
        w.assign(size_t(out) * in, T(0));
        b.assign(out, T(0));
        if (!zero) {
            const double bound = std::sqrt(6.0 / in);  // He-uniform
            for (auto& x : w) x = T(rng.uniform(-bound, bound));
        }
        gw.assign(w.size(), T(0));
        gb.assign(b.size(), T(0));
        mw.assign(w.size(), T(0));
        vw.assign(w.size(), T(0));
        mb.assign(b.size(), T(0));
        vb.assign(b.size(), T(0));
    }

    void forward(const T* x, T* y) const {
        for (int o = 0; o < out; ++o) {
            T acc = b[o];
            const T* row = w.data() + size_t(o) * in;
            for (int i = 0; i < in; ++i) acc += row[i] * x[i];
            y[o] = acc;
        }
    }

    /// dx may be null; weight gradients land in the given buffers (sized like
    /// w and b) so callers can keep per-thread accumulators.
    void backward(const T* x, const T* dy, T* dx, T* gw_buf, T* gb_buf) const {
        if (dx)
            for (int i = 0; i < in; ++i) dx[i] = T(0);
        for (int o = 0; o < out; ++o) {
            const T d = dy[o];
            gb_buf[o] += d;
            const T* row = w.data() + size_t(o) * in;
            T* grow = gw_buf + size_t(o) * in;
            for (int i = 0; i < in; ++i) {
                grow[i] += d * x[i];
                if (dx) dx[i] += row[i] * d;
            }
        }
    }

    void zero_grad() {
        std::fill(gw.begin(), gw.end(), T(0));
        std::fill(gb.begin(), gb.end(), T(0));
    }

    void adam(T lr, int64_t t, const AdamParams& p = {}) {
        adam_step(w.data(), mw.data(), vw.data(), gw.data(), w.size(), lr, t, p);
        adam_step(b.data(), mb.data(), vb.data(), gb.data(), b.size(), lr, t, p);
    }

    template <typename U>
    Linear<U> cast() const {
        Linear<U> o;
        o.in = in;
        o.out = out;
        o.w.assign(w.begin(), w.end());
        o.b.assign(b.begin(), b.end());
        o.gw.assign(w.size(), U(0));
        o.gb.assign(b.size(), U(0));
        o.mw.assign(w.size(), U(0));
        o.vw.assign(w.size(), U(0));
        o.mb.assign(b.size(), U(0));
        o.vb.assign(b.size(), U(0));
        return o;
    }
};

/// Two-layer perceptron with a ReLU between the layers and a linear output.
template <typename T>
struct Mlp {
    Linear<T> l1, l2;

    void init(int in, int hidden, int out, Rng& rng, bool zero_output) {
        l1.init(in, hidden, rng, false);
        l2.init(hidden, out, rng, zero_output);
    }

    /// hidden_cache receives the post-ReLU activations (size l1.out).
    void forward(const T* x, T* y, T* hidden_cache) const {
        l1.forward(x, hidden_cache);
        for (int i = 0; i < l1.out; ++i) hidden_cache[i] = std::max(hidden_cache[i], T(0));
        l2.forward(hidden_cache, y);
    }

    struct GradBufs {
        T *gw1, *gb1, *gw2, *gb2;
    };

    void backward(const T* x, const T* hidden_cache, const T* dy, T* dx, const GradBufs& g,
                  T* scratch_hidden) const {
        l2.backward(hidden_cache, dy, scratch_hidden, g.gw2, g.gb2);
        for (int i = 0; i < l1.out; ++i)
            if (hidden_cache[i] <= T(0)) scratch_hidden[i] = T(0);
        l1.backward(x, scratch_hidden, dx, g.gw1, g.gb1);
    }

    void zero_grad() {
        l1.zero_grad();
        l2.zero_grad();
    }
    void adam(T lr, int64_t t, const AdamParams& p = {}) {
        l1.adam(lr, t, p);
        l2.adam(lr, t, p);
    }
    size_t param_count() const { return l1.w.size() + l1.b.size() + l2.w.size() + l2.b.size(); }

    template <typename U>
    Mlp<U> cast() const {
        Mlp<U> o;
        o.l1 = l1.template cast<U>();
        o.l2 = l2.template cast<U>();
        return o;
    }
};

/// Fusion MLP plus the five per-parameter decoder heads. Head output layers
/// start at zero so training begins from the identity deformation.
template <typename T>
struct FeatureDecoder {
    Mlp<T> fusion;
    Mlp<T> head_mean, head_scale, head_rot, head_opacity, head_sh;
    int hidden = 64;
    int sh_degree = 1;
    int feature_dim = 32;

    void init(int feat_dim, int hidden_dim, int degree, Rng& rng) {
        hidden = hidden_dim;
        sh_degree = degree;
        feature_dim = feat_dim;
        fusion.init(feat_dim, hidden_dim, hidden_dim, rng, false);
        head_mean.init(hidden_dim, hidden_dim, 3, rng, true);
        head_scale.init(hidden_dim, hidden_dim, 3, rng, true);
        head_rot.init(hidden_dim, hidden_dim, 4, rng, true);
        head_opacity.init(hidden_dim, hidden_dim, 1, rng, true);
        head_sh.init(hidden_dim, hidden_dim, 3 * sh_coeff_count(degree), rng, true);
    }

    void zero_grad() {
        fusion.zero_grad();
        head_mean.zero_grad();
        head_scale.zero_grad();
        head_rot.zero_grad();
        head_opacity.zero_grad();
        head_sh.zero_grad();
    }

    void adam(T lr, int64_t t, const AdamParams& p = {}) {
        fusion.adam(lr, t, p);
        head_mean.adam(lr, t, p);
        head_scale.adam(lr, t, p);
        head_rot.adam(lr, t, p);
        head_opacity.adam(lr, t, p);
        head_sh.adam(lr, t, p);
    }

    std::vector<Mlp<T>*> mlps() {
        return {&fusion, &head_mean, &head_scale, &head_rot, &head_opacity, &head_sh};
    }
    std::vector<const Mlp<T>*> mlps() const {
        return {&fusion, &head_mean, &head_scale, &head_rot, &head_opacity, &head_sh};
    }

    template <typename U>
    FeatureDecoder<U> cast() const {
        FeatureDecoder<U> o;
        o.hidden = hidden;
        o.sh_degree = sh_degree;
        o.feature_dim = feature_dim;
        o.fusion = fusion.template cast<U>();
        o.head_mean = head_mean.template cast<U>();
        o.head_scale = head_scale.template cast<U>();
        o.head_rot = head_rot.template cast<U>();
        o.head_opacity = head_opacity.template cast<U>();
        o.head_sh = head_sh.template cast<U>();
        return o;
    }
};

}  // namespace swift4d
