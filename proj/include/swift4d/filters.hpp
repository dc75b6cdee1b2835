// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "swift4d/core.hpp"

namespace swift4d {

template <typename T>
std::vector<T> gaussian_kernel(int size, T sigma) {
    std::vector<T> k(size);
    const int half = size / 2;
    T sum = T(0);
    for (int i = 0; i < size; ++i) {
        const T x = T(i - half);
        k[i] = std::exp(-(x * x) / (T(2) * sigma * sigma));
        sum += k[i];
    }
    for (auto& v : k) v /= sum;
    return k;
}

enum class Border { Reflect101, Zero };

inline int mirror_index(int i, int n) {
    // reflect-101: -1 -> 1, n -> n-2
    while (i < 0 || i >= n) {
        if (i < 0) i = -i;
        if (i >= n) i = 2 * n - 2 - i;
    }
    return i;
}

/// Separable convolution with a symmetric 1D kernel applied along x then y,
/// per channel. Zero border makes the operator self-adjoint, which the SSIM
/// backward relies on.
template <typename T>
Image<T> separable_filter(const Image<T>& in, const std::vector<T>& kernel, Border border) {
    const int w = in.width, h = in.height, c = in.channels;
    const int half = int(kernel.size()) / 2;
    Image<T> tmp(w, h, c), out(w, h, c);

    parallel_chunks(size_t(h), [&](int, size_t y0, size_t y1) {
        for (size_t y = y0; y < y1; ++y)
            for (int x = 0; x < w; ++x)
                for (int ch = 0; ch < c; ++ch) {
                    T acc = T(0);
                    for (int k = -half; k <= half; ++k) {
                        int xi = x + k;
                        if (border == Border::Reflect101)
                            xi = mirror_index(xi, w);
                        else if (xi < 0 || xi >= w)
                            continue;
                        acc += kernel[k + half] * in.at(int(y), xi, ch);
                    }
                    tmp.at(int(y), x, ch) = acc;
                }
    });
    parallel_chunks(size_t(h), [&](int, size_t y0, size_t y1) {
        for (size_t y = y0; y < y1; ++y)
            for (int x = 0; x < w; ++x)
                for (int ch = 0; ch < c; ++ch) {
                    T acc = T(0);
                    for (int k = -half; k <= half; ++k) {
                        int yi = int(y) + k;
                        if (border == Border::Reflect101)
                            yi = mirror_index(yi, h);
                        else if (yi < 0 || yi >= h)
                            continue;
                        acc += kernel[k + half] * tmp.at(yi, x, ch);
                    }
                    out.at(int(y), x, ch) = acc;
                }
    });
    return out;
}

}  // namespace swift4d
