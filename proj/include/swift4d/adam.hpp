// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "swift4d/core.hpp"

namespace swift4d {

struct AdamParams {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-15;
};

/// One Adam update over a flat span. Moments live with the parameters so the
/// caller can compact them alongside structural edits. `t` is the 1-based
/// step count of this group.
template <typename T>
void adam_step(T* param, T* m, T* v, const T* grad, size_t n, T lr, int64_t t,
               const AdamParams& p = {}) {
    const T b1 = T(p.beta1), b2 = T(p.beta2);
    const T c1 = T(1) - T(std::pow(p.beta1, double(t)));
    const T c2 = T(1) - T(std::pow(p.beta2, double(t)));
    for (size_t i = 0; i < n; ++i) {
        const T g = grad[i];
        m[i] = b1 * m[i] + (T(1) - b1) * g;
        v[i] = b2 * v[i] + (T(1) - b2) * g * g;
        const T mhat = m[i] / c1;
        const T vhat = v[i] / c2;
        param[i] -= lr * mhat / (std::sqrt(vhat) + T(p.eps));
    }
}

/// Exponential schedule lr(k) = lr0 * (lr_final/lr0)^(k/K); exact at both ends.
template <typename T>
T exp_lr(T lr0, T lr_final, int64_t step, int64_t total) {
    if (total <= 0) return lr0;
    return lr0 * T(std::pow(double(lr_final) / double(lr0), double(step) / double(total)));
}

}  // namespace swift4d
