// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <unordered_map>

#include "swift4d/adam.hpp"
#include "swift4d/math.hpp"

namespace swift4d {

struct HashGridConfig {
    int levels = 16;
    int features = 2;         // F per level
    int log2_size = 19;       // per-level table capacity (Lite: 15)
    int base_resolution = 16;
    int finest_resolution = 512;
    double time_scale = 1.0;  // time-axis resolution multiplier
};

/// 4D (x,y,z,t) multi-resolution hash table stack with quadrilinear
/// interpolation. Levels whose dense corner grid fits the table capacity use
/// direct collision-free indexing; the rest hash with the XOR-of-primes
/// construction. Inputs are normalized into [0,1]^4 by the scene AABB and
/// time range and clamped.
template <typename T>
struct HashGrid4D {
    HashGridConfig cfg;
    Vec3<T> aabb_min = Vec3<T>::Constant(T(-1));
    Vec3<T> aabb_max = Vec3<T>::Constant(T(1));
    T t_min = T(0), t_max = T(1);

    std::vector<int> res;        // spatial resolution per level
    std::vector<int> res_t;      // time resolution per level
    std::vector<uint8_t> hashed; // 1 if the level uses hashing
    std::vector<std::vector<T>> tables;  // per level: level_entries * F
    std::vector<std::vector<T>> adam_m, adam_v;

    int feature_dim() const { return cfg.levels * cfg.features; }

    void init(Rng& rng) {
        res.resize(cfg.levels);
        res_t.resize(cfg.levels);
        hashed.resize(cfg.levels);
        tables.resize(cfg.levels);
        adam_m.resize(cfg.levels);
        adam_v.resize(cfg.levels);
        const double growth =
            cfg.levels > 1
                ? std::exp(std::log(double(cfg.finest_resolution) / cfg.base_resolution) / (cfg.levels - 1))
                : 1.0;
        const size_t capacity = size_t(1) << cfg.log2_size;
        for (int l = 0; l < cfg.levels; ++l) {
            res[l] = int(std::floor(cfg.base_resolution * std::pow(growth, l)));
            res_t[l] = std::max(1, int(std::lround(res[l] * cfg.time_scale)));
            // Dense corner count with overflow saturation.
            size_t dense = 1;
            bool overflow = false;
            for (size_t axis_n : {size_t(res[l]) + 1, size_t(res[l]) + 1, size_t(res[l]) + 1,
                                  size_t(res_t[l]) + 1}) {
                if (dense > capacity / axis_n + 1) overflow = true;
                dense *= axis_n;
                if (overflow || dense > capacity) {
                    overflow = true;
                    break;
                }
            }
            hashed[l] = overflow ? 1 : 0;
            const size_t entries = overflow ? capacity : dense;
            tables[l].resize(entries * cfg.features);
            for (auto& v : tables[l]) v = T(rng.uniform(-1e-4, 1e-4));
            adam_m[l].assign(tables[l].size(), T(0));
            adam_v[l].assign(tables[l].size(), T(0));
        }
    }

    size_t level_entries(int l) const { return tables[l].size() / cfg.features; }

    uint32_t corner_index(int level, uint32_t cx, uint32_t cy, uint32_t cz, uint32_t ct) const {
        if (!hashed[level]) {
            const uint32_t n = uint32_t(res[level]) + 1;
            const uint32_t nt = uint32_t(res_t[level]) + 1;
            return ((cx * n + cy) * n + cz) * nt + ct;
        }
        constexpr uint32_t p1 = 1u, p2 = 2654435761u, p3 = 805459861u, p4 = 3674653429u;
        const uint32_t hash = (cx * p1) ^ (cy * p2) ^ (cz * p3) ^ (ct * p4);
        return hash & uint32_t(level_entries(level) - 1);
    }

    Vec4<T> normalize_input(const Vec3<T>& pos, T t) const {
        Vec4<T> u;
        for (int a = 0; a < 3; ++a) {
            const T span = aabb_max[a] - aabb_min[a];
            u[a] = clamp01((pos[a] - aabb_min[a]) / span);
        }
        u[3] = clamp01((t - t_min) / std::max(t_max - t_min, T(1e-12)));
        return u;
    }

    template <typename U>
    HashGrid4D<U> cast() const {
        HashGrid4D<U> g;
        g.cfg = cfg;
        g.aabb_min = aabb_min.template cast<U>();
        g.aabb_max = aabb_max.template cast<U>();
        g.t_min = U(t_min);
        g.t_max = U(t_max);
        g.res = res;
        g.res_t = res_t;
        g.hashed = hashed;
        g.tables.resize(tables.size());
        g.adam_m.resize(tables.size());
        g.adam_v.resize(tables.size());
        for (size_t l = 0; l < tables.size(); ++l) {
            g.tables[l].assign(tables[l].begin(), tables[l].end());
            g.adam_m[l].assign(tables[l].size(), U(0));
            g.adam_v[l].assign(tables[l].size(), U(0));
        }
        return g;
    }
};

namespace grid_detail {

/// Corner coordinates, table slots, and interpolation weights of the 16
/// corners enclosing a normalized query, for one level.
template <typename T>
struct CellQuery {
    uint32_t slot[16];
    T weight[16];
    // d(weight)/d(normalized coordinate), per corner and axis.
    T dweight[16][4];
};

template <typename T>
CellQuery<T> query_cell(const HashGrid4D<T>& grid, int level, const Vec4<T>& u) {
    CellQuery<T> q;
    const T scale[4] = {T(grid.res[level]), T(grid.res[level]), T(grid.res[level]),
                        T(grid.res_t[level])};
    uint32_t cell[4];
    T frac[4];
    for (int a = 0; a < 4; ++a) {
        const T x = u[a] * scale[a];
        T fl = std::floor(x);
        // Keep the cell inside the grid so corner+1 stays a valid vertex.
        const T max_cell = scale[a] - T(1);
        if (fl > max_cell) fl = max_cell;
        if (fl < T(0)) fl = T(0);
        cell[a] = uint32_t(fl);
        frac[a] = x - fl;
    }
    for (int c = 0; c < 16; ++c) {
        T wgt = T(1);
        uint32_t coord[4];
        for (int a = 0; a < 4; ++a) {
            const bool hi = (c >> a) & 1;
            coord[a] = cell[a] + (hi ? 1u : 0u);
            wgt *= hi ? frac[a] : (T(1) - frac[a]);
        }
        q.slot[c] = grid.corner_index(level, coord[0], coord[1], coord[2], coord[3]);
        q.weight[c] = wgt;
        for (int a = 0; a < 4; ++a) {
            T d = T(1);
            for (int b = 0; b < 4; ++b) {
                const bool hi = (c >> b) & 1;
                if (b == a)
                    d *= (hi ? T(1) : T(-1)) * scale[a];
                else
                    d *= hi ? frac[b] : (T(1) - frac[b]);
            }
            q.dweight[c][a] = d;
        }
    }
    return q;
}

}  // namespace grid_detail

/// Concatenated multi-level features for one (position, time) query.
template <typename T>
void encode(const HashGrid4D<T>& grid, const Vec3<T>& pos, T t, T* out) {
    const Vec4<T> u = grid.normalize_input(pos, t);
    const int f_dim = grid.cfg.features;
    for (int l = 0; l < grid.cfg.levels; ++l) {
        const auto q = grid_detail::query_cell(grid, l, u);
        const T* table = grid.tables[l].data();
        T* dst = out + size_t(l) * f_dim;
        for (int f = 0; f < f_dim; ++f) dst[f] = T(0);
        for (int c = 0; c < 16; ++c) {
            const T* entry = table + size_t(q.slot[c]) * f_dim;
            for (int f = 0; f < f_dim; ++f) dst[f] += q.weight[c] * entry[f];
        }
    }
}

/// Sparse per-level table gradients: parallel slot/value arrays, merged and
/// sorted by slot.
template <typename T>
struct HashGridGrads {
    struct Level {
        std::vector<uint32_t> slots;
        std::vector<T> values;  // slots.size() * F
    };
    std::vector<Level> levels;

    void init(const HashGrid4D<T>& grid) { levels.assign(grid.cfg.levels, {}); }

    void clear() {
        for (auto& l : levels) {
            l.slots.clear();
            l.values.clear();
        }
    }
};

/// Scatters grad_out (L*F) into the 16 corner slots per level with the
/// interpolation weights; optionally returns d(loss)/d(world position).
template <typename T>
Vec3<T> encode_backward(const HashGrid4D<T>& grid, const Vec3<T>& pos, T t, const T* grad_out,
                        HashGridGrads<T>& grads, bool want_pos_grad = false) {
    const Vec4<T> u = grid.normalize_input(pos, t);
    const int f_dim = grid.cfg.features;
    Vec4<T> du = Vec4<T>::Zero();
    for (int l = 0; l < grid.cfg.levels; ++l) {
        const auto q = grid_detail::query_cell(grid, l, u);
        const T* g = grad_out + size_t(l) * f_dim;
        auto& lev = grads.levels[l];
        const T* table = grid.tables[l].data();
        for (int c = 0; c < 16; ++c) {
            lev.slots.push_back(q.slot[c]);
            for (int f = 0; f < f_dim; ++f) lev.values.push_back(q.weight[c] * g[f]);
            if (want_pos_grad) {
                T dot = T(0);
                const T* entry = table + size_t(q.slot[c]) * f_dim;
                for (int f = 0; f < f_dim; ++f) dot += entry[f] * g[f];
                for (int a = 0; a < 4; ++a) du[a] += dot * q.dweight[c][a];
            }
        }
    }
    Vec3<T> dpos = Vec3<T>::Zero();
    if (want_pos_grad) {
        for (int a = 0; a < 3; ++a) {
            const T span = grid.aabb_max[a] - grid.aabb_min[a];
            const T un = (pos[a] - grid.aabb_min[a]) / span;
            // Clamped coordinates are flat.
            if (un > T(0) && un < T(1)) dpos[a] = du[a] / span;
        }
    }
    return dpos;
}

/// Adam over the touched slots only (hash-grid convention: untouched entries
/// neither decay nor step). Gradients for a slot touched multiple times are
/// summed first; application order is sorted by slot, so the result is
/// independent of accumulation order.
template <typename T>
void hash_grid_adam_step(HashGrid4D<T>& grid, const HashGridGrads<T>& grads, T lr, int64_t t,
                         const AdamParams& params = {}) {
    const int f_dim = grid.cfg.features;
    parallel_chunks(size_t(grid.cfg.levels), [&](int, size_t lb, size_t le) {
        for (size_t l = lb; l < le; ++l) {
            const auto& lev = grads.levels[l];
            if (lev.slots.empty()) continue;
            std::vector<size_t> order(lev.slots.size());
            for (size_t i = 0; i < order.size(); ++i) order[i] = i;
            std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
                return lev.slots[a] != lev.slots[b] ? lev.slots[a] < lev.slots[b] : a < b;
            });
            std::vector<T> sum(f_dim);
            for (size_t i = 0; i < order.size();) {
                const uint32_t slot = lev.slots[order[i]];
                std::fill(sum.begin(), sum.end(), T(0));
                while (i < order.size() && lev.slots[order[i]] == slot) {
                    for (int f = 0; f < f_dim; ++f) sum[f] += lev.values[order[i] * f_dim + f];
                    ++i;
                }
                const size_t base = size_t(slot) * f_dim;
                adam_step(grid.tables[l].data() + base, grid.adam_m[l].data() + base,
                          grid.adam_v[l].data() + base, sum.data(), f_dim, lr, t, params);
            }
        }
    });
}

/// Fraction of occupied finest-level slots holding more than one distinct
/// corner; diagnostic only.
template <typename T>
double hash_collision_rate(const HashGrid4D<T>& grid, const std::vector<Vec3<T>>& positions,
                           const std::vector<T>& times) {
    const int l = grid.cfg.levels - 1;
    std::unordered_map<uint32_t, std::unordered_map<uint64_t, bool>> slot_corners;
    for (size_t i = 0; i < positions.size(); ++i) {
        const Vec4<T> u = grid.normalize_input(positions[i], times[i]);
        const auto q = grid_detail::query_cell(grid, l, u);
        const T scale = T(grid.res[l]);
        uint32_t cell[4];
        for (int a = 0; a < 3; ++a) cell[a] = uint32_t(std::min(std::floor(u[a] * scale), scale - T(1)));
        cell[3] = uint32_t(std::min(std::floor(u[3] * T(grid.res_t[l])), T(grid.res_t[l]) - T(1)));
        for (int c = 0; c < 16; ++c) {
            uint64_t key = 0;
            for (int a = 0; a < 4; ++a) key = key * 1048576u + (cell[a] + ((c >> a) & 1));
            slot_corners[q.slot[c]][key] = true;
        }
    }
    if (slot_corners.empty()) return 0.0;
    size_t colliding = 0;
    for (const auto& [slot, corners] : slot_corners)
        if (corners.size() > 1) ++colliding;
    return double(colliding) / double(slot_corners.size());
}

}  // namespace swift4d
