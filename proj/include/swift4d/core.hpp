// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <condition_variable>
#include <cstdint>
#include <functional>
#include <limits>
#include <mutex>
#include <random>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace swift4d {

// ---------------------------------------------------------------------------
// Errors

/// Invalid numeric input (non-finite values, out-of-range hyperparameters).
struct InvalidParameterError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// A precondition between modules was violated (e.g. backward called without
/// the forward's contribution records).
struct ContractError : std::logic_error {
    using std::logic_error::logic_error;
};

/// Generic malformed file (bad magic, unparsable header).
struct FormatError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct VersionMismatchError : FormatError {
    using FormatError::FormatError;
};

struct TruncatedFileError : FormatError {
    using FormatError::FormatError;
};

struct ChecksumError : FormatError {
    using FormatError::FormatError;
};

// ---------------------------------------------------------------------------
// Scalar helpers

template <typename T>
inline T sigmoid(T x) {
    return x >= T(0) ? T(1) / (T(1) + std::exp(-x)) : T(1) - T(1) / (T(1) + std::exp(x));
}

template <typename T>
inline T logit(T p) {
    return std::log(p) - std::log(T(1) - p);
}

template <typename T>
inline T clamp01(T x) {
    return std::min(T(1), std::max(T(0), x));
}

// ---------------------------------------------------------------------------
// Deterministic RNG. mt19937_64 has a fully specified sequence; the
// distributions below avoid the implementation-defined std:: ones so the
// same seed yields the same stream everywhere.

class Rng {
public:
    explicit Rng(uint64_t seed = 0) : engine_(seed) {}

    uint64_t next_u64() { return engine_(); }

    uint32_t next_u32() { return static_cast<uint32_t>(engine_() >> 32); }

    /// Uniform in [0, 1).
    double uniform() { return double(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    int uniform_int(int lo, int hi_inclusive) {
        return lo + int(next_u64() % uint64_t(hi_inclusive - lo + 1));
    }

    /// Standard normal via Box-Muller.
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = 0.0;
        while (u1 <= 1e-300) u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        spare_ = r * std::sin(2.0 * M_PI * u2);
        has_spare_ = true;
        return r * std::cos(2.0 * M_PI * u2);
    }

    double normal(double mean, double stddev) { return mean + stddev * normal(); }

private:
    std::mt19937_64 engine_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

// ---------------------------------------------------------------------------
// Image: interleaved row-major H x W x C buffer.

template <typename T>
struct Image {
    int width = 0;
    int height = 0;
    int channels = 0;
    std::vector<T> data;

    Image() = default;
    Image(int w, int h, int c, T fill = T(0)) : width(w), height(h), channels(c), data(size_t(w) * h * c, fill) {}

    T& at(int y, int x, int c) { return data[(size_t(y) * width + x) * channels + c]; }
    const T& at(int y, int x, int c) const { return data[(size_t(y) * width + x) * channels + c]; }

    size_t size() const { return data.size(); }
    bool same_shape(const Image& o) const {
        return width == o.width && height == o.height && channels == o.channels;
    }

    template <typename U>
    Image<U> cast() const {
        Image<U> out(width, height, channels);
        for (size_t i = 0; i < data.size(); ++i) out.data[i] = U(data[i]);
        return out;
    }
};

using ImageF = Image<float>;
using ImageD = Image<double>;

// ---------------------------------------------------------------------------
// Thread pool with static chunking. Work is split into one contiguous chunk
// per worker, so a fixed thread count gives a fixed partition and reductions
// over per-thread buffers in thread order are bit-reproducible.

class ThreadPool {
public:
    static ThreadPool& instance() {
        static ThreadPool pool;
        return pool;
    }

    int thread_count() const { return thread_count_; }

    void set_thread_count(int n) {
        std::lock_guard<std::mutex> lock(api_mutex_);
        n = std::max(1, n);
        if (n == thread_count_) return;
        shutdown_workers();
        thread_count_ = n;
        spawn_workers();
    }

    /// fn(thread_index, begin, end) over [0, n) split into thread_count chunks.
    /// Nested calls (from inside a parallel region) run serially on the
    /// calling thread.
    void parallel_chunks(size_t n, const std::function<void(int, size_t, size_t)>& fn) {
        if (n == 0) return;
        if (in_parallel_region() || thread_count_ == 1 || n == 1) {
            const bool was = in_parallel_region();
            in_parallel_region() = true;
            fn(0, 0, n);
            in_parallel_region() = was;
            return;
        }
        std::lock_guard<std::mutex> lock(api_mutex_);
        const int nt = thread_count_;
        job_ = &fn;
        job_n_ = n;
        pending_.store(nt - 1, std::memory_order_release);
        {
            std::lock_guard<std::mutex> lk(mutex_);
            ++generation_;
        }
        cv_.notify_all();
        // Chunk 0 runs on the calling thread.
        run_chunk(0);
        std::unique_lock<std::mutex> lk(mutex_);
        done_cv_.wait(lk, [&] { return pending_.load(std::memory_order_acquire) == 0; });
        job_ = nullptr;
    }

    ~ThreadPool() { shutdown_workers(); }

private:
    ThreadPool() {
        thread_count_ = std::max(1u, std::thread::hardware_concurrency());
        spawn_workers();
    }

    static bool& in_parallel_region() {
        thread_local bool flag = false;
        return flag;
    }

    void run_chunk(int tid) {
        const size_t n = job_n_;
        const int nt = thread_count_;
        const size_t chunk = (n + nt - 1) / nt;
        const size_t begin = std::min(n, chunk * size_t(tid));
        const size_t end = std::min(n, begin + chunk);
        if (begin < end) {
            in_parallel_region() = true;
            (*job_)(tid, begin, end);
            in_parallel_region() = false;
        }
    }

    void spawn_workers() {
        stop_ = false;
        const uint64_t base_gen = generation_;
        for (int t = 1; t < thread_count_; ++t) {
            workers_.emplace_back([this, t, base_gen] {
                uint64_t seen = base_gen;
                while (true) {
                    std::unique_lock<std::mutex> lk(mutex_);
                    cv_.wait(lk, [&] { return stop_ || generation_ != seen; });
                    if (stop_) return;
                    seen = generation_;
                    lk.unlock();
                    run_chunk(t);
                    if (pending_.fetch_sub(1, std::memory_order_acq_rel) == 1) {
                        std::lock_guard<std::mutex> lk2(mutex_);
                        done_cv_.notify_all();
                    }
                }
            });
        }
    }

    void shutdown_workers() {
        {
            std::lock_guard<std::mutex> lk(mutex_);
            stop_ = true;
        }
        cv_.notify_all();
        for (auto& w : workers_) w.join();
        workers_.clear();
    }

    int thread_count_ = 1;
    std::vector<std::thread> workers_;
    std::mutex api_mutex_;
    std::mutex mutex_;
    std::condition_variable cv_;
    std::condition_variable done_cv_;
    std::atomic<int> pending_{0};
    uint64_t generation_ = 0;
    bool stop_ = false;
    const std::function<void(int, size_t, size_t)>* job_ = nullptr;
    size_t job_n_ = 0;
};

inline void set_thread_count(int n) { ThreadPool::instance().set_thread_count(n); }
inline int thread_count() { return ThreadPool::instance().thread_count(); }

/// Splits [0, n) into one contiguous chunk per worker thread.
inline void parallel_chunks(size_t n, const std::function<void(int, size_t, size_t)>& fn) {
    ThreadPool::instance().parallel_chunks(n, fn);
}

// ---------------------------------------------------------------------------
// FNV-1a 64-bit over raw bytes; used for parameter-group hashes in the
// stage-isolation checks.

inline uint64_t fnv1a(const void* bytes, size_t n, uint64_t seed = 1469598103934665603ull) {
    const auto* p = static_cast<const unsigned char*>(bytes);
    uint64_t h = seed;
    for (size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= 1099511628211ull;
    }
    return h;
}

template <typename T>
inline uint64_t hash_span(const std::vector<T>& v, uint64_t seed = 1469598103934665603ull) {
    return v.empty() ? seed : fnv1a(v.data(), v.size() * sizeof(T), seed);
}

}  // namespace swift4d
