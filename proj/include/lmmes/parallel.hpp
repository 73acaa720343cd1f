/*
 * This file is part of lmmes, a library for effect size estimation in
 * linear mixed models.
 *
 * Licensed under the Apache License Version 2.0. See LICENSE file in the
 * project root for license information.
 */
#pragma once

#include <atomic>
#include <cstdlib>
#include <exception>
#include <functional>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace lmmes {

/// Worker-count limit: hardware concurrency, capped by LMM_ES_THREADS when set.
inline int max_threads() {
    unsigned hw = std::thread::hardware_concurrency();
    if (hw == 0) hw = 1;
    if (const char* env = std::getenv("LMM_ES_THREADS")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end != env && *end == '\0' && v >= 1 && static_cast<unsigned long>(v) < hw)
            return static_cast<int>(v);
    }
    return static_cast<int>(hw);
}

/// Runs fn(0..total-1), possibly across threads. Each index is handled by
/// exactly one worker; results must be written to per-index slots so the
/// outcome does not depend on the thread count. The first exception thrown
/// by any worker is rethrown on the calling thread.
inline void parallel_for(std::int64_t total, const std::function<void(std::int64_t)>& fn) {
    const int threads = std::min<std::int64_t>(max_threads(), total);
    if (threads <= 1) {
        for (std::int64_t i = 0; i < total; ++i) fn(i);
        return;
    }
    std::atomic<std::int64_t> next{0};
    std::mutex err_mutex;
    std::exception_ptr first_error;
    auto worker = [&]() {
        for (;;) {
            const std::int64_t i = next.fetch_add(1);
            if (i >= total) return;
            try {
                fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(err_mutex);
                if (!first_error) first_error = std::current_exception();
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(threads));
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
    if (first_error) std::rethrow_exception(first_error);
}

} // namespace lmmes
