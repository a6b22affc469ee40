#pragma once

#include <cstddef>
#include <exception>
#include <functional>
#include <mutex>

#if defined(_OPENMP)
#include <omp.h>
#endif

namespace dgen {

// The call loop and the corpus-scoring reductions are index-parallel: every
// iteration depends only on its index. Serial is the reference schedule;
// Parallel runs the same body under OpenMP with dynamic scheduling.
enum class ExecMode { Serial, Parallel };

// Runs body(0..n-1). In Parallel mode at most num_threads iterations run at
// once. Exceptions cannot cross an OpenMP region, so the lowest-index failure
// is captured and rethrown after the loop joins.
inline void indexed_for(std::size_t n, ExecMode mode, int num_threads,
                        const std::function<void(std::size_t)>& body) {
    if (mode == ExecMode::Serial || num_threads <= 1) {
        for (std::size_t i = 0; i < n; ++i) body(i);
        return;
    }

    std::exception_ptr first_error;
    std::size_t first_error_index = n;
    std::mutex error_mutex;

#if defined(_OPENMP)
#pragma omp parallel for schedule(dynamic) num_threads(num_threads)
#endif
    for (long long i = 0; i < static_cast<long long>(n); ++i) {
        try {
            body(static_cast<std::size_t>(i));
        } catch (...) {
            std::lock_guard<std::mutex> lock(error_mutex);
            if (static_cast<std::size_t>(i) < first_error_index) {
                first_error_index = static_cast<std::size_t>(i);
                first_error = std::current_exception();
            }
        }
    }

    if (first_error) std::rethrow_exception(first_error);
}

} // namespace dgen
