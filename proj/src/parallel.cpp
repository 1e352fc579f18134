#include "biadapt/parallel.hpp"

#include <algorithm>
#include <cstdlib>
#include <string>
#include <thread>
#include <vector>

namespace biadapt {

std::size_t worker_count() {
    if (const char* env = std::getenv("BIADAPT_THREADS")) {
        try {
            const long v = std::stol(env);
            if (v > 0) return static_cast<std::size_t>(v);
        } catch (...) {
        }
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& body,
                  std::size_t min_chunk) {
    if (n == 0) return;
    const std::size_t chunks =
        std::min(worker_count(), std::max<std::size_t>(1, n / std::max<std::size_t>(1, min_chunk)));
    if (chunks <= 1) {
        body(0, n);
        return;
    }
    const std::size_t step = (n + chunks - 1) / chunks;
    std::vector<std::jthread> workers;
    workers.reserve(chunks);
    for (std::size_t begin = 0; begin < n; begin += step) {
        workers.emplace_back(body, begin, std::min(n, begin + step));
    }
}

} // namespace biadapt
