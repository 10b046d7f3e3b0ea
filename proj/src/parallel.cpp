#include "mdlab/parallel.hpp"

#include <atomic>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace mdlab {

void parallelFor(long count, int threads, const std::function<void(long)>& task) {
    if (count <= 0) return;
    if (threads < 1) threads = 1;
    if (threads == 1 || count == 1) {
        for (long i = 0; i < count; ++i) task(i);
        return;
    }
    std::atomic<long> next{0};
    std::exception_ptr firstError;
    std::mutex errorMutex;
    auto worker = [&]() {
        for (;;) {
            long i = next.fetch_add(1, std::memory_order_relaxed);
            if (i >= count) return;
            try {
                task(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(errorMutex);
                if (!firstError) firstError = std::current_exception();
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    const int nw = static_cast<int>(std::min<long>(threads, count));
    pool.reserve(static_cast<std::size_t>(nw));
    for (int w = 0; w < nw; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    if (firstError) std::rethrow_exception(firstError);
}

}  // namespace mdlab
