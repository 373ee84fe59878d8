#include "log.hpp"

#include <atomic>
#include <cstdio>
#include <map>
#include <mutex>

namespace cdln {

namespace {
std::mutex g_mutex;
std::map<std::string, std::size_t> g_throttle;
std::atomic<std::size_t> g_warns{0};
constexpr std::size_t kThrottleAfter = 5;
}  // namespace

void log_info(const std::string& msg) {
    std::lock_guard<std::mutex> lock(g_mutex);
    std::fprintf(stderr, "[cdln] %s\n", msg.c_str());
}

void log_warn(const std::string& msg, const char* throttle_key) {
    g_warns.fetch_add(1, std::memory_order_relaxed);
    std::lock_guard<std::mutex> lock(g_mutex);
    if (throttle_key) {
        std::size_t n = ++g_throttle[throttle_key];
        if (n == kThrottleAfter) {
            std::fprintf(stderr, "[cdln] warning: %s (further warnings of this kind suppressed)\n",
                         msg.c_str());
            return;
        }
        if (n > kThrottleAfter) return;
    }
    std::fprintf(stderr, "[cdln] warning: %s\n", msg.c_str());
}

std::size_t warn_count() { return g_warns.load(std::memory_order_relaxed); }

}  // namespace cdln
