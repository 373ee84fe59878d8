#pragma once

#include <string>

namespace cdln {

// Minimal stderr logger. Warnings repeated from the same call site are
// throttled after a few prints; the totals stay available for tests and the
// ingest stats output.
void log_info(const std::string& msg);
void log_warn(const std::string& msg, const char* throttle_key = nullptr);

// number of warnings emitted (throttled ones included) since process start
std::size_t warn_count();

}  // namespace cdln
