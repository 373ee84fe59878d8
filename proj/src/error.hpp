#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>

namespace cdln {

// Error taxonomy shared by the whole engine. The C API maps each kind to a
// status code; inside the core we throw.
enum class errc {
    io,         // file missing / unreadable / unwritable
    format,     // malformed TSV, checkpoint, config file, embedding file
    config,     // bad option value or unknown key
    data,       // dataset-level contract violation (empty set, bad scores)
    contract,   // API misuse (shape mismatch, empty input, non-scalar loss)
    dimension,  // tensor shape mismatch in a numeric op
    harness,    // verification harness failure (non-deterministic model_fn)
    internal,
};

std::string_view errc_name(errc k);

class error : public std::runtime_error {
public:
    error(errc kind, std::string msg) : std::runtime_error(std::move(msg)), kind_(kind) {}
    errc kind() const noexcept { return kind_; }

private:
    errc kind_;
};

[[noreturn]] inline void fail(errc kind, std::string msg) {
    throw error(kind, std::move(msg));
}

inline std::string_view errc_name(errc k) {
    switch (k) {
    case errc::io: return "io";
    case errc::format: return "format";
    case errc::config: return "config";
    case errc::data: return "data";
    case errc::contract: return "contract";
    case errc::dimension: return "dimension";
    case errc::harness: return "harness";
    case errc::internal: return "internal";
    }
    return "unknown";
}

}  // namespace cdln
