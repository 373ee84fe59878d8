#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tensor.hpp"

namespace cdln {

// Named-tensor container with a fixed binary layout:
//   8-byte magic "CDLNCKPT", u32 version (=1), u32 entry count, then per
//   entry: u16 name length, UTF-8 name, u8 rank, u32 dims[rank], and
//   little-endian 32-bit floats.
// Values are stored in single precision; loading widens back to double, so a
// second save/load round trip is exact. Non-tensor payloads (config text,
// vocabulary) ride along as rank-1 entries holding one byte per float.
class Checkpoint {
public:
    struct Entry {
        std::string name;
        std::vector<std::size_t> dims;
        std::vector<float> values;
    };

    static constexpr char kMagic[9] = "CDLNCKPT";
    static constexpr std::uint32_t kVersion = 1;

    void add(const std::string& name, const Tensor& t);
    void add_bytes(const std::string& name, const std::string& text);
    void add_doubles(const std::string& name, const std::vector<double>& values);

    const Entry* find(const std::string& name) const;
    const Entry& require(const std::string& name) const;
    bool has(const std::string& name) const { return find(name) != nullptr; }

    Tensor tensor(const std::string& name) const;
    std::string bytes(const std::string& name) const;
    std::vector<double> doubles(const std::string& name) const;

    const std::vector<Entry>& entries() const { return entries_; }

    void save(const std::string& path) const;
    static Checkpoint load(const std::string& path);

private:
    std::vector<Entry> entries_;
};

}  // namespace cdln
