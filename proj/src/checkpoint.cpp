#include "checkpoint.hpp"

#include <cstring>
#include <fstream>

#include "error.hpp"

namespace cdln {

namespace {

void put_u16(std::string& out, std::uint16_t v) {
    out.push_back(static_cast<char>(v & 0xff));
    out.push_back(static_cast<char>((v >> 8) & 0xff));
}

void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_f32(std::string& out, float v) {
    std::uint32_t bits;
    std::memcpy(&bits, &v, 4);
    put_u32(out, bits);
}

class Reader {
public:
    Reader(std::string data, std::string origin) : data_(std::move(data)), origin_(std::move(origin)) {}

    std::size_t offset() const { return pos_; }

    void need(std::size_t n) {
        if (pos_ + n > data_.size())
            fail(errc::format, origin_ + ": truncated checkpoint at offset " +
                                   std::to_string(pos_) + " (need " + std::to_string(n) +
                                   " more bytes)");
    }

    std::uint8_t u8() {
        need(1);
        return static_cast<std::uint8_t>(data_[pos_++]);
    }

    std::uint16_t u16() {
        need(2);
        std::uint16_t v = static_cast<std::uint8_t>(data_[pos_]) |
                          (static_cast<std::uint16_t>(static_cast<std::uint8_t>(data_[pos_ + 1]))
                           << 8);
        pos_ += 2;
        return v;
    }

    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i)
            v |= static_cast<std::uint32_t>(static_cast<std::uint8_t>(data_[pos_ + i])) << (8 * i);
        pos_ += 4;
        return v;
    }

    float f32() {
        std::uint32_t bits = u32();
        float v;
        std::memcpy(&v, &bits, 4);
        return v;
    }

    std::string str(std::size_t n) {
        need(n);
        std::string s = data_.substr(pos_, n);
        pos_ += n;
        return s;
    }

    bool at_end() const { return pos_ == data_.size(); }

private:
    std::string data_;
    std::string origin_;
    std::size_t pos_ = 0;
};

}  // namespace

void Checkpoint::add(const std::string& name, const Tensor& t) {
    Entry e;
    e.name = name;
    e.dims = t.shape();
    e.values.reserve(t.size());
    for (double v : t.values()) e.values.push_back(static_cast<float>(v));
    entries_.push_back(std::move(e));
}

void Checkpoint::add_bytes(const std::string& name, const std::string& text) {
    Entry e;
    e.name = name;
    e.dims = {text.empty() ? 1 : text.size()};
    if (text.empty()) {
        e.values.push_back(-1.0f);  // sentinel: empty payload
    } else {
        e.values.reserve(text.size());
        for (unsigned char c : text) e.values.push_back(static_cast<float>(c));
    }
    entries_.push_back(std::move(e));
}

void Checkpoint::add_doubles(const std::string& name, const std::vector<double>& values) {
    Entry e;
    e.name = name;
    e.dims = {values.empty() ? 1 : values.size()};
    if (values.empty()) {
        e.values.push_back(0.0f);
    } else {
        e.values.reserve(values.size());
        for (double v : values) e.values.push_back(static_cast<float>(v));
    }
    entries_.push_back(std::move(e));
}

const Checkpoint::Entry* Checkpoint::find(const std::string& name) const {
    for (const Entry& e : entries_)
        if (e.name == name) return &e;
    return nullptr;
}

const Checkpoint::Entry& Checkpoint::require(const std::string& name) const {
    const Entry* e = find(name);
    if (!e) fail(errc::format, "checkpoint: missing entry '" + name + "'");
    return *e;
}

Tensor Checkpoint::tensor(const std::string& name) const {
    const Entry& e = require(name);
    std::vector<double> data;
    data.reserve(e.values.size());
    for (float v : e.values) data.push_back(static_cast<double>(v));
    return Tensor(e.dims, std::move(data));
}

std::string Checkpoint::bytes(const std::string& name) const {
    const Entry& e = require(name);
    if (e.values.size() == 1 && e.values[0] == -1.0f) return "";
    std::string out;
    out.reserve(e.values.size());
    for (float v : e.values) out.push_back(static_cast<char>(static_cast<unsigned char>(v)));
    return out;
}

std::vector<double> Checkpoint::doubles(const std::string& name) const {
    const Entry& e = require(name);
    std::vector<double> out;
    out.reserve(e.values.size());
    for (float v : e.values) out.push_back(static_cast<double>(v));
    return out;
}

void Checkpoint::save(const std::string& path) const {
    std::string out;
    out.append(kMagic, 8);
    put_u32(out, kVersion);
    put_u32(out, static_cast<std::uint32_t>(entries_.size()));
    for (const Entry& e : entries_) {
        if (e.name.size() > 0xffff) fail(errc::contract, "checkpoint: entry name too long");
        if (e.dims.size() > 0xff) fail(errc::contract, "checkpoint: rank too large");
        put_u16(out, static_cast<std::uint16_t>(e.name.size()));
        out += e.name;
        out.push_back(static_cast<char>(e.dims.size()));
        std::size_t expect = 1;
        for (std::size_t d : e.dims) {
            put_u32(out, static_cast<std::uint32_t>(d));
            expect *= d;
        }
        if (expect != e.values.size())
            fail(errc::contract, "checkpoint: entry '" + e.name + "' dims mismatch values");
        for (float v : e.values) put_f32(out, v);
    }

    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) fail(errc::io, "cannot open checkpoint for writing: " + path);
    f.write(out.data(), static_cast<std::streamsize>(out.size()));
    if (!f) fail(errc::io, "short write to checkpoint: " + path);
}

Checkpoint Checkpoint::load(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) fail(errc::io, "cannot open checkpoint: " + path);
    std::string data((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    Reader r(std::move(data), path);

    std::string magic = r.str(8);
    if (std::memcmp(magic.data(), kMagic, 8) != 0)
        fail(errc::format, path + ": bad checkpoint magic at offset 0");
    std::uint32_t version = r.u32();
    if (version != kVersion)
        fail(errc::format, path + ": unsupported checkpoint version " + std::to_string(version) +
                               " at offset 8 (expected " + std::to_string(kVersion) + ")");
    std::uint32_t count = r.u32();

    Checkpoint ckpt;
    for (std::uint32_t i = 0; i < count; ++i) {
        Entry e;
        const std::uint16_t name_len = r.u16();
        e.name = r.str(name_len);
        const std::uint8_t rank = r.u8();
        std::size_t total = 1;
        for (std::uint8_t d = 0; d < rank; ++d) {
            const std::uint32_t dim = r.u32();
            if (dim == 0)
                fail(errc::format, path + ": zero dimension in entry '" + e.name +
                                       "' at offset " + std::to_string(r.offset()));
            e.dims.push_back(dim);
            total *= dim;
        }
        e.values.reserve(total);
        for (std::size_t v = 0; v < total; ++v) e.values.push_back(r.f32());
        ckpt.entries_.push_back(std::move(e));
    }
    if (!r.at_end())
        fail(errc::format, path + ": trailing bytes after last entry at offset " +
                               std::to_string(r.offset()));
    return ckpt;
}

}  // namespace cdln
