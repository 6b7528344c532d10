#pragma once

#include <bit>
#include <cstdint>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "pointgr/errors.hpp"
#include "pointgr/tensor.hpp"

namespace pointgr {

/// Binary weights container. Layout, all integers little endian:
///   magic "PGRW", version u16, entry count u32, then per entry:
///   name length u16, name bytes, dtype u8 (0 = f32, 1 = f64), rank u8,
///   one u32 per dim, payload row-major little endian.
/// Entries are ordered lexicographically by name, so two files with equal
/// contents are byte identical.
namespace wire {

inline void put_u16(std::string& out, std::uint16_t v) {
    out.push_back(static_cast<char>(v & 0xff));
    out.push_back(static_cast<char>((v >> 8) & 0xff));
}

inline void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

inline void put_u64(std::string& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

class Reader {
public:
    Reader(const std::string& buf, std::string what) : buf_(buf), what_(std::move(what)) {}

    std::uint8_t u8() { return static_cast<std::uint8_t>(take(1)[0]); }

    std::uint16_t u16() {
        const char* p = take(2);
        return static_cast<std::uint16_t>(static_cast<unsigned char>(p[0]) |
                                          (static_cast<unsigned char>(p[1]) << 8));
    }

    std::uint32_t u32() {
        const char* p = take(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(p[i])) << (8 * i);
        return v;
    }

    std::uint64_t u64() {
        const char* p = take(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(p[i])) << (8 * i);
        return v;
    }

    std::string bytes(std::size_t n) { return std::string(take(n), n); }

    bool at_end() const { return pos_ == buf_.size(); }

    const char* take(std::size_t n) {
        if (pos_ + n > buf_.size()) {
            throw IoError(what_ + ": truncated file, " +
                          std::to_string(pos_ + n - buf_.size()) + " bytes missing");
        }
        const char* p = buf_.data() + pos_;
        pos_ += n;
        return p;
    }

private:
    const std::string& buf_;
    std::string what_;
    std::size_t pos_ = 0;
};

} // namespace wire

template <typename T>
constexpr std::uint8_t dtype_code() {
    static_assert(std::is_same_v<T, float> || std::is_same_v<T, double>);
    return std::is_same_v<T, float> ? 0 : 1;
}

inline std::string read_file_bytes(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    std::string buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return buf;
}

inline void write_file_bytes(const std::string& path, const std::string& buf) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + path + " for writing");
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (!out) throw IoError("short write to " + path);
}

template <typename T>
void save_weights(const std::string& path, const std::map<std::string, Tensor<T>>& entries) {
    std::string buf;
    buf += "PGRW";
    wire::put_u16(buf, 1);
    wire::put_u32(buf, static_cast<std::uint32_t>(entries.size()));
    for (const auto& [name, tensor] : entries) {
        if (name.size() > 0xffff) throw ValidationError("weight name too long: " + name);
        wire::put_u16(buf, static_cast<std::uint16_t>(name.size()));
        buf += name;
        buf.push_back(static_cast<char>(dtype_code<T>()));
        buf.push_back(static_cast<char>(tensor.rank()));
        for (std::size_t d = 0; d < tensor.rank(); ++d) {
            wire::put_u32(buf, static_cast<std::uint32_t>(tensor.dim(d)));
        }
        for (std::size_t i = 0; i < tensor.numel(); ++i) {
            if constexpr (std::is_same_v<T, float>) {
                wire::put_u32(buf, std::bit_cast<std::uint32_t>(tensor[i]));
            } else {
                wire::put_u64(buf, std::bit_cast<std::uint64_t>(tensor[i]));
            }
        }
    }
    write_file_bytes(path, buf);
}

/// Loads a weights container, casting each entry to T regardless of the
/// stored dtype so checkpoints move between precisions.
template <typename T>
std::map<std::string, Tensor<T>> load_weights(const std::string& path) {
    std::string buf = read_file_bytes(path);
    wire::Reader r(buf, path);
    if (r.bytes(4) != "PGRW") throw IoError(path + ": not a weights container");
    std::uint16_t version = r.u16();
    if (version != 1) throw IoError(path + ": unsupported version " + std::to_string(version));
    std::uint32_t count = r.u32();

    std::map<std::string, Tensor<T>> entries;
    for (std::uint32_t e = 0; e < count; ++e) {
        std::string name = r.bytes(r.u16());
        std::uint8_t dtype = r.u8();
        if (dtype > 1) throw IoError(path + ": unknown dtype for " + name);
        std::uint8_t rank = r.u8();
        Shape shape(rank);
        for (std::uint8_t d = 0; d < rank; ++d) shape[d] = r.u32();
        Tensor<T> t(shape);
        const std::size_t elsize = dtype == 0 ? 4 : 8;
        const unsigned char* p =
            reinterpret_cast<const unsigned char*>(r.take(t.numel() * elsize));
        for (std::size_t i = 0; i < t.numel(); ++i, p += elsize) {
            if (dtype == 0) {
                std::uint32_t v = 0;
                for (int b = 0; b < 4; ++b) v |= static_cast<std::uint32_t>(p[b]) << (8 * b);
                t[i] = static_cast<T>(std::bit_cast<float>(v));
            } else {
                std::uint64_t v = 0;
                for (int b = 0; b < 8; ++b) v |= static_cast<std::uint64_t>(p[b]) << (8 * b);
                t[i] = static_cast<T>(std::bit_cast<double>(v));
            }
        }
        if (!entries.emplace(std::move(name), std::move(t)).second) {
            throw IoError(path + ": duplicate entry name");
        }
    }
    if (!r.at_end()) throw IoError(path + ": trailing bytes after last entry");
    return entries;
}

} // namespace pointgr
