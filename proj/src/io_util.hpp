#pragma once

#include <bit>
#include <cstdint>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>

namespace guitar::detail {

// All on-disk integers and floats are little-endian.

inline void write_u32(std::ostream& out, uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v),
                          static_cast<unsigned char>(v >> 8),
                          static_cast<unsigned char>(v >> 16),
                          static_cast<unsigned char>(v >> 24)};
    out.write(reinterpret_cast<const char*>(b), 4);
}

inline void write_u64(std::ostream& out, uint64_t v) {
    write_u32(out, static_cast<uint32_t>(v));
    write_u32(out, static_cast<uint32_t>(v >> 32));
}

inline void write_f32(std::ostream& out, float v) {
    write_u32(out, std::bit_cast<uint32_t>(v));
}

inline uint32_t read_u32(std::istream& in, const std::string& what) {
    unsigned char b[4];
    if (!in.read(reinterpret_cast<char*>(b), 4)) {
        throw std::runtime_error("unexpected end of file reading " + what);
    }
    return static_cast<uint32_t>(b[0]) | (static_cast<uint32_t>(b[1]) << 8) |
           (static_cast<uint32_t>(b[2]) << 16) | (static_cast<uint32_t>(b[3]) << 24);
}

inline uint64_t read_u64(std::istream& in, const std::string& what) {
    const uint64_t lo = read_u32(in, what);
    const uint64_t hi = read_u32(in, what);
    return lo | (hi << 32);
}

inline float read_f32(std::istream& in, const std::string& what) {
    return std::bit_cast<float>(read_u32(in, what));
}

} // namespace guitar::detail
