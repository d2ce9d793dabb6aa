#ifndef COVERID_BINIO_HPP
#define COVERID_BINIO_HPP

// Little-endian primitives for the binary file formats (SAL1, ENC1, EMB1).
// Byte order is explicit so files are portable across hosts.

#include <bit>
#include <cstdint>
#include <istream>
#include <ostream>

#include "coverid/errors.hpp"

namespace coverid::binio {

inline void write_bytes(std::ostream& out, const unsigned char* p, int n) {
    out.write(reinterpret_cast<const char*>(p), n);
}

inline void read_bytes(std::istream& in, unsigned char* p, int n) {
    in.read(reinterpret_cast<char*>(p), n);
    if (!in) throw ParseError("truncated payload");
}

inline void write_u16(std::ostream& out, uint16_t v) {
    unsigned char b[2] = {static_cast<unsigned char>(v & 0xff),
                          static_cast<unsigned char>((v >> 8) & 0xff)};
    write_bytes(out, b, 2);
}

inline uint16_t read_u16(std::istream& in) {
    unsigned char b[2];
    read_bytes(in, b, 2);
    return static_cast<uint16_t>(b[0] | (b[1] << 8));
}

inline void write_u32(std::ostream& out, uint32_t v) {
    unsigned char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
    write_bytes(out, b, 4);
}

inline uint32_t read_u32(std::istream& in) {
    unsigned char b[4];
    read_bytes(in, b, 4);
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(b[i]) << (8 * i);
    return v;
}

inline void write_u64(std::ostream& out, uint64_t v) {
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
    write_bytes(out, b, 8);
}

inline uint64_t read_u64(std::istream& in) {
    unsigned char b[8];
    read_bytes(in, b, 8);
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(b[i]) << (8 * i);
    return v;
}

inline void write_f32(std::ostream& out, float v) {
    write_u32(out, std::bit_cast<uint32_t>(v));
}

inline float read_f32(std::istream& in) {
    return std::bit_cast<float>(read_u32(in));
}

inline void write_f64(std::ostream& out, double v) {
    write_u64(out, std::bit_cast<uint64_t>(v));
}

inline double read_f64(std::istream& in) {
    return std::bit_cast<double>(read_u64(in));
}

inline void write_magic(std::ostream& out, const char (&magic)[5]) {
    out.write(magic, 4);
}

inline void expect_magic(std::istream& in, const char (&magic)[5]) {
    char got[4];
    in.read(got, 4);
    if (!in || got[0] != magic[0] || got[1] != magic[1] || got[2] != magic[2] ||
        got[3] != magic[3]) {
        throw ParseError(std::string("bad magic, expected ") + magic);
    }
}

} // namespace coverid::binio

#endif
