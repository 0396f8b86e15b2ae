#pragma once

// Little-endian binary stream primitives shared by the ABCB/ABCF/ABCM
// file readers and writers.

#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>

#include "abc/common.hpp"

namespace abc::io {

static_assert(std::endian::native == std::endian::little,
              "file I/O assumes a little-endian host");

template <typename T>
inline void write_raw(std::ostream& out, T v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
inline T read_raw(std::istream& in) {
    T v{};
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!in) fail(ErrorCode::format, "read: truncated stream");
    return v;
}

inline void write_u16(std::ostream& out, uint16_t v) { write_raw(out, v); }
inline void write_u32(std::ostream& out, uint32_t v) { write_raw(out, v); }
inline void write_u64(std::ostream& out, uint64_t v) { write_raw(out, v); }
inline void write_f32(std::ostream& out, float v)    { write_raw(out, v); }
inline void write_f64(std::ostream& out, double v)   { write_raw(out, v); }

inline uint16_t read_u16(std::istream& in) { return read_raw<uint16_t>(in); }
inline uint32_t read_u32(std::istream& in) { return read_raw<uint32_t>(in); }
inline uint64_t read_u64(std::istream& in) { return read_raw<uint64_t>(in); }
inline float    read_f32(std::istream& in) { return read_raw<float>(in); }
inline double   read_f64(std::istream& in) { return read_raw<double>(in); }

}  // namespace abc::io
