// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <bit>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <string>

#include "graphmae/errors.hpp"

namespace graphmae {

inline std::uint64_t io_read_u64(std::istream& in, const std::string& what) {
    unsigned char buf[8];
    in.read(reinterpret_cast<char*>(buf), 8);
    if (!in) throw FormatError("truncated " + what);
    std::uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | buf[i];
    return v;
}

inline void io_write_u64(std::ostream& out, std::uint64_t v) {
    unsigned char buf[8];
    for (int i = 0; i < 8; ++i) buf[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
    out.write(reinterpret_cast<const char*>(buf), 8);
}

inline double io_read_f64(std::istream& in, const std::string& what) {
    return std::bit_cast<double>(io_read_u64(in, what));
}

inline void io_write_f64(std::ostream& out, double v) {
    io_write_u64(out, std::bit_cast<std::uint64_t>(v));
}

// Writes via a temp file and renames into place, so re-runs overwrite
// atomically and readers never observe partial output.
inline void atomic_write_file(const std::string& path,
                              const std::function<void(std::ostream&)>& writer, bool binary) {
    std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, binary ? std::ios::binary : std::ios::out);
        if (!out) throw ValidationError("cannot write file: " + tmp);
        writer(out);
        if (!out) throw ValidationError("write failed: " + tmp);
    }
    std::filesystem::rename(tmp, path);
}

}  // namespace graphmae
