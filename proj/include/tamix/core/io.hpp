#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "tamix/core/error.hpp"
#include "tamix/core/tensor.hpp"

// Little-endian binary primitives shared by the checkpoint and feature-file
// formats. Only little-endian hosts are supported.

namespace tamix::io {

template <typename V>
void write_pod(std::ostream& os, V v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(V));
}

template <typename V>
V read_pod(std::istream& is, const char* what) {
    V v{};
    is.read(reinterpret_cast<char*>(&v), sizeof(V));
    if (!is.good()) throw data_error(std::string("truncated stream reading ") + what);
    return v;
}

inline void write_string(std::ostream& os, const std::string& s) {
    write_pod<std::uint32_t>(os, static_cast<std::uint32_t>(s.size()));
    os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

inline std::string read_string(std::istream& is, const char* what) {
    auto n = read_pod<std::uint32_t>(is, what);
    std::string s(n, '\0');
    is.read(s.data(), static_cast<std::streamsize>(n));
    if (!is.good()) throw data_error(std::string("truncated stream reading ") + what);
    return s;
}

template <typename T>
void write_tensor(std::ostream& os, const Tensor<T>& t) {
    write_pod<std::uint8_t>(os, sizeof(T) == 4 ? 0 : 1);
    write_pod<std::uint32_t>(os, static_cast<std::uint32_t>(t.rank()));
    for (std::size_t i = 0; i < t.rank(); ++i)
        write_pod<std::uint64_t>(os, static_cast<std::uint64_t>(t.dim(i)));
    os.write(reinterpret_cast<const char*>(t.data()),
             static_cast<std::streamsize>(t.size() * sizeof(T)));
}

template <typename T>
Tensor<T> read_tensor(std::istream& is, const char* what) {
    auto dtype = read_pod<std::uint8_t>(is, what);
    if ((dtype == 0 && sizeof(T) != 4) || (dtype == 1 && sizeof(T) != 8))
        throw data_error(std::string("dtype mismatch reading ") + what);
    auto rank = read_pod<std::uint32_t>(is, what);
    Shape shape(rank);
    for (auto& d : shape)
        d = static_cast<std::size_t>(read_pod<std::uint64_t>(is, what));
    Tensor<T> t(shape);
    is.read(reinterpret_cast<char*>(t.data()),
            static_cast<std::streamsize>(t.size() * sizeof(T)));
    if (!is.good()) throw data_error(std::string("truncated tensor data in ") + what);
    return t;
}

} // namespace tamix::io
