#include "rtgn/binary_io.hpp"

#include <bit>
#include <cstring>
#include <istream>
#include <ostream>

namespace rtgn::io {

namespace {

template <class T>
void put_le(std::ostream& os, T v) {
    unsigned char buf[sizeof(T)];
    for (std::size_t i = 0; i < sizeof(T); ++i) buf[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xffu);
    os.write(reinterpret_cast<const char*>(buf), sizeof(T));
}

template <class T>
T get_le(std::istream& is) {
    unsigned char buf[sizeof(T)];
    if (!is.read(reinterpret_cast<char*>(buf), sizeof(T))) throw FormatError("unexpected end of stream");
    T v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<T>(buf[i]) << (8 * i);
    return v;
}

// Guards against absurd length prefixes in corrupt files.
constexpr std::uint64_t kMaxElements = 1ull << 32;

}  // namespace

void write_u32(std::ostream& os, std::uint32_t v) { put_le(os, v); }
void write_u64(std::ostream& os, std::uint64_t v) { put_le(os, v); }
void write_f64(std::ostream& os, double v) { put_le(os, std::bit_cast<std::uint64_t>(v)); }

void write_f64s(std::ostream& os, std::span<const double> v) {
    write_u64(os, v.size());
    for (double x : v) write_f64(os, x);
}

void write_string(std::ostream& os, const std::string& s) {
    write_u32(os, static_cast<std::uint32_t>(s.size()));
    os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::uint32_t read_u32(std::istream& is) { return get_le<std::uint32_t>(is); }
std::uint64_t read_u64(std::istream& is) { return get_le<std::uint64_t>(is); }
double read_f64(std::istream& is) { return std::bit_cast<double>(get_le<std::uint64_t>(is)); }

std::vector<double> read_f64s(std::istream& is) {
    const auto n = read_u64(is);
    if (n > kMaxElements) throw FormatError("array length " + std::to_string(n) + " too large");
    std::vector<double> v(n);
    for (auto& x : v) x = read_f64(is);
    return v;
}

std::string read_string(std::istream& is) {
    const auto n = read_u32(is);
    std::string s(n, '\0');
    if (n && !is.read(s.data(), n)) throw FormatError("unexpected end of stream in string");
    return s;
}

}  // namespace rtgn::io
