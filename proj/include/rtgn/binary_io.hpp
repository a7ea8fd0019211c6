#pragma once

// Little-endian primitive readers/writers shared by the checkpoint and
// state serializers.

#include <cstdint>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace rtgn::io {

class FormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

void write_u32(std::ostream& os, std::uint32_t v);
void write_u64(std::ostream& os, std::uint64_t v);
void write_f64(std::ostream& os, double v);
// u64 length prefix followed by the values.
void write_f64s(std::ostream& os, std::span<const double> v);
// u32 length prefix followed by the bytes.
void write_string(std::ostream& os, const std::string& s);

std::uint32_t read_u32(std::istream& is);
std::uint64_t read_u64(std::istream& is);
double read_f64(std::istream& is);
std::vector<double> read_f64s(std::istream& is);
std::string read_string(std::istream& is);

}  // namespace rtgn::io
