#pragma once

#include <cstdint>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

namespace micgan::bin {

// Little-endian fixed-width writers/readers. Readers throw FormatError on
// truncation, reporting the stream offset.
void write_u8(std::ostream& os, std::uint8_t v);
void write_u32(std::ostream& os, std::uint32_t v);
void write_u64(std::ostream& os, std::uint64_t v);
void write_f64(std::ostream& os, double v);
void write_f64s(std::ostream& os, const std::vector<double>& v);
void write_string(std::ostream& os, const std::string& s);
void write_magic(std::ostream& os, const char (&magic)[9]);

std::uint8_t read_u8(std::istream& is);
std::uint32_t read_u32(std::istream& is);
std::uint64_t read_u64(std::istream& is);
double read_f64(std::istream& is);
std::vector<double> read_f64s(std::istream& is, std::size_t n);
std::string read_string(std::istream& is);
// Throws FormatError when the next 8 bytes are not `magic`.
void expect_magic(std::istream& is, const char (&magic)[9], const char* what);

}  // namespace micgan::bin
