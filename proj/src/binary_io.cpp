#include "micgan/binary_io.hpp"

#include <array>
#include <bit>
#include <cstring>

#include "micgan/error.hpp"

namespace micgan::bin {

namespace {

template <std::size_t N>
void put_le(std::ostream& os, std::uint64_t v) {
  std::array<char, N> buf;
  for (std::size_t i = 0; i < N; ++i) buf[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  os.write(buf.data(), N);
}

template <std::size_t N>
std::uint64_t get_le(std::istream& is) {
  const auto offset = static_cast<long long>(is.tellg());
  std::array<unsigned char, N> buf;
  is.read(reinterpret_cast<char*>(buf.data()), N);
  if (is.gcount() != static_cast<std::streamsize>(N))
    throw FormatError("unexpected end of data at byte offset " + std::to_string(offset));
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < N; ++i) v |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
  return v;
}

}  // namespace

void write_u8(std::ostream& os, std::uint8_t v) { put_le<1>(os, v); }
void write_u32(std::ostream& os, std::uint32_t v) { put_le<4>(os, v); }
void write_u64(std::ostream& os, std::uint64_t v) { put_le<8>(os, v); }
void write_f64(std::ostream& os, double v) { put_le<8>(os, std::bit_cast<std::uint64_t>(v)); }

void write_f64s(std::ostream& os, const std::vector<double>& v) {
  for (double x : v) write_f64(os, x);
}

void write_string(std::ostream& os, const std::string& s) {
  write_u64(os, s.size());
  os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

void write_magic(std::ostream& os, const char (&magic)[9]) { os.write(magic, 8); }

std::uint8_t read_u8(std::istream& is) { return static_cast<std::uint8_t>(get_le<1>(is)); }
std::uint32_t read_u32(std::istream& is) { return static_cast<std::uint32_t>(get_le<4>(is)); }
std::uint64_t read_u64(std::istream& is) { return get_le<8>(is); }
double read_f64(std::istream& is) { return std::bit_cast<double>(get_le<8>(is)); }

std::vector<double> read_f64s(std::istream& is, std::size_t n) {
  std::vector<double> v(n);
  for (auto& x : v) x = read_f64(is);
  return v;
}

std::string read_string(std::istream& is) {
  const auto offset = static_cast<long long>(is.tellg());
  const std::uint64_t n = read_u64(is);
  if (n > (std::uint64_t{1} << 32))
    throw FormatError("implausible string length at byte offset " + std::to_string(offset));
  std::string s(n, '\0');
  is.read(s.data(), static_cast<std::streamsize>(n));
  if (is.gcount() != static_cast<std::streamsize>(n))
    throw FormatError("truncated string at byte offset " + std::to_string(offset));
  return s;
}

void expect_magic(std::istream& is, const char (&magic)[9], const char* what) {
  const auto offset = static_cast<long long>(is.tellg());
  char buf[8] = {};
  is.read(buf, 8);
  if (is.gcount() != 8 || std::memcmp(buf, magic, 8) != 0)
    throw FormatError(std::string(what) + ": bad magic at byte offset " + std::to_string(offset));
}

}  // namespace micgan::bin
