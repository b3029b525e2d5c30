// SPDX-License-Identifier: Apache-2.0
#include "bigan/tensor_io.hpp"

#include <bit>
#include <istream>
#include <ostream>

#include "bigan/errors.hpp"

namespace bigan {

namespace {

constexpr std::uint32_t kMaxRank = 8;
constexpr std::uint64_t kMaxElements = std::uint64_t{1} << 32;

template <typename T>
void put_le(std::ostream& out, T v) {
  char bytes[sizeof(T)];
  for (std::size_t i = 0; i < sizeof(T); ++i) bytes[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
  out.write(bytes, sizeof(T));
}

template <typename T>
T get_le(std::istream& in) {
  unsigned char bytes[sizeof(T)];
  if (!in.read(reinterpret_cast<char*>(bytes), sizeof(T))) throw DataError("unexpected end of file");
  T v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<T>(bytes[i]) << (8 * i);
  return v;
}

}  // namespace

void write_u32(std::ostream& out, std::uint32_t v) { put_le(out, v); }
void write_u64(std::ostream& out, std::uint64_t v) { put_le(out, v); }
void write_f64(std::ostream& out, double v) { put_le(out, std::bit_cast<std::uint64_t>(v)); }

void write_string(std::ostream& out, std::string_view s) {
  write_u32(out, static_cast<std::uint32_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::uint32_t read_u32(std::istream& in) { return get_le<std::uint32_t>(in); }
std::uint64_t read_u64(std::istream& in) { return get_le<std::uint64_t>(in); }
double read_f64(std::istream& in) { return std::bit_cast<double>(get_le<std::uint64_t>(in)); }

std::string read_string(std::istream& in) {
  const std::uint32_t n = read_u32(in);
  if (n > (1u << 20)) throw DataError("string length " + std::to_string(n) + " exceeds limit");
  std::string s(n, '\0');
  if (n && !in.read(s.data(), n)) throw DataError("unexpected end of file in string");
  return s;
}

void write_tensors(std::ostream& out, std::span<const NamedTensor> tensors) {
  write_u32(out, static_cast<std::uint32_t>(tensors.size()));
  for (const auto& t : tensors) {
    write_string(out, t.name);
    write_u32(out, static_cast<std::uint32_t>(t.value.rank()));
    for (std::size_t dim : t.value.shape()) write_u64(out, dim);
    for (double v : t.value.data()) write_f64(out, v);
  }
}

std::vector<NamedTensor> read_tensors(std::istream& in) {
  const std::uint32_t count = read_u32(in);
  std::vector<NamedTensor> out;
  out.reserve(count);
  for (std::uint32_t k = 0; k < count; ++k) {
    NamedTensor t;
    t.name = read_string(in);
    const std::uint32_t rank = read_u32(in);
    if (rank > kMaxRank) throw DataError("tensor '" + t.name + "' has rank " + std::to_string(rank));
    Shape shape(rank);
    std::uint64_t elements = 1;
    for (auto& dim : shape) {
      dim = read_u64(in);
      elements *= dim;
      if (elements > kMaxElements) throw DataError("tensor '" + t.name + "' is too large");
    }
    std::vector<double> data(elements);
    for (auto& v : data) v = read_f64(in);
    t.value = Array(std::move(shape), std::move(data));
    out.push_back(std::move(t));
  }
  return out;
}

}  // namespace bigan
