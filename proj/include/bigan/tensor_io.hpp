// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "bigan/array.hpp"

namespace bigan {

struct NamedTensor {
  std::string name;
  Array value;
};

// Little-endian primitives shared by the checkpoint and dataset containers.
void write_u32(std::ostream& out, std::uint32_t v);
void write_u64(std::ostream& out, std::uint64_t v);
void write_f64(std::ostream& out, double v);
void write_string(std::ostream& out, std::string_view s);  // u32 length + bytes
std::uint32_t read_u32(std::istream& in);
std::uint64_t read_u64(std::istream& in);
double read_f64(std::istream& in);
std::string read_string(std::istream& in);

/// Entry count (u32), then per tensor: name length (u32) + name bytes,
/// rank (u32), dimensions (u64 each), row-major f64 data.
void write_tensors(std::ostream& out, std::span<const NamedTensor> tensors);
std::vector<NamedTensor> read_tensors(std::istream& in);

}  // namespace bigan
