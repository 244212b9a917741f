// SPDX-License-Identifier: Apache-2.0
//
// Deterministic synthetic trace generators with known metric profiles:
// scans, random streams, repeated addresses, data-parallel and
// accumulator loops, and a naive triple-loop matrix multiply.

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "nmc/trace.hpp"

namespace nmc {

enum class GeneratorKind : std::uint8_t {
  sequential_scan,
  random_stream,
  repeated_address,
  strided_matmul,
  data_parallel_loop,
  dependent_chain_loop,
};

struct GeneratorSpec {
  GeneratorKind kind = GeneratorKind::sequential_scan;
  // Element / access count for the stream generators; matrix dimension
  // for strided_matmul.
  std::uint64_t count = 16;
  std::uint64_t stride = 4;  // bytes between scan elements
  std::uint64_t iterations = 4;
  std::uint64_t lanes = 1;
  std::uint64_t space_bytes = std::uint64_t{1} << 20;  // random_stream range
  std::uint64_t seed = 1;
  std::uint32_t word_size = 4;
  unsigned address_bits = 64;
};

// Builds a valid trace for the spec; throws std::invalid_argument on bad
// parameters or when generated addresses would overflow address_bits.
// Output is a pure function of the spec.
Trace generate(const GeneratorSpec& spec);

std::string_view generator_kind_name(GeneratorKind kind);
std::optional<GeneratorKind> generator_kind_from_name(std::string_view name);
const std::vector<std::string>& generator_kind_names();

}  // namespace nmc
