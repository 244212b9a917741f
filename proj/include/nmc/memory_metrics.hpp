// SPDX-License-Identifier: Apache-2.0
//
// Address-stream metrics: entropy under LSB cuts, reuse distances at
// doubling line sizes, reuse signatures, distribution maps, and the
// spatial locality score built on top of them.

#pragma once

#include <bit>
#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "nmc/trace.hpp"

namespace nmc {

// Reuse distance of a first-touch (cold) access.
inline constexpr std::uint64_t kColdDistance = ~std::uint64_t{0};

// Logarithmic distance bins: bin 0 = [0,1), bin i>=1 = [2^(i-1), 2^i).
inline std::size_t distance_bin(std::uint64_t distance) {
  return distance == 0 ? 0 : static_cast<std::size_t>(std::bit_width(distance));
}

// Half-open [lower, upper) range of a bin. Bins past 63 are unreachable for
// distances that fit in 64 bits, so the shift below never overflows.
inline std::pair<std::uint64_t, std::uint64_t> distance_bin_range(std::size_t bin) {
  if (bin == 0) return {0, 1};
  return {std::uint64_t{1} << (bin - 1), std::uint64_t{1} << bin};
}

struct EntropyPoint {
  unsigned lsb_cut = 0;
  double entropy = 0.0;  // bits
};

struct EntropyReport {
  std::vector<EntropyPoint> per_lsb_cut;  // k = 0..k_max in order
  std::uint64_t distinct_addresses = 0;   // full addresses, no cut
};

struct ReuseBin {
  std::uint64_t lower = 0;  // inclusive
  std::uint64_t upper = 0;  // exclusive
  double probability = 0.0;
};

struct ReuseSignature {
  std::uint64_t line_size = 0;
  std::vector<ReuseBin> bins;   // finite-distance bins, index = distance_bin
  double cold_fraction = 0.0;   // first-touch mass
  std::uint64_t access_count = 0;

  bool empty() const { return access_count == 0; }
};

// Row-stochastic matrix of bin transitions when the line size doubles.
// Finite rows/columns come first; the last row and column are the cold
// (infinite-distance) bin.
struct DistributionMap {
  std::uint64_t line_size = 0;  // b of the pair (b, 2b)
  std::size_t finite_rows = 0;
  std::size_t finite_cols = 0;
  std::vector<double> cells;            // (finite_rows+1) x (finite_cols+1), row-major
  std::vector<std::uint64_t> row_counts;  // raw tallies; 0 marks an empty row
  std::uint64_t access_count = 0;

  std::size_t inf_row() const { return finite_rows; }
  std::size_t inf_col() const { return finite_cols; }
  double cell(std::size_t row, std::size_t col) const {
    return cells[row * (finite_cols + 1) + col];
  }
};

struct SpatialPairScore {
  std::uint64_t line_size = 0;  // b of the pair (b, 2b)
  double score = 0.0;
};

struct SpatialLocalityReport {
  std::vector<SpatialPairScore> per_pair;
  double total = 0.0;
};

// Shannon entropy over the multiset of (address >> lsb_cut) values of all
// memory accesses. Empty memory trace yields nullopt, never 0.
std::optional<double> memory_entropy(const Trace& trace, unsigned lsb_cut);

// memory_entropy for every cut 0..k_max plus the distinct-address count.
std::optional<EntropyReport> entropy_sweep(const Trace& trace, unsigned k_max);

// Per memory access, in trace order, the number of distinct lines touched
// since the previous access to the same line; kColdDistance on first touch.
// O(n log n) over the access count.
std::vector<std::uint64_t> reuse_distance_stream(const Trace& trace,
                                                 std::uint64_t line_size);

ReuseSignature reuse_signature(const Trace& trace, std::uint64_t line_size);

// Transition map between the distance bins at line sizes b and 2b.
DistributionMap distribution_map(const Trace& trace, std::uint64_t b);

// Weighted spatial locality over all pairs (b, 2b), b doubling from
// word_size while 2b <= max_line_size. Nullopt when the trace has no
// memory accesses.
std::optional<SpatialLocalityReport> spatial_locality(const Trace& trace,
                                                      std::uint64_t max_line_size);

}  // namespace nmc
