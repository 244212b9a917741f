// SPDX-License-Identifier: Apache-2.0

#include "nmc/memory_metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <unordered_map>

namespace nmc {

namespace {

void require_line_size(const Trace& trace, std::uint64_t line_size) {
  if (line_size == 0 || !std::has_single_bit(line_size))
    throw std::invalid_argument("line size must be a power of two");
  if (line_size < trace.word_size)
    throw std::invalid_argument("line size below trace word size");
}

std::vector<std::uint64_t> access_addresses(const Trace& trace) {
  std::vector<std::uint64_t> addrs;
  for (const TraceEvent& e : trace.events)
    if (e.mem) addrs.push_back(e.mem->address);
  return addrs;
}

// Entropy of the address multiset under an LSB cut, computed from the
// sorted full-address list: runs of equal (a >> k) stay contiguous.
// H = log2(n) - sum(c*log2(c))/n, exact at the 0log0 = 0 convention.
double entropy_of_sorted(const std::vector<std::uint64_t>& sorted, unsigned k) {
  const double n = static_cast<double>(sorted.size());
  double weighted = 0.0;
  std::size_t i = 0;
  while (i < sorted.size()) {
    const std::uint64_t symbol = sorted[i] >> k;
    std::size_t j = i;
    while (j < sorted.size() && (sorted[j] >> k) == symbol) ++j;
    const double c = static_cast<double>(j - i);
    weighted += c * std::log2(c);
    i = j;
  }
  double h = std::log2(n) - weighted / n;
  return h < 0.0 ? 0.0 : h;
}

// Fenwick tree over access positions; a set bit marks the most recent
// access of some line. Prefix sums then count distinct lines in a range.
class PositionTree {
 public:
  explicit PositionTree(std::size_t n) : tree_(n + 1, 0) {}

  void add(std::size_t pos, int delta) {
    for (std::size_t i = pos + 1; i < tree_.size(); i += i & (~i + 1))
      tree_[i] += delta;
  }

  // Number of set positions in [0, pos].
  std::uint64_t prefix(std::size_t pos) const {
    std::uint64_t sum = 0;
    for (std::size_t i = pos + 1; i > 0; i -= i & (~i + 1)) sum += tree_[i];
    return sum;
  }

 private:
  std::vector<std::uint64_t> tree_;
};

ReuseSignature signature_from(const std::vector<std::uint64_t>& distances,
                              std::uint64_t line_size) {
  ReuseSignature sig;
  sig.line_size = line_size;
  sig.access_count = distances.size();
  if (distances.empty()) return sig;

  std::size_t max_bin = 0;
  std::uint64_t cold = 0;
  bool any_finite = false;
  for (std::uint64_t d : distances) {
    if (d == kColdDistance) {
      ++cold;
    } else {
      max_bin = std::max(max_bin, distance_bin(d));
      any_finite = true;
    }
  }

  std::vector<std::uint64_t> counts(any_finite ? max_bin + 1 : 0, 0);
  for (std::uint64_t d : distances)
    if (d != kColdDistance) ++counts[distance_bin(d)];

  const double n = static_cast<double>(distances.size());
  sig.bins.reserve(counts.size());
  for (std::size_t b = 0; b < counts.size(); ++b) {
    auto [lo, hi] = distance_bin_range(b);
    sig.bins.push_back({lo, hi, static_cast<double>(counts[b]) / n});
  }
  sig.cold_fraction = static_cast<double>(cold) / n;
  return sig;
}

DistributionMap map_from(const std::vector<std::uint64_t>& at_b,
                         const std::vector<std::uint64_t>& at_2b,
                         std::uint64_t b) {
  DistributionMap map;
  map.line_size = b;
  map.access_count = at_b.size();

  for (std::size_t i = 0; i < at_b.size(); ++i) {
    if (at_b[i] != kColdDistance)
      map.finite_rows = std::max(map.finite_rows, distance_bin(at_b[i]) + 1);
    if (at_2b[i] != kColdDistance)
      map.finite_cols = std::max(map.finite_cols, distance_bin(at_2b[i]) + 1);
  }

  const std::size_t width = map.finite_cols + 1;
  std::vector<std::uint64_t> tallies((map.finite_rows + 1) * width, 0);
  map.row_counts.assign(map.finite_rows + 1, 0);
  for (std::size_t i = 0; i < at_b.size(); ++i) {
    const std::size_t row =
        at_b[i] == kColdDistance ? map.inf_row() : distance_bin(at_b[i]);
    const std::size_t col =
        at_2b[i] == kColdDistance ? map.inf_col() : distance_bin(at_2b[i]);
    ++tallies[row * width + col];
    ++map.row_counts[row];
  }

  map.cells.assign(tallies.size(), 0.0);
  for (std::size_t row = 0; row <= map.finite_rows; ++row) {
    if (map.row_counts[row] == 0) continue;
    const double total = static_cast<double>(map.row_counts[row]);
    for (std::size_t col = 0; col < width; ++col)
      map.cells[row * width + col] =
          static_cast<double>(tallies[row * width + col]) / total;
  }
  return map;
}

// Score of one (b, 2b) pair: sum over rows of the mass that moved to a
// strictly lower finite bin, weighted by the row's probability at b.
double pair_score(const DistributionMap& map, const ReuseSignature& sig) {
  double score = 0.0;
  for (std::size_t row = 0; row < map.finite_rows; ++row) {
    if (map.row_counts[row] == 0) continue;
    double slq = 0.0;
    for (std::size_t col = 0; col < std::min(row, map.finite_cols); ++col)
      slq += map.cell(row, col);
    const double p_row = row < sig.bins.size() ? sig.bins[row].probability : 0.0;
    score += slq * p_row;
  }
  if (map.row_counts[map.inf_row()] != 0) {
    double slq_inf = 0.0;
    for (std::size_t col = 0; col < map.finite_cols; ++col)
      slq_inf += map.cell(map.inf_row(), col);
    score += slq_inf * sig.cold_fraction;
  }
  return std::abs(score);
}

}  // namespace

std::optional<double> memory_entropy(const Trace& trace, unsigned lsb_cut) {
  if (lsb_cut >= trace.address_bits)
    throw std::invalid_argument("lsb cut must be below address_bits");
  std::vector<std::uint64_t> addrs = access_addresses(trace);
  if (addrs.empty()) return std::nullopt;
  std::sort(addrs.begin(), addrs.end());
  return entropy_of_sorted(addrs, lsb_cut);
}

std::optional<EntropyReport> entropy_sweep(const Trace& trace, unsigned k_max) {
  if (k_max >= trace.address_bits)
    throw std::invalid_argument("lsb cut must be below address_bits");
  std::vector<std::uint64_t> addrs = access_addresses(trace);
  if (addrs.empty()) return std::nullopt;
  std::sort(addrs.begin(), addrs.end());

  EntropyReport report;
  report.per_lsb_cut.reserve(k_max + 1);
  for (unsigned k = 0; k <= k_max; ++k)
    report.per_lsb_cut.push_back({k, entropy_of_sorted(addrs, k)});
  for (std::size_t i = 0; i < addrs.size(); ++i)
    if (i == 0 || addrs[i] != addrs[i - 1]) ++report.distinct_addresses;
  return report;
}

std::vector<std::uint64_t> reuse_distance_stream(const Trace& trace,
                                                 std::uint64_t line_size) {
  require_line_size(trace, line_size);
  std::vector<std::uint64_t> addrs = access_addresses(trace);
  std::vector<std::uint64_t> distances(addrs.size(), kColdDistance);

  PositionTree marks(addrs.size());
  std::unordered_map<std::uint64_t, std::size_t> last_pos;
  last_pos.reserve(addrs.size());

  for (std::size_t t = 0; t < addrs.size(); ++t) {
    const std::uint64_t line = addrs[t] / line_size;
    auto [it, fresh] = last_pos.try_emplace(line, t);
    if (!fresh) {
      const std::size_t p = it->second;
      // Set positions in (p, t) are the most recent accesses of other lines.
      distances[t] = marks.prefix(t) - marks.prefix(p);
      marks.add(p, -1);
      it->second = t;
    }
    marks.add(t, +1);
  }
  return distances;
}

ReuseSignature reuse_signature(const Trace& trace, std::uint64_t line_size) {
  return signature_from(reuse_distance_stream(trace, line_size), line_size);
}

DistributionMap distribution_map(const Trace& trace, std::uint64_t b) {
  require_line_size(trace, b);
  return map_from(reuse_distance_stream(trace, b),
                  reuse_distance_stream(trace, 2 * b), b);
}

std::optional<SpatialLocalityReport> spatial_locality(const Trace& trace,
                                                      std::uint64_t max_line_size) {
  if (max_line_size <= trace.word_size || !std::has_single_bit(max_line_size))
    throw std::invalid_argument("max line size must be a power of two above word size");

  std::vector<std::uint64_t> prev = reuse_distance_stream(trace, trace.word_size);
  if (prev.empty()) return std::nullopt;

  SpatialLocalityReport report;
  double weighted = 0.0, weight_sum = 0.0;
  unsigned beta = 1;
  for (std::uint64_t b = trace.word_size; 2 * b <= max_line_size; b *= 2, ++beta) {
    std::vector<std::uint64_t> next = reuse_distance_stream(trace, 2 * b);
    const double score = pair_score(map_from(prev, next, b), signature_from(prev, b));
    report.per_pair.push_back({b, score});
    const double w = std::ldexp(1.0, -static_cast<int>(beta));
    weighted += score * w;
    weight_sum += w;
    prev = std::move(next);
  }
  report.total = weighted / weight_sum;
  return report;
}

}  // namespace nmc
