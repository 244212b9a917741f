// SPDX-License-Identifier: Apache-2.0

#include "nmc/synth.hpp"

#include <stdexcept>
#include <unordered_map>
#include <utility>

namespace nmc {

namespace {

// SplitMix64 (Steele et al.): tiny, seed-stable across platforms. Chosen
// over <random> engines because the trace format promises bit-identical
// streams for a given seed on any implementation.
struct SplitMix64 {
  std::uint64_t state;

  explicit SplitMix64(std::uint64_t seed) : state(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }
};

constexpr std::uint64_t kNoValue = ~std::uint64_t{0};

class TraceBuilder {
 public:
  explicit TraceBuilder(const GeneratorSpec& spec) {
    trace_.word_size = spec.word_size;
    trace_.address_bits = spec.address_bits;
    if (spec.address_bits < 64)
      address_limit_ = std::uint64_t{1} << spec.address_bits;
  }

  void open_block(std::uint64_t bb_static) {
    bb_ = bb_static;
    bbi_ = instance_counter_[bb_static]++;
  }

  // Emits one event; returns the fresh value id, or kNoValue if none.
  std::uint64_t emit(std::uint64_t sid, OpKind kind, std::vector<std::uint64_t> uses,
                     bool defines, std::optional<MemAccess> mem = std::nullopt,
                     bool index_update = false) {
    if (mem && address_limit_ != 0 &&
        (mem->address >= address_limit_ ||
         mem->size > address_limit_ - mem->address))
      throw std::invalid_argument("generated address overflows address_bits");
    TraceEvent e;
    e.seq = trace_.events.size();
    e.static_id = sid;
    e.opcode = Opcode{kind, {}};
    e.uses = std::move(uses);
    if (defines) e.def = next_value_++;
    e.mem = mem;
    e.bb_static = bb_;
    e.bb_instance = bbi_;
    e.index_update = index_update;
    trace_.events.push_back(std::move(e));
    return defines ? *trace_.events.back().def : kNoValue;
  }

  Trace take() { return std::move(trace_); }

 private:
  Trace trace_;
  std::unordered_map<std::uint64_t, std::uint64_t> instance_counter_;
  std::uint64_t bb_ = 0;
  std::uint64_t bbi_ = 0;
  std::uint64_t next_value_ = 0;
  std::uint64_t address_limit_ = 0;  // 0 = full 64-bit space
};

// Appends the loop bookkeeping tail: flagged index add, compare, branch.
// Returns the new index value id.
std::uint64_t emit_loop_tail(TraceBuilder& b, std::uint64_t sid_base,
                             std::uint64_t prev_index) {
  std::vector<std::uint64_t> idx_uses;
  if (prev_index != kNoValue) idx_uses.push_back(prev_index);
  const std::uint64_t idx =
      b.emit(sid_base, OpKind::add, std::move(idx_uses), true, std::nullopt, true);
  const std::uint64_t flag = b.emit(sid_base + 1, OpKind::cmp, {idx}, true);
  b.emit(sid_base + 2, OpKind::branch, {flag}, false);
  return idx;
}

Trace gen_address_stream(const GeneratorSpec& spec,
                         const std::vector<std::uint64_t>& addresses) {
  TraceBuilder b(spec);
  std::uint64_t idx = kNoValue;
  for (std::uint64_t address : addresses) {
    b.open_block(0);
    b.emit(0, OpKind::load, {}, true, MemAccess{address, spec.word_size});
    idx = emit_loop_tail(b, 1, idx);
  }
  return b.take();
}

Trace gen_sequential_scan(const GeneratorSpec& spec) {
  std::vector<std::uint64_t> addresses(spec.count);
  for (std::uint64_t i = 0; i < spec.count; ++i) addresses[i] = i * spec.stride;
  return gen_address_stream(spec, addresses);
}

Trace gen_repeated_address(const GeneratorSpec& spec) {
  return gen_address_stream(
      spec, std::vector<std::uint64_t>(spec.count, std::uint64_t{0x100}));
}

Trace gen_random_stream(const GeneratorSpec& spec) {
  if (spec.space_bytes < spec.word_size)
    throw std::invalid_argument("space_bytes below word_size");
  const std::uint64_t slots = spec.space_bytes / spec.word_size;
  SplitMix64 rng(spec.seed);
  std::vector<std::uint64_t> addresses(spec.count);
  for (std::uint64_t& a : addresses) a = (rng.next() % slots) * spec.word_size;
  return gen_address_stream(spec, addresses);
}

Trace gen_data_parallel_loop(const GeneratorSpec& spec) {
  TraceBuilder b(spec);
  const std::uint64_t w = spec.word_size;
  const std::uint64_t out_base = spec.iterations * spec.lanes * w;
  std::uint64_t idx = kNoValue;
  for (std::uint64_t i = 0; i < spec.iterations; ++i) {
    b.open_block(0);
    std::vector<std::uint64_t> products;
    for (std::uint64_t l = 0; l < spec.lanes; ++l) {
      const std::uint64_t loaded =
          b.emit(2 * l, OpKind::load, {}, true,
                 MemAccess{(i * spec.lanes + l) * w, spec.word_size});
      products.push_back(b.emit(2 * l + 1, OpKind::mul, {loaded}, true));
    }
    b.emit(2 * spec.lanes, OpKind::store, std::move(products), false,
           MemAccess{out_base + i * w, spec.word_size});
    idx = emit_loop_tail(b, 2 * spec.lanes + 1, idx);
  }
  return b.take();
}

Trace gen_dependent_chain_loop(const GeneratorSpec& spec) {
  TraceBuilder b(spec);
  const std::uint64_t w = spec.word_size;
  std::vector<std::uint64_t> accumulator(spec.lanes, kNoValue);
  std::uint64_t idx = kNoValue;
  for (std::uint64_t i = 0; i < spec.iterations; ++i) {
    b.open_block(0);
    const std::uint64_t lane = i % spec.lanes;
    const std::uint64_t loaded =
        b.emit(0, OpKind::load, {}, true, MemAccess{i * w, spec.word_size});
    const std::uint64_t product = b.emit(1, OpKind::mul, {loaded}, true);
    std::vector<std::uint64_t> acc_uses{product};
    if (accumulator[lane] != kNoValue) acc_uses.push_back(accumulator[lane]);
    accumulator[lane] = b.emit(2, OpKind::add, std::move(acc_uses), true);
    idx = emit_loop_tail(b, 3, idx);
  }
  return b.take();
}

// Naive row-major i-j-k matrix multiply over n x n matrices: C = A * B.
// Inner block loads A[i][k] and B[k][j] and accumulates; the j block
// stores C[i][j]; the i block is bookkeeping only.
Trace gen_strided_matmul(const GeneratorSpec& spec) {
  TraceBuilder b(spec);
  const std::uint64_t n = spec.count;
  const std::uint64_t w = spec.word_size;
  const std::uint64_t base_b = n * n * w;
  const std::uint64_t base_c = 2 * n * n * w;

  std::uint64_t idx_i = kNoValue;
  for (std::uint64_t i = 0; i < n; ++i) {
    std::uint64_t idx_j = kNoValue;
    for (std::uint64_t j = 0; j < n; ++j) {
      std::uint64_t acc = kNoValue;
      std::uint64_t idx_k = kNoValue;
      for (std::uint64_t k = 0; k < n; ++k) {
        b.open_block(2);
        const std::uint64_t a =
            b.emit(0, OpKind::load, {}, true, MemAccess{(i * n + k) * w, spec.word_size});
        const std::uint64_t bb =
            b.emit(1, OpKind::load, {}, true, MemAccess{base_b + (k * n + j) * w, spec.word_size});
        const std::uint64_t product = b.emit(2, OpKind::mul, {a, bb}, true);
        std::vector<std::uint64_t> acc_uses{product};
        if (acc != kNoValue) acc_uses.push_back(acc);
        acc = b.emit(3, OpKind::add, std::move(acc_uses), true);
        idx_k = emit_loop_tail(b, 4, idx_k);
      }
      b.open_block(1);
      b.emit(10, OpKind::store, {acc}, false,
             MemAccess{base_c + (i * n + j) * w, spec.word_size});
      idx_j = emit_loop_tail(b, 11, idx_j);
    }
    b.open_block(0);
    idx_i = emit_loop_tail(b, 20, idx_i);
  }
  return b.take();
}

void check_spec(const GeneratorSpec& spec) {
  if (spec.word_size == 0 || (spec.word_size & (spec.word_size - 1)) != 0)
    throw std::invalid_argument("word_size must be a power of two");
  if (spec.address_bits == 0 || spec.address_bits > 64)
    throw std::invalid_argument("address_bits must be in 1..64");
  if (spec.count == 0 || spec.stride == 0 || spec.iterations == 0 ||
      spec.lanes == 0 || spec.space_bytes == 0)
    throw std::invalid_argument("generator size parameters must be >= 1");
}

// One-past-the-end of the byte range the generator will touch, computed
// wide so the check itself cannot wrap.
unsigned __int128 bytes_needed(const GeneratorSpec& spec) {
  using wide = unsigned __int128;
  const wide w = spec.word_size;
  switch (spec.kind) {
    case GeneratorKind::sequential_scan:
      return wide(spec.count - 1) * spec.stride + w;
    case GeneratorKind::random_stream:
      return wide(spec.space_bytes / spec.word_size) * w;
    case GeneratorKind::repeated_address:
      return wide(0x100) + w;
    case GeneratorKind::strided_matmul:
      return wide(3) * spec.count * spec.count * w;
    case GeneratorKind::data_parallel_loop:
      return wide(spec.iterations) * (spec.lanes + 1) * w;
    case GeneratorKind::dependent_chain_loop:
      return wide(spec.iterations) * w;
  }
  return 0;
}

}  // namespace

Trace generate(const GeneratorSpec& spec) {
  check_spec(spec);
  const unsigned __int128 limit = static_cast<unsigned __int128>(1)
                                  << spec.address_bits;
  if (bytes_needed(spec) > limit)
    throw std::invalid_argument("generator parameters overflow address_bits");
  switch (spec.kind) {
    case GeneratorKind::sequential_scan: return gen_sequential_scan(spec);
    case GeneratorKind::random_stream: return gen_random_stream(spec);
    case GeneratorKind::repeated_address: return gen_repeated_address(spec);
    case GeneratorKind::strided_matmul: return gen_strided_matmul(spec);
    case GeneratorKind::data_parallel_loop: return gen_data_parallel_loop(spec);
    case GeneratorKind::dependent_chain_loop: return gen_dependent_chain_loop(spec);
  }
  throw std::invalid_argument("unknown generator kind");
}

namespace {

constexpr std::pair<GeneratorKind, std::string_view> kKindNames[] = {
    {GeneratorKind::sequential_scan, "sequential_scan"},
    {GeneratorKind::random_stream, "random_stream"},
    {GeneratorKind::repeated_address, "repeated_address"},
    {GeneratorKind::strided_matmul, "strided_matmul"},
    {GeneratorKind::data_parallel_loop, "data_parallel_loop"},
    {GeneratorKind::dependent_chain_loop, "dependent_chain_loop"},
};

}  // namespace

std::string_view generator_kind_name(GeneratorKind kind) {
  for (const auto& [k, name] : kKindNames)
    if (k == kind) return name;
  return "unknown";
}

std::optional<GeneratorKind> generator_kind_from_name(std::string_view name) {
  for (const auto& [kind, known] : kKindNames)
    if (known == name) return kind;
  return std::nullopt;
}

const std::vector<std::string>& generator_kind_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> out;
    for (const auto& [kind, name] : kKindNames) out.emplace_back(name);
    return out;
  }();
  return names;
}

}  // namespace nmc
