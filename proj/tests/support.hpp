// SPDX-License-Identifier: Apache-2.0
//
// Shared test helpers: a small deterministic RNG, a fluent builder for
// hand-written trace fixtures, and a fuzzer that produces valid random
// traces for property tests.

#pragma once

#include <cstdint>
#include <optional>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "nmc/trace.hpp"

namespace nmc::test {

// SplitMix64. Self-contained so test inputs never depend on libc rand.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  std::uint64_t below(std::uint64_t n) { return n ? next() % n : 0; }

  bool chance(double p) { return static_cast<double>(next() >> 11) * 0x1.0p-53 < p; }

 private:
  std::uint64_t state_ = 0;
};

// Hand-fixture builder. Each block(b) call opens the next dynamic instance
// of b; static ids derive from (block, position) so instances of the same
// block repeat them, like a real loop body would.
class TraceBuilder {
 public:
  explicit TraceBuilder(std::uint32_t word_size = 4, std::uint32_t address_bits = 64) {
    trace_.word_size = word_size;
    trace_.address_bits = address_bits;
  }

  TraceBuilder& block(std::uint64_t bb) {
    cur_bb_ = bb;
    cur_bbi_ = next_instance_[bb]++;
    pos_ = 0;
    opened_ = true;
    return *this;
  }

  // Emits one event and returns its defined value id (0 when none).
  std::uint64_t op(std::string_view mnemonic, std::vector<std::uint64_t> uses = {},
                   std::optional<MemAccess> mem = std::nullopt, bool index_update = false) {
    if (!opened_) block(0);
    TraceEvent e;
    e.seq = trace_.events.size();
    e.static_id = cur_bb_ * 64 + pos_++;
    e.opcode = Opcode::from_text(mnemonic);
    e.uses = std::move(uses);
    e.mem = mem;
    e.bb_static = cur_bb_;
    e.bb_instance = cur_bbi_;
    e.index_update = index_update;
    std::uint64_t def = 0;
    if (e.opcode.kind != OpKind::store && e.opcode.kind != OpKind::branch) {
      def = next_value_++;
      e.def = def;
    }
    trace_.events.push_back(std::move(e));
    return def;
  }

  std::uint64_t load(std::uint64_t addr, std::uint32_t size = 4,
                     std::vector<std::uint64_t> uses = {}) {
    return op("load", std::move(uses), MemAccess{addr, size});
  }

  void store(std::uint64_t addr, std::uint32_t size = 4,
             std::vector<std::uint64_t> uses = {}) {
    op("store", std::move(uses), MemAccess{addr, size});
  }

  Trace take() {
    validate(trace_);
    return std::move(trace_);
  }

 private:
  Trace trace_;
  std::uint64_t cur_bb_ = 0;
  std::uint64_t cur_bbi_ = 0;
  std::uint64_t pos_ = 0;
  std::uint64_t next_value_ = 1;
  bool opened_ = false;
  std::unordered_map<std::uint64_t, std::uint64_t> next_instance_;
};

// One load per letter, at that letter's line-aligned address, all in one
// block instance. "ABA" touches line A, line B, then line A again.
inline Trace letter_loads(std::string_view letters, std::uint64_t line_size = 4) {
  TraceBuilder b;
  b.block(0);
  for (char c : letters)
    b.load(static_cast<std::uint64_t>(c - 'A') * line_size);
  return b.take();
}

struct FuzzOptions {
  std::size_t max_events = 400;
  std::uint64_t max_blocks = 4;
  bool force_memory = true;          // guarantee at least one access
  std::uint64_t address_space = std::uint64_t{1} << 12;  // byte range
  std::uint32_t word_size = 4;
  std::uint32_t address_bits = 64;
  double index_flag_rate = 0.15;     // chance an add/sub carries idx
};

// A few random block templates instantiated in random order; uses are
// drawn from everything defined so far, so the trace always validates.
inline Trace fuzz_trace(std::uint64_t seed, const FuzzOptions& opt = {}) {
  Rng rng(seed);

  struct Slot {
    OpKind kind;
    bool index_update;
  };
  static constexpr OpKind kPalette[] = {
      OpKind::load, OpKind::store, OpKind::add,    OpKind::sub, OpKind::mul,
      OpKind::div,  OpKind::cmp,   OpKind::branch, OpKind::phi,
  };

  const std::uint64_t num_blocks = 1 + rng.below(opt.max_blocks);
  std::vector<std::vector<Slot>> templates(num_blocks);
  for (std::uint64_t b = 0; b < num_blocks; ++b) {
    const std::uint64_t len = 1 + rng.below(8);
    for (std::uint64_t p = 0; p < len; ++p) {
      OpKind kind = kPalette[rng.below(std::size(kPalette))];
      bool idx = (kind == OpKind::add || kind == OpKind::sub) &&
                 rng.chance(opt.index_flag_rate);
      templates[b].push_back({kind, idx});
    }
  }
  if (opt.force_memory) templates[0][0] = {OpKind::load, false};

  Trace trace;
  trace.word_size = opt.word_size;
  trace.address_bits = opt.address_bits;

  static constexpr std::uint32_t kSizes[] = {1, 2, 4, 8};
  std::vector<std::uint64_t> defined;
  std::vector<std::uint64_t> next_instance(num_blocks, 0);
  std::uint64_t next_value = 1;
  const std::size_t target = 1 + rng.below(opt.max_events);

  bool emitted_memory = false;
  while (trace.events.size() < target || (opt.force_memory && !emitted_memory)) {
    const std::uint64_t bb = (opt.force_memory && !emitted_memory &&
                              trace.events.size() >= target)
                                 ? 0
                                 : rng.below(num_blocks);
    const std::uint64_t bbi = next_instance[bb]++;
    for (std::size_t p = 0; p < templates[bb].size(); ++p) {
      const Slot& slot = templates[bb][p];
      TraceEvent e;
      e.seq = trace.events.size();
      e.static_id = bb * 16 + p;
      e.opcode.kind = slot.kind;
      e.bb_static = bb;
      e.bb_instance = bbi;
      e.index_update = slot.index_update;
      const std::uint64_t n_uses = rng.below(3);
      for (std::uint64_t u = 0; u < n_uses && !defined.empty(); ++u)
        e.uses.push_back(defined[rng.below(defined.size())]);
      if (e.opcode.is_memory()) {
        MemAccess m;
        m.size = kSizes[rng.below(std::size(kSizes))];
        m.address = rng.below(opt.address_space - m.size);
        e.mem = m;
        emitted_memory = true;
      }
      if (slot.kind != OpKind::store && slot.kind != OpKind::branch) {
        e.def = next_value;
        defined.push_back(next_value++);
      }
      trace.events.push_back(std::move(e));
    }
  }

  validate(trace);
  return trace;
}

// Affine bijection over value ids (odd multiplier, so injective mod 2^64).
// Metrics only see dependency structure, so all of them must be invariant
// under this relabeling.
inline Trace relabel_values(Trace trace, std::uint64_t mult = 0x9e3779b97f4a7c15ull) {
  for (TraceEvent& e : trace.events) {
    if (e.def) e.def = *e.def * mult + 7;
    for (std::uint64_t& u : e.uses) u = u * mult + 7;
  }
  validate(trace);
  return trace;
}

}  // namespace nmc::test
