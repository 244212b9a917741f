// SPDX-License-Identifier: Apache-2.0
//
// Dynamic-trace data model: events, traces, validation, and the JSON-Lines
// on-disk format. Everything downstream (metrics, schedulers, reports)
// consumes the immutable Trace built here.

#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace nmc {

enum class OpKind : std::uint8_t {
  load,
  store,
  add,
  sub,
  mul,
  div,
  cmp,
  branch,
  phi,
  call,
  other,
};

// RISC-like opcode. `name` is only meaningful for OpKind::other and holds
// the verbatim mnemonic from the trace.
struct Opcode {
  OpKind kind = OpKind::other;
  std::string name;

  bool is_memory() const { return kind == OpKind::load || kind == OpKind::store; }

  // Canonical mnemonic ("load", "add", ..., or the custom name for other).
  std::string text() const;

  // Parses a mnemonic; unknown strings become other(name).
  static Opcode from_text(std::string_view mnemonic);

  friend bool operator==(const Opcode&, const Opcode&) = default;
  friend auto operator<=>(const Opcode&, const Opcode&) = default;
};

struct MemAccess {
  std::uint64_t address = 0;
  std::uint32_t size = 0;  // bytes, one of {1,2,4,8,16,32,64}

  friend bool operator==(const MemAccess&, const MemAccess&) = default;
};

// One dynamic instruction. `seq` is its 0-based position in the trace and
// doubles as the event id everywhere else in the library.
struct TraceEvent {
  std::uint64_t seq = 0;
  std::uint64_t static_id = 0;
  Opcode opcode;
  std::optional<std::uint64_t> def;   // value id produced, if any
  std::vector<std::uint64_t> uses;    // value ids consumed
  std::optional<MemAccess> mem;       // present iff opcode is load/store
  std::uint64_t bb_static = 0;        // static basic-block id
  std::uint64_t bb_instance = 0;      // dynamic instance ordinal of that block
  bool index_update = false;          // loop-index-update marker

  friend bool operator==(const TraceEvent&, const TraceEvent&) = default;
};

struct Trace {
  std::vector<TraceEvent> events;
  std::uint32_t word_size = 4;     // smallest access granularity, bytes
  std::uint32_t address_bits = 64; // width of the address space

  friend bool operator==(const Trace&, const Trace&) = default;
};

// Raised on malformed input or invariant violations. `line()` is the
// 1-based line of the offending input when known, 0 otherwise.
class TraceError : public std::runtime_error {
 public:
  explicit TraceError(const std::string& msg, std::size_t line = 0);
  std::size_t line() const { return line_; }

 private:
  std::size_t line_ = 0;
};

struct IngestOptions {
  // When true, a stream whose first line is not a {"word_size",...} header
  // is rejected instead of falling back to defaults.
  bool require_header = false;
};

// Checks every Trace invariant (seq density, mem-vs-opcode consistency,
// def-before-use, access sizes, block-instance contiguity, address range).
// Throws TraceError on the first violation.
void validate(const Trace& trace);

// Parses JSON-Lines (optional header line, then one event per line) and
// validates. Errors carry the input line number.
Trace ingest(std::istream& in, const IngestOptions& options = {});
Trace ingest_string(const std::string& text, const IngestOptions& options = {});
Trace ingest_file(const std::string& path, const IngestOptions& options = {});

// Emits the JSON-Lines form (header first). ingest(serialize(t)) == t.
void serialize(const Trace& trace, std::ostream& out);
std::string serialize(const Trace& trace);

// A maximal run of events sharing (bb_static, bb_instance). Runs are
// uninterrupted by construction, so [first_seq, last_seq] is dense.
struct BlockInstance {
  std::uint64_t bb_static = 0;
  std::uint64_t bb_instance = 0;
  std::uint64_t first_seq = 0;
  std::uint64_t last_seq = 0;

  std::uint64_t size() const { return last_seq - first_seq + 1; }
};

struct InstanceTable {
  std::vector<BlockInstance> instances;   // in trace order
  std::vector<std::uint32_t> instance_of; // event seq -> index into instances
};

InstanceTable block_instances(const Trace& trace);

}  // namespace nmc
