// SPDX-License-Identifier: Apache-2.0

#include "nmc/trace.hpp"

#include <array>
#include <charconv>
#include <fstream>
#include <sstream>
#include <unordered_map>
#include <unordered_set>
#include <utility>

#include <json.hpp>

namespace nmc {
namespace {

using ordered_json = nlohmann::ordered_json;

constexpr std::array<std::pair<OpKind, std::string_view>, 10> kOpNames = {{
    {OpKind::load, "load"},
    {OpKind::store, "store"},
    {OpKind::add, "add"},
    {OpKind::sub, "sub"},
    {OpKind::mul, "mul"},
    {OpKind::div, "div"},
    {OpKind::cmp, "cmp"},
    {OpKind::branch, "branch"},
    {OpKind::phi, "phi"},
    {OpKind::call, "call"},
}};

constexpr std::uint64_t kValidSizes =
    (1ull << 1) | (1ull << 2) | (1ull << 4) | (1ull << 8) | (1ull << 16) | (1ull << 32);

bool valid_access_size(std::uint64_t size) {
  if (size == 64) return true;
  return size < 64 && (kValidSizes >> size) & 1u;
}

std::string hex_address(std::uint64_t addr) {
  char buf[19];  // "0x" + 16 digits
  auto [ptr, ec] = std::to_chars(buf + 2, buf + sizeof(buf), addr, 16);
  buf[0] = '0';
  buf[1] = 'x';
  return std::string(buf, ptr);
}

std::uint64_t parse_hex_address(const std::string& text, std::size_t line_no) {
  std::string_view s = text;
  if (s.size() > 2 && (s.substr(0, 2) == "0x" || s.substr(0, 2) == "0X")) s.remove_prefix(2);
  if (s.empty()) throw TraceError("empty address string", line_no);
  std::uint64_t value = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value, 16);
  if (ec != std::errc{} || ptr != s.data() + s.size())
    throw TraceError("bad hex address '" + text + "'", line_no);
  return value;
}

}  // namespace

std::string Opcode::text() const {
  for (const auto& [k, n] : kOpNames)
    if (k == kind) return std::string(n);
  return name;
}

Opcode Opcode::from_text(std::string_view mnemonic) {
  for (const auto& [k, n] : kOpNames)
    if (n == mnemonic) return Opcode{k, {}};
  return Opcode{OpKind::other, std::string(mnemonic)};
}

TraceError::TraceError(const std::string& msg, std::size_t line)
    : std::runtime_error(line ? "line " + std::to_string(line) + ": " + msg : msg),
      line_(line) {}

void validate(const Trace& trace) {
  if (trace.word_size == 0 || (trace.word_size & (trace.word_size - 1)) != 0)
    throw TraceError("word_size must be a power of two, got " + std::to_string(trace.word_size));
  if (trace.address_bits == 0 || trace.address_bits > 64)
    throw TraceError("address_bits must be in [1,64], got " + std::to_string(trace.address_bits));

  const std::uint64_t addr_limit =
      trace.address_bits == 64 ? ~0ull : (1ull << trace.address_bits) - 1;

  std::unordered_set<std::uint64_t> defined;
  defined.reserve(trace.events.size());
  // Block-instance runs must be uninterrupted: remember finished runs.
  std::unordered_map<std::uint64_t, std::uint64_t> last_instance_of_block;
  bool have_block = false;
  std::uint64_t cur_bb = 0, cur_bbi = 0;

  for (std::size_t i = 0; i < trace.events.size(); ++i) {
    const TraceEvent& e = trace.events[i];
    const std::size_t line_no = i + 2;  // after the header line

    if (e.seq != i)
      throw TraceError("seq must be dense and 0-based: expected " + std::to_string(i) +
                           ", got " + std::to_string(e.seq),
                       line_no);

    if (e.opcode.is_memory()) {
      if (!e.mem) throw TraceError("missing mem fields on " + e.opcode.text(), line_no);
      if (!valid_access_size(e.mem->size))
        throw TraceError("access size must be in {1,2,4,8,16,32,64}, got " +
                             std::to_string(e.mem->size),
                         line_no);
      if (e.mem->address > addr_limit)
        throw TraceError("address " + hex_address(e.mem->address) + " exceeds " +
                             std::to_string(trace.address_bits) + "-bit space",
                         line_no);
      if (e.mem->address + e.mem->size - 1 < e.mem->address ||
          e.mem->address + e.mem->size - 1 > addr_limit)
        throw TraceError("access range wraps the address space", line_no);
    } else if (e.mem) {
      throw TraceError("mem on non-memory opcode " + e.opcode.text(), line_no);
    }

    for (std::uint64_t use : e.uses)
      if (!defined.count(use))
        throw TraceError("dangling use of value " + std::to_string(use), line_no);
    if (e.def) defined.insert(*e.def);

    if (!have_block || e.bb_static != cur_bb || e.bb_instance != cur_bbi) {
      auto it = last_instance_of_block.find(e.bb_static);
      if (it != last_instance_of_block.end() && e.bb_instance <= it->second)
        throw TraceError("block " + std::to_string(e.bb_static) + " instance " +
                             std::to_string(e.bb_instance) + " interleaved or repeated",
                         line_no);
      last_instance_of_block[e.bb_static] = e.bb_instance;
      cur_bb = e.bb_static;
      cur_bbi = e.bb_instance;
      have_block = true;
    }
  }
}

namespace {

TraceEvent parse_event_line(const ordered_json& j, std::size_t line_no) {
  TraceEvent e;
  try {
    e.seq = j.at("seq").get<std::uint64_t>();
    e.static_id = j.at("sid").get<std::uint64_t>();
    e.opcode = Opcode::from_text(j.at("op").get<std::string>());
    if (e.opcode.kind == OpKind::other && e.opcode.name.empty())
      throw TraceError("empty opcode name", line_no);
    if (!j.at("def").is_null()) e.def = j.at("def").get<std::uint64_t>();
    e.uses = j.at("use").get<std::vector<std::uint64_t>>();
    if (!j.at("addr").is_null()) {
      MemAccess m;
      m.address = parse_hex_address(j.at("addr").get<std::string>(), line_no);
      if (j.at("size").is_null()) throw TraceError("addr without size", line_no);
      m.size = j.at("size").get<std::uint32_t>();
      e.mem = m;
    } else if (!j.at("size").is_null()) {
      throw TraceError("size without addr", line_no);
    }
    e.bb_static = j.at("bb").get<std::uint64_t>();
    e.bb_instance = j.at("bbi").get<std::uint64_t>();
    e.index_update = j.at("idx").get<bool>();
  } catch (const ordered_json::exception& ex) {
    throw TraceError(std::string("malformed event: ") + ex.what(), line_no);
  }
  return e;
}

}  // namespace

Trace ingest(std::istream& in, const IngestOptions& options) {
  Trace trace;
  std::string line;
  std::size_t line_no = 0;
  bool saw_header = false;
  bool first_content_line = true;

  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;

    ordered_json j = ordered_json::parse(line, nullptr, false);
    if (j.is_discarded()) throw TraceError("malformed JSON", line_no);
    if (!j.is_object()) throw TraceError("expected a JSON object", line_no);

    if (first_content_line && j.contains("word_size")) {
      try {
        trace.word_size = j.at("word_size").get<std::uint32_t>();
        trace.address_bits = j.at("address_bits").get<std::uint32_t>();
      } catch (const ordered_json::exception& ex) {
        throw TraceError(std::string("malformed header: ") + ex.what(), line_no);
      }
      saw_header = true;
      first_content_line = false;
      continue;
    }
    if (first_content_line && options.require_header)
      throw TraceError("missing {\"word_size\",\"address_bits\"} header line", line_no);
    first_content_line = false;

    TraceEvent e = parse_event_line(j, line_no);
    // Report non-monotone seq against the input line rather than leaving it
    // to validate(), which no longer knows line numbers.
    if (e.seq != trace.events.size())
      throw TraceError("non-monotone or non-dense seq: expected " +
                           std::to_string(trace.events.size()) + ", got " +
                           std::to_string(e.seq),
                       line_no);
    trace.events.push_back(std::move(e));
  }
  if (options.require_header && !saw_header)
    throw TraceError("missing {\"word_size\",\"address_bits\"} header line", line_no ? line_no : 1);

  validate(trace);
  return trace;
}

Trace ingest_string(const std::string& text, const IngestOptions& options) {
  std::istringstream in(text);
  return ingest(in, options);
}

Trace ingest_file(const std::string& path, const IngestOptions& options) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::ios_base::failure("cannot open trace file: " + path);
  return ingest(in, options);
}

void serialize(const Trace& trace, std::ostream& out) {
  ordered_json header;
  header["word_size"] = trace.word_size;
  header["address_bits"] = trace.address_bits;
  out << header.dump() << '\n';

  for (const TraceEvent& e : trace.events) {
    ordered_json j;
    j["seq"] = e.seq;
    j["sid"] = e.static_id;
    j["op"] = e.opcode.text();
    if (e.def)
      j["def"] = *e.def;
    else
      j["def"] = nullptr;
    j["use"] = e.uses;
    if (e.mem) {
      j["addr"] = hex_address(e.mem->address);
      j["size"] = e.mem->size;
    } else {
      j["addr"] = nullptr;
      j["size"] = nullptr;
    }
    j["bb"] = e.bb_static;
    j["bbi"] = e.bb_instance;
    j["idx"] = e.index_update;
    out << j.dump() << '\n';
  }
}

std::string serialize(const Trace& trace) {
  std::ostringstream out;
  serialize(trace, out);
  return out.str();
}

InstanceTable block_instances(const Trace& trace) {
  InstanceTable table;
  table.instance_of.reserve(trace.events.size());
  for (const TraceEvent& e : trace.events) {
    if (table.instances.empty() || table.instances.back().bb_static != e.bb_static ||
        table.instances.back().bb_instance != e.bb_instance) {
      table.instances.push_back({e.bb_static, e.bb_instance, e.seq, e.seq});
    } else {
      table.instances.back().last_seq = e.seq;
    }
    table.instance_of.push_back(static_cast<std::uint32_t>(table.instances.size() - 1));
  }
  return table;
}

}  // namespace nmc
