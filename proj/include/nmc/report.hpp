// SPDX-License-Identifier: Apache-2.0
//
// End-to-end analysis driver and report serialization. A MetricsReport
// bundles everything the engine computes over one trace; it serializes
// to stable JSON (byte-identical for identical inputs) and to flat
// metric,parameter,value CSV rows.

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "nmc/memory_metrics.hpp"
#include "nmc/parallelism_metrics.hpp"
#include "nmc/trace.hpp"

namespace nmc {

struct AnalyzeConfig {
  std::optional<std::uint64_t> word_size_override;
  std::uint64_t max_line_size = 64;
  unsigned entropy_lsb_max = 16;
  bool memory_deps = false;
};

struct TraceMeta {
  std::uint64_t event_count = 0;
  std::uint64_t memory_access_count = 0;
  std::uint64_t distinct_addresses = 0;
  std::uint64_t block_count = 0;
  std::uint64_t word_size = 0;
  unsigned address_bits = 0;
};

// The parameters a run actually used, echoed into the report.
struct ConfigEcho {
  std::uint64_t word_size = 0;
  std::uint64_t max_line_size = 0;
  unsigned entropy_lsb_max = 0;
  bool memory_deps = false;
};

struct MetricsReport {
  int schema_version = 1;
  TraceMeta meta;
  ConfigEcho config;
  std::optional<EntropyReport> entropy;
  std::vector<ReuseSignature> signatures;  // line sizes word_size..max_line
  std::optional<SpatialLocalityReport> spatial;
  ParallelismReport parallelism;
  // Reason per null metric, keyed by the metric's report name.
  std::map<std::string, std::string> undefined_reasons;
};

// Full pipeline: optional word-size override, index tagging when the
// trace carries no flags, dependency graph, every metric. Throws
// std::invalid_argument on unusable config values.
MetricsReport analyze(Trace trace, const AnalyzeConfig& config);
MetricsReport analyze_file(const std::string& path, const AnalyzeConfig& config);

// Same pipeline wired to the brute-force reference implementations.
MetricsReport oracle_analyze(Trace trace, const AnalyzeConfig& config);

std::string emit_json(const MetricsReport& report);
std::string emit_csv(const MetricsReport& report);

// Parses emit_json output back; emit_json(report_from_json(s)) == s.
MetricsReport report_from_json(std::string_view json_text);

}  // namespace nmc
