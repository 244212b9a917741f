// SPDX-License-Identifier: Apache-2.0

#include "nmc/report.hpp"

#include <algorithm>
#include <stdexcept>
#include <utility>

#include <json.hpp>

#include "nmc/dependency_graph.hpp"
#include "nmc/oracles.hpp"

namespace nmc {

namespace {

using ordered_json = nlohmann::ordered_json;

constexpr char kNoMemoryAccesses[] = "trace has no memory accesses";
constexpr char kEmptyTrace[] = "trace is empty";
constexpr char kNoEligibleBlocks[] = "no eligible blocks";

void apply_config(Trace& trace, const AnalyzeConfig& config) {
  if (config.word_size_override) {
    const std::uint64_t w = *config.word_size_override;
    if (w == 0 || (w & (w - 1)) != 0 || w > (std::uint64_t{1} << 31))
      throw std::invalid_argument("word size must be a power of two");
    trace.word_size = static_cast<std::uint32_t>(w);
  }
  if (config.max_line_size == 0 ||
      (config.max_line_size & (config.max_line_size - 1)) != 0)
    throw std::invalid_argument("max line size must be a power of two");
  if (config.max_line_size <= trace.word_size)
    throw std::invalid_argument("max line size must exceed the word size");
}

TraceMeta meta_of(const Trace& trace) {
  TraceMeta meta;
  meta.event_count = trace.events.size();
  meta.word_size = trace.word_size;
  meta.address_bits = trace.address_bits;
  std::vector<std::uint64_t> addrs;
  std::vector<std::uint64_t> blocks;
  for (const TraceEvent& e : trace.events) {
    if (e.mem) addrs.push_back(e.mem->address);
    blocks.push_back(e.bb_static);
  }
  meta.memory_access_count = addrs.size();
  std::sort(addrs.begin(), addrs.end());
  meta.distinct_addresses =
      std::unique(addrs.begin(), addrs.end()) - addrs.begin();
  std::sort(blocks.begin(), blocks.end());
  meta.block_count = std::unique(blocks.begin(), blocks.end()) - blocks.begin();
  return meta;
}

void note_parallelism_nulls(MetricsReport& report) {
  const ParallelismReport& p = report.parallelism;
  for (const auto& [name, value] :
       {std::pair<const char*, const std::optional<double>*>{"ilp_total", &p.ilp_total},
        {"dlp1", &p.dlp1},
        {"dlp2", &p.dlp2},
        {"bblp_real", &p.bblp_real},
        {"bblp_smart", &p.bblp_smart}}) {
    if (!value->has_value()) report.undefined_reasons[name] = kEmptyTrace;
  }
  if (!p.pbblp_average)
    report.undefined_reasons["pbblp"] = kNoEligibleBlocks;
}

// Shared shape of the engine and oracle pipelines; `use_oracle` picks the
// implementations that have brute-force counterparts.
MetricsReport run_pipeline(Trace trace, const AnalyzeConfig& config,
                           bool use_oracle) {
  apply_config(trace, config);
  if (!has_index_flags(trace)) trace = tag_index_updates(std::move(trace));

  MetricsReport report;
  report.meta = meta_of(trace);
  report.config = {trace.word_size, config.max_line_size, config.entropy_lsb_max,
                   config.memory_deps};

  const unsigned k_max =
      std::min(config.entropy_lsb_max, trace.address_bits - 1);
  if (use_oracle) {
    if (report.meta.memory_access_count > 0) {
      EntropyReport sweep;
      for (unsigned k = 0; k <= k_max; ++k)
        sweep.per_lsb_cut.push_back({k, *oracle::entropy(trace, k)});
      sweep.distinct_addresses = report.meta.distinct_addresses;
      report.entropy = std::move(sweep);
    }
  } else {
    report.entropy = entropy_sweep(trace, k_max);
  }
  if (!report.entropy)
    report.undefined_reasons["memory_entropy"] = kNoMemoryAccesses;

  for (std::uint64_t b = trace.word_size; b <= config.max_line_size; b *= 2)
    report.signatures.push_back(use_oracle ? oracle::signature(trace, b)
                                           : reuse_signature(trace, b));

  report.spatial = use_oracle ? oracle::slq_report(trace, config.max_line_size)
                              : spatial_locality(trace, config.max_line_size);
  if (!report.spatial)
    report.undefined_reasons["spatial_locality"] = kNoMemoryAccesses;

  const DependencyGraph deps = build_dependency_graph(trace, config.memory_deps);
  if (use_oracle) {
    ParallelismReport& p = report.parallelism;
    const ScheduleResult ideal =
        oracle::schedule(trace, deps, ScheduleRegime::ideal_ilp);
    p.ilp_total = ilp_total(ideal, trace);
    for (const TraceEvent& e : trace.events)
      if (!p.ilp_specialized.count(e.opcode))
        p.ilp_specialized[e.opcode] = *ilp_specialized(ideal, trace, e.opcode);
    p.dlp1 = dlp(ideal, trace, false);
    p.dlp2 = dlp(ideal, trace, true);
    p.bblp_real =
        bblp(oracle::schedule(trace, deps, ScheduleRegime::bblp_real), trace);
    p.bblp_smart =
        bblp(oracle::schedule(trace, deps, ScheduleRegime::bblp_smart), trace);
    PbblpResult blocks = oracle::pbblp(trace, deps);
    p.pbblp_average = blocks.average;
    p.per_block_pbblp = std::move(blocks.per_block);
  } else {
    report.parallelism = parallelism_report(trace, deps);
  }
  note_parallelism_nulls(report);
  return report;
}

ordered_json json_optional(const std::optional<double>& value) {
  if (!value) return nullptr;
  return *value;
}

ordered_json json_signature(const ReuseSignature& sig) {
  ordered_json bins = ordered_json::array();
  for (const ReuseBin& bin : sig.bins)
    bins.push_back({{"lower", bin.lower},
                    {"upper", bin.upper},
                    {"probability", bin.probability}});
  return {{"line_size", sig.line_size},
          {"access_count", sig.access_count},
          {"cold_fraction", sig.cold_fraction},
          {"bins", std::move(bins)}};
}

ReuseSignature signature_from_json(const ordered_json& j) {
  ReuseSignature sig;
  sig.line_size = j.at("line_size").get<std::uint64_t>();
  sig.access_count = j.at("access_count").get<std::uint64_t>();
  sig.cold_fraction = j.at("cold_fraction").get<double>();
  for (const ordered_json& bin : j.at("bins"))
    sig.bins.push_back({bin.at("lower").get<std::uint64_t>(),
                        bin.at("upper").get<std::uint64_t>(),
                        bin.at("probability").get<double>()});
  return sig;
}

// Deterministic shortest round-trip text for CSV cells.
std::string number_text(double value) { return ordered_json(value).dump(); }

void csv_row(std::string& out, std::string_view metric, std::string_view parameter,
             std::string_view value) {
  out.append(metric);
  out.push_back(',');
  out.append(parameter);
  out.push_back(',');
  out.append(value);
  out.push_back('\n');
}

void csv_optional(std::string& out, const MetricsReport& report,
                  std::string_view metric, const std::optional<double>& value) {
  if (value) {
    csv_row(out, metric, "", number_text(*value));
  } else {
    auto it = report.undefined_reasons.find(std::string(metric));
    std::string cell = "undefined";
    if (it != report.undefined_reasons.end()) cell += ": " + it->second;
    csv_row(out, metric, "", cell);
  }
}

}  // namespace

MetricsReport analyze(Trace trace, const AnalyzeConfig& config) {
  return run_pipeline(std::move(trace), config, false);
}

MetricsReport analyze_file(const std::string& path, const AnalyzeConfig& config) {
  return analyze(ingest_file(path), config);
}

MetricsReport oracle_analyze(Trace trace, const AnalyzeConfig& config) {
  return run_pipeline(std::move(trace), config, true);
}

std::string emit_json(const MetricsReport& report) {
  ordered_json j;
  j["schema_version"] = report.schema_version;
  j["trace"] = {{"event_count", report.meta.event_count},
                {"memory_access_count", report.meta.memory_access_count},
                {"distinct_addresses", report.meta.distinct_addresses},
                {"block_count", report.meta.block_count},
                {"word_size", report.meta.word_size},
                {"address_bits", report.meta.address_bits}};
  j["config"] = {{"word_size", report.config.word_size},
                 {"max_line_size", report.config.max_line_size},
                 {"entropy_lsb_max", report.config.entropy_lsb_max},
                 {"memory_deps", report.config.memory_deps}};

  ordered_json metrics;
  if (report.entropy) {
    ordered_json sweep = ordered_json::array();
    for (const EntropyPoint& point : report.entropy->per_lsb_cut)
      sweep.push_back({{"k", point.lsb_cut}, {"entropy", point.entropy}});
    metrics["memory_entropy"] = {
        {"distinct_addresses", report.entropy->distinct_addresses},
        {"per_lsb_cut", std::move(sweep)}};
  } else {
    metrics["memory_entropy"] = nullptr;
  }

  ordered_json signatures = ordered_json::array();
  for (const ReuseSignature& sig : report.signatures)
    signatures.push_back(json_signature(sig));
  metrics["reuse_signatures"] = std::move(signatures);

  if (report.spatial) {
    ordered_json pairs = ordered_json::array();
    for (const SpatialPairScore& pair : report.spatial->per_pair)
      pairs.push_back({{"line_size", pair.line_size}, {"score", pair.score}});
    metrics["spatial_locality"] = {{"total", report.spatial->total},
                                   {"per_pair", std::move(pairs)}};
  } else {
    metrics["spatial_locality"] = nullptr;
  }

  const ParallelismReport& p = report.parallelism;
  ordered_json specialized = ordered_json::object();
  for (const auto& [opcode, score] : p.ilp_specialized)
    specialized[opcode.text()] = score;
  ordered_json per_block = ordered_json::object();
  for (const auto& [block, score] : p.per_block_pbblp)
    per_block[std::to_string(block)] = score;
  metrics["parallelism"] = {{"ilp_total", json_optional(p.ilp_total)},
                            {"ilp_specialized", std::move(specialized)},
                            {"dlp1", json_optional(p.dlp1)},
                            {"dlp2", json_optional(p.dlp2)},
                            {"bblp_real", json_optional(p.bblp_real)},
                            {"bblp_smart", json_optional(p.bblp_smart)},
                            {"pbblp", json_optional(p.pbblp_average)},
                            {"pbblp_per_block", std::move(per_block)}};
  j["metrics"] = std::move(metrics);

  ordered_json reasons = ordered_json::object();
  for (const auto& [metric, reason] : report.undefined_reasons)
    reasons[metric] = reason;
  j["undefined"] = std::move(reasons);

  return j.dump(2) + "\n";
}

MetricsReport report_from_json(std::string_view json_text) {
  const ordered_json j = ordered_json::parse(json_text);
  MetricsReport report;
  report.schema_version = j.at("schema_version").get<int>();

  const ordered_json& trace = j.at("trace");
  report.meta.event_count = trace.at("event_count").get<std::uint64_t>();
  report.meta.memory_access_count =
      trace.at("memory_access_count").get<std::uint64_t>();
  report.meta.distinct_addresses =
      trace.at("distinct_addresses").get<std::uint64_t>();
  report.meta.block_count = trace.at("block_count").get<std::uint64_t>();
  report.meta.word_size = trace.at("word_size").get<std::uint64_t>();
  report.meta.address_bits = trace.at("address_bits").get<unsigned>();

  const ordered_json& config = j.at("config");
  report.config.word_size = config.at("word_size").get<std::uint64_t>();
  report.config.max_line_size = config.at("max_line_size").get<std::uint64_t>();
  report.config.entropy_lsb_max = config.at("entropy_lsb_max").get<unsigned>();
  report.config.memory_deps = config.at("memory_deps").get<bool>();

  const ordered_json& metrics = j.at("metrics");
  const ordered_json& entropy = metrics.at("memory_entropy");
  if (!entropy.is_null()) {
    EntropyReport sweep;
    sweep.distinct_addresses = entropy.at("distinct_addresses").get<std::uint64_t>();
    for (const ordered_json& point : entropy.at("per_lsb_cut"))
      sweep.per_lsb_cut.push_back(
          {point.at("k").get<unsigned>(), point.at("entropy").get<double>()});
    report.entropy = std::move(sweep);
  }

  for (const ordered_json& sig : metrics.at("reuse_signatures"))
    report.signatures.push_back(signature_from_json(sig));

  const ordered_json& spatial = metrics.at("spatial_locality");
  if (!spatial.is_null()) {
    SpatialLocalityReport sl;
    sl.total = spatial.at("total").get<double>();
    for (const ordered_json& pair : spatial.at("per_pair"))
      sl.per_pair.push_back({pair.at("line_size").get<std::uint64_t>(),
                             pair.at("score").get<double>()});
    report.spatial = std::move(sl);
  }

  const ordered_json& parallelism = metrics.at("parallelism");
  auto opt = [](const ordered_json& v) -> std::optional<double> {
    if (v.is_null()) return std::nullopt;
    return v.get<double>();
  };
  report.parallelism.ilp_total = opt(parallelism.at("ilp_total"));
  for (const auto& [name, score] : parallelism.at("ilp_specialized").items())
    report.parallelism.ilp_specialized[Opcode::from_text(name)] =
        score.get<double>();
  report.parallelism.dlp1 = opt(parallelism.at("dlp1"));
  report.parallelism.dlp2 = opt(parallelism.at("dlp2"));
  report.parallelism.bblp_real = opt(parallelism.at("bblp_real"));
  report.parallelism.bblp_smart = opt(parallelism.at("bblp_smart"));
  report.parallelism.pbblp_average = opt(parallelism.at("pbblp"));
  for (const auto& [block, score] : parallelism.at("pbblp_per_block").items())
    report.parallelism.per_block_pbblp[std::stoull(block)] = score.get<double>();

  for (const auto& [metric, reason] : j.at("undefined").items())
    report.undefined_reasons[metric] = reason.get<std::string>();
  return report;
}

std::string emit_csv(const MetricsReport& report) {
  std::string out = "metric,parameter,value\n";
  csv_row(out, "event_count", "", std::to_string(report.meta.event_count));
  csv_row(out, "memory_access_count", "",
          std::to_string(report.meta.memory_access_count));
  csv_row(out, "distinct_addresses", "",
          std::to_string(report.meta.distinct_addresses));
  csv_row(out, "block_count", "", std::to_string(report.meta.block_count));

  if (report.entropy) {
    for (const EntropyPoint& point : report.entropy->per_lsb_cut)
      csv_row(out, "memory_entropy", "k=" + std::to_string(point.lsb_cut),
              number_text(point.entropy));
  } else {
    csv_row(out, "memory_entropy", "",
            "undefined: " + report.undefined_reasons.at("memory_entropy"));
  }

  for (const ReuseSignature& sig : report.signatures) {
    const std::string prefix = "b=" + std::to_string(sig.line_size);
    csv_row(out, "reuse_signature", prefix + " cold",
            number_text(sig.cold_fraction));
    for (std::size_t b = 0; b < sig.bins.size(); ++b)
      csv_row(out, "reuse_signature", prefix + " bin=" + std::to_string(b),
              number_text(sig.bins[b].probability));
  }

  if (report.spatial) {
    for (const SpatialPairScore& pair : report.spatial->per_pair)
      csv_row(out, "spatial_locality",
              "pair=" + std::to_string(pair.line_size) + ":" +
                  std::to_string(2 * pair.line_size),
              number_text(pair.score));
    csv_row(out, "spatial_locality", "total", number_text(report.spatial->total));
  } else {
    csv_row(out, "spatial_locality", "",
            "undefined: " + report.undefined_reasons.at("spatial_locality"));
  }

  const ParallelismReport& p = report.parallelism;
  csv_optional(out, report, "ilp_total", p.ilp_total);
  for (const auto& [opcode, score] : p.ilp_specialized)
    csv_row(out, "ilp_specialized", opcode.text(), number_text(score));
  csv_optional(out, report, "dlp1", p.dlp1);
  csv_optional(out, report, "dlp2", p.dlp2);
  csv_optional(out, report, "bblp_real", p.bblp_real);
  csv_optional(out, report, "bblp_smart", p.bblp_smart);
  csv_optional(out, report, "pbblp", p.pbblp_average);
  for (const auto& [block, score] : p.per_block_pbblp)
    csv_row(out, "pbblp_per_block", "bb=" + std::to_string(block),
            number_text(score));
  return out;
}

}  // namespace nmc
