// SPDX-License-Identifier: Apache-2.0

#include "nmc/parallelism_metrics.hpp"

#include <algorithm>
#include <stdexcept>

namespace nmc {

namespace {

std::uint64_t max_cycle(const std::vector<std::uint64_t>& cycles) {
  std::uint64_t m = 0;
  for (std::uint64_t c : cycles) m = std::max(m, c);
  return m;
}

}  // namespace

ScheduleResult schedule_ideal(const Trace& trace, const DependencyGraph& deps) {
  ScheduleResult result;
  result.regime = ScheduleRegime::ideal_ilp;
  result.issue_cycle.resize(trace.events.size());
  for (const TraceEvent& e : trace.events) {
    std::uint64_t cycle = 1;
    for (const DepEdge& edge : deps.incoming(e.seq))
      cycle = std::max(cycle, result.issue_cycle[edge.producer] + 1);
    result.issue_cycle[e.seq] = cycle;
  }
  result.max_issue_cycle = max_cycle(result.issue_cycle);
  return result;
}

ScheduleResult schedule_bblp(const Trace& trace, const DependencyGraph& deps,
                             bool smart) {
  ScheduleResult result;
  result.regime = smart ? ScheduleRegime::bblp_smart : ScheduleRegime::bblp_real;
  result.issue_cycle.resize(trace.events.size());

  const InstanceTable table = block_instances(trace);
  std::vector<std::uint64_t> finish(table.instances.size(), 0);

  for (std::size_t u = 0; u < table.instances.size(); ++u) {
    const BlockInstance& inst = table.instances[u];
    std::uint64_t start = 1;
    for (std::uint64_t seq = inst.first_seq; seq <= inst.last_seq; ++seq) {
      for (const DepEdge& edge : deps.incoming(seq)) {
        if (smart && edge.producer_index_update) continue;
        const std::size_t v = table.instance_of[edge.producer];
        // Producer instances other than u finished before u's run begins.
        if (v != u) start = std::max(start, finish[v] + 1);
      }
    }
    finish[u] = start + inst.size() - 1;
    for (std::uint64_t seq = inst.first_seq; seq <= inst.last_seq; ++seq)
      result.issue_cycle[seq] = start + (seq - inst.first_seq);
  }
  result.max_issue_cycle = max_cycle(result.issue_cycle);
  return result;
}

std::optional<double> ilp_total(const ScheduleResult& sched, const Trace& trace) {
  if (sched.regime != ScheduleRegime::ideal_ilp)
    throw std::invalid_argument("ilp_total requires an ideal schedule");
  if (trace.events.empty()) return std::nullopt;
  return static_cast<double>(trace.events.size()) /
         static_cast<double>(sched.max_issue_cycle);
}

std::optional<double> ilp_specialized(const ScheduleResult& sched, const Trace& trace,
                                      const Opcode& opcode) {
  if (sched.regime != ScheduleRegime::ideal_ilp)
    throw std::invalid_argument("ilp_specialized requires an ideal schedule");
  std::vector<std::uint64_t> cycles;
  for (const TraceEvent& e : trace.events)
    if (e.opcode == opcode) cycles.push_back(sched.issue_cycle[e.seq]);
  if (cycles.empty()) return std::nullopt;
  const double n = static_cast<double>(cycles.size());
  std::sort(cycles.begin(), cycles.end());
  cycles.erase(std::unique(cycles.begin(), cycles.end()), cycles.end());
  return n / static_cast<double>(cycles.size());
}

std::optional<double> dlp(const ScheduleResult& sched, const Trace& trace,
                          bool consecutiveness) {
  if (sched.regime != ScheduleRegime::ideal_ilp)
    throw std::invalid_argument("dlp requires an ideal schedule");
  if (trace.events.empty()) return std::nullopt;

  struct PerOpcode {
    std::uint64_t count = 0;
    std::vector<std::uint64_t> cycles;
    // (cycle, address, size) per memory access; only filled for load/store
    // when run partitioning is requested.
    std::vector<std::tuple<std::uint64_t, std::uint64_t, std::uint64_t>> accesses;
  };
  std::map<Opcode, PerOpcode> groups;

  for (const TraceEvent& e : trace.events) {
    PerOpcode& g = groups[e.opcode];
    ++g.count;
    g.cycles.push_back(sched.issue_cycle[e.seq]);
    if (consecutiveness && e.mem)
      g.accesses.emplace_back(sched.issue_cycle[e.seq], e.mem->address, e.mem->size);
  }

  double weighted = 0.0;
  const double total = static_cast<double>(trace.events.size());
  for (auto& [opcode, g] : groups) {
    double denom;
    if (consecutiveness && opcode.is_memory()) {
      // Per cycle, count maximal runs where each address continues the
      // previous access (predecessor address + predecessor size).
      auto& acc = g.accesses;
      std::sort(acc.begin(), acc.end());
      std::uint64_t runs = 0;
      for (std::size_t i = 0; i < acc.size(); ++i) {
        if (i == 0 || std::get<0>(acc[i]) != std::get<0>(acc[i - 1]) ||
            std::get<1>(acc[i]) !=
                std::get<1>(acc[i - 1]) + std::get<2>(acc[i - 1]))
          ++runs;
      }
      denom = static_cast<double>(runs);
    } else {
      std::sort(g.cycles.begin(), g.cycles.end());
      g.cycles.erase(std::unique(g.cycles.begin(), g.cycles.end()), g.cycles.end());
      denom = static_cast<double>(g.cycles.size());
    }
    const double ilp_op = static_cast<double>(g.count) / denom;
    weighted += ilp_op * (static_cast<double>(g.count) / total);
  }
  return weighted;
}

std::optional<double> bblp(const ScheduleResult& sched, const Trace& trace) {
  if (sched.regime == ScheduleRegime::ideal_ilp)
    throw std::invalid_argument("bblp requires a block schedule");
  if (trace.events.empty()) return std::nullopt;
  return static_cast<double>(trace.events.size()) /
         static_cast<double>(sched.max_issue_cycle);
}

namespace {

// Longest chain of `block`'s instances linked by honored dependencies,
// found by one forward pass. g[e] carries the best chain length whose
// last instance has a dependency path reaching event e; H[u] is the best
// chain ending at instance u, complete once u's run has been scanned
// (instances are contiguous, so producers in other instances are final).
std::uint64_t longest_instance_chain(const Trace& trace, const DependencyGraph& deps,
                                     const InstanceTable& table,
                                     std::uint64_t block) {
  const std::size_t n = trace.events.size();
  std::vector<std::uint64_t> g(n, 0);
  std::vector<std::uint64_t> chain_at(table.instances.size(), 0);
  std::uint64_t best = 0;

  for (std::uint64_t seq = 0; seq < n; ++seq) {
    const std::size_t u = table.instance_of[seq];
    const bool in_block = table.instances[u].bb_static == block;
    std::uint64_t value = in_block ? 1 : 0;
    for (const DepEdge& edge : deps.incoming(seq)) {
      if (edge.producer_index_update) continue;
      const std::size_t v = table.instance_of[edge.producer];
      const bool producer_in_block = table.instances[v].bb_static == block;
      std::uint64_t carried =
          producer_in_block && v != u ? chain_at[v] : g[edge.producer];
      if (in_block && v != u) ++carried;
      value = std::max(value, carried);
    }
    g[seq] = value;
    if (in_block) {
      chain_at[u] = std::max(chain_at[u], value);
      best = std::max(best, chain_at[u]);
    }
  }
  return best;
}

}  // namespace

PbblpResult pbblp(const Trace& trace, const DependencyGraph& deps) {
  PbblpResult result;
  const InstanceTable table = block_instances(trace);

  // Instance counts per static block, and eligibility: a block whose
  // events are all index updates, compares, or branches is bookkeeping
  // only and does not get scored.
  std::map<std::uint64_t, std::uint64_t> instance_count;
  std::map<std::uint64_t, bool> eligible;
  for (const BlockInstance& inst : table.instances) ++instance_count[inst.bb_static];
  for (const TraceEvent& e : trace.events) {
    const bool bookkeeping = e.index_update || e.opcode.kind == OpKind::cmp ||
                             e.opcode.kind == OpKind::branch;
    auto [it, _] = eligible.try_emplace(e.bb_static, false);
    if (!bookkeeping) it->second = true;
  }

  double weighted = 0.0;
  std::uint64_t total_instances = 0;
  for (const auto& [block, count] : instance_count) {
    if (!eligible[block]) continue;
    const std::uint64_t chain = longest_instance_chain(trace, deps, table, block);
    const double score = static_cast<double>(count) / static_cast<double>(chain);
    result.per_block[block] = score;
    weighted += score * static_cast<double>(count);
    total_instances += count;
  }
  if (total_instances > 0)
    result.average = weighted / static_cast<double>(total_instances);
  return result;
}

ParallelismReport parallelism_report(const Trace& trace, const DependencyGraph& deps) {
  ParallelismReport report;
  const ScheduleResult ideal = schedule_ideal(trace, deps);
  report.ilp_total = ilp_total(ideal, trace);
  for (const TraceEvent& e : trace.events) {
    if (report.ilp_specialized.count(e.opcode)) continue;
    report.ilp_specialized[e.opcode] = *ilp_specialized(ideal, trace, e.opcode);
  }
  report.dlp1 = dlp(ideal, trace, false);
  report.dlp2 = dlp(ideal, trace, true);
  report.bblp_real = bblp(schedule_bblp(trace, deps, false), trace);
  report.bblp_smart = bblp(schedule_bblp(trace, deps, true), trace);
  PbblpResult blocks = pbblp(trace, deps);
  report.pbblp_average = blocks.average;
  report.per_block_pbblp = std::move(blocks.per_block);
  return report;
}

}  // namespace nmc
