// SPDX-License-Identifier: Apache-2.0
//
// Schedules over the dependency DAG and the derived parallelism scores:
// total and per-opcode ILP, DLP with and without address consecutiveness,
// block-level BBLP under real/smart scheduling, and per-block PBBLP.

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <vector>

#include "nmc/dependency_graph.hpp"
#include "nmc/trace.hpp"

namespace nmc {

enum class ScheduleRegime : std::uint8_t { ideal_ilp, bblp_real, bblp_smart };

struct ScheduleResult {
  ScheduleRegime regime = ScheduleRegime::ideal_ilp;
  std::vector<std::uint64_t> issue_cycle;  // per event seq, 1-based
  std::uint64_t max_issue_cycle = 0;       // 0 only for an empty trace
};

// As-soon-as-possible schedule: unit latency, unbounded issue width,
// every edge of the graph honored.
ScheduleResult schedule_ideal(const Trace& trace, const DependencyGraph& deps);

// Block-instance scheduling: each instance runs sequentially, one event
// per cycle; an instance starts the cycle after the latest finish of the
// instances it depends on. With smart = true, edges produced by
// index_update events are ignored when linking instances.
ScheduleResult schedule_bblp(const Trace& trace, const DependencyGraph& deps,
                             bool smart);

// Event count / makespan. Requires the ideal_ilp regime.
std::optional<double> ilp_total(const ScheduleResult& sched, const Trace& trace);

// N_opcode / number of distinct cycles occupied by that opcode, under the
// ideal schedule. Nullopt when the opcode never occurs.
std::optional<double> ilp_specialized(const ScheduleResult& sched, const Trace& trace,
                                      const Opcode& opcode);

// Opcode-frequency-weighted sum of specialized ILP. With consecutiveness,
// load/store denominators count maximal address-consecutive runs per cycle
// instead of whole cycles.
std::optional<double> dlp(const ScheduleResult& sched, const Trace& trace,
                          bool consecutiveness);

// Event count / makespan under a bblp_* regime.
std::optional<double> bblp(const ScheduleResult& sched, const Trace& trace);

struct PbblpResult {
  std::map<std::uint64_t, double> per_block;  // static block id -> score
  std::optional<double> average;              // instance-count weighted
};

// Per static block: instance count divided by the longest chain of
// instances linked by non-index-update dependencies (directly or through
// events of other blocks). Blocks consisting solely of index updates,
// compares, and branches are excluded.
PbblpResult pbblp(const Trace& trace, const DependencyGraph& deps);

struct ParallelismReport {
  std::optional<double> ilp_total;
  std::map<Opcode, double> ilp_specialized;  // only opcodes that occur
  std::optional<double> dlp1;
  std::optional<double> dlp2;
  std::optional<double> bblp_real;
  std::optional<double> bblp_smart;
  std::optional<double> pbblp_average;
  std::map<std::uint64_t, double> per_block_pbblp;
};

// Runs all three schedules and assembles every parallelism score.
ParallelismReport parallelism_report(const Trace& trace, const DependencyGraph& deps);

}  // namespace nmc
