// SPDX-License-Identifier: Apache-2.0
//
// Brute-force reference implementations used to cross-check the engine on
// small traces. Deliberately quadratic and structured differently from
// the main code paths; they share only the trace and result types.

#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "nmc/dependency_graph.hpp"
#include "nmc/memory_metrics.hpp"
#include "nmc/parallelism_metrics.hpp"
#include "nmc/trace.hpp"

namespace nmc::oracle {

// Backward-scan reuse distances; kColdDistance on first touch. O(n^2).
std::vector<std::uint64_t> reuse_distances(const Trace& trace,
                                           std::uint64_t line_size);

// Frequency-table entropy of (address >> lsb_cut) over memory accesses.
std::optional<double> entropy(const Trace& trace, unsigned lsb_cut);

ReuseSignature signature(const Trace& trace, std::uint64_t line_size);

// Repeated-relaxation scheduler covering all three regimes.
ScheduleResult schedule(const Trace& trace, const DependencyGraph& deps,
                        ScheduleRegime regime);

std::optional<SpatialLocalityReport> slq_report(const Trace& trace,
                                                std::uint64_t max_line_size);
std::optional<double> slq(const Trace& trace, std::uint64_t max_line_size);

// Explicit instance-DAG longest-path PBBLP.
PbblpResult pbblp(const Trace& trace, const DependencyGraph& deps);

}  // namespace nmc::oracle
