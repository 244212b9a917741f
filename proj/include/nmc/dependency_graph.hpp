// SPDX-License-Identifier: Apache-2.0
//
// Forward dependency DAG over trace events: dynamic def->use value edges
// plus optional store->load memory edges. All schedulers run off this.

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "nmc/trace.hpp"

namespace nmc {

enum class DepKind : std::uint8_t { value, memory };

struct DepEdge {
  std::uint64_t producer = 0;  // event seq, always < consumer
  std::uint64_t consumer = 0;
  DepKind kind = DepKind::value;
  // Snapshot of the producer's index_update flag at build time; the smart
  // schedulers skip edges with this set.
  bool producer_index_update = false;

  friend bool operator==(const DepEdge&, const DepEdge&) = default;
};

class DependencyGraph {
 public:
  DependencyGraph() = default;
  DependencyGraph(std::vector<DepEdge> edges, std::size_t num_events,
                  bool includes_memory_deps);

  const std::vector<DepEdge>& edges() const { return edges_; }
  // Edges whose consumer is `seq`, ordered by producer.
  std::span<const DepEdge> incoming(std::uint64_t seq) const;
  bool includes_memory_deps() const { return includes_memory_deps_; }

  std::vector<DepEdge> index_update_edges() const;

 private:
  std::vector<DepEdge> edges_;        // sorted by (consumer, producer, kind)
  std::vector<std::size_t> offsets_;  // CSR offsets by consumer, size n+1
  bool includes_memory_deps_ = false;
};

// Value edge per (most recent def, use) pair. With include_memory_deps,
// adds one edge from each store to every later load overlapping its byte
// range, cut off at the next store that overlaps it.
DependencyGraph build_dependency_graph(const Trace& trace, bool include_memory_deps);

// Heuristic fallback for traces whose producer set no index_update flags:
// marks add/sub events whose value feeds only compares, branches, or later
// dynamic instances of the same static instruction. Existing flags are
// preserved; the operation is idempotent.
Trace tag_index_updates(Trace trace);

// True if any event already carries an index_update flag.
bool has_index_flags(const Trace& trace);

}  // namespace nmc
