// SPDX-License-Identifier: Apache-2.0

#include "nmc/dependency_graph.hpp"

#include <algorithm>
#include <map>
#include <unordered_map>

namespace nmc {

DependencyGraph::DependencyGraph(std::vector<DepEdge> edges, std::size_t num_events,
                                 bool includes_memory_deps)
    : edges_(std::move(edges)), includes_memory_deps_(includes_memory_deps) {
  std::sort(edges_.begin(), edges_.end(), [](const DepEdge& a, const DepEdge& b) {
    if (a.consumer != b.consumer) return a.consumer < b.consumer;
    if (a.producer != b.producer) return a.producer < b.producer;
    return a.kind < b.kind;
  });
  offsets_.assign(num_events + 1, 0);
  for (const DepEdge& e : edges_) ++offsets_[e.consumer + 1];
  for (std::size_t i = 1; i < offsets_.size(); ++i) offsets_[i] += offsets_[i - 1];
}

std::span<const DepEdge> DependencyGraph::incoming(std::uint64_t seq) const {
  if (seq + 1 >= offsets_.size()) return {};
  return {edges_.data() + offsets_[seq], edges_.data() + offsets_[seq + 1]};
}

std::vector<DepEdge> DependencyGraph::index_update_edges() const {
  std::vector<DepEdge> out;
  for (const DepEdge& e : edges_)
    if (e.producer_index_update) out.push_back(e);
  return out;
}

namespace {

// Live stores are pairwise disjoint byte intervals: a new store evicts every
// overlapping one. Keyed by interval start; value is (end, store seq).
struct LiveStores {
  std::map<std::uint64_t, std::pair<std::uint64_t, std::uint64_t>> intervals;

  void overlapping(std::uint64_t lo, std::uint64_t hi,
                   std::vector<std::uint64_t>& out) const {
    auto it = intervals.lower_bound(lo);
    if (it != intervals.begin()) {
      auto prev = std::prev(it);
      if (prev->second.first > lo) out.push_back(prev->second.second);
    }
    for (; it != intervals.end() && it->first < hi; ++it)
      out.push_back(it->second.second);
  }

  void insert(std::uint64_t lo, std::uint64_t hi, std::uint64_t seq) {
    auto it = intervals.lower_bound(lo);
    if (it != intervals.begin()) {
      auto prev = std::prev(it);
      if (prev->second.first > lo) it = intervals.erase(prev);
    }
    while (it != intervals.end() && it->first < hi) it = intervals.erase(it);
    intervals.emplace(lo, std::make_pair(hi, seq));
  }
};

}  // namespace

DependencyGraph build_dependency_graph(const Trace& trace, bool include_memory_deps) {
  std::vector<DepEdge> edges;
  edges.reserve(trace.events.size());

  std::unordered_map<std::uint64_t, std::uint64_t> last_def;
  last_def.reserve(trace.events.size());
  LiveStores live_stores;
  std::vector<std::uint64_t> producers;

  for (const TraceEvent& e : trace.events) {
    producers.clear();
    for (std::uint64_t use : e.uses) producers.push_back(last_def.at(use));
    std::sort(producers.begin(), producers.end());
    producers.erase(std::unique(producers.begin(), producers.end()), producers.end());
    for (std::uint64_t p : producers)
      edges.push_back({p, e.seq, DepKind::value, trace.events[p].index_update});

    if (include_memory_deps && e.mem) {
      const std::uint64_t lo = e.mem->address;
      const std::uint64_t hi = e.mem->address + e.mem->size;
      if (e.opcode.kind == OpKind::load) {
        producers.clear();
        live_stores.overlapping(lo, hi, producers);
        std::sort(producers.begin(), producers.end());
        for (std::uint64_t p : producers)
          edges.push_back({p, e.seq, DepKind::memory, trace.events[p].index_update});
      } else {
        live_stores.insert(lo, hi, e.seq);
      }
    }

    if (e.def) last_def[*e.def] = e.seq;
  }

  return DependencyGraph(std::move(edges), trace.events.size(), include_memory_deps);
}

Trace tag_index_updates(Trace trace) {
  const std::size_t n = trace.events.size();
  // candidate[i] stays true while every dynamic consumer of event i's value
  // is a cmp, a branch, or a later instance of the same static instruction.
  std::vector<char> candidate(n, 1);
  std::unordered_map<std::uint64_t, std::uint64_t> last_def;
  last_def.reserve(n);

  for (const TraceEvent& e : trace.events) {
    for (std::uint64_t use : e.uses) {
      const std::uint64_t p = last_def.at(use);
      if (!candidate[p]) continue;
      const bool ok = e.opcode.kind == OpKind::cmp || e.opcode.kind == OpKind::branch ||
                      e.static_id == trace.events[p].static_id;
      if (!ok) candidate[p] = 0;
    }
    if (e.def) last_def[*e.def] = e.seq;
  }

  for (TraceEvent& e : trace.events) {
    if (e.opcode.kind != OpKind::add && e.opcode.kind != OpKind::sub) continue;
    if (candidate[e.seq]) e.index_update = true;
  }
  return trace;
}

bool has_index_flags(const Trace& trace) {
  for (const TraceEvent& e : trace.events)
    if (e.index_update) return true;
  return false;
}

}  // namespace nmc
