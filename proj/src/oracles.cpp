// SPDX-License-Identifier: Apache-2.0

#include "nmc/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <unordered_map>
#include <unordered_set>

namespace nmc::oracle {

namespace {

std::vector<std::uint64_t> collect_addresses(const Trace& trace) {
  std::vector<std::uint64_t> out;
  for (const TraceEvent& e : trace.events)
    if (e.mem) out.push_back(e.mem->address);
  return out;
}

// Bin index by repeated halving: 0 for distance 0, otherwise one past the
// position of the highest set bit.
std::size_t bin_index(std::uint64_t distance) {
  std::size_t bin = 0;
  while (distance != 0) {
    distance >>= 1;
    ++bin;
  }
  return bin;
}

struct Run {
  std::uint64_t block = 0;
  std::uint64_t first = 0;
  std::uint64_t last = 0;
};

// Block-instance runs rebuilt from scratch (no engine helpers).
std::vector<Run> instance_runs(const Trace& trace) {
  std::vector<Run> runs;
  for (const TraceEvent& e : trace.events) {
    if (runs.empty() || runs.back().block != e.bb_static ||
        trace.events[runs.back().first].bb_instance != e.bb_instance) {
      runs.push_back({e.bb_static, e.seq, e.seq});
    } else {
      runs.back().last = e.seq;
    }
  }
  return runs;
}

std::vector<std::size_t> run_of_event(const Trace& trace,
                                      const std::vector<Run>& runs) {
  std::vector<std::size_t> owner(trace.events.size());
  for (std::size_t r = 0; r < runs.size(); ++r)
    for (std::uint64_t seq = runs[r].first; seq <= runs[r].last; ++seq)
      owner[seq] = r;
  return owner;
}

}  // namespace

std::vector<std::uint64_t> reuse_distances(const Trace& trace,
                                           std::uint64_t line_size) {
  const std::vector<std::uint64_t> addrs = collect_addresses(trace);
  std::vector<std::uint64_t> result(addrs.size(), kColdDistance);
  for (std::size_t t = 0; t < addrs.size(); ++t) {
    const std::uint64_t line = addrs[t] / line_size;
    for (std::size_t s = t; s-- > 0;) {
      if (addrs[s] / line_size != line) continue;
      std::unordered_set<std::uint64_t> between;
      for (std::size_t m = s + 1; m < t; ++m) between.insert(addrs[m] / line_size);
      result[t] = between.size();
      break;
    }
  }
  return result;
}

std::optional<double> entropy(const Trace& trace, unsigned lsb_cut) {
  std::unordered_map<std::uint64_t, std::uint64_t> freq;
  std::uint64_t total = 0;
  for (const TraceEvent& e : trace.events) {
    if (!e.mem) continue;
    ++freq[e.mem->address >> lsb_cut];
    ++total;
  }
  if (total == 0) return std::nullopt;
  double h = 0.0;
  for (const auto& [symbol, count] : freq) {
    const double p = static_cast<double>(count) / static_cast<double>(total);
    h -= p * std::log2(p);
  }
  return h;
}

ReuseSignature signature(const Trace& trace, std::uint64_t line_size) {
  const std::vector<std::uint64_t> distances = reuse_distances(trace, line_size);
  ReuseSignature sig;
  sig.line_size = line_size;
  sig.access_count = distances.size();
  if (distances.empty()) return sig;

  std::map<std::size_t, std::uint64_t> counts;
  std::uint64_t cold = 0;
  for (std::uint64_t d : distances) {
    if (d == kColdDistance)
      ++cold;
    else
      ++counts[bin_index(d)];
  }
  const std::size_t bin_count = counts.empty() ? 0 : counts.rbegin()->first + 1;
  const double n = static_cast<double>(distances.size());
  for (std::size_t b = 0; b < bin_count; ++b) {
    ReuseBin bin;
    bin.lower = b == 0 ? 0 : std::uint64_t{1} << (b - 1);
    bin.upper = b == 0 ? 1 : std::uint64_t{1} << b;
    auto it = counts.find(b);
    bin.probability = it == counts.end() ? 0.0 : static_cast<double>(it->second) / n;
    sig.bins.push_back(bin);
  }
  sig.cold_fraction = static_cast<double>(cold) / n;
  return sig;
}

ScheduleResult schedule(const Trace& trace, const DependencyGraph& deps,
                        ScheduleRegime regime) {
  ScheduleResult result;
  result.regime = regime;
  const std::size_t n = trace.events.size();
  result.issue_cycle.assign(n, 0);
  if (n == 0) return result;

  const bool smart = regime == ScheduleRegime::bblp_smart;

  if (regime == ScheduleRegime::ideal_ilp) {
    result.issue_cycle.assign(n, 1);
    bool changed = true;
    while (changed) {
      changed = false;
      for (const DepEdge& e : deps.edges()) {
        if (result.issue_cycle[e.consumer] < result.issue_cycle[e.producer] + 1) {
          result.issue_cycle[e.consumer] = result.issue_cycle[e.producer] + 1;
          changed = true;
        }
      }
    }
  } else {
    const std::vector<Run> runs = instance_runs(trace);
    const std::vector<std::size_t> owner = run_of_event(trace, runs);
    std::vector<std::uint64_t> start(runs.size(), 1);
    bool changed = true;
    while (changed) {
      changed = false;
      for (const DepEdge& e : deps.edges()) {
        if (smart && e.producer_index_update) continue;
        const std::size_t u = owner[e.producer];
        const std::size_t v = owner[e.consumer];
        if (u == v) continue;
        const std::uint64_t len = runs[u].last - runs[u].first + 1;
        if (start[v] < start[u] + len) {
          start[v] = start[u] + len;
          changed = true;
        }
      }
    }
    for (std::size_t r = 0; r < runs.size(); ++r)
      for (std::uint64_t seq = runs[r].first; seq <= runs[r].last; ++seq)
        result.issue_cycle[seq] = start[r] + (seq - runs[r].first);
  }

  for (std::uint64_t c : result.issue_cycle)
    result.max_issue_cycle = std::max(result.max_issue_cycle, c);
  return result;
}

std::optional<SpatialLocalityReport> slq_report(const Trace& trace,
                                                std::uint64_t max_line_size) {
  if (collect_addresses(trace).empty()) return std::nullopt;

  SpatialLocalityReport report;
  double weighted = 0.0, weight_sum = 0.0;
  int beta = 1;
  for (std::uint64_t b = trace.word_size; 2 * b <= max_line_size; b *= 2, ++beta) {
    const std::vector<std::uint64_t> at_b = reuse_distances(trace, b);
    const std::vector<std::uint64_t> at_2b = reuse_distances(trace, 2 * b);

    // Row/column indices: bin index for finite distances, -1 for cold.
    std::map<std::pair<long, long>, std::uint64_t> cells;
    std::map<long, std::uint64_t> row_totals;
    for (std::size_t i = 0; i < at_b.size(); ++i) {
      const long row =
          at_b[i] == kColdDistance ? -1 : static_cast<long>(bin_index(at_b[i]));
      const long col =
          at_2b[i] == kColdDistance ? -1 : static_cast<long>(bin_index(at_2b[i]));
      ++cells[{row, col}];
      ++row_totals[row];
    }

    double score = 0.0;
    const double n = static_cast<double>(at_b.size());
    for (const auto& [row, total] : row_totals) {
      double moved_down = 0.0;
      for (const auto& [cell, count] : cells) {
        if (cell.first != row || cell.second < 0) continue;
        const bool lower = row < 0 || cell.second < row;
        if (lower) moved_down += static_cast<double>(count);
      }
      score += (moved_down / static_cast<double>(total)) *
               (static_cast<double>(total) / n);
    }
    score = std::fabs(score);

    report.per_pair.push_back({b, score});
    const double w = std::pow(2.0, -beta);
    weighted += score * w;
    weight_sum += w;
  }
  report.total = weighted / weight_sum;
  return report;
}

std::optional<double> slq(const Trace& trace, std::uint64_t max_line_size) {
  const auto report = slq_report(trace, max_line_size);
  if (!report) return std::nullopt;
  return report->total;
}

PbblpResult pbblp(const Trace& trace, const DependencyGraph& deps) {
  PbblpResult result;
  const std::vector<Run> runs = instance_runs(trace);
  const std::vector<std::size_t> owner = run_of_event(trace, runs);
  const std::size_t n = trace.events.size();

  // Forward successor lists over non-index-update edges.
  std::vector<std::vector<std::uint64_t>> succ(n);
  for (const DepEdge& e : deps.edges())
    if (!e.producer_index_update) succ[e.producer].push_back(e.consumer);

  std::map<std::uint64_t, std::vector<std::size_t>> runs_of_block;
  for (std::size_t r = 0; r < runs.size(); ++r)
    runs_of_block[runs[r].block].push_back(r);

  std::map<std::uint64_t, bool> eligible;
  for (const TraceEvent& e : trace.events) {
    const bool bookkeeping = e.index_update || e.opcode.kind == OpKind::cmp ||
                             e.opcode.kind == OpKind::branch;
    auto [it, _] = eligible.try_emplace(e.bb_static, false);
    if (!bookkeeping) it->second = true;
  }

  double weighted = 0.0;
  std::uint64_t total_instances = 0;
  for (const auto& [block, members] : runs_of_block) {
    if (!eligible[block]) continue;

    // Instance DAG: edge u -> v when v's run is reachable from u's events
    // through events of other blocks only.
    std::map<std::size_t, std::size_t> position;  // run id -> index in members
    for (std::size_t i = 0; i < members.size(); ++i) position[members[i]] = i;
    std::vector<std::vector<std::size_t>> dag(members.size());

    for (std::size_t i = 0; i < members.size(); ++i) {
      const Run& run = runs[members[i]];
      std::vector<char> visited(n, 0);
      std::vector<std::uint64_t> frontier;
      for (std::uint64_t seq = run.first; seq <= run.last; ++seq) {
        visited[seq] = 1;
        frontier.push_back(seq);
      }
      while (!frontier.empty()) {
        const std::uint64_t cur = frontier.back();
        frontier.pop_back();
        for (std::uint64_t next : succ[cur]) {
          if (visited[next]) continue;
          visited[next] = 1;
          const std::size_t target = owner[next];
          if (runs[target].block == block) {
            if (target != members[i]) dag[i].push_back(position[target]);
          } else {
            frontier.push_back(next);
          }
        }
      }
    }

    // Longest path in instance order (edges always point forward).
    std::vector<std::uint64_t> longest(members.size(), 1);
    std::uint64_t best = 1;
    for (std::size_t i = 0; i < members.size(); ++i) {
      for (std::size_t j : dag[i])
        longest[j] = std::max(longest[j], longest[i] + 1);
      best = std::max(best, longest[i]);
    }

    const double score =
        static_cast<double>(members.size()) / static_cast<double>(best);
    result.per_block[block] = score;
    weighted += score * static_cast<double>(members.size());
    total_instances += members.size();
  }
  if (total_instances > 0)
    result.average = weighted / static_cast<double>(total_instances);
  return result;
}

}  // namespace nmc::oracle
