// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <vector>

#include "nmc/dependency_graph.hpp"
#include "nmc/oracles.hpp"
#include "nmc/parallelism_metrics.hpp"
#include "nmc/synth.hpp"
#include "nmc/trace.hpp"
#include "support.hpp"

using namespace nmc;
using doctest::Approx;

namespace {

DependencyGraph deps_of(const Trace& t, bool memory_deps = false) {
  return build_dependency_graph(t, memory_deps);
}

Trace dpl(std::uint64_t iterations, std::uint64_t lanes) {
  GeneratorSpec spec;
  spec.kind = GeneratorKind::data_parallel_loop;
  spec.iterations = iterations;
  spec.lanes = lanes;
  return generate(spec);
}

Trace chain_loop(std::uint64_t iterations, std::uint64_t lanes) {
  GeneratorSpec spec;
  spec.kind = GeneratorKind::dependent_chain_loop;
  spec.iterations = iterations;
  spec.lanes = lanes;
  return generate(spec);
}

}  // namespace

TEST_CASE("ideal schedule anchors") {
  test::TraceBuilder b;
  std::uint64_t a = b.op("add");
  std::uint64_t m = b.op("mul", {a});
  b.op("sub", {m});
  Trace chain = b.take();
  ScheduleResult s = schedule_ideal(chain, deps_of(chain));
  CHECK(s.issue_cycle == std::vector<std::uint64_t>{1, 2, 3});
  CHECK(s.max_issue_cycle == 3);

  test::TraceBuilder d;
  std::uint64_t top = d.op("add");
  std::uint64_t l = d.op("mul", {top});
  std::uint64_t r = d.op("sub", {top});
  d.op("add", {l, r});
  Trace diamond = d.take();
  ScheduleResult ds = schedule_ideal(diamond, deps_of(diamond));
  CHECK(ds.issue_cycle == std::vector<std::uint64_t>{1, 2, 2, 3});
  CHECK(*ilp_total(ds, diamond) == Approx(4.0 / 3.0));
}

TEST_CASE("memory edges lengthen the ideal schedule when enabled") {
  test::TraceBuilder b;
  std::uint64_t v = b.op("add");
  b.store(0x40, 4, {v});
  b.load(0x40, 4);
  Trace t = b.take();

  ScheduleResult off = schedule_ideal(t, deps_of(t, false));
  CHECK(off.issue_cycle == std::vector<std::uint64_t>{1, 2, 1});
  ScheduleResult on = schedule_ideal(t, deps_of(t, true));
  CHECK(on.issue_cycle == std::vector<std::uint64_t>{1, 2, 3});
}

TEST_CASE("specialized ilp counts distinct issue cycles per opcode") {
  test::TraceBuilder b;
  std::uint64_t a1 = b.op("add");
  std::uint64_t a2 = b.op("add");
  std::uint64_t a3 = b.op("add");
  b.op("add", {a1});
  b.op("add", {a2});
  std::uint64_t m1 = b.op("mul", {a3});
  std::uint64_t m2 = b.op("mul", {m1});
  std::uint64_t m3 = b.op("mul", {m2});
  b.op("add", {m3});
  Trace t = b.take();
  ScheduleResult s = schedule_ideal(t, deps_of(t));

  // Adds issue in cycles {1,1,1,2,2,5}: six ops over three distinct cycles.
  CHECK(*ilp_specialized(s, t, Opcode::from_text("add")) == Approx(2.0));
  CHECK(*ilp_specialized(s, t, Opcode::from_text("mul")) == Approx(1.0));
  CHECK_FALSE(ilp_specialized(s, t, Opcode::from_text("div")).has_value());
  CHECK(*ilp_total(s, t) == Approx(9.0 / 5.0));
}

TEST_CASE("wide independent opcodes reach their full width") {
  test::TraceBuilder b;
  for (int i = 0; i < 8; ++i) b.op("add");
  Trace t = b.take();
  ScheduleResult s = schedule_ideal(t, deps_of(t));
  CHECK(*ilp_specialized(s, t, Opcode::from_text("add")) == Approx(8.0));
  CHECK(*ilp_total(s, t) == Approx(8.0));
}

TEST_CASE("dlp splits loads by address continuity") {
  test::TraceBuilder consec;
  for (std::uint64_t i = 0; i < 8; ++i) consec.load(4 * i);
  Trace c = consec.take();
  ScheduleResult cs = schedule_ideal(c, deps_of(c));
  CHECK(*dlp(cs, c, false) == Approx(8.0));
  CHECK(*dlp(cs, c, true) == Approx(8.0));  // one run covers the cycle

  test::TraceBuilder scattered;
  for (std::uint64_t i = 0; i < 8; ++i) scattered.load(64 * i);
  Trace sc = scattered.take();
  ScheduleResult ss = schedule_ideal(sc, deps_of(sc));
  CHECK(*dlp(ss, sc, false) == Approx(8.0));
  CHECK(*dlp(ss, sc, true) == Approx(1.0));  // every access starts a run
}

TEST_CASE("dlp weights opcode groups by frequency") {
  test::TraceBuilder b;
  for (std::uint64_t i = 0; i < 4; ++i) b.load(4 * i);
  std::uint64_t prev = 0;
  for (int i = 0; i < 4; ++i)
    prev = b.op("add", prev ? std::vector<std::uint64_t>{prev}
                            : std::vector<std::uint64_t>{});
  Trace t = b.take();
  ScheduleResult s = schedule_ideal(t, deps_of(t));
  // Half the events are width-4 loads, half a serial add chain.
  CHECK(*dlp(s, t, false) == Approx(0.5 * 4.0 + 0.5 * 1.0));
  CHECK(*dlp(s, t, true) == Approx(2.5));
}

TEST_CASE("consecutiveness never raises dlp") {
  for (std::uint64_t seed = 1; seed <= 50; ++seed) {
    CAPTURE(seed);
    Trace t = test::fuzz_trace(seed);
    ScheduleResult s = schedule_ideal(t, deps_of(t));
    auto d1 = dlp(s, t, false);
    auto d2 = dlp(s, t, true);
    REQUIRE(d1.has_value());
    REQUIRE(d2.has_value());
    CHECK(*d2 <= *d1 + 1e-12);
  }
}

TEST_CASE("bblp anchors") {
  test::TraceBuilder indep;
  indep.block(0);
  indep.op("add");
  indep.block(0);
  indep.op("add");
  Trace two = indep.take();
  ScheduleResult ts = schedule_bblp(two, deps_of(two), false);
  CHECK(ts.issue_cycle == std::vector<std::uint64_t>{1, 1});
  CHECK(*bblp(ts, two) == Approx(2.0));

  test::TraceBuilder linked;
  linked.block(0);
  std::uint64_t v = linked.op("add");
  linked.op("mul", {v});
  linked.block(0);
  linked.op("add", {v});  // waits for the whole producer instance
  Trace three = linked.take();
  ScheduleResult ls = schedule_bblp(three, deps_of(three), false);
  CHECK(ls.issue_cycle == std::vector<std::uint64_t>{1, 2, 3});
  CHECK(*bblp(ls, three) == Approx(1.0));
}

TEST_CASE("smart scheduling drops only index-update links") {
  test::TraceBuilder b;
  b.block(0);
  std::uint64_t idx = b.op("add", {}, std::nullopt, true);
  b.block(0);
  b.op("add", {idx});
  Trace t = b.take();

  ScheduleResult real = schedule_bblp(t, deps_of(t), false);
  ScheduleResult smart = schedule_bblp(t, deps_of(t), true);
  CHECK(*bblp(real, t) == Approx(1.0));
  CHECK(*bblp(smart, t) == Approx(2.0));

  // A value dependency keeps the instances serialized in both regimes.
  test::TraceBuilder realdep;
  realdep.block(0);
  std::uint64_t v = realdep.op("add");
  realdep.block(0);
  realdep.op("add", {v});
  Trace rt = realdep.take();
  CHECK(*bblp(schedule_bblp(rt, deps_of(rt), true), rt) == Approx(1.0));
}

TEST_CASE("a data parallel loop is serial for real and wide for smart") {
  Trace t = dpl(4, 1);
  DependencyGraph g = deps_of(t);
  CHECK(*bblp(schedule_bblp(t, g, false), t) == Approx(1.0));
  CHECK(*bblp(schedule_bblp(t, g, true), t) == Approx(4.0));
}

TEST_CASE("metric helpers insist on the matching regime") {
  Trace t = dpl(2, 1);
  DependencyGraph g = deps_of(t);
  ScheduleResult ideal = schedule_ideal(t, g);
  ScheduleResult block = schedule_bblp(t, g, false);
  CHECK_THROWS_AS(bblp(ideal, t), std::invalid_argument);
  CHECK_THROWS_AS(ilp_total(block, t), std::invalid_argument);
  CHECK_THROWS_AS(dlp(block, t, false), std::invalid_argument);
}

TEST_CASE("block schedules issue one event per cycle per instance") {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    CAPTURE(seed);
    Trace t = test::fuzz_trace(seed);
    DependencyGraph g = deps_of(t);
    for (bool smart : {false, true}) {
      ScheduleResult s = schedule_bblp(t, g, smart);
      InstanceTable table = block_instances(t);
      for (const BlockInstance& inst : table.instances)
        for (std::uint64_t seq = inst.first_seq + 1; seq <= inst.last_seq; ++seq)
          CHECK(s.issue_cycle[seq] == s.issue_cycle[seq - 1] + 1);
    }
  }
}

TEST_CASE("smart bblp never falls below real bblp") {
  for (std::uint64_t seed = 1; seed <= 50; ++seed) {
    CAPTURE(seed);
    Trace t = test::fuzz_trace(seed);
    DependencyGraph g = deps_of(t);
    double real = *bblp(schedule_bblp(t, g, false), t);
    double smart = *bblp(schedule_bblp(t, g, true), t);
    CHECK(smart >= real - 1e-12);
  }
}

TEST_CASE("all three schedules match the relaxation oracle") {
  for (std::uint64_t seed = 1; seed <= 30; ++seed) {
    CAPTURE(seed);
    Trace t = test::fuzz_trace(seed);
    for (bool memory_deps : {false, true}) {
      DependencyGraph g = deps_of(t, memory_deps);
      for (ScheduleRegime regime : {ScheduleRegime::ideal_ilp, ScheduleRegime::bblp_real,
                                    ScheduleRegime::bblp_smart}) {
        ScheduleResult engine = regime == ScheduleRegime::ideal_ilp
                                    ? schedule_ideal(t, g)
                                    : schedule_bblp(t, g, regime == ScheduleRegime::bblp_smart);
        ScheduleResult reference = oracle::schedule(t, g, regime);
        CHECK(engine.issue_cycle == reference.issue_cycle);
        CHECK(engine.max_issue_cycle == reference.max_issue_cycle);
      }
    }
  }
}

TEST_CASE("pbblp anchors") {
  // Independent iterations: four instances, chains of one.
  Trace wide = dpl(4, 2);
  PbblpResult w = pbblp(wide, deps_of(wide));
  REQUIRE(w.per_block.size() == 1);
  CHECK(w.per_block.at(0) == Approx(4.0));
  CHECK(*w.average == Approx(4.0));

  // A carried accumulator chains every instance.
  Trace serial = chain_loop(4, 1);
  PbblpResult s = pbblp(serial, deps_of(serial));
  CHECK(*s.average == Approx(1.0));

  // One accumulator per four lanes: chains of two across eight iterations.
  Trace banked = chain_loop(8, 4);
  PbblpResult b = pbblp(banked, deps_of(banked));
  CHECK(*b.average == Approx(4.0));
}

TEST_CASE("bookkeeping blocks are excluded from pbblp") {
  test::TraceBuilder b;
  std::uint64_t carried = 0;
  for (int i = 0; i < 3; ++i) {
    b.block(0);  // body: real work
    std::uint64_t v = b.load(16u * i);
    b.op("mul", {v});
    b.block(1);  // tail: index add, compare, branch only
    std::uint64_t idx = b.op(
        "add", carried ? std::vector<std::uint64_t>{carried} : std::vector<std::uint64_t>{},
        std::nullopt, true);
    std::uint64_t f = b.op("cmp", {idx});
    b.op("branch", {f});
    carried = idx;
  }
  Trace t = b.take();
  PbblpResult r = pbblp(t, deps_of(t));
  REQUIRE(r.per_block.size() == 1);
  CHECK(r.per_block.count(0) == 1);
  CHECK(r.per_block.at(0) == Approx(3.0));
  CHECK(*r.average == Approx(3.0));

  // A trace made only of bookkeeping has no pbblp at all.
  test::TraceBuilder noise;
  std::uint64_t idx = noise.op("add", {}, std::nullopt, true);
  std::uint64_t f = noise.op("cmp", {idx});
  noise.op("branch", {f});
  Trace nt = noise.take();
  PbblpResult none = pbblp(nt, deps_of(nt));
  CHECK(none.per_block.empty());
  CHECK_FALSE(none.average.has_value());
}

TEST_CASE("chains propagate through events of other blocks") {
  // Block 0 feeds block 1 which feeds the next instance of block 0, so
  // block 0's instances chain even though no edge links them directly.
  test::TraceBuilder b;
  b.block(0);
  std::uint64_t v0 = b.op("mul");
  b.block(1);
  std::uint64_t relay = b.op("add", {v0});
  b.block(0);
  std::uint64_t v1 = b.op("mul", {relay});
  b.block(1);
  b.op("add", {v1});
  Trace t = b.take();
  PbblpResult r = pbblp(t, deps_of(t));
  CHECK(r.per_block.at(0) == Approx(1.0));  // 2 instances / chain 2
  CHECK(r.per_block.at(1) == Approx(1.0));
}

TEST_CASE("pbblp matches the instance-dag oracle") {
  for (std::uint64_t seed = 1; seed <= 30; ++seed) {
    CAPTURE(seed);
    Trace t = test::fuzz_trace(seed);
    for (bool memory_deps : {false, true}) {
      DependencyGraph g = deps_of(t, memory_deps);
      PbblpResult engine = pbblp(t, g);
      PbblpResult reference = oracle::pbblp(t, g);
      REQUIRE(engine.per_block.size() == reference.per_block.size());
      for (const auto& [block, score] : reference.per_block) {
        CAPTURE(block);
        REQUIRE(engine.per_block.count(block) == 1);
        CHECK(engine.per_block.at(block) == Approx(score).epsilon(1e-12));
      }
      CHECK(engine.average.has_value() == reference.average.has_value());
      if (engine.average)
        CHECK(*engine.average == Approx(*reference.average).epsilon(1e-12));
    }
  }
}

TEST_CASE("value ids are names, not structure") {
  for (std::uint64_t seed = 1; seed <= 15; ++seed) {
    CAPTURE(seed);
    Trace t = test::fuzz_trace(seed);
    Trace renamed = test::relabel_values(t);
    ParallelismReport a = parallelism_report(t, deps_of(t));
    ParallelismReport b = parallelism_report(renamed, deps_of(renamed));
    CHECK(a.ilp_total == b.ilp_total);
    CHECK(a.ilp_specialized == b.ilp_specialized);
    CHECK(a.dlp1 == b.dlp1);
    CHECK(a.dlp2 == b.dlp2);
    CHECK(a.bblp_real == b.bblp_real);
    CHECK(a.bblp_smart == b.bblp_smart);
    CHECK(a.pbblp_average == b.pbblp_average);
    CHECK(a.per_block_pbblp == b.per_block_pbblp);
  }
}

TEST_CASE("an empty trace yields no parallelism scores") {
  Trace t;
  ParallelismReport r = parallelism_report(t, deps_of(t));
  CHECK_FALSE(r.ilp_total.has_value());
  CHECK(r.ilp_specialized.empty());
  CHECK_FALSE(r.dlp1.has_value());
  CHECK_FALSE(r.dlp2.has_value());
  CHECK_FALSE(r.bblp_real.has_value());
  CHECK_FALSE(r.bblp_smart.has_value());
  CHECK_FALSE(r.pbblp_average.has_value());
  CHECK(r.per_block_pbblp.empty());
}

TEST_CASE("the assembled report agrees with the pieces") {
  Trace t = dpl(6, 2);
  DependencyGraph g = deps_of(t);
  ParallelismReport r = parallelism_report(t, g);
  ScheduleResult ideal = schedule_ideal(t, g);
  CHECK(r.ilp_total == ilp_total(ideal, t));
  CHECK(r.dlp1 == dlp(ideal, t, false));
  CHECK(r.dlp2 == dlp(ideal, t, true));
  CHECK(r.bblp_real == bblp(schedule_bblp(t, g, false), t));
  CHECK(r.bblp_smart == bblp(schedule_bblp(t, g, true), t));
  CHECK(r.ilp_specialized.count(Opcode::from_text("load")) == 1);
  CHECK(r.ilp_specialized.count(Opcode::from_text("div")) == 0);
}
