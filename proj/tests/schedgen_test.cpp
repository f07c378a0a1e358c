#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <set>

#include "doctest.h"
#include "taskweave/bench.hpp"
#include "taskweave/depanalysis.hpp"
#include "taskweave/interp.hpp"
#include "taskweave/preprocess.hpp"
#include "taskweave/schedgen.hpp"

using namespace taskweave;
using namespace taskweave::sched;
using dep::NodeIndex;

namespace {

struct Extracted {
  tir::TirProgram flat;
  tracer::Trace trace;
  dep::ControlDag cdag;
  std::vector<dep::NodeTuples> tuples;
  dep::DataDag ddag;
};

Extracted extract(const std::string& bench_id) {
  Extracted e;
  tir::TirProgram p = tir::build_benchmark_by_id(bench_id);
  e.flat = preprocess::flatten(p, tracer::profile_program(p));
  e.trace = tracer::interpret_and_trace(e.flat).trace;
  e.cdag = dep::build_control_dag(e.trace);
  e.tuples = dep::build_tuple_sets(e.trace, e.cdag);
  e.ddag = dep::build_data_dag(e.cdag, e.tuples);
  return e;
}

std::vector<std::size_t> type2_widths(const ScheduleDag& s) {
  std::vector<std::size_t> w;
  for (const auto& r : s.regions)
    if (r.kind == RegionKind::Type2) w.push_back(r.tasks.size());
  return w;
}

// Synthetic control DAG: one node per entry of `kinds`.
dep::ControlDag chain(const std::vector<tir::TaskKind>& kinds) {
  dep::ControlDag c;
  for (std::size_t i = 0; i < kinds.size(); ++i) {
    dep::ControlDagNode n;
    n.index = NodeIndex(i);
    n.task_kind = kinds[i];
    n.kernel = kinds[i] == tir::TaskKind::Type2 ? tir::KernelId::Fft
                                                : tir::KernelId::Elemwise;
    n.bb_ids = {0};
    c.nodes.push_back(n);
  }
  return c;
}

}  // namespace

TEST_CASE("running example: regions are [T1{0,3}, T2{1,4}, T1{2,5}]") {
  Extracted e = extract("running_example");
  ScheduleDag s = generate_schedule(e.cdag, e.ddag);
  REQUIRE(s.regions.size() == 3);
  CHECK(s.regions[0].kind == RegionKind::Type1);
  CHECK(s.regions[0].tasks == std::vector<NodeIndex>{0, 3});
  CHECK(s.regions[1].kind == RegionKind::Type2);
  CHECK(s.regions[1].tasks == std::vector<NodeIndex>{1, 4});
  CHECK(s.regions[1].counter_target == 2);
  CHECK(s.regions[2].kind == RegionKind::Type1);
  CHECK(s.regions[2].tasks == std::vector<NodeIndex>{2, 5});
  CHECK(verify_reorder_safety(s, e.tuples).empty());
}

TEST_CASE("dependence chains admit no clustering") {
  using K = tir::TaskKind;
  dep::ControlDag c = chain({K::Type1, K::Type2, K::Type1, K::Type2});
  dep::DataDag d;
  d.node_count = 4;
  d.edges = {{0, 1}, {1, 2}, {2, 3}};
  ScheduleDag s = generate_schedule(c, d);
  REQUIRE(s.regions.size() == 4);
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(s.regions[i].tasks == std::vector<NodeIndex>{NodeIndex(i)});
  }
  CHECK(s.regions[1].counter_target == 1);
  CHECK(s.regions[3].counter_target == 1);
}

TEST_CASE("independent type-2 tasks cluster into one region") {
  using K = tir::TaskKind;
  dep::ControlDag c = chain({K::Type2, K::Type2, K::Type2});
  dep::DataDag d;
  d.node_count = 3;
  ScheduleDag s = generate_schedule(c, d);
  REQUIRE(s.regions.size() == 1);
  CHECK(s.regions[0].tasks == std::vector<NodeIndex>{0, 1, 2});
  CHECK(s.regions[0].counter_target == 3);
}

TEST_CASE("benchmark region widths match the published table") {
  const std::pair<const char*, std::vector<std::size_t>> expect[] = {
      {"pulse_doppler", {8, 4, 4}},
      {"wifi_tx", {10}},
      {"radar_correlator", {2, 1}},
      {"temporal_mitigation", {2, 1}}};
  for (const auto& [id, want] : expect) {
    Extracted e = extract(id);
    ScheduleDag s = generate_safe_schedule(
        e.cdag, augment_output_order(e.cdag, e.ddag), e.tuples);
    CAPTURE(id);
    CHECK(type2_widths(s) == want);
    // Topological validity and partition property.
    std::set<NodeIndex> seen;
    for (const auto& r : s.regions)
      for (NodeIndex n : r.tasks) CHECK(seen.insert(n).second);
    CHECK(seen.size() == e.cdag.nodes.size());
    for (const auto& [w, r] : e.ddag.edges) {
      if (s.region_of[w] == s.region_of[r]) {
        // Same region is fine only for serial regions run in node order.
        CHECK(s.regions[s.region_of[w]].kind == RegionKind::Type1);
        CHECK(w < r);
      } else {
        CHECK(s.region_of[w] < s.region_of[r]);
      }
    }
  }
}

TEST_CASE("emitted program executes correctly under any permutation") {
  for (const char* id :
       {"running_example", "pulse_doppler", "wifi_tx", "temporal_mitigation"}) {
    Extracted e = extract(id);
    ScheduleDag s = generate_safe_schedule(
        e.cdag, augment_output_order(e.cdag, e.ddag), e.tuples);
    ParallelProgram pp = emit_parallel_program(e.flat, s);
    for (const auto& sec : pp.sections) {
      if (sec.kind == RegionKind::Type2)
        CHECK(sec.counter_target == sec.tasks.size());
    }
    auto serial = tracer::interpret(e.flat);
    CAPTURE(id);
    CHECK(run_sections_serially(pp) == serial);
    for (std::uint64_t seed : {1ull, 42ull, 0xfeedull}) {
      CHECK(run_sections_serially(pp, seed) == serial);
    }
  }
}

TEST_CASE("running example emits read/fft/write sections with counter 2") {
  Extracted e = extract("running_example");
  ScheduleDag s = generate_safe_schedule(
      e.cdag, augment_output_order(e.cdag, e.ddag), e.tuples);
  ParallelProgram pp = emit_parallel_program(e.flat, s);
  REQUIRE(pp.sections.size() == 3);
  CHECK(pp.sections[0].kind == RegionKind::Type1);
  CHECK(pp.sections[0].tasks.size() == 2);
  CHECK(pp.sections[0].tasks[0].kernel.id == tir::KernelId::ReadData);
  CHECK(pp.sections[1].kind == RegionKind::Type2);
  CHECK(pp.sections[1].counter_target == 2);
  CHECK(pp.sections[1].tasks[0].kernel.id == tir::KernelId::Fft);
  CHECK(pp.sections[2].tasks[0].kernel.id == tir::KernelId::WriteData);

  save_parallel_program(pp, "/tmp/schedgen_test.ppar.json");
  ParallelProgram back = load_parallel_program("/tmp/schedgen_test.ppar.json");
  CHECK(back.sections.size() == pp.sections.size());
  CHECK(back.task_count() == pp.task_count());
  CHECK(run_sections_serially(back) == run_sections_serially(pp));
}

TEST_CASE("war hazard: reorder safety reports it, safe schedule serializes") {
  // Node 0 (Type-1) loads [0,31]; node 1 (Type-2) FFT elsewhere; node 2
  // (Type-1) overwrites [0,31]. RAW analysis leaves 0 and 2 unordered, so the
  // naive regions hoist 2 next to 0 — a WAR hazard the verifier must catch.
  tracer::TraceBuilder tb;
  tb.push(tracer::task_enter(tir::TaskKind::Type1, tir::KernelId::Elemwise, 0));
  tb.push(tracer::bb_enter(0));
  tb.push(tracer::store_event(0x20000, 32));  // seed the range
  tb.push(tracer::bb_exit(0));
  tb.push(tracer::task_exit());
  tb.push(tracer::task_enter(tir::TaskKind::Type2, tir::KernelId::Fft, 1));
  tb.push(tracer::bb_enter(1));
  tb.push(tracer::load_event(0x20000, 32));
  tb.push(tracer::store_event(0x30000, 32));
  tb.push(tracer::bb_exit(1));
  tb.push(tracer::task_exit());
  tb.push(tracer::task_enter(tir::TaskKind::Type1, tir::KernelId::Elemwise, 2));
  tb.push(tracer::bb_enter(2));
  tb.push(tracer::store_event(0x20000, 32));  // WAR against node 1's load
  tb.push(tracer::bb_exit(2));
  tb.push(tracer::task_exit());
  tb.push(tracer::task_enter(tir::TaskKind::Type2, tir::KernelId::Fft, 3));
  tb.push(tracer::bb_enter(3));
  tb.push(tracer::load_event(0x20000, 32));
  tb.push(tracer::store_event(0x30020, 32));
  tb.push(tracer::bb_exit(3));
  tb.push(tracer::task_exit());

  dep::ControlDag cdag = dep::build_control_dag(tb.trace());
  auto tuples = dep::build_tuple_sets(tb.trace(), cdag);
  dep::DataDag ddag = dep::build_data_dag(cdag, tuples);

  ScheduleDag naive = generate_schedule(cdag, ddag);
  auto violations = verify_reorder_safety(naive, tuples);
  REQUIRE(!violations.empty());
  bool names_pair = false;
  for (const auto& v : violations)
    names_pair = names_pair || (v.first == 1 && v.second == 2);
  CHECK(names_pair);

  int rounds = 0;
  ScheduleDag safe = generate_safe_schedule(cdag, ddag, tuples, &rounds);
  CHECK(rounds > 1);
  CHECK(verify_reorder_safety(safe, tuples).empty());
  // Node 2 must now come after node 1's region.
  CHECK(safe.region_of[1] < safe.region_of[2]);
}

TEST_CASE("consecutive output writers never reorder") {
  // Two WRITE_DATA tasks with disjoint memory footprints: memory analysis
  // alone leaves them swappable, but output order is a side effect.
  Extracted e = extract("running_example");
  dep::DataDag plain = e.ddag;
  dep::DataDag augmented = augment_output_order(e.cdag, plain);
  CHECK(augmented.edges.size() > plain.edges.size());
  CHECK(augmented.has_edge(2, 5));
}
