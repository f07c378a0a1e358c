#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <algorithm>
#include <map>
#include <random>
#include <set>

#include "doctest.h"
#include "taskweave/bench.hpp"
#include "taskweave/depanalysis.hpp"
#include "taskweave/interp.hpp"
#include "taskweave/preprocess.hpp"

using namespace taskweave;
using namespace taskweave::dep;
using tracer::Trace;
using tracer::TraceBuilder;

namespace {

// One synthetic Type-1 task span emitting the given memory events.
void span(TraceBuilder& tb, const std::vector<tracer::TraceEvent>& mem) {
  tb.push(tracer::task_enter(tir::TaskKind::Type1, tir::KernelId::Elemwise, 0));
  tb.push(tracer::bb_enter(0));
  for (const auto& ev : mem) tb.push(ev);
  tb.push(tracer::bb_exit(0));
  tb.push(tracer::task_exit());
}

std::set<std::pair<NodeIndex, NodeIndex>> edge_set(const DataDag& d) {
  return {d.edges.begin(), d.edges.end()};
}

// Brute force: replay the trace per byte, aggregating each task's loads and
// stores, then visiting tasks in order (load set queried against the map
// state before the task's own stores land) — the acceptance oracle.
std::set<std::pair<NodeIndex, NodeIndex>> byte_oracle(const Trace& t) {
  struct Node {
    std::set<std::uint64_t> loads, stores;
  };
  std::vector<Node> nodes;
  Node* cur = nullptr;
  for (const auto& ev : t.events) {
    switch (ev.kind) {
      case tracer::EventKind::TaskEnter:
        nodes.emplace_back();
        cur = &nodes.back();
        break;
      case tracer::EventKind::TaskExit:
        cur = nullptr;
        break;
      case tracer::EventKind::Load:
        for (std::uint64_t b = 0; b < ev.bytes; ++b)
          cur->loads.insert(ev.addr + b);
        break;
      case tracer::EventKind::Store:
      case tracer::EventKind::MemSet:
        for (std::uint64_t b = 0; b < ev.bytes; ++b)
          cur->stores.insert(ev.addr + b);
        break;
      case tracer::EventKind::MemCpy:
      case tracer::EventKind::MemMove:
        for (std::uint64_t b = 0; b < ev.bytes; ++b) {
          cur->loads.insert(ev.addr + b);
          cur->stores.insert(ev.addr2 + b);
        }
        break;
      default:
        break;
    }
  }
  std::map<std::uint64_t, NodeIndex> writer;
  std::set<std::pair<NodeIndex, NodeIndex>> edges;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    for (std::uint64_t b : nodes[i].loads) {
      auto it = writer.find(b);
      if (it != writer.end()) edges.insert({it->second, NodeIndex(i)});
    }
    for (std::uint64_t b : nodes[i].stores) writer[b] = NodeIndex(i);
  }
  return edges;
}

}  // namespace

TEST_CASE("25 contiguous 4-byte stores coalesce into one tuple") {
  TupleSet ts;
  for (int i = 0; i < 25; ++i) ts.add(100 + 4 * i, 4, 0);
  REQUIRE(ts.tuples().size() == 1);
  const MemTuple& t = ts.tuples().begin()->second;
  CHECK(t.start_addr == 100);
  CHECK(t.end_addr == 199);
  CHECK(t.access_count == 25);
  CHECK(t.byte_count == 100);
}

TEST_CASE("a gap prevents tuple merging, adjacency does not") {
  TupleSet ts;
  ts.add(0, 8, 0);
  ts.add(16, 8, 0);
  CHECK(ts.tuples().size() == 2);
  ts.add(8, 8, 0);  // bridges [0,7] and [16,23]
  REQUIRE(ts.tuples().size() == 1);
  CHECK(ts.tuples().begin()->second.end_addr == 23);
  CHECK(ts.total_bytes() == 24);
}

TEST_CASE("last-writer map splits intervals on partial overwrite") {
  LastWriterMap lw;
  lw.record(0, 99, 7);
  lw.record(30, 59, 8);
  CHECK(lw.writer_of(0) == 7);
  CHECK(lw.writer_of(29) == 7);
  CHECK(lw.writer_of(30) == 8);
  CHECK(lw.writer_of(59) == 8);
  CHECK(lw.writer_of(60) == 7);
  CHECK(lw.writer_of(99) == 7);
  CHECK(lw.writer_of(100) == -1);
  CHECK(lw.interval_count() == 3);
  auto segs = lw.segments(0, 99);
  REQUIRE(segs.size() == 3);
  CHECK(std::get<2>(segs[0]) == 7);
  CHECK(std::get<2>(segs[1]) == 8);
  CHECK(std::get<2>(segs[2]) == 7);
}

TEST_CASE("A, B disjoint stores; C loads both: edges are exactly A->C, B->C") {
  TraceBuilder tb;
  span(tb, {tracer::store_event(1000, 64)});           // A
  span(tb, {tracer::store_event(2000, 64)});           // B
  span(tb, {tracer::load_event(1000, 64),
            tracer::load_event(2000, 64)});            // C
  ControlDag cdag = build_control_dag(tb.trace());
  auto tuples = build_tuple_sets(tb.trace(), cdag);
  DataDag ddag = build_data_dag(cdag, tuples);
  CHECK(edge_set(ddag) ==
        std::set<std::pair<NodeIndex, NodeIndex>>{{0, 2}, {1, 2}});
}

TEST_CASE("running example: six-node chain, FFTs independent") {
  auto p = tir::build_benchmark("running_example");
  auto flat = preprocess::flatten(p, tracer::profile_program(p));
  auto r = tracer::interpret_and_trace(flat);
  ControlDag cdag = build_control_dag(r.trace);
  REQUIRE(cdag.nodes.size() == 6);
  for (std::size_t i = 0; i < 6; ++i) CHECK(cdag.nodes[i].index == i);
  CHECK(cdag.nodes[1].task_kind == tir::TaskKind::Type2);
  CHECK(cdag.nodes[4].task_kind == tir::TaskKind::Type2);

  auto tuples = build_tuple_sets(r.trace, cdag);
  DataDag ddag = build_data_dag(cdag, tuples);
  CHECK(edge_set(ddag) == std::set<std::pair<NodeIndex, NodeIndex>>{
                              {0, 1}, {1, 2}, {3, 4}, {4, 5}});
  CHECK(!ddag.has_edge(1, 4));
  CHECK(edge_set(ddag) == byte_oracle(r.trace));
}

TEST_CASE("fft node's tuple sets each total 8n bytes") {
  auto p = tir::build_benchmark("running_example");
  auto flat = preprocess::flatten(p, tracer::profile_program(p));
  auto r = tracer::interpret_and_trace(flat);
  ControlDag cdag = build_control_dag(r.trace);
  auto tuples = build_tuple_sets(r.trace, cdag);
  CHECK(tuples[1].loads.total_bytes() == 16384);
  CHECK(tuples[1].stores.total_bytes() == 16384);
}

TEST_CASE("empty and single-node traces degrade gracefully") {
  Trace empty;
  ControlDag cdag = build_control_dag(empty);
  CHECK(cdag.nodes.empty());
  DataDag ddag = build_data_dag(cdag, build_tuple_sets(empty, cdag));
  CHECK(ddag.edges.empty());

  TraceBuilder tb;
  span(tb, {tracer::store_event(64, 8), tracer::load_event(64, 8)});
  ControlDag one = build_control_dag(tb.trace());
  CHECK(one.nodes.size() == 1);
  CHECK(build_data_dag(one, build_tuple_sets(tb.trace(), one)).edges.empty());
}

TEST_CASE("unbalanced traces are rejected") {
  TraceBuilder tb;
  tb.push(tracer::task_enter(tir::TaskKind::Type1, tir::KernelId::Elemwise, 0));
  tb.push(tracer::store_event(0, 4));
  CHECK_THROWS_AS(build_control_dag(tb.trace()), AnalysisError);
}

TEST_CASE("randomized aliasing traces agree with the per-byte oracle") {
  std::mt19937_64 rng(0xdab5eed);
  for (int trial = 0; trial < 60; ++trial) {
    TraceBuilder tb;
    const int n_tasks = 2 + int(rng() % 39);
    for (int t = 0; t < n_tasks; ++t) {
      std::vector<tracer::TraceEvent> mem;
      const int n_ev = 1 + int(rng() % 6);
      for (int e = 0; e < n_ev; ++e) {
        // Deliberately tiny address window so tasks alias heavily.
        const std::uint64_t addr = 0x10000 + rng() % 256;
        const std::uint64_t len = 1 + rng() % 48;
        switch (rng() % 5) {
          case 0:
            mem.push_back(tracer::load_event(addr, len));
            break;
          case 1:
            mem.push_back(tracer::store_event(addr, len));
            break;
          case 2:
            mem.push_back(
                tracer::memcpy_event(addr, 0x10000 + rng() % 256, len));
            break;
          case 3:
            mem.push_back(tracer::memset_event(addr, len));
            break;
          default:
            mem.push_back(
                tracer::memmove_event(addr, 0x10000 + rng() % 256, len));
        }
      }
      span(tb, mem);
    }
    ControlDag cdag = build_control_dag(tb.trace());
    auto tuples = build_tuple_sets(tb.trace(), cdag);
    DataDag ddag = build_data_dag(cdag, tuples);
    CAPTURE(trial);
    REQUIRE(edge_set(ddag) == byte_oracle(tb.trace()));
    // Edges never point backward.
    for (const auto& [w, r] : ddag.edges) REQUIRE(w < r);
  }
}

TEST_CASE("fresh addresses add no edges among existing nodes") {
  TraceBuilder tb;
  span(tb, {tracer::store_event(1000, 32)});
  span(tb, {tracer::load_event(1000, 32)});
  ControlDag c1 = build_control_dag(tb.trace());
  auto e1 = edge_set(build_data_dag(c1, build_tuple_sets(tb.trace(), c1)));

  span(tb, {tracer::store_event(5000, 32), tracer::load_event(5000, 32)});
  ControlDag c2 = build_control_dag(tb.trace());
  auto e2 = edge_set(build_data_dag(c2, build_tuple_sets(tb.trace(), c2)));
  CHECK(e1 == e2);
}

TEST_CASE("dag json and dot exports round-trip the structure") {
  auto p = tir::build_benchmark("running_example");
  auto flat = preprocess::flatten(p, tracer::profile_program(p));
  auto r = tracer::interpret_and_trace(flat);
  ControlDag cdag = build_control_dag(r.trace);
  DataDag ddag = build_data_dag(cdag, build_tuple_sets(r.trace, cdag));

  save_dag(cdag, ddag, "/tmp/depanalysis_test.dag.json");
  auto [c2, d2] = load_dag("/tmp/depanalysis_test.dag.json");
  REQUIRE(c2.nodes.size() == cdag.nodes.size());
  for (std::size_t i = 0; i < c2.nodes.size(); ++i) {
    CHECK(c2.nodes[i].task_kind == cdag.nodes[i].task_kind);
    CHECK(c2.nodes[i].kernel == cdag.nodes[i].kernel);
  }
  CHECK(edge_set(d2) == edge_set(ddag));
  CHECK(to_dot(cdag, ddag).find("->") != std::string::npos);
}
