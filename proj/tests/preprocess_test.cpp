#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"
#include "taskweave/bench.hpp"
#include "taskweave/interp.hpp"
#include "taskweave/preprocess.hpp"
#include "taskweave/tir_json.hpp"

using namespace taskweave;
using namespace taskweave::tir;

namespace {

const CallTask& task_at(const TirProgram& p, std::size_t i) {
  const auto& st = p.functions.at(p.entry).body.at(i);
  return std::get<CallTask>(st.node);
}

TirProgram flat_bench(const std::string& id) {
  TirProgram p = build_benchmark_by_id(id);
  return preprocess::flatten(p, tracer::profile_program(p));
}

}  // namespace

TEST_CASE("running example flattens to the six-task sequence") {
  TirProgram flat = flat_bench("running_example");
  CHECK(flat.flattened);
  const auto& body = flat.functions.at(flat.entry).body;
  REQUIRE(body.size() == 6);
  const KernelId want[] = {KernelId::ReadData, KernelId::Fft,
                           KernelId::WriteData, KernelId::ReadData,
                           KernelId::Fft, KernelId::WriteData};
  for (std::size_t i = 0; i < 6; ++i) {
    CHECK(task_at(flat, i).kernel.id == want[i]);
  }
  // Fresh slice bindings per unrolled iteration: the two FFTs read disjoint
  // halves of `a` and write disjoint halves of `b`.
  const auto& f0 = task_at(flat, 1);
  const auto& f1 = task_at(flat, 4);
  CHECK(f0.reads.at(0).offset.base != f1.reads.at(0).offset.base);
  CHECK(f0.writes.at(0).offset.base != f1.writes.at(0).offset.base);
  // Site provenance: statements 0..5 fold back onto the three original
  // statement sites.
  CHECK(flat.site_map.size() == 6);
  CHECK(flat.origin_site(0) == flat.origin_site(3));
  CHECK(flat.origin_site(1) == flat.origin_site(4));
  CHECK(validate_program(flat).ok());
}

TEST_CASE("profiling records trips, slots and call targets") {
  TirProgram p = build_benchmark("running_example");
  tracer::Profile prof = tracer::profile_program(p);
  REQUIRE(prof.loop_trips.size() == 1);
  CHECK(prof.loop_trips.begin()->second == 2);
  CHECK(prof.indirect_targets.count("transform") == 1);
  CHECK(prof.program_hash == program_hash(p));

  TirProgram w = build_benchmark("wifi_tx");
  tracer::Profile wp = tracer::profile_program(w);
  bool has_ten = false;
  for (const auto& [site, n] : wp.loop_trips) has_ten = has_ten || n == 10;
  CHECK(has_ten);
}

TEST_CASE("flattening preserves serial semantics bit-for-bit") {
  for (const auto& id : benchmark_ids()) {
    TirProgram p = build_benchmark_by_id(id);
    TirProgram flat = preprocess::flatten(p, tracer::profile_program(p));
    CAPTURE(id);
    CHECK(tracer::interpret(flat) == tracer::interpret(p));
  }
}

TEST_CASE("flatten is idempotent") {
  TirProgram p = build_benchmark("pulse_doppler");
  TirProgram once = preprocess::flatten(p, tracer::profile_program(p));
  TirProgram twice =
      preprocess::flatten(once, tracer::profile_program(once));
  CHECK(to_json(once) == to_json(twice));
}

TEST_CASE("type-1-only loops stay rolled") {
  TirProgram p;
  p.name = "rolled";
  p.buffers = {{"x", 64, ElementKind::Byte}};
  Function fn;
  Statement inner;
  inner.site = 1;
  inner.node = CallTask{
      "fill",
      {KernelId::Elemwise, TaskKind::Type1, {}, "fill"},
      {},
      {{SliceRef::buffer("x"), IndexExpr::constant(0), 64}}};
  Statement loop;
  loop.site = 0;
  loop.node = Loop{"i", TripSource::constant(4), {inner}};
  fn.body = {loop};
  p.functions["main"] = fn;
  p.entry = "main";

  TirProgram flat = preprocess::flatten(p, tracer::profile_program(p));
  const auto& body = flat.functions.at(flat.entry).body;
  REQUIRE(body.size() == 1);
  CHECK(std::holds_alternative<Loop>(body[0].node));
  CHECK(tracer::interpret(flat) == tracer::interpret(p));
}

TEST_CASE("polymorphic call slots are rejected at profile time") {
  // A slot whose binding expression depends on the induction variable
  // resolves to two different kernels across iterations.
  TirProgram p;
  p.name = "poly";
  p.buffers = {{"x", 128, ElementKind::Complex32},
               {"y", 128, ElementKind::Complex32}};
  Function fn;
  Statement ind;
  ind.site = 1;
  ind.node = IndirectCall{
      "slot",
      {{KernelId::Fft, TaskKind::Type2, {{"n", 16}}, ""},
       {KernelId::Elemwise, TaskKind::Type1, {}, "copy"}},
      {{SliceRef::buffer("x"), IndexExpr::constant(0), 128}},
      {{SliceRef::buffer("y"), IndexExpr::constant(0), 128}}};
  Statement loop;
  loop.site = 0;
  loop.node = Loop{"i", TripSource::constant(2), {ind}};
  fn.body = {loop};
  p.functions["main"] = fn;
  p.entry = "main";
  p.slot_bindings["slot"] = IndexExpr::affine(0, "i", 1);

  CHECK_THROWS_AS(tracer::profile_program(p), tracer::InterpError);
}

TEST_CASE("missing profile entry for a type-2 loop is an error") {
  TirProgram p = build_benchmark("running_example");
  tracer::Profile prof = tracer::profile_program(p);
  tracer::Profile empty;
  empty.program_hash = prof.program_hash;
  empty.indirect_targets = prof.indirect_targets;
  empty.call_targets = prof.call_targets;
  CHECK_THROWS_AS(preprocess::flatten(p, empty), preprocess::FlattenError);
}
