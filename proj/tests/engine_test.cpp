#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <sstream>

#include "doctest.h"
#include "taskweave/bench.hpp"
#include "taskweave/depanalysis.hpp"
#include "taskweave/engine.hpp"
#include "taskweave/interp.hpp"
#include "taskweave/preprocess.hpp"
#include "taskweave/schedgen.hpp"

using namespace taskweave;

namespace {

tir::KernelSpec fft(std::int64_t n) {
  tir::KernelSpec k;
  k.id = tir::KernelId::Fft;
  k.task_kind = tir::TaskKind::Type2;
  k.params["n"] = n;
  return k;
}

tir::KernelSpec gemm() {
  tir::KernelSpec k;
  k.id = tir::KernelId::Gemm;
  k.task_kind = tir::TaskKind::Type2;
  k.params["m"] = 4;
  k.params["k"] = 4;
  k.params["n"] = 64;
  return k;
}

// p independent FFT tasks in one parallel section; slices are irrelevant to
// the virtual engine, so they stay empty.
sched::ParallelProgram fft_burst(std::size_t p, std::int64_t n = 512) {
  sched::ParallelProgram pp;
  pp.name = "burst" + std::to_string(p);
  sched::Section sec;
  sec.kind = sched::RegionKind::Type2;
  sec.counter_target = p;
  for (std::size_t i = 0; i < p; ++i) {
    sched::TaskDesc d;
    d.node = static_cast<dep::NodeIndex>(i);
    d.site = 0;
    d.name = "fft" + std::to_string(i);
    d.kernel = fft(n);
    sec.tasks.push_back(std::move(d));
  }
  pp.sections.push_back(std::move(sec));
  return pp;
}

sched::ParallelProgram serial_only(std::size_t count) {
  sched::ParallelProgram pp;
  pp.name = "serial" + std::to_string(count);
  sched::Section sec;
  sec.kind = sched::RegionKind::Type1;
  for (std::size_t i = 0; i < count; ++i) {
    sched::TaskDesc d;
    d.node = static_cast<dep::NodeIndex>(i);
    d.name = "glue" + std::to_string(i);
    d.kernel.id = tir::KernelId::Glue;
    d.kernel.task_kind = tir::TaskKind::Type1;
    sec.tasks.push_back(std::move(d));
  }
  pp.sections.push_back(std::move(sec));
  return pp;
}

sched::ParallelProgram pipeline(const std::string& bench_id) {
  tir::TirProgram p = tir::build_benchmark_by_id(bench_id);
  tir::TirProgram flat = preprocess::flatten(p, tracer::profile_program(p));
  tracer::Trace t = tracer::interpret_and_trace(flat).trace;
  dep::ControlDag cdag = dep::build_control_dag(t);
  auto tuples = dep::build_tuple_sets(t, cdag);
  dep::DataDag ddag = dep::build_data_dag(cdag, tuples);
  return sched::emit_parallel_program(
      flat, sched::generate_safe_schedule(cdag, ddag, tuples));
}

std::string dump(const rt::EngineResult& r) {
  std::ostringstream os;
  for (const auto& g : r.gantt) {
    os << g.instance << ' ' << g.node << ' ' << g.section << ' ' << g.kernel
       << ' ' << g.pe << ' ' << g.start_ns << ' ' << g.end_ns << '\n';
  }
  os << "makespan " << r.stats.makespan_ns << " serial "
     << r.stats.serial_tasks_ns << " parallel " << r.stats.parallel_tasks_ns
     << " app " << r.stats.serial_app_ns << '\n';
  for (const auto& [pe, busy] : r.stats.pe_busy_ns)
    os << pe << ':' << busy << ' ';
  for (const auto& ph : r.stats.phases)
    os << ph.instance << '/' << ph.section << '/' << ph.start_ns << '/'
       << ph.end_ns << '/' << ph.tasks << ' ';
  return os.str();
}

void check_pe_exclusive(const std::vector<rt::GanttEntry>& gantt) {
  // Gantt is sorted by (pe, start): consecutive same-PE entries must not
  // overlap.
  for (std::size_t i = 1; i < gantt.size(); ++i) {
    if (gantt[i].pe != gantt[i - 1].pe) continue;
    CHECK(gantt[i - 1].end_ns <= gantt[i].start_ns);
  }
}

}  // namespace

TEST_CASE("exec-time lookup: exact signature, family, wildcard") {
  rt::Pe acc;
  acc.id = 1;
  acc.kind = rt::PeKind::Accelerator;
  acc.supported_kernels = {"FFT"};
  acc.exec_times_ns = {{"FFT:512", 40}, {"FFT", 60}, {"*", 80}};
  CHECK(acc.exec_time(fft(512)) == 40);
  CHECK(acc.exec_time(fft(8)) == 60);
  CHECK(acc.exec_time(gemm()) == 80);
  CHECK(acc.supports(fft(8)));
  CHECK(!acc.supports(gemm()));

  rt::Pe cpu;
  cpu.kind = rt::PeKind::CpuCore;
  cpu.exec_times_ns = {{"FFT", 100}};
  CHECK(cpu.supports(gemm()));
  CHECK(!cpu.exec_time(gemm()).has_value());
}

TEST_CASE("modeled duration: accelerators pay transfer, CPUs do not") {
  rt::Platform p;
  p.name = "ovh";
  p.transfer_overhead_ns = 7;
  rt::Pe cpu;
  cpu.id = 0;
  cpu.dispatch_overhead_ns = 5;
  cpu.exec_times_ns = {{"FFT", 100}};
  rt::Pe acc;
  acc.id = 1;
  acc.kind = rt::PeKind::Accelerator;
  acc.supported_kernels = {"FFT"};
  acc.dispatch_overhead_ns = 3;
  acc.exec_times_ns = {{"FFT:512", 40}};
  p.pes = {cpu, acc};
  CHECK(rt::modeled_duration(p, p.pes[0], fft(512)) == 105);
  CHECK(rt::modeled_duration(p, p.pes[1], fft(512)) == 50);
  CHECK_THROWS_AS(rt::modeled_duration(p, p.pes[1], fft(8)), rt::EngineError);
}

TEST_CASE("MET picks the fastest table entry regardless of load") {
  rt::Platform plat = rt::make_cpu_fft_platform(1, 1, 25000, 128);
  rt::SchedulerState st;
  std::vector<std::uint64_t> busy = {0, 999999};  // accel deeply backlogged
  rt::Decision d = rt::decide(rt::Policy::Met, plat, fft(512), busy, 0, st);
  CHECK(d.pe == 1);
  CHECK(d.start_ns == 999999);
  CHECK(d.end_ns == 999999 + 128);

  // Tie on exec time: lowest PE id.
  rt::Platform twin = rt::make_cpu_fft_platform(2, 0, 500, 0);
  busy = {777, 0};
  d = rt::decide(rt::Policy::Met, twin, fft(512), busy, 0, st);
  CHECK(d.pe == 0);
}

TEST_CASE("RR cycles one global cursor over supporting PEs") {
  rt::Platform grid = rt::make_fft_grid(4, 128);
  rt::SchedulerState st;
  std::vector<std::uint64_t> busy(4, 0);
  std::vector<int> picks;
  for (int i = 0; i < 6; ++i)
    picks.push_back(rt::decide(rt::Policy::Rr, grid, fft(8), busy, 0, st).pe);
  CHECK(picks == std::vector<int>{0, 1, 2, 3, 0, 1});

  // Non-supporting PEs are skipped but still advance the shared cursor.
  rt::Platform mixed = rt::make_cpu_fft_platform(2, 2, 100, 50);
  rt::SchedulerState st2;
  std::vector<std::uint64_t> b4(4, 0);
  CHECK(rt::decide(rt::Policy::Rr, mixed, gemm(), b4, 0, st2).pe == 0);
  CHECK(rt::decide(rt::Policy::Rr, mixed, gemm(), b4, 0, st2).pe == 1);
  CHECK(rt::decide(rt::Policy::Rr, mixed, fft(8), b4, 0, st2).pe == 2);
  CHECK(rt::decide(rt::Policy::Rr, mixed, gemm(), b4, 0, st2).pe == 0);
}

TEST_CASE("EFT weighs queue depth against raw speed") {
  rt::Platform plat = rt::make_cpu_fft_platform(1, 1, 25000, 128);
  rt::SchedulerState st;

  // Accel busy until 10us: 10000+128 still beats an idle CPU's 25000.
  std::vector<std::uint64_t> busy = {0, 10000};
  rt::Decision d = rt::decide(rt::Policy::Eft, plat, fft(512), busy, 0, st);
  CHECK(d.pe == 1);
  CHECK(d.start_ns == 10000);
  CHECK(d.end_ns == 10128);

  // Backlog past the crossover point: the idle CPU wins.
  busy = {0, 30000};
  d = rt::decide(rt::Policy::Eft, plat, fft(512), busy, 0, st);
  CHECK(d.pe == 0);
  CHECK(d.end_ns == 25000);

  // `now` floors the start on an idle PE.
  busy = {0, 30000};
  d = rt::decide(rt::Policy::Eft, plat, fft(512), busy, 4000, st);
  CHECK(d.pe == 0);
  CHECK(d.start_ns == 4000);
  CHECK(d.end_ns == 29000);

  // Finish-time tie: lowest PE id.
  rt::Platform twin = rt::make_cpu_fft_platform(2, 0, 500, 0);
  std::vector<std::uint64_t> b2 = {0, 0};
  CHECK(rt::decide(rt::Policy::Eft, twin, fft(8), b2, 0, st).pe == 0);

  CHECK_THROWS_AS(
      rt::decide(rt::Policy::Eft, rt::make_fft_grid(2, 10), gemm(),
                 std::vector<std::uint64_t>(2, 0), 0, st),
      rt::EngineError);
}

TEST_CASE("serial host reference prefers the lowest CPU with an entry") {
  rt::Platform plat = rt::make_cpu_fft_platform(1, 1, 25000, 128);
  CHECK(rt::serial_host_time(plat, fft(512)) == 25000);
  rt::Platform grid = rt::make_fft_grid(4, 128);
  CHECK(rt::serial_host_time(grid, fft(512)) == 128);
}

TEST_CASE("phase-round law: p tasks over k equal PEs take ceil(p/k) rounds") {
  rt::SchedulerState st;
  for (const auto& [p, k, d] : {std::tuple<std::size_t, int, std::uint64_t>{
                                    8, 4, 128},
                                {7, 3, 100},
                                {5, 5, 77},
                                {16, 2, 9}}) {
    sched::ParallelProgram pp = fft_burst(p);
    rt::Platform grid = rt::make_fft_grid(k, d);
    for (rt::Policy pol : {rt::Policy::Eft, rt::Policy::Rr}) {
      auto r = rt::simulate({{&pp, 0, 0}}, grid, {pol, 0});
      const std::uint64_t rounds = (p + k - 1) / k;
      CAPTURE(p);
      CAPTURE(k);
      CHECK(r.stats.makespan_ns == rounds * d);
      check_pe_exclusive(r.gantt);
    }
    // MET funnels everything to the lowest tied PE: p serialized rounds.
    auto met = rt::simulate({{&pp, 0, 0}}, grid, {rt::Policy::Met, 0});
    CHECK(met.stats.makespan_ns == p * d);
    for (const auto& g : met.gantt) CHECK(g.pe == 0);
  }
}

TEST_CASE("pulse doppler phase structure on FFT grids") {
  sched::ParallelProgram pp = pipeline("pulse_doppler");

  auto r4 = rt::simulate({{&pp, 0, 0}}, rt::make_fft_grid(4, 128),
                         {rt::Policy::Eft, 0});
  CHECK(r4.stats.makespan_ns == 512);
  REQUIRE(r4.stats.phases.size() == 3);
  CHECK(r4.stats.phases[0].tasks == 8);
  CHECK(r4.stats.phases[0].end_ns - r4.stats.phases[0].start_ns == 256);
  CHECK(r4.stats.phases[1].tasks == 4);
  CHECK(r4.stats.phases[1].end_ns - r4.stats.phases[1].start_ns == 128);
  CHECK(r4.stats.phases[2].tasks == 4);
  CHECK(r4.stats.phases[2].end_ns - r4.stats.phases[2].start_ns == 128);
  CHECK(r4.stats.serial_tasks_ns == 16 * 128);
  CHECK(r4.stats.parallel_tasks_ns == 512);
  check_pe_exclusive(r4.gantt);

  auto r8 = rt::simulate({{&pp, 0, 0}}, rt::make_fft_grid(8, 128),
                         {rt::Policy::Eft, 0});
  CHECK(r8.stats.makespan_ns == 384);
  CHECK(r8.stats.parallel_tasks_ns == 384);
  CHECK(r8.stats.serial_tasks_ns == 2048);

  // Serial sections bill type1_cost each and shift the timeline rigidly.
  const std::uint64_t t1 = pp.task_count() - 16;
  auto rc = rt::simulate({{&pp, 0, 0}}, rt::make_fft_grid(4, 128),
                         {rt::Policy::Eft, 10});
  CHECK(rc.stats.makespan_ns == 512 + 10 * t1);
  CHECK(rc.stats.serial_app_ns == rc.stats.serial_tasks_ns + 10 * t1);
}

TEST_CASE("virtual execution is deterministic") {
  sched::ParallelProgram pp = pipeline("radar_correlator");
  rt::Platform plat = rt::make_cpu_fft_platform(3, 1, 20000, 10000);
  std::vector<rt::Job> jobs = {{&pp, 0, 0}, {&pp, 5000, 1}, {&pp, 5000, 2}};
  for (rt::Policy pol : {rt::Policy::Met, rt::Policy::Rr, rt::Policy::Eft}) {
    auto a = rt::simulate(jobs, plat, {pol, 25});
    auto b = rt::simulate(jobs, plat, {pol, 25});
    CHECK(dump(a) == dump(b));
    check_pe_exclusive(a.gantt);
  }
}

TEST_CASE("staggered arrivals pipeline through the platform") {
  sched::ParallelProgram pp = fft_burst(4);
  rt::Platform grid = rt::make_fft_grid(2, 100);

  // Disjoint in time: the second instance sees an idle platform.
  auto r = rt::simulate({{&pp, 0, 0}, {&pp, 1000, 1}}, grid,
                        {rt::Policy::Eft, 0});
  CHECK(r.stats.makespan_ns == 1200);
  CHECK(r.stats.app_spans.at(0).arrival_ns == 0);
  CHECK(r.stats.app_spans.at(0).completion_ns == 200);
  CHECK(r.stats.app_spans.at(1).arrival_ns == 1000);
  CHECK(r.stats.app_spans.at(1).first_start_ns == 1000);
  CHECK(r.stats.app_spans.at(1).completion_ns == 1200);
  CHECK(r.stats.pe_busy_ns.at(0) == 400);
  CHECK(r.stats.pe_busy_ns.at(1) == 400);

  // Overlapping: the late job queues behind the first.
  auto o = rt::simulate({{&pp, 0, 0}, {&pp, 50, 1}}, grid,
                        {rt::Policy::Eft, 0});
  CHECK(o.stats.app_spans.at(0).completion_ns == 200);
  CHECK(o.stats.app_spans.at(1).first_start_ns == 200);
  CHECK(o.stats.app_spans.at(1).completion_ns == 400);
  CHECK(o.stats.makespan_ns == 400);
  check_pe_exclusive(o.gantt);
}

TEST_CASE("serial-only programs never touch a PE") {
  sched::ParallelProgram pp = serial_only(3);
  auto r = rt::simulate({{&pp, 0, 0}}, rt::make_fft_grid(1, 10),
                        {rt::Policy::Eft, 7});
  CHECK(r.stats.makespan_ns == 21);
  CHECK(r.gantt.empty());
  CHECK(r.stats.phases.empty());
  CHECK(r.stats.serial_tasks_ns == 0);
  CHECK(r.stats.parallel_tasks_ns == 0);
  CHECK(r.stats.serial_app_ns == 21);
  CHECK(r.stats.app_spans.at(0).first_start_ns == 0);
  CHECK(r.stats.app_spans.at(0).last_end_ns == 21);
  CHECK(r.stats.pe_busy_ns.empty());
}

TEST_CASE("malformed job sets are rejected") {
  sched::ParallelProgram pp = fft_burst(2);
  rt::Platform grid = rt::make_fft_grid(1, 10);
  CHECK_THROWS_AS(rt::simulate({{nullptr, 0, 0}}, grid, {}), rt::EngineError);
  CHECK_THROWS_AS(rt::simulate({{&pp, 0, 5}, {&pp, 10, 5}}, grid, {}),
                  rt::EngineError);
  auto empty = rt::simulate({}, grid, {});
  CHECK(empty.stats.makespan_ns == 0);
  CHECK(empty.gantt.empty());
}
