#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "taskweave/platform.hpp"
#include "taskweave/schedgen.hpp"

namespace taskweave::rt {

struct EngineError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class Policy { Met, Rr, Eft };

std::string to_string(Policy p);
Policy policy_from_string(const std::string& s);

/// One scheduled task execution. Only parallel-section (Type-2) tasks occupy
/// PEs; serial sections run on the owning instance's host.
struct GanttEntry {
  std::uint32_t instance = 0;
  dep::NodeIndex node = 0;
  std::uint32_t section = 0;
  std::string kernel;  // time signature
  int pe = 0;
  std::uint64_t start_ns = 0;
  std::uint64_t end_ns = 0;
};

struct PhaseSpan {
  std::uint32_t instance = 0;
  std::uint32_t section = 0;
  std::uint64_t start_ns = 0;
  std::uint64_t end_ns = 0;
  std::size_t tasks = 0;
};

struct AppSpan {
  std::uint64_t arrival_ns = 0;
  std::uint64_t first_start_ns = 0;
  std::uint64_t last_end_ns = 0;
  std::uint64_t completion_ns = 0;
};

struct EngineStats {
  std::uint64_t makespan_ns = 0;
  std::map<std::uint32_t, AppSpan> app_spans;          // by instance
  std::map<int, std::uint64_t> pe_busy_ns;             // by pe id
  std::vector<PhaseSpan> phases;                       // (instance, section)
  // Reference serial cost of all dispatched tasks on a single host PE (the
  // lowest-id CPU holding a table entry, else the lowest-id PE), and the sum
  // of realized parallel-section spans: the two ends of the tasks-only
  // reduction metric.
  std::uint64_t serial_tasks_ns = 0;
  std::uint64_t parallel_tasks_ns = 0;
  // serial_tasks_ns plus the modeled cost of every serial-section task: the
  // single-PE whole-application reference.
  std::uint64_t serial_app_ns = 0;
};

struct Job {
  const sched::ParallelProgram* program = nullptr;
  std::uint64_t arrival_ns = 0;
  std::uint32_t instance = 0;
};

struct SchedulerState {
  std::size_t rr_cursor = 0;
};

struct Decision {
  int pe = 0;
  std::uint64_t start_ns = 0;
  std::uint64_t end_ns = 0;
};

/// One task-to-PE decision over the modeled platform. MET picks the PE with
/// the smallest table entry regardless of load; RR cycles one global cursor
/// over supporting PEs; EFT minimizes max(pe_free, now) + dispatch +
/// transfer (accelerators) + exec. Ties fall to the lowest PE id.
Decision decide(Policy policy, const Platform& plat,
                const tir::KernelSpec& kernel,
                const std::vector<std::uint64_t>& busy_until,
                std::uint64_t now, SchedulerState& st);

/// Modeled occupancy of one task on one PE (dispatch + transfer + exec).
std::uint64_t modeled_duration(const Platform& plat, const Pe& pe,
                               const tir::KernelSpec& kernel);

/// Exec time on the serial host reference PE: the lowest-id CPU holding a
/// table entry for the kernel, else the lowest-id PE holding one; 0 if none.
std::uint64_t serial_host_time(const Platform& plat,
                               const tir::KernelSpec& k);

/// Hooks let the concurrent runtime piggyback real execution on the virtual
/// event loop; the simulator leaves them empty.
struct EngineHooks {
  // A task was committed to `pe`; its Start event fired at virtual time
  // `start`. Dispatch order per PE equals virtual start order.
  std::function<void(const Job&, const sched::TaskDesc&, int pe,
                     std::uint64_t start)>
      on_start;
  // Invoked before the Finish event commits; block until the dispatched
  // task has really completed.
  std::function<void(const Job&, const sched::TaskDesc&)> before_finish;
  // A serial-section task reached its turn in the instance's program order.
  std::function<void(const Job&, const sched::TaskDesc&)> on_serial;
};

struct EngineConfig {
  Policy policy = Policy::Eft;
  std::uint64_t type1_cost_ns = 0;  // modeled cost of one serial-section task
};

struct EngineResult {
  std::vector<GanttEntry> gantt;  // sorted by (pe, start)
  EngineStats stats;
};

/// Discrete-event virtual-time execution of the jobs over the platform.
/// Events are processed in (time, kind: Finish < Arrival < Ready < Start,
/// instance, node) order; ready tasks dispatch eagerly in FIFO order.
/// Deterministic: identical inputs give byte-identical results.
EngineResult run_virtual(const std::vector<Job>& jobs, const Platform& plat,
                         const EngineConfig& cfg,
                         const EngineHooks& hooks = {});

/// DS3-style simulation: run_virtual with no hooks, single-threaded.
EngineResult simulate(const std::vector<Job>& jobs, const Platform& plat,
                      const EngineConfig& cfg);

}  // namespace taskweave::rt
