#pragma once

#include <condition_variable>
#include <cstdint>
#include <map>
#include <mutex>
#include <stdexcept>
#include <string>
#include <vector>

#include "taskweave/engine.hpp"
#include "taskweave/platform.hpp"
#include "taskweave/schedgen.hpp"

namespace taskweave::rt {

struct RuntimeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Fork-join conditional wait: each completed task of a parallel section
/// increments the counter once; the host resumes exactly when the counter
/// reaches the section's task count.
class CounterBarrier {
 public:
  explicit CounterBarrier(std::size_t target);

  void increment();  // throws RuntimeError past target
  void wait();       // blocks until count == target
  std::size_t count() const;
  std::size_t target() const { return target_; }

 private:
  mutable std::mutex mu_;
  std::condition_variable cv_;
  std::size_t count_ = 0;
  std::size_t target_;
};

struct JobSubmission {
  sched::ParallelProgram program;
  std::uint64_t arrival_ns = 0;
  std::uint32_t instance = 0;
};

struct RunConfig {
  Policy policy = Policy::Eft;
  // Virtual clock: scheduling decisions replay the discrete-event core, so
  // assignments and the Gantt are deterministic; workers still execute the
  // kernels for real. Off: decisions react to measured wall-clock times.
  bool model_time = false;
  std::uint64_t jitter_ns = 0;      // random extra worker delay bound
  std::uint64_t seed = 0;           // jitter seed
  std::uint64_t type1_cost_ns = 0;  // model-time cost per serial task
};

struct RunResult {
  std::map<std::uint32_t, std::vector<std::uint8_t>> outputs;
  std::vector<GanttEntry> gantt;  // sorted by (pe, start)
  EngineStats stats;
};

/// Executes dynamically arriving ParallelPrograms over the emulated
/// platform: a manager owns the ready queue and scheduler state, one worker
/// serves each PE, and one host control flow per instance runs its serial
/// sections and blocks on the counter barriers. Requires >= 1 CPU core.
RunResult run_workload(const std::vector<JobSubmission>& jobs,
                       const Platform& plat, const RunConfig& cfg);

/// Serial replay of an engine schedule: sections in order, parallel-section
/// members ordered by their Gantt (start, pe) — proves an assignment's
/// functional equivalence without threads.
std::vector<std::uint8_t> replay_assignments(
    const sched::ParallelProgram& pp, const std::vector<GanttEntry>& gantt,
    std::uint32_t instance = 0);

struct WorkloadEntry {
  std::string program_path;
  std::uint64_t arrival_ns = 0;
  std::uint32_t count = 1;
};

/// Workload file: [{program_path, arrival_ns, count}], arrivals
/// non-decreasing; count expands to that many instances. Instance ids are
/// assigned in file order starting at 0.
std::vector<JobSubmission> load_workload(const std::string& path);
void save_workload(const std::vector<WorkloadEntry>& entries,
                   const std::string& path);

}  // namespace taskweave::rt
