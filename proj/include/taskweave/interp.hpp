#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "taskweave/kernels.hpp"
#include "taskweave/tir.hpp"
#include "taskweave/trace.hpp"

namespace taskweave::tracer {

struct InterpError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// One dynamic task execution in serial program order.
struct TaskInstance {
  std::size_t index = 0;
  tir::SiteId site = -1;
  std::string name;
  tir::KernelSpec kernel;
  std::vector<tir::ResolvedSlice> reads;
  std::vector<tir::ResolvedSlice> writes;
};

/// Optional walk callbacks; any of them may be left empty.
struct ExecHooks {
  std::function<void(const TaskInstance&)> on_task;
  std::function<void(tir::SiteId, const std::string& var, std::int64_t trips)>
      on_loop;
  std::function<void(tir::SiteId, const std::string& slot,
                     std::size_t candidate)>
      on_indirect;
  std::function<void(tir::SiteId, const std::string& callee)> on_call;
};

struct RunResult {
  Trace trace;
  std::vector<std::uint8_t> output;
};

/// Serial reference execution with full instrumentation: task enter/exit,
/// basic-block markers, and every byte-level memory access.
RunResult interpret_and_trace(const tir::TirProgram& p);

/// Serial reference execution without instrumentation; returns the program
/// output (concatenated WRITE_DATA payloads).
std::vector<std::uint8_t> interpret(const tir::TirProgram& p);

/// Walks the program, resolving every slice, without touching memory.
std::vector<TaskInstance> enumerate_dynamic_tasks(const tir::TirProgram& p);

/// Generic entry point backing the helpers above.
void walk_program(const tir::TirProgram& p, const ExecHooks& hooks,
                  tir::Arena* arena, tir::MemSink* sink, TraceBuilder* tb,
                  std::vector<std::uint8_t>* output, bool execute);

/// Control observations from the instrumented run, consumed by flattening.
struct Profile {
  std::string program_hash;
  std::map<tir::SiteId, std::int64_t> loop_trips;
  std::map<std::string, std::size_t> indirect_targets;  // slot -> candidate
  std::map<tir::SiteId, std::string> call_targets;      // call site -> callee
  std::map<std::string, std::int64_t> runtime_values;
};

/// Profiles one run. Throws InterpError if a call slot resolves to more than
/// one candidate over the run (polymorphic call sites cannot be
/// devirtualized).
Profile profile_program(const tir::TirProgram& p);

void save_profile(const Profile& prof, const std::string& path);
Profile load_profile(const std::string& path);

}  // namespace taskweave::tracer
