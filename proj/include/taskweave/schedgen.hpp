#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "taskweave/depanalysis.hpp"
#include "taskweave/kernels.hpp"
#include "taskweave/tir.hpp"

namespace taskweave::sched {

struct SchedError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class RegionKind { Type1, Type2 };

/// One fork-join step: Type-1 regions run serially on the host thread,
/// Type-2 regions fork their tasks and join on a counter barrier.
struct Region {
  RegionKind kind = RegionKind::Type1;
  std::vector<dep::NodeIndex> tasks;  // ascending serial index
  std::size_t counter_target = 0;     // |tasks| for Type-2 regions
};

struct ScheduleDag {
  std::vector<Region> regions;
  std::vector<std::size_t> region_of;  // node index -> region position
};

/// Alternating ready-set construction: exhaust ready Type-1 nodes into one
/// region (absorbing nodes that become ready during the sweep), then snapshot
/// the ready Type-2 nodes into one fork-join region; repeat. Empty steps are
/// skipped.
ScheduleDag generate_schedule(const dep::ControlDag& cdag,
                              const dep::DataDag& ddag);

/// A serial-order pair (first.index < second.index) whose order the schedule
/// failed to preserve for some byte, or that races inside one Type-2 region.
struct Violation {
  dep::NodeIndex first = 0;
  dep::NodeIndex second = 0;
  std::string detail;
};

/// Byte-level recheck: replays stores region by region (Type-2 members
/// unordered) and confirms every loaded byte keeps its serial last writer.
/// RAW analysis alone does not order WAR/WAW pairs; this is the guard.
std::vector<Violation> verify_reorder_safety(
    const ScheduleDag& sched, const std::vector<dep::NodeTuples>& tuples);

/// Output bytes append in task order, a side effect invisible to the memory
/// analysis: chains consecutive WRITE_DATA nodes so reordering cannot permute
/// program output.
dep::DataDag augment_output_order(const dep::ControlDag& cdag,
                                  dep::DataDag ddag);

/// Fixed point of generate + verify: each violation adds its serial-order
/// pair as an ordering edge and the schedule is regenerated. Terminates
/// because edges only grow toward the full serial chain.
ScheduleDag generate_safe_schedule(const dep::ControlDag& cdag,
                                   dep::DataDag ddag,
                                   const std::vector<dep::NodeTuples>& tuples,
                                   int* rounds = nullptr);

struct SliceDesc {
  std::string buffer;
  std::uint64_t offset = 0;
  std::uint64_t len = 0;
};

struct TaskDesc {
  dep::NodeIndex node = 0;  // serial index in the control DAG
  tir::SiteId site = -1;
  std::string name;
  tir::KernelSpec kernel;
  std::vector<SliceDesc> reads;
  std::vector<SliceDesc> writes;
};

struct Section {
  RegionKind kind = RegionKind::Type1;
  std::size_t counter_target = 0;  // parallel sections: == tasks.size()
  std::vector<TaskDesc> tasks;
};

/// The fork-join program consumed by the execution engines.
struct ParallelProgram {
  std::string name;
  std::string source_hash;  // hash of the flattened program it came from
  std::vector<tir::Buffer> buffers;
  std::vector<Section> sections;

  std::size_t task_count() const;
};

/// Binds schedule regions to the flattened program's dynamic tasks. The
/// flattened statement order must equal the traced task order; kernel or
/// kind mismatches abort.
ParallelProgram emit_parallel_program(const tir::TirProgram& fp,
                                      const ScheduleDag& sched);

/// Executes one task descriptor against the arena; WRITE_DATA payloads
/// append to `output` when given.
void exec_task_desc(const TaskDesc& d, tir::Arena& arena,
                    std::vector<std::uint8_t>* output);

/// Reference executor: sections in order, parallel-section members in an
/// arbitrary permutation (seeded) — used to prove permutation safety.
std::vector<std::uint8_t> run_sections_serially(
    const ParallelProgram& pp, std::optional<std::uint64_t> shuffle_seed = {});

void save_parallel_program(const ParallelProgram& pp, const std::string& path);
ParallelProgram load_parallel_program(const std::string& path);

}  // namespace taskweave::sched
