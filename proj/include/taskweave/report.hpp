#pragma once

// Run artifacts and human-readable views: the Gantt CSV, the stats JSON, the
// ASCII and SVG charts, and the comparison tables assembled by the CLI's
// report command.

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "taskweave/engine.hpp"

namespace taskweave::report {

// One engine run, as persisted to disk. `mode` is "virtual", "modeltime" or
// "wallclock"; `policy` is the scheduler name. Output hashes let a later
// report cross-check functional agreement between runs without the payloads.
struct RunRecord {
  std::string mode;
  std::string policy;
  rt::EngineStats stats;
  std::map<std::uint32_t, std::uint64_t> output_hashes;
};

// Gantt CSV, one dispatched task per row:
//   instance,node,kernel,pe,start_ns,end_ns
void write_gantt_csv(const std::vector<rt::GanttEntry>& gantt,
                     const std::string& path);
std::vector<rt::GanttEntry> read_gantt_csv(const std::string& path);

void save_run_record(const RunRecord& rec, const std::string& path);
RunRecord load_run_record(const std::string& path);

// Percentage improvements of the parallel execution over the single-PE serial
// reference; `tasks_only` ignores serial-section time on both sides.
struct Reduction {
  double whole_app_pct = 0.0;
  double tasks_only_pct = 0.0;
};
Reduction compute_reduction(const rt::EngineStats& s);

// Text chart, one lane per PE, instances drawn as their decimal digit
// (instance mod 10), idle time as '.'.
std::string ascii_gantt(const std::vector<rt::GanttEntry>& gantt,
                        std::size_t width = 96);

// Standalone SVG, one lane per PE, tasks colored by instance mod 10. Each
// rect carries a <title> tooltip with the task identity.
std::string svg_gantt(const std::vector<rt::GanttEntry>& gantt);

// Comparison tables over several runs (typically one per policy).
std::string makespan_table(const std::vector<RunRecord>& runs);
std::string reduction_table(const std::vector<RunRecord>& runs);

// Full text report: per-run summaries plus the comparison tables.
std::string render_report(const std::vector<RunRecord>& runs);

}  // namespace taskweave::report
