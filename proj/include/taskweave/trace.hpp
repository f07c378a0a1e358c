#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "taskweave/tir.hpp"

namespace taskweave::tracer {

enum class EventKind {
  TaskEnter,
  TaskExit,
  BBEnter,
  BBExit,
  Load,
  Store,
  MemCpy,
  MemSet,
  MemMove,
};

std::string to_string(EventKind k);
EventKind event_kind_from_string(const std::string& s);

/// One dynamic trace record. Fields beyond `seq`/`kind` are meaningful only
/// for the kinds that carry them.
struct TraceEvent {
  std::uint64_t seq = 0;
  EventKind kind = EventKind::TaskEnter;
  tir::TaskKind task_kind = tir::TaskKind::Type1;  // TaskEnter
  tir::KernelId kernel = tir::KernelId::Glue;      // TaskEnter
  tir::SiteId site = -1;                           // TaskEnter
  std::int32_t bb = -1;                            // BBEnter / BBExit
  std::uint64_t addr = 0;    // Load/Store addr; MemCpy/MemMove src; MemSet dst
  std::uint64_t addr2 = 0;   // MemCpy/MemMove dst
  std::uint64_t bytes = 0;   // memory event length

  bool operator==(const TraceEvent&) const = default;
};

TraceEvent task_enter(tir::TaskKind kind, tir::KernelId kernel,
                      tir::SiteId site);
TraceEvent task_exit();
TraceEvent bb_enter(std::int32_t bb);
TraceEvent bb_exit(std::int32_t bb);
TraceEvent load_event(std::uint64_t addr, std::uint64_t bytes);
TraceEvent store_event(std::uint64_t addr, std::uint64_t bytes);
TraceEvent memcpy_event(std::uint64_t src, std::uint64_t dst,
                        std::uint64_t bytes);
TraceEvent memset_event(std::uint64_t dst, std::uint64_t bytes);
TraceEvent memmove_event(std::uint64_t src, std::uint64_t dst,
                         std::uint64_t bytes);

struct Trace {
  std::vector<TraceEvent> events;
  std::string program_hash;
  std::map<std::string, std::int64_t> runtime_values;

  bool operator==(const Trace&) const = default;
};

/// Assigns sequence numbers and appends; the canonical way to build traces.
class TraceBuilder {
 public:
  void push(TraceEvent ev) {
    ev.seq = next_++;
    trace_.events.push_back(ev);
  }
  Trace& trace() { return trace_; }

 private:
  Trace trace_;
  std::uint64_t next_ = 0;
};

struct TraceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void write_trace(const Trace& t, std::ostream& out);
void write_trace(const Trace& t, const std::string& path);
Trace read_trace(std::istream& in);
Trace read_trace_file(const std::string& path);

/// Structural check: strictly increasing seq, strictly alternating
/// TaskEnter/TaskExit, positive memory lengths. Throws TraceError.
void check_trace(const Trace& t);

}  // namespace taskweave::tracer
