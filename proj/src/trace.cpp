#include "taskweave/trace.hpp"
#include "taskweave/util.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

namespace taskweave::tracer {

using nlohmann::json;

std::string to_string(EventKind k) {
  switch (k) {
    case EventKind::TaskEnter: return "task_enter";
    case EventKind::TaskExit: return "task_exit";
    case EventKind::BBEnter: return "bb_enter";
    case EventKind::BBExit: return "bb_exit";
    case EventKind::Load: return "load";
    case EventKind::Store: return "store";
    case EventKind::MemCpy: return "memcpy";
    case EventKind::MemSet: return "memset";
    case EventKind::MemMove: return "memmove";
  }
  return "task_enter";
}

EventKind event_kind_from_string(const std::string& s) {
  if (s == "task_enter") return EventKind::TaskEnter;
  if (s == "task_exit") return EventKind::TaskExit;
  if (s == "bb_enter") return EventKind::BBEnter;
  if (s == "bb_exit") return EventKind::BBExit;
  if (s == "load") return EventKind::Load;
  if (s == "store") return EventKind::Store;
  if (s == "memcpy") return EventKind::MemCpy;
  if (s == "memset") return EventKind::MemSet;
  if (s == "memmove") return EventKind::MemMove;
  throw TraceError("unknown event kind: " + s);
}

TraceEvent task_enter(tir::TaskKind kind, tir::KernelId kernel,
                      tir::SiteId site) {
  TraceEvent ev;
  ev.kind = EventKind::TaskEnter;
  ev.task_kind = kind;
  ev.kernel = kernel;
  ev.site = site;
  return ev;
}

TraceEvent task_exit() {
  TraceEvent ev;
  ev.kind = EventKind::TaskExit;
  return ev;
}

TraceEvent bb_enter(std::int32_t bb) {
  TraceEvent ev;
  ev.kind = EventKind::BBEnter;
  ev.bb = bb;
  return ev;
}

TraceEvent bb_exit(std::int32_t bb) {
  TraceEvent ev;
  ev.kind = EventKind::BBExit;
  ev.bb = bb;
  return ev;
}

TraceEvent load_event(std::uint64_t addr, std::uint64_t bytes) {
  TraceEvent ev;
  ev.kind = EventKind::Load;
  ev.addr = addr;
  ev.bytes = bytes;
  return ev;
}

TraceEvent store_event(std::uint64_t addr, std::uint64_t bytes) {
  TraceEvent ev;
  ev.kind = EventKind::Store;
  ev.addr = addr;
  ev.bytes = bytes;
  return ev;
}

TraceEvent memcpy_event(std::uint64_t src, std::uint64_t dst,
                        std::uint64_t bytes) {
  TraceEvent ev;
  ev.kind = EventKind::MemCpy;
  ev.addr = src;
  ev.addr2 = dst;
  ev.bytes = bytes;
  return ev;
}

TraceEvent memset_event(std::uint64_t dst, std::uint64_t bytes) {
  TraceEvent ev;
  ev.kind = EventKind::MemSet;
  ev.addr = dst;
  ev.bytes = bytes;
  return ev;
}

TraceEvent memmove_event(std::uint64_t src, std::uint64_t dst,
                         std::uint64_t bytes) {
  TraceEvent ev;
  ev.kind = EventKind::MemMove;
  ev.addr = src;
  ev.addr2 = dst;
  ev.bytes = bytes;
  return ev;
}

namespace {

json event_to_json(const TraceEvent& ev) {
  json j;
  j["seq"] = ev.seq;
  j["kind"] = to_string(ev.kind);
  switch (ev.kind) {
    case EventKind::TaskEnter:
      j["task_kind"] = tir::to_string(ev.task_kind);
      j["kernel"] = tir::to_string(ev.kernel);
      j["site"] = ev.site;
      break;
    case EventKind::TaskExit:
      break;
    case EventKind::BBEnter:
    case EventKind::BBExit:
      j["bb"] = ev.bb;
      break;
    case EventKind::Load:
    case EventKind::Store:
      j["addr"] = ev.addr;
      j["bytes"] = ev.bytes;
      break;
    case EventKind::MemCpy:
    case EventKind::MemMove:
      j["src"] = ev.addr;
      j["dst"] = ev.addr2;
      j["bytes"] = ev.bytes;
      break;
    case EventKind::MemSet:
      j["dst"] = ev.addr;
      j["bytes"] = ev.bytes;
      break;
  }
  return j;
}

TraceEvent event_from_json(const json& j) {
  TraceEvent ev;
  ev.seq = j.at("seq").get<std::uint64_t>();
  ev.kind = event_kind_from_string(j.at("kind").get<std::string>());
  switch (ev.kind) {
    case EventKind::TaskEnter:
      ev.task_kind =
          tir::task_kind_from_string(j.at("task_kind").get<std::string>());
      ev.kernel = tir::kernel_id_from_string(j.at("kernel").get<std::string>());
      ev.site = j.at("site").get<tir::SiteId>();
      break;
    case EventKind::TaskExit:
      break;
    case EventKind::BBEnter:
    case EventKind::BBExit:
      ev.bb = j.at("bb").get<std::int32_t>();
      break;
    case EventKind::Load:
    case EventKind::Store:
      ev.addr = j.at("addr").get<std::uint64_t>();
      ev.bytes = j.at("bytes").get<std::uint64_t>();
      break;
    case EventKind::MemCpy:
    case EventKind::MemMove:
      ev.addr = j.at("src").get<std::uint64_t>();
      ev.addr2 = j.at("dst").get<std::uint64_t>();
      ev.bytes = j.at("bytes").get<std::uint64_t>();
      break;
    case EventKind::MemSet:
      ev.addr = j.at("dst").get<std::uint64_t>();
      ev.bytes = j.at("bytes").get<std::uint64_t>();
      break;
  }
  return ev;
}

}  // namespace

void write_trace(const Trace& t, std::ostream& out) {
  json header;
  header["version"] = 1;
  header["program_hash"] = t.program_hash;
  if (!t.runtime_values.empty()) header["runtime_values"] = t.runtime_values;
  out << header.dump() << "\n";
  for (const auto& ev : t.events) {
    out << event_to_json(ev).dump() << "\n";
  }
}

void write_trace(const Trace& t, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open for writing: " + path);
  write_trace(t, out);
}

Trace read_trace(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw IoError("missing trace header");
  Trace t;
  std::uint64_t last_seq = 0;
  bool have_any = false;
  try {
    const json header = json::parse(line);
    if (header.value("version", 0) != 1) {
      throw IoError("unsupported trace version");
    }
    t.program_hash = header.value("program_hash", "");
    if (header.contains("runtime_values")) {
      t.runtime_values =
          header.at("runtime_values").get<std::map<std::string, std::int64_t>>();
    }
  } catch (const json::exception& e) {
    throw IoError(std::string("malformed trace header: ") + e.what());
  }
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      t.events.push_back(event_from_json(json::parse(line)));
    } catch (const json::exception& e) {
      std::ostringstream os;
      os << "malformed trace record at line " << line_no;
      if (have_any) os << " (last valid seq " << last_seq << ")";
      os << ": " << e.what();
      throw IoError(os.str());
    }
    last_seq = t.events.back().seq;
    have_any = true;
  }
  return t;
}

Trace read_trace_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open: " + path);
  return read_trace(in);
}

void check_trace(const Trace& t) {
  bool in_task = false;
  bool first = true;
  std::uint64_t prev_seq = 0;
  for (const auto& ev : t.events) {
    if (!first && ev.seq <= prev_seq) {
      throw TraceError("sequence numbers not strictly increasing at " +
                       std::to_string(ev.seq));
    }
    prev_seq = ev.seq;
    first = false;
    switch (ev.kind) {
      case EventKind::TaskEnter:
        if (in_task) {
          throw TraceError("nested TaskEnter at seq " + std::to_string(ev.seq));
        }
        in_task = true;
        break;
      case EventKind::TaskExit:
        if (!in_task) {
          throw TraceError("TaskExit without TaskEnter at seq " +
                           std::to_string(ev.seq));
        }
        in_task = false;
        break;
      case EventKind::Load:
      case EventKind::Store:
      case EventKind::MemCpy:
      case EventKind::MemSet:
      case EventKind::MemMove:
        if (ev.bytes == 0) {
          throw TraceError("zero-length memory event at seq " +
                           std::to_string(ev.seq));
        }
        break;
      default:
        break;
    }
  }
  if (in_task) throw TraceError("unbalanced TaskEnter at end of trace");
}

}  // namespace taskweave::tracer
