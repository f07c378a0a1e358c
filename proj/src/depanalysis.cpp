#include "taskweave/depanalysis.hpp"
#include "taskweave/util.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace taskweave::dep {

using nlohmann::json;
using tracer::EventKind;
using tracer::Trace;
using tracer::TraceEvent;

void TupleSet::add(std::uint64_t start, std::uint64_t bytes, NodeIndex label) {
  if (bytes == 0) return;
  std::uint64_t end = start + bytes - 1;
  std::uint64_t count = 1;
  // Absorb every existing tuple that overlaps or touches [start, end].
  auto it = map_.lower_bound(start);
  if (it != map_.begin()) {
    auto prev = std::prev(it);
    if (prev->second.end_addr + 1 >= start) it = prev;
  }
  while (it != map_.end() && (end == ~0ull || it->first <= end + 1)) {
    start = std::min(start, it->first);
    end = std::max(end, it->second.end_addr);
    count += it->second.access_count;
    it = map_.erase(it);
  }
  map_[start] = {start, end, count, end - start + 1, label};
}

std::uint64_t TupleSet::total_bytes() const {
  std::uint64_t n = 0;
  for (const auto& [start, t] : map_) n += t.byte_count;
  return n;
}

void LastWriterMap::record(std::uint64_t start, std::uint64_t end,
                           NodeIndex writer) {
  auto it = map_.upper_bound(start);
  if (it != map_.begin()) {
    auto prev = std::prev(it);
    if (prev->second.end >= start) it = prev;
  }
  while (it != map_.end() && it->first <= end) {
    const std::uint64_t s = it->first;
    const Interval old = it->second;
    it = map_.erase(it);
    if (s < start) map_.emplace(s, Interval{start - 1, old.writer});
    if (old.end > end) map_.emplace(end + 1, Interval{old.end, old.writer});
  }
  map_.emplace(start, Interval{end, writer});
}

void LastWriterMap::query(std::uint64_t start, std::uint64_t end,
                          std::vector<NodeIndex>& out) const {
  auto it = map_.upper_bound(start);
  if (it != map_.begin()) {
    auto prev = std::prev(it);
    if (prev->second.end >= start) it = prev;
  }
  for (; it != map_.end() && it->first <= end; ++it) {
    if (std::find(out.begin(), out.end(), it->second.writer) == out.end()) {
      out.push_back(it->second.writer);
    }
  }
}

std::int64_t LastWriterMap::writer_of(std::uint64_t addr) const {
  auto it = map_.upper_bound(addr);
  if (it == map_.begin()) return -1;
  --it;
  return it->second.end >= addr ? static_cast<std::int64_t>(it->second.writer)
                                : -1;
}

std::vector<std::tuple<std::uint64_t, std::uint64_t, std::int64_t>>
LastWriterMap::segments(std::uint64_t start, std::uint64_t end) const {
  std::vector<std::tuple<std::uint64_t, std::uint64_t, std::int64_t>> out;
  std::uint64_t pos = start;
  auto it = map_.upper_bound(start);
  if (it != map_.begin()) {
    auto prev = std::prev(it);
    if (prev->second.end >= start) it = prev;
  }
  for (; it != map_.end() && it->first <= end; ++it) {
    if (it->first > pos) out.emplace_back(pos, it->first - 1, -1);
    const std::uint64_t s = std::max(pos, it->first);
    const std::uint64_t e = std::min(end, it->second.end);
    out.emplace_back(s, e, static_cast<std::int64_t>(it->second.writer));
    if (e == end) return out;
    pos = e + 1;
  }
  if (pos <= end) out.emplace_back(pos, end, -1);
  return out;
}

namespace {

struct Segment {
  ControlDagNode node;
  std::vector<const TraceEvent*> mem;
};

bool is_mem(EventKind k) {
  return k == EventKind::Load || k == EventKind::Store ||
         k == EventKind::MemCpy || k == EventKind::MemSet ||
         k == EventKind::MemMove;
}

/// Splits the trace into task spans plus synthetic Type-1 glue spans for
/// memory activity occurring outside any task.
std::vector<Segment> segment_trace(const Trace& t) {
  std::vector<Segment> segs;
  bool in_task = false;
  bool in_glue = false;
  std::vector<std::int32_t> bb_stack;
  for (const auto& ev : t.events) {
    switch (ev.kind) {
      case EventKind::TaskEnter: {
        if (in_task) throw AnalysisError("nested task at seq " +
                                         std::to_string(ev.seq));
        in_glue = false;
        Segment s;
        s.node.index = static_cast<NodeIndex>(segs.size());
        s.node.task_kind = ev.task_kind;
        s.node.kernel = ev.kernel;
        s.node.site = ev.site;
        segs.push_back(std::move(s));
        in_task = true;
        break;
      }
      case EventKind::TaskExit:
        if (!in_task) throw AnalysisError("task exit without enter at seq " +
                                          std::to_string(ev.seq));
        if (segs.back().node.bb_ids.empty()) {
          segs.back().node.bb_ids.push_back(segs.back().node.site);
        }
        in_task = false;
        break;
      case EventKind::BBEnter:
        bb_stack.push_back(ev.bb);
        if (in_task) {
          auto& ids = segs.back().node.bb_ids;
          if (std::find(ids.begin(), ids.end(), ev.bb) == ids.end()) {
            ids.push_back(ev.bb);
          }
        } else {
          in_glue = false;  // block boundary ends any open glue span
        }
        break;
      case EventKind::BBExit:
        if (!bb_stack.empty()) bb_stack.pop_back();
        if (!in_task) in_glue = false;
        break;
      default:
        if (!is_mem(ev.kind)) break;
        if (in_task) {
          segs.back().mem.push_back(&ev);
        } else {
          if (!in_glue) {
            Segment s;
            s.node.index = static_cast<NodeIndex>(segs.size());
            s.node.task_kind = tir::TaskKind::Type1;
            s.node.kernel = tir::KernelId::Glue;
            s.node.site = -1;
            s.node.bb_ids.push_back(bb_stack.empty() ? -1 : bb_stack.back());
            segs.push_back(std::move(s));
            in_glue = true;
          }
          segs.back().mem.push_back(&ev);
        }
        break;
    }
  }
  if (in_task) throw AnalysisError("trace ends inside a task span");
  return segs;
}

}  // namespace

ControlDag build_control_dag(const Trace& t) {
  ControlDag dag;
  for (auto& seg : segment_trace(t)) dag.nodes.push_back(std::move(seg.node));
  return dag;
}

std::vector<NodeTuples> build_tuple_sets(const Trace& t,
                                         const ControlDag& dag) {
  const auto segs = segment_trace(t);
  if (segs.size() != dag.nodes.size()) {
    throw AnalysisError("trace does not match control DAG: " +
                        std::to_string(segs.size()) + " spans vs " +
                        std::to_string(dag.nodes.size()) + " nodes");
  }
  std::vector<NodeTuples> out(segs.size());
  for (std::size_t i = 0; i < segs.size(); ++i) {
    const auto label = static_cast<NodeIndex>(i);
    for (const TraceEvent* ev : segs[i].mem) {
      switch (ev->kind) {
        case EventKind::Load:
          out[i].loads.add(ev->addr, ev->bytes, label);
          break;
        case EventKind::Store:
          out[i].stores.add(ev->addr, ev->bytes, label);
          break;
        case EventKind::MemCpy:
        case EventKind::MemMove:
          out[i].loads.add(ev->addr, ev->bytes, label);
          out[i].stores.add(ev->addr2, ev->bytes, label);
          break;
        case EventKind::MemSet:
          out[i].stores.add(ev->addr, ev->bytes, label);
          break;
        default:
          break;
      }
    }
  }
  return out;
}

DataDag build_data_dag(const ControlDag& dag,
                       const std::vector<NodeTuples>& tuples) {
  if (dag.nodes.size() != tuples.size()) {
    throw AnalysisError("tuple sets do not cover the control DAG");
  }
  DataDag ddag;
  ddag.node_count = dag.nodes.size();
  LastWriterMap lw;
  std::vector<NodeIndex> writers;
  for (std::size_t i = 0; i < tuples.size(); ++i) {
    writers.clear();
    for (const auto& [start, tup] : tuples[i].loads.tuples()) {
      lw.query(tup.start_addr, tup.end_addr, writers);
    }
    std::sort(writers.begin(), writers.end());
    for (const NodeIndex w : writers) {
      ddag.edges.emplace_back(w, static_cast<NodeIndex>(i));
    }
    for (const auto& [start, tup] : tuples[i].stores.tuples()) {
      lw.record(tup.start_addr, tup.end_addr, static_cast<NodeIndex>(i));
    }
  }
  return ddag;
}

std::vector<std::vector<NodeIndex>> DataDag::parents() const {
  std::vector<std::vector<NodeIndex>> p(node_count);
  for (const auto& [w, r] : edges) p[r].push_back(w);
  return p;
}

std::vector<std::vector<NodeIndex>> DataDag::children() const {
  std::vector<std::vector<NodeIndex>> c(node_count);
  for (const auto& [w, r] : edges) c[w].push_back(r);
  return c;
}

bool DataDag::has_edge(NodeIndex w, NodeIndex r) const {
  return std::find(edges.begin(), edges.end(), std::make_pair(w, r)) !=
         edges.end();
}

std::string to_dot(const ControlDag& dag, const DataDag& ddag) {
  std::ostringstream os;
  os << "digraph deps {\n  rankdir=LR;\n";
  for (const auto& n : dag.nodes) {
    os << "  n" << n.index << " [label=\"" << n.index << ": "
       << tir::to_string(n.kernel) << "\\nsite " << n.site << "\" shape="
       << (n.task_kind == tir::TaskKind::Type2 ? "box" : "ellipse") << "];\n";
  }
  for (std::size_t i = 0; i + 1 < dag.nodes.size(); ++i) {
    os << "  n" << i << " -> n" << i + 1 << " [style=dotted color=gray];\n";
  }
  for (const auto& [w, r] : ddag.edges) {
    os << "  n" << w << " -> n" << r << ";\n";
  }
  os << "}\n";
  return os.str();
}

std::string dag_to_json(const ControlDag& dag, const DataDag& ddag) {
  json j;
  j["nodes"] = json::array();
  for (const auto& n : dag.nodes) {
    j["nodes"].push_back({{"index", n.index},
                          {"kind", tir::to_string(n.task_kind)},
                          {"kernel", tir::to_string(n.kernel)},
                          {"site", n.site}});
  }
  j["edges"] = json::array();
  for (const auto& [w, r] : ddag.edges) {
    j["edges"].push_back({w, r});
  }
  return j.dump(2);
}

void save_dag(const ControlDag& dag, const DataDag& ddag,
              const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open for writing: " + path);
  out << dag_to_json(dag, ddag) << "\n";
}

std::pair<ControlDag, DataDag> load_dag(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw IoError("malformed DAG file " + path + ": " + e.what());
  }
  ControlDag dag;
  DataDag ddag;
  for (const auto& nj : j.value("nodes", json::array())) {
    ControlDagNode n;
    n.index = nj.at("index").get<NodeIndex>();
    n.task_kind = tir::task_kind_from_string(nj.at("kind").get<std::string>());
    n.kernel = tir::kernel_id_from_string(nj.at("kernel").get<std::string>());
    n.site = nj.value("site", -1);
    dag.nodes.push_back(n);
  }
  ddag.node_count = dag.nodes.size();
  for (const auto& ej : j.value("edges", json::array())) {
    ddag.edges.emplace_back(ej.at(0).get<NodeIndex>(),
                            ej.at(1).get<NodeIndex>());
  }
  return {std::move(dag), std::move(ddag)};
}

}  // namespace taskweave::dep
