#include "taskweave/schedgen.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include <json.hpp>

#include "taskweave/interp.hpp"
#include "taskweave/kernels.hpp"
#include "taskweave/tir_json.hpp"
#include "taskweave/util.hpp"

namespace taskweave::sched {

using dep::NodeIndex;
using nlohmann::json;

ScheduleDag generate_schedule(const dep::ControlDag& cdag,
                              const dep::DataDag& ddag) {
  const std::size_t n = cdag.nodes.size();
  if (ddag.node_count != n) {
    throw SchedError("data DAG does not cover the control DAG");
  }
  const auto parents = ddag.parents();
  std::vector<bool> visited(n, false);
  const auto ready = [&](std::size_t i) {
    return std::all_of(parents[i].begin(), parents[i].end(),
                       [&](NodeIndex p) { return visited[p]; });
  };

  ScheduleDag out;
  out.region_of.assign(n, 0);
  std::size_t remaining = n;
  while (remaining > 0) {
    // Type-1 sweep to exhaustion: a ready Type-1 task may enable further
    // Type-1 tasks within the same serial region.
    Region r1{RegionKind::Type1, {}, 0};
    bool grew = true;
    while (grew) {
      grew = false;
      for (std::size_t i = 0; i < n; ++i) {
        if (!visited[i] && cdag.nodes[i].task_kind == tir::TaskKind::Type1 &&
            ready(i)) {
          visited[i] = true;
          r1.tasks.push_back(static_cast<NodeIndex>(i));
          grew = true;
        }
      }
    }
    if (!r1.tasks.empty()) {
      std::sort(r1.tasks.begin(), r1.tasks.end());
      for (const NodeIndex t : r1.tasks) out.region_of[t] = out.regions.size();
      remaining -= r1.tasks.size();
      out.regions.push_back(std::move(r1));
    }

    // Type-2 snapshot: only tasks whose parents were visited in earlier
    // steps, so region members are mutually independent.
    Region r2{RegionKind::Type2, {}, 0};
    for (std::size_t i = 0; i < n; ++i) {
      if (!visited[i] && cdag.nodes[i].task_kind == tir::TaskKind::Type2 &&
          ready(i)) {
        r2.tasks.push_back(static_cast<NodeIndex>(i));
      }
    }
    if (!r2.tasks.empty()) {
      for (const NodeIndex t : r2.tasks) {
        visited[t] = true;
        out.region_of[t] = out.regions.size();
      }
      r2.counter_target = r2.tasks.size();
      remaining -= r2.tasks.size();
      out.regions.push_back(std::move(r2));
    } else if (r1.tasks.empty() && remaining > 0) {
      throw SchedError("schedule generation stalled: dependence cycle over " +
                       std::to_string(remaining) + " tasks");
    }
  }
  return out;
}

namespace {

void add_violation(std::vector<Violation>& out, NodeIndex a, NodeIndex b,
                   const std::string& detail) {
  if (a > b) std::swap(a, b);
  for (const auto& v : out) {
    if (v.first == a && v.second == b) return;
  }
  out.push_back({a, b, detail});
}

bool ranges_overlap(std::uint64_t s1, std::uint64_t e1, std::uint64_t s2,
                    std::uint64_t e2) {
  return s1 <= e2 && s2 <= e1;
}

bool sets_overlap(const dep::TupleSet& a, const dep::TupleSet& b) {
  for (const auto& [s, t] : a.tuples()) {
    for (const auto& [s2, t2] : b.tuples()) {
      if (ranges_overlap(t.start_addr, t.end_addr, t2.start_addr, t2.end_addr)) {
        return true;
      }
    }
  }
  return false;
}

}  // namespace

std::vector<Violation> verify_reorder_safety(
    const ScheduleDag& sched, const std::vector<dep::NodeTuples>& tuples) {
  std::vector<Violation> out;

  // Pass 1: serial replay, capturing each node's last-writer view of its
  // loaded ranges at the moment it runs.
  dep::LastWriterMap serial;
  std::vector<std::vector<std::tuple<std::uint64_t, std::uint64_t, std::int64_t>>>
      serial_segments(tuples.size());
  for (std::size_t i = 0; i < tuples.size(); ++i) {
    for (const auto& [start, t] : tuples[i].loads.tuples()) {
      auto segs = serial.segments(t.start_addr, t.end_addr);
      auto& dst = serial_segments[i];
      dst.insert(dst.end(), segs.begin(), segs.end());
    }
    for (const auto& [start, t] : tuples[i].stores.tuples()) {
      serial.record(t.start_addr, t.end_addr, static_cast<NodeIndex>(i));
    }
  }

  // Pass 2: region-order replay with intra-region race checks.
  dep::LastWriterMap regioned;
  const auto check_node = [&](NodeIndex reader) {
    for (const auto& seg : serial_segments[reader]) {
      const auto [start, end, sw] = seg;
      for (const auto& rseg : regioned.segments(start, end)) {
        const auto [rs, re, rw] = rseg;
        if (rw == sw) continue;
        if (rw >= 0 && static_cast<NodeIndex>(rw) > reader) {
          add_violation(out, reader, static_cast<NodeIndex>(rw),
                        "write-after-read flipped over byte " +
                            std::to_string(rs));
        } else if (rw < 0 && sw >= 0) {
          add_violation(out, static_cast<NodeIndex>(sw), reader,
                        "read-after-write flipped over byte " +
                            std::to_string(rs));
        } else if (sw >= 0 && rw >= 0) {
          add_violation(out, static_cast<NodeIndex>(std::min(sw, rw)),
                        static_cast<NodeIndex>(std::max(sw, rw)),
                        "write-after-write flipped over byte " +
                            std::to_string(rs));
        }
      }
    }
  };

  for (const Region& region : sched.regions) {
    if (region.kind == RegionKind::Type1) {
      for (const NodeIndex t : region.tasks) {
        check_node(t);
        for (const auto& [s, tup] : tuples[t].stores.tuples()) {
          regioned.record(tup.start_addr, tup.end_addr, t);
        }
      }
    } else {
      // Members are unordered: check all loads against the pre-region state
      // and flag any same-region store overlapping another member's accesses.
      for (const NodeIndex t : region.tasks) check_node(t);
      for (std::size_t a = 0; a < region.tasks.size(); ++a) {
        for (std::size_t b = a + 1; b < region.tasks.size(); ++b) {
          const NodeIndex ta = region.tasks[a];
          const NodeIndex tb = region.tasks[b];
          if (sets_overlap(tuples[ta].stores, tuples[tb].loads) ||
              sets_overlap(tuples[tb].stores, tuples[ta].loads)) {
            add_violation(out, ta, tb, "concurrent tasks share written bytes");
          } else if (sets_overlap(tuples[ta].stores, tuples[tb].stores)) {
            add_violation(out, ta, tb, "concurrent tasks write the same bytes");
          }
        }
      }
      for (const NodeIndex t : region.tasks) {
        for (const auto& [s, tup] : tuples[t].stores.tuples()) {
          regioned.record(tup.start_addr, tup.end_addr, t);
        }
      }
    }
  }
  return out;
}

dep::DataDag augment_output_order(const dep::ControlDag& cdag,
                                  dep::DataDag ddag) {
  std::int64_t prev = -1;
  for (std::size_t i = 0; i < cdag.nodes.size(); ++i) {
    if (cdag.nodes[i].kernel != tir::KernelId::WriteData) continue;
    if (prev >= 0) {
      const auto w = static_cast<NodeIndex>(prev);
      const auto r = static_cast<NodeIndex>(i);
      if (!ddag.has_edge(w, r)) ddag.edges.emplace_back(w, r);
    }
    prev = static_cast<std::int64_t>(i);
  }
  return ddag;
}

ScheduleDag generate_safe_schedule(const dep::ControlDag& cdag,
                                   dep::DataDag ddag,
                                   const std::vector<dep::NodeTuples>& tuples,
                                   int* rounds) {
  ddag = augment_output_order(cdag, ddag);
  for (int round = 1;; ++round) {
    ScheduleDag sched = generate_schedule(cdag, ddag);
    const auto violations = verify_reorder_safety(sched, tuples);
    if (violations.empty()) {
      if (rounds != nullptr) *rounds = round;
      return sched;
    }
    bool added = false;
    for (const auto& v : violations) {
      if (!ddag.has_edge(v.first, v.second)) {
        ddag.edges.emplace_back(v.first, v.second);
        added = true;
      }
    }
    if (!added) {
      throw SchedError("reorder safety fixed point stalled with " +
                       std::to_string(violations.size()) + " violations");
    }
    TW_INFO("reorder safety: added ordering edges, regenerating (round "
            << round << ")");
  }
}

std::size_t ParallelProgram::task_count() const {
  std::size_t n = 0;
  for (const auto& s : sections) n += s.tasks.size();
  return n;
}

ParallelProgram emit_parallel_program(const tir::TirProgram& fp,
                                      const ScheduleDag& sched) {
  const auto instances = tracer::enumerate_dynamic_tasks(fp);
  std::size_t scheduled = 0;
  for (const auto& r : sched.regions) scheduled += r.tasks.size();
  if (scheduled != instances.size()) {
    throw SchedError("schedule covers " + std::to_string(scheduled) +
                     " tasks but the program executes " +
                     std::to_string(instances.size()));
  }

  ParallelProgram pp;
  pp.name = fp.name;
  pp.source_hash = tir::program_hash(fp);
  pp.buffers = fp.buffers;
  for (const Region& region : sched.regions) {
    Section sec;
    sec.kind = region.kind;
    sec.counter_target =
        region.kind == RegionKind::Type2 ? region.counter_target : 0;
    for (const NodeIndex t : region.tasks) {
      const tracer::TaskInstance& inst = instances[t];
      const bool inst_type2 = inst.kernel.task_kind == tir::TaskKind::Type2;
      if (inst_type2 != (region.kind == RegionKind::Type2)) {
        throw SchedError("task " + std::to_string(t) +
                         " kind does not match its region: schedule and "
                         "program are out of step");
      }
      TaskDesc d;
      d.node = t;
      d.site = inst.site;
      d.name = inst.name;
      d.kernel = inst.kernel;
      for (const auto& s : inst.reads) d.reads.push_back({s.buffer, s.offset, s.len});
      for (const auto& s : inst.writes) d.writes.push_back({s.buffer, s.offset, s.len});
      sec.tasks.push_back(std::move(d));
    }
    pp.sections.push_back(std::move(sec));
  }
  return pp;
}

namespace {

std::vector<tir::ResolvedSlice> resolve_descs(
    const std::vector<SliceDesc>& ss, const tir::Arena& arena) {
  std::vector<tir::ResolvedSlice> out;
  out.reserve(ss.size());
  for (const auto& s : ss) {
    out.push_back({s.buffer, s.offset, s.len, arena.base_of(s.buffer) + s.offset});
  }
  return out;
}

}  // namespace

void exec_task_desc(const TaskDesc& d, tir::Arena& arena,
                    std::vector<std::uint8_t>* output) {
  tir::kernel_exec(d.kernel, resolve_descs(d.reads, arena),
                   resolve_descs(d.writes, arena), arena, nullptr, output);
}

std::vector<std::uint8_t> run_sections_serially(
    const ParallelProgram& pp, std::optional<std::uint64_t> shuffle_seed) {
  tir::Arena arena(pp.buffers);
  std::vector<std::uint8_t> output;
  std::uint64_t rng = shuffle_seed.value_or(0);
  for (const auto& sec : pp.sections) {
    std::vector<std::size_t> order(sec.tasks.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    if (shuffle_seed && sec.kind == RegionKind::Type2) {
      for (std::size_t i = order.size(); i > 1; --i) {
        rng = splitmix64(rng);
        std::swap(order[i - 1], order[rng % i]);
      }
    }
    for (const std::size_t i : order) exec_task_desc(sec.tasks[i], arena, &output);
  }
  return output;
}

void save_parallel_program(const ParallelProgram& pp, const std::string& path) {
  json j;
  j["name"] = pp.name;
  j["source_hash"] = pp.source_hash;
  j["buffers"] = json::array();
  for (const auto& b : pp.buffers) {
    j["buffers"].push_back({{"id", b.id},
                            {"size_bytes", b.size_bytes},
                            {"element_kind", tir::to_string(b.element_kind)}});
  }
  j["sections"] = json::array();
  for (const auto& sec : pp.sections) {
    json sj;
    sj["kind"] = sec.kind == RegionKind::Type2 ? "parallel" : "serial";
    if (sec.kind == RegionKind::Type2) sj["counter_target"] = sec.counter_target;
    sj["tasks"] = json::array();
    for (const auto& d : sec.tasks) {
      json dj;
      dj["node"] = d.node;
      dj["site"] = d.site;
      dj["name"] = d.name;
      dj["kernel"] = tir::to_json(d.kernel);
      const auto slices = [](const std::vector<SliceDesc>& ss) {
        json a = json::array();
        for (const auto& s : ss) {
          a.push_back({{"buffer", s.buffer}, {"offset", s.offset}, {"len", s.len}});
        }
        return a;
      };
      dj["reads"] = slices(d.reads);
      dj["writes"] = slices(d.writes);
      sj["tasks"].push_back(std::move(dj));
    }
    j["sections"].push_back(std::move(sj));
  }
  std::ofstream out(path);
  if (!out) throw IoError("cannot open for writing: " + path);
  out << j.dump(2) << "\n";
}

ParallelProgram load_parallel_program(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw IoError("malformed parallel program " + path + ": " + e.what());
  }
  ParallelProgram pp;
  pp.name = j.value("name", "");
  pp.source_hash = j.value("source_hash", "");
  for (const auto& bj : j.value("buffers", json::array())) {
    pp.buffers.push_back(
        {bj.at("id").get<std::string>(), bj.at("size_bytes").get<std::uint64_t>(),
         tir::element_kind_from_string(bj.at("element_kind").get<std::string>())});
  }
  for (const auto& sj : j.value("sections", json::array())) {
    Section sec;
    const std::string kind = sj.at("kind").get<std::string>();
    sec.kind = kind == "parallel" ? RegionKind::Type2 : RegionKind::Type1;
    for (const auto& dj : sj.at("tasks")) {
      TaskDesc d;
      d.node = dj.at("node").get<NodeIndex>();
      d.site = dj.value("site", -1);
      d.name = dj.value("name", "");
      d.kernel = tir::kernel_from_json(dj.at("kernel"));
      const auto read_slices = [](const json& a, std::vector<SliceDesc>& out) {
        for (const auto& s : a) {
          out.push_back({s.at("buffer").get<std::string>(),
                         s.at("offset").get<std::uint64_t>(),
                         s.at("len").get<std::uint64_t>()});
        }
      };
      read_slices(dj.at("reads"), d.reads);
      read_slices(dj.at("writes"), d.writes);
      sec.tasks.push_back(std::move(d));
    }
    if (sec.kind == RegionKind::Type2) {
      sec.counter_target = sj.at("counter_target").get<std::size_t>();
      if (sec.counter_target != sec.tasks.size()) {
        throw SchedError("counter_target " +
                         std::to_string(sec.counter_target) + " != " +
                         std::to_string(sec.tasks.size()) + " tasks in " + path);
      }
    }
    pp.sections.push_back(std::move(sec));
  }
  return pp;
}

}  // namespace taskweave::sched
