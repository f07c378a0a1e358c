#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <tuple>
#include <vector>

#include "taskweave/trace.hpp"

namespace taskweave::dep {

struct AnalysisError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

using NodeIndex = std::uint32_t;

struct ControlDagNode {
  NodeIndex index = 0;
  tir::TaskKind task_kind = tir::TaskKind::Type1;
  tir::KernelId kernel = tir::KernelId::Glue;
  tir::SiteId site = -1;
  std::vector<std::int32_t> bb_ids;
};

/// Serial task chain recovered from the trace: node i precedes node i+1.
struct ControlDag {
  std::vector<ControlDagNode> nodes;
};

/// Coalesced contiguous access range; end_addr is inclusive.
struct MemTuple {
  std::uint64_t start_addr = 0;
  std::uint64_t end_addr = 0;
  std::uint64_t access_count = 0;
  std::uint64_t byte_count = 0;
  NodeIndex task_label = 0;
};

/// Maximally coalesced tuples ordered by start address: members neither
/// overlap nor touch (end + 1 < next start).
class TupleSet {
 public:
  void add(std::uint64_t start, std::uint64_t bytes, NodeIndex label);
  const std::map<std::uint64_t, MemTuple>& tuples() const { return map_; }
  bool empty() const { return map_.empty(); }
  std::uint64_t total_bytes() const;

 private:
  std::map<std::uint64_t, MemTuple> map_;  // keyed by start_addr
};

struct NodeTuples {
  TupleSet loads;
  TupleSet stores;
};

/// Disjoint address intervals -> index of the node that last wrote them.
class LastWriterMap {
 public:
  /// Records [start, end] as written by `writer`, splitting any previously
  /// recorded intervals it partially covers.
  void record(std::uint64_t start, std::uint64_t end, NodeIndex writer);
  /// Collects the distinct writers over any byte of [start, end].
  void query(std::uint64_t start, std::uint64_t end,
             std::vector<NodeIndex>& out) const;
  /// Writer of one byte, or -1 when unwritten.
  std::int64_t writer_of(std::uint64_t addr) const;
  /// Piecewise-constant view of [start, end]: (sub_start, sub_end, writer)
  /// triples covering the whole range, writer -1 over unwritten gaps.
  std::vector<std::tuple<std::uint64_t, std::uint64_t, std::int64_t>> segments(
      std::uint64_t start, std::uint64_t end) const;
  std::size_t interval_count() const { return map_.size(); }

 private:
  struct Interval {
    std::uint64_t end = 0;  // inclusive
    NodeIndex writer = 0;
  };
  std::map<std::uint64_t, Interval> map_;  // keyed by interval start
};

struct DataDag {
  std::size_t node_count = 0;
  std::vector<std::pair<NodeIndex, NodeIndex>> edges;  // (writer, reader)

  std::vector<std::vector<NodeIndex>> parents() const;
  std::vector<std::vector<NodeIndex>> children() const;
  bool has_edge(NodeIndex w, NodeIndex r) const;
};

ControlDag build_control_dag(const tracer::Trace& t);

std::vector<NodeTuples> build_tuple_sets(const tracer::Trace& t,
                                         const ControlDag& dag);

DataDag build_data_dag(const ControlDag& dag,
                       const std::vector<NodeTuples>& tuples);

std::string to_dot(const ControlDag& dag, const DataDag& ddag);
std::string dag_to_json(const ControlDag& dag, const DataDag& ddag);
void save_dag(const ControlDag& dag, const DataDag& ddag,
              const std::string& path);
std::pair<ControlDag, DataDag> load_dag(const std::string& path);

}  // namespace taskweave::dep
