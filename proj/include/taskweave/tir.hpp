#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace taskweave::tir {

using SiteId = std::int32_t;

enum class ElementKind { Complex32, Float32, Byte };

std::size_t element_size(ElementKind k);
std::string to_string(ElementKind k);
ElementKind element_kind_from_string(const std::string& s);

struct Buffer {
  std::string id;
  std::uint64_t size_bytes = 0;
  ElementKind element_kind = ElementKind::Byte;
};

enum class TaskKind { Type1, Type2 };

std::string to_string(TaskKind k);
TaskKind task_kind_from_string(const std::string& s);

enum class KernelId {
  Fft,
  Gemm,
  Scrambler,
  Interleaver,
  PilotInsert,
  Correlate,
  Elemwise,
  ReadData,
  WriteData,
  Glue,  // synthetic label for out-of-task trace activity; not valid in programs
};

std::string to_string(KernelId k);
KernelId kernel_id_from_string(const std::string& s);

/// A compute kernel invocation signature. `params` holds kernel-specific
/// integers (FFT "n", GEMM "m"/"k"/"n", element counts); `op` selects the
/// ELEMWISE variant.
struct KernelSpec {
  KernelId id = KernelId::Elemwise;
  TaskKind task_kind = TaskKind::Type1;
  std::map<std::string, std::int64_t> params;
  std::string op;

  std::int64_t param(const std::string& key, std::int64_t fallback = -1) const;
  // Execution-time table key, e.g. "FFT:256" or "GEMM:4x64x1".
  std::string time_signature() const;
};

/// Affine expression over enclosing loop induction variables:
/// base + sum(coeff_i * var_i). Byte offsets inside buffers use these so the
/// same statement can address a different slice on every loop iteration.
struct IndexExpr {
  std::int64_t base = 0;
  std::vector<std::pair<std::string, std::int64_t>> terms;

  static IndexExpr constant(std::int64_t v) { return IndexExpr{v, {}}; }
  static IndexExpr affine(std::int64_t base, const std::string& var,
                          std::int64_t coeff) {
    return IndexExpr{base, {{var, coeff}}};
  }
  bool is_constant() const { return terms.empty(); }
};

struct SliceRef {
  enum class Kind { Buffer, Param };
  Kind kind = Kind::Buffer;
  std::string name;

  static SliceRef buffer(std::string id) {
    return {Kind::Buffer, std::move(id)};
  }
  static SliceRef param(std::string name) {
    return {Kind::Param, std::move(name)};
  }
};

/// A byte range inside a buffer (or inside a slice bound to a function
/// parameter). Offset is in bytes and may depend on loop variables.
struct BufferSlice {
  SliceRef ref;
  IndexExpr offset;
  std::uint64_t len = 0;
};

struct TripSource {
  enum class Kind { Constant, Runtime };
  Kind kind = Kind::Constant;
  std::int64_t n = 0;      // Constant
  std::string key;         // Runtime: looked up in runtime_values

  static TripSource constant(std::int64_t n) {
    return {Kind::Constant, n, {}};
  }
  static TripSource runtime(std::string key) {
    return {Kind::Runtime, 0, std::move(key)};
  }
};

struct Statement;

struct CallTask {
  std::string name;
  KernelSpec kernel;
  std::vector<BufferSlice> reads;
  std::vector<BufferSlice> writes;
};

struct Loop {
  std::string var;
  TripSource trip;
  std::vector<Statement> body;
};

/// Function-pointer style call site: the executed kernel is one of
/// `candidates`, selected at run time by the slot binding expression.
struct IndirectCall {
  std::string slot;
  std::vector<KernelSpec> candidates;
  std::vector<BufferSlice> reads;
  std::vector<BufferSlice> writes;
};

struct CallFn {
  std::string callee;
  std::vector<BufferSlice> args;
};

struct Statement {
  SiteId site = -1;
  std::variant<CallTask, Loop, IndirectCall, CallFn> node;
};

struct Function {
  std::vector<std::string> params;
  std::vector<Statement> body;
};

struct TirProgram {
  std::string name;
  std::vector<Buffer> buffers;
  std::map<std::string, Function> functions;
  std::string entry;
  std::map<std::string, std::int64_t> runtime_values;
  // Slot id -> candidate index expression, evaluated in the loop environment
  // at each execution of the indirect call.
  std::map<std::string, IndexExpr> slot_bindings;
  // Present on flattened programs: statement site -> originating site.
  std::map<SiteId, SiteId> site_map;
  bool flattened = false;

  const Buffer* find_buffer(const std::string& id) const;
  SiteId origin_site(SiteId s) const;
  SiteId max_site() const;
};

struct ValidationIssue {
  SiteId site = -1;  // -1: program-level issue
  std::string message;
};

struct ValidationReport {
  std::vector<ValidationIssue> issues;
  bool ok() const { return issues.empty(); }
  std::string to_string() const;
};

ValidationReport validate_program(const TirProgram& p);

}  // namespace taskweave::tir
