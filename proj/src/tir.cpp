#include "taskweave/tir.hpp"

#include <functional>
#include <set>
#include <sstream>

#include "taskweave/util.hpp"

namespace taskweave {

std::string to_hex(std::uint64_t v) {
  std::ostringstream os;
  os << std::hex << v;
  return os.str();
}

LogLevel log_level() {
  static const LogLevel lvl = [] {
    const char* e = std::getenv("TASKWEAVE_LOG");
    if (!e) return LogLevel::None;
    const std::string s(e);
    if (s == "error") return LogLevel::Error;
    if (s == "warn") return LogLevel::Warn;
    if (s == "info") return LogLevel::Info;
    if (s == "debug") return LogLevel::Debug;
    return LogLevel::None;
  }();
  return lvl;
}

}  // namespace taskweave

namespace taskweave::tir {

std::size_t element_size(ElementKind k) {
  switch (k) {
    case ElementKind::Complex32: return 8;
    case ElementKind::Float32: return 4;
    case ElementKind::Byte: return 1;
  }
  return 1;
}

std::string to_string(ElementKind k) {
  switch (k) {
    case ElementKind::Complex32: return "complex32";
    case ElementKind::Float32: return "float32";
    case ElementKind::Byte: return "byte";
  }
  return "byte";
}

ElementKind element_kind_from_string(const std::string& s) {
  if (s == "complex32") return ElementKind::Complex32;
  if (s == "float32") return ElementKind::Float32;
  if (s == "byte") return ElementKind::Byte;
  throw std::invalid_argument("unknown element kind: " + s);
}

std::string to_string(TaskKind k) {
  return k == TaskKind::Type1 ? "type1" : "type2";
}

TaskKind task_kind_from_string(const std::string& s) {
  if (s == "type1") return TaskKind::Type1;
  if (s == "type2") return TaskKind::Type2;
  throw std::invalid_argument("unknown task kind: " + s);
}

std::string to_string(KernelId k) {
  switch (k) {
    case KernelId::Fft: return "FFT";
    case KernelId::Gemm: return "GEMM";
    case KernelId::Scrambler: return "SCRAMBLER";
    case KernelId::Interleaver: return "INTERLEAVER";
    case KernelId::PilotInsert: return "PILOT_INSERT";
    case KernelId::Correlate: return "CORRELATE";
    case KernelId::Elemwise: return "ELEMWISE";
    case KernelId::ReadData: return "READ_DATA";
    case KernelId::WriteData: return "WRITE_DATA";
    case KernelId::Glue: return "GLUE";
  }
  return "ELEMWISE";
}

KernelId kernel_id_from_string(const std::string& s) {
  if (s == "FFT") return KernelId::Fft;
  if (s == "GEMM") return KernelId::Gemm;
  if (s == "SCRAMBLER") return KernelId::Scrambler;
  if (s == "INTERLEAVER") return KernelId::Interleaver;
  if (s == "PILOT_INSERT") return KernelId::PilotInsert;
  if (s == "CORRELATE") return KernelId::Correlate;
  if (s == "ELEMWISE") return KernelId::Elemwise;
  if (s == "READ_DATA") return KernelId::ReadData;
  if (s == "WRITE_DATA") return KernelId::WriteData;
  if (s == "GLUE") return KernelId::Glue;
  throw std::invalid_argument("unknown kernel id: " + s);
}

std::int64_t KernelSpec::param(const std::string& key,
                               std::int64_t fallback) const {
  auto it = params.find(key);
  return it == params.end() ? fallback : it->second;
}

std::string KernelSpec::time_signature() const {
  switch (id) {
    case KernelId::Fft:
      return "FFT:" + std::to_string(param("n"));
    case KernelId::Gemm:
      return "GEMM:" + std::to_string(param("m")) + "x" +
             std::to_string(param("k")) + "x" + std::to_string(param("n"));
    default:
      return to_string(id);
  }
}

const Buffer* TirProgram::find_buffer(const std::string& id) const {
  for (const auto& b : buffers) {
    if (b.id == id) return &b;
  }
  return nullptr;
}

SiteId TirProgram::origin_site(SiteId s) const {
  auto it = site_map.find(s);
  return it == site_map.end() ? s : it->second;
}

namespace {

void visit_statements(const std::vector<Statement>& stmts,
                      const std::function<void(const Statement&)>& fn) {
  for (const auto& st : stmts) {
    fn(st);
    if (const auto* loop = std::get_if<Loop>(&st.node)) {
      visit_statements(loop->body, fn);
    }
  }
}

}  // namespace

SiteId TirProgram::max_site() const {
  SiteId m = -1;
  for (const auto& [name, fn] : functions) {
    visit_statements(fn.body, [&](const Statement& st) {
      if (st.site > m) m = st.site;
    });
  }
  return m;
}

std::string ValidationReport::to_string() const {
  if (ok()) return "ok";
  std::ostringstream os;
  for (const auto& issue : issues) {
    if (issue.site >= 0) os << "site " << issue.site << ": ";
    os << issue.message << "\n";
  }
  return os.str();
}

namespace {

class Validator {
 public:
  explicit Validator(const TirProgram& p) : p_(p) {}

  ValidationReport run() {
    check_buffers();
    if (p_.functions.empty() || p_.entry.empty() ||
        p_.functions.find(p_.entry) == p_.functions.end()) {
      add(-1, "missing entry function '" + p_.entry + "'");
    }
    check_recursion();
    std::set<SiteId> seen_sites;
    for (const auto& [name, fn] : p_.functions) {
      check_statements(name, fn, fn.body, seen_sites);
    }
    return std::move(report_);
  }

 private:
  void add(SiteId site, std::string msg) {
    report_.issues.push_back({site, std::move(msg)});
  }

  void check_buffers() {
    std::set<std::string> ids;
    for (const auto& b : p_.buffers) {
      if (!ids.insert(b.id).second) add(-1, "duplicate buffer id '" + b.id + "'");
      if (b.size_bytes == 0) add(-1, "buffer '" + b.id + "' has zero size");
      const auto es = element_size(b.element_kind);
      if (b.size_bytes % es != 0) {
        add(-1, "buffer '" + b.id + "' size " + std::to_string(b.size_bytes) +
                    " is not a multiple of element size " + std::to_string(es));
      }
    }
  }

  // Call graph must be a DAG (depth-first, three-color).
  void check_recursion() {
    std::map<std::string, int> color;
    std::function<void(const std::string&)> dfs = [&](const std::string& f) {
      color[f] = 1;
      auto it = p_.functions.find(f);
      if (it != p_.functions.end()) {
        visit_statements(it->second.body, [&](const Statement& st) {
          if (const auto* call = std::get_if<CallFn>(&st.node)) {
            auto c = color.find(call->callee);
            if (c != color.end() && c->second == 1) {
              add(st.site, "recursive call into '" + call->callee + "'");
            } else if (c == color.end() &&
                       p_.functions.count(call->callee) != 0) {
              dfs(call->callee);
            }
          }
        });
      }
      color[f] = 2;
    };
    for (const auto& [name, fn] : p_.functions) {
      if (color.find(name) == color.end()) dfs(name);
    }
  }

  void check_kernel(SiteId site, const KernelSpec& k) {
    if (k.id == KernelId::Glue) add(site, "GLUE is not a user kernel");
    if ((k.id == KernelId::Fft || k.id == KernelId::Gemm) &&
        k.task_kind != TaskKind::Type2) {
      add(site, to_string(k.id) + " must be a type2 task");
    }
    if ((k.id == KernelId::ReadData || k.id == KernelId::WriteData) &&
        k.task_kind != TaskKind::Type1) {
      add(site, to_string(k.id) + " must be a type1 task");
    }
    if (k.id == KernelId::Fft) {
      const auto n = k.param("n");
      if (n <= 0 || (n & (n - 1)) != 0) {
        add(site, "FFT point count " + std::to_string(n) +
                      " is not a power of two");
      }
    }
  }

  void check_slice(SiteId site, const Function& fn, const BufferSlice& s) {
    if (s.ref.kind == SliceRef::Kind::Param) {
      bool found = false;
      for (const auto& pn : fn.params) found = found || pn == s.ref.name;
      if (!found) add(site, "unknown parameter '" + s.ref.name + "'");
      return;
    }
    const Buffer* b = p_.find_buffer(s.ref.name);
    if (b == nullptr) {
      add(site, "reference to undeclared buffer '" + s.ref.name + "'");
      return;
    }
    // Static bound check only for offsets free of loop variables; the
    // interpreter enforces the rest at run time.
    if (s.offset.is_constant()) {
      if (s.offset.base < 0 ||
          static_cast<std::uint64_t>(s.offset.base) + s.len > b->size_bytes) {
        add(site, "slice [" + std::to_string(s.offset.base) + ", +" +
                      std::to_string(s.len) + ") exceeds buffer '" +
                      s.ref.name + "' of " + std::to_string(b->size_bytes) +
                      " bytes");
      }
    }
    if (s.len == 0) add(site, "zero-length slice of '" + s.ref.name + "'");
  }

  void check_statements(const std::string& fname, const Function& fn,
                        const std::vector<Statement>& stmts,
                        std::set<SiteId>& seen_sites) {
    for (const auto& st : stmts) {
      if (st.site < 0) add(st.site, "statement without a site id");
      if (!seen_sites.insert(st.site).second) {
        add(st.site, "duplicate site id");
      }
      if (const auto* call = std::get_if<CallTask>(&st.node)) {
        check_kernel(st.site, call->kernel);
        for (const auto& s : call->reads) check_slice(st.site, fn, s);
        for (const auto& s : call->writes) check_slice(st.site, fn, s);
      } else if (const auto* loop = std::get_if<Loop>(&st.node)) {
        if (loop->body.empty()) add(st.site, "loop body is empty");
        if (loop->trip.kind == TripSource::Kind::Runtime &&
            p_.runtime_values.find(loop->trip.key) == p_.runtime_values.end()) {
          add(st.site, "runtime trip count key '" + loop->trip.key +
                           "' is not bound");
        }
        check_statements(fname, fn, loop->body, seen_sites);
      } else if (const auto* ind = std::get_if<IndirectCall>(&st.node)) {
        if (ind->candidates.empty()) {
          add(st.site, "indirect call with no candidates");
        }
        for (const auto& k : ind->candidates) check_kernel(st.site, k);
        if (p_.slot_bindings.find(ind->slot) == p_.slot_bindings.end()) {
          add(st.site, "unbound indirect slot '" + ind->slot + "'");
        }
        for (const auto& s : ind->reads) check_slice(st.site, fn, s);
        for (const auto& s : ind->writes) check_slice(st.site, fn, s);
      } else if (const auto* call_fn = std::get_if<CallFn>(&st.node)) {
        auto it = p_.functions.find(call_fn->callee);
        if (it == p_.functions.end()) {
          add(st.site, "call to undeclared function '" + call_fn->callee + "'");
        } else if (it->second.params.size() != call_fn->args.size()) {
          add(st.site, "call to '" + call_fn->callee + "' with " +
                           std::to_string(call_fn->args.size()) +
                           " args, expected " +
                           std::to_string(it->second.params.size()));
        }
        for (const auto& s : call_fn->args) check_slice(st.site, fn, s);
      }
    }
  }

  const TirProgram& p_;
  ValidationReport report_;
};

}  // namespace

ValidationReport validate_program(const TirProgram& p) {
  return Validator(p).run();
}

}  // namespace taskweave::tir
