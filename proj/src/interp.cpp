#include "taskweave/interp.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "taskweave/tir_json.hpp"
#include "taskweave/util.hpp"

namespace taskweave::tracer {

using nlohmann::json;
using tir::Arena;
using tir::BufferSlice;
using tir::ResolvedSlice;
using tir::SiteId;

namespace {

/// Emits memory events into a trace as kernels touch bytes.
class TracingSink : public tir::MemSink {
 public:
  explicit TracingSink(TraceBuilder& tb) : tb_(tb) {}
  void load(std::uint64_t addr, std::uint64_t bytes) override {
    tb_.push(load_event(addr, bytes));
  }
  void store(std::uint64_t addr, std::uint64_t bytes) override {
    tb_.push(store_event(addr, bytes));
  }
  void mem_copy(std::uint64_t src, std::uint64_t dst,
                std::uint64_t bytes) override {
    tb_.push(memcpy_event(src, dst, bytes));
  }
  void mem_set(std::uint64_t dst, std::uint64_t bytes) override {
    tb_.push(memset_event(dst, bytes));
  }
  void mem_move(std::uint64_t src, std::uint64_t dst,
                std::uint64_t bytes) override {
    tb_.push(memmove_event(src, dst, bytes));
  }

 private:
  TraceBuilder& tb_;
};

struct Scope {
  std::map<std::string, std::int64_t> vars;
  std::map<std::string, ResolvedSlice> params;
};

class Walker {
 public:
  Walker(const tir::TirProgram& p, const ExecHooks& hooks, Arena* arena,
         tir::MemSink* sink, TraceBuilder* tb,
         std::vector<std::uint8_t>* output, bool execute)
      : p_(p),
        hooks_(hooks),
        arena_(arena),
        sink_(sink),
        tb_(tb),
        output_(output),
        execute_(execute) {}

  void run() {
    const auto it = p_.functions.find(p_.entry);
    if (it == p_.functions.end()) {
      throw InterpError("entry function '" + p_.entry + "' not found");
    }
    Scope scope;
    exec_body(it->second.body, scope);
  }

 private:
  std::int64_t eval(const tir::IndexExpr& e, const Scope& scope,
                    SiteId site) const {
    std::int64_t v = e.base;
    for (const auto& [var, coeff] : e.terms) {
      const auto it = scope.vars.find(var);
      if (it == scope.vars.end()) {
        throw InterpError("unbound loop variable '" + var + "' at site " +
                          std::to_string(site));
      }
      v += coeff * it->second;
    }
    return v;
  }

  ResolvedSlice resolve(const BufferSlice& s, const Scope& scope,
                        SiteId site) const {
    const std::int64_t off = eval(s.offset, scope, site);
    if (off < 0) {
      throw InterpError("negative slice offset at site " +
                        std::to_string(site));
    }
    const auto offset = static_cast<std::uint64_t>(off);
    if (s.ref.kind == tir::SliceRef::Kind::Param) {
      const auto it = scope.params.find(s.ref.name);
      if (it == scope.params.end()) {
        throw InterpError("unbound parameter '" + s.ref.name + "' at site " +
                          std::to_string(site));
      }
      const ResolvedSlice& base = it->second;
      if (offset + s.len > base.len) {
        throw InterpError("slice [" + std::to_string(offset) + ", " +
                          std::to_string(offset + s.len) +
                          ") exceeds parameter '" + s.ref.name + "' (len " +
                          std::to_string(base.len) + ") at site " +
                          std::to_string(site));
      }
      return {base.buffer, base.offset + offset, s.len, base.addr + offset};
    }
    const tir::Buffer* buf = p_.find_buffer(s.ref.name);
    if (buf == nullptr) {
      throw InterpError("unknown buffer '" + s.ref.name + "' at site " +
                        std::to_string(site));
    }
    if (offset + s.len > buf->size_bytes) {
      throw InterpError("slice [" + std::to_string(offset) + ", " +
                        std::to_string(offset + s.len) + ") exceeds buffer '" +
                        s.ref.name + "' (size " +
                        std::to_string(buf->size_bytes) + ") at site " +
                        std::to_string(site));
    }
    return {s.ref.name, offset, s.len,
            arena_->base_of(s.ref.name) + offset};
  }

  std::vector<ResolvedSlice> resolve_all(const std::vector<BufferSlice>& ss,
                                         const Scope& scope,
                                         SiteId site) const {
    std::vector<ResolvedSlice> out;
    out.reserve(ss.size());
    for (const auto& s : ss) out.push_back(resolve(s, scope, site));
    return out;
  }

  void exec_task(SiteId site, const std::string& name,
                 const tir::KernelSpec& kernel,
                 const std::vector<BufferSlice>& reads,
                 const std::vector<BufferSlice>& writes, const Scope& scope) {
    TaskInstance inst;
    inst.index = task_index_++;
    inst.site = site;
    inst.name = name;
    inst.kernel = kernel;
    inst.reads = resolve_all(reads, scope, site);
    inst.writes = resolve_all(writes, scope, site);
    if (hooks_.on_task) hooks_.on_task(inst);
    if (tb_ != nullptr) {
      tb_->push(task_enter(kernel.task_kind, kernel.id, site));
      tb_->push(bb_enter(site));
    }
    if (execute_) {
      try {
        tir::kernel_exec(kernel, inst.reads, inst.writes, *arena_, sink_,
                         output_);
      } catch (const tir::KernelError& e) {
        throw InterpError("task '" + name + "' at site " +
                          std::to_string(site) + ": " + e.what());
      }
    }
    if (tb_ != nullptr) {
      tb_->push(bb_exit(site));
      tb_->push(task_exit());
    }
  }

  void exec_stmt(const tir::Statement& st, Scope& scope) {
    if (const auto* ct = std::get_if<tir::CallTask>(&st.node)) {
      exec_task(st.site, ct->name, ct->kernel, ct->reads, ct->writes, scope);
    } else if (const auto* lp = std::get_if<tir::Loop>(&st.node)) {
      std::int64_t trips = 0;
      if (lp->trip.kind == tir::TripSource::Kind::Constant) {
        trips = lp->trip.n;
      } else {
        const auto it = p_.runtime_values.find(lp->trip.key);
        if (it == p_.runtime_values.end()) {
          throw InterpError("runtime trip count '" + lp->trip.key +
                            "' not provided at site " +
                            std::to_string(st.site));
        }
        trips = it->second;
      }
      if (trips < 0) {
        throw InterpError("negative trip count at site " +
                          std::to_string(st.site));
      }
      if (hooks_.on_loop) hooks_.on_loop(st.site, lp->var, trips);
      const bool shadowed = scope.vars.count(lp->var) != 0;
      const std::int64_t saved = shadowed ? scope.vars[lp->var] : 0;
      for (std::int64_t i = 0; i < trips; ++i) {
        scope.vars[lp->var] = i;
        if (tb_ != nullptr) tb_->push(bb_enter(st.site));
        for (const auto& inner : lp->body) exec_stmt(inner, scope);
        if (tb_ != nullptr) tb_->push(bb_exit(st.site));
      }
      if (shadowed) {
        scope.vars[lp->var] = saved;
      } else {
        scope.vars.erase(lp->var);
      }
    } else if (const auto* ic = std::get_if<tir::IndirectCall>(&st.node)) {
      const auto bit = p_.slot_bindings.find(ic->slot);
      if (bit == p_.slot_bindings.end()) {
        throw InterpError("unbound call slot '" + ic->slot + "' at site " +
                          std::to_string(st.site));
      }
      const std::int64_t idx = eval(bit->second, scope, st.site);
      if (idx < 0 || static_cast<std::size_t>(idx) >= ic->candidates.size()) {
        throw InterpError("call slot '" + ic->slot + "' selects candidate " +
                          std::to_string(idx) + " of " +
                          std::to_string(ic->candidates.size()) + " at site " +
                          std::to_string(st.site));
      }
      const auto cand = static_cast<std::size_t>(idx);
      if (hooks_.on_indirect) hooks_.on_indirect(st.site, ic->slot, cand);
      const tir::KernelSpec& kernel = ic->candidates[cand];
      exec_task(st.site, ic->slot + ":" + tir::to_string(kernel.id), kernel,
                ic->reads, ic->writes, scope);
    } else if (const auto* cf = std::get_if<tir::CallFn>(&st.node)) {
      const auto it = p_.functions.find(cf->callee);
      if (it == p_.functions.end()) {
        throw InterpError("unknown function '" + cf->callee + "' at site " +
                          std::to_string(st.site));
      }
      const tir::Function& fn = it->second;
      if (fn.params.size() != cf->args.size()) {
        throw InterpError("call to '" + cf->callee + "' passes " +
                          std::to_string(cf->args.size()) + " args, expects " +
                          std::to_string(fn.params.size()) + " at site " +
                          std::to_string(st.site));
      }
      if (hooks_.on_call) hooks_.on_call(st.site, cf->callee);
      Scope callee;  // functions see their params, not caller loop vars
      for (std::size_t i = 0; i < fn.params.size(); ++i) {
        callee.params[fn.params[i]] = resolve(cf->args[i], scope, st.site);
      }
      if (tb_ != nullptr) tb_->push(bb_enter(st.site));
      exec_body(fn.body, callee);
      if (tb_ != nullptr) tb_->push(bb_exit(st.site));
    }
  }

  void exec_body(const std::vector<tir::Statement>& body, Scope& scope) {
    for (const auto& st : body) exec_stmt(st, scope);
  }

  const tir::TirProgram& p_;
  const ExecHooks& hooks_;
  Arena* arena_;
  tir::MemSink* sink_;
  TraceBuilder* tb_;
  std::vector<std::uint8_t>* output_;
  bool execute_;
  std::size_t task_index_ = 0;
};

}  // namespace

void walk_program(const tir::TirProgram& p, const ExecHooks& hooks,
                  Arena* arena, tir::MemSink* sink, TraceBuilder* tb,
                  std::vector<std::uint8_t>* output, bool execute) {
  Walker(p, hooks, arena, sink, tb, output, execute).run();
}

RunResult interpret_and_trace(const tir::TirProgram& p) {
  Arena arena(p.buffers);
  TraceBuilder tb;
  TracingSink sink(tb);
  RunResult res;
  walk_program(p, {}, &arena, &sink, &tb, &res.output, true);
  res.trace = std::move(tb.trace());
  res.trace.program_hash = tir::program_hash(p);
  res.trace.runtime_values = p.runtime_values;
  return res;
}

std::vector<std::uint8_t> interpret(const tir::TirProgram& p) {
  Arena arena(p.buffers);
  std::vector<std::uint8_t> output;
  walk_program(p, {}, &arena, nullptr, nullptr, &output, true);
  return output;
}

std::vector<TaskInstance> enumerate_dynamic_tasks(const tir::TirProgram& p) {
  Arena arena(p.buffers);
  std::vector<TaskInstance> tasks;
  ExecHooks hooks;
  hooks.on_task = [&](const TaskInstance& t) { tasks.push_back(t); };
  walk_program(p, hooks, &arena, nullptr, nullptr, nullptr, false);
  return tasks;
}

Profile profile_program(const tir::TirProgram& p) {
  Arena arena(p.buffers);
  Profile prof;
  prof.program_hash = tir::program_hash(p);
  prof.runtime_values = p.runtime_values;
  ExecHooks hooks;
  hooks.on_loop = [&](SiteId site, const std::string&, std::int64_t trips) {
    prof.loop_trips[site] = trips;
  };
  hooks.on_indirect = [&](SiteId site, const std::string& slot,
                          std::size_t cand) {
    const auto it = prof.indirect_targets.find(slot);
    if (it != prof.indirect_targets.end() && it->second != cand) {
      throw InterpError("polymorphic indirect call at site " +
                        std::to_string(site) + ": slot '" + slot +
                        "' resolves to candidates " +
                        std::to_string(it->second) + " and " +
                        std::to_string(cand));
    }
    prof.indirect_targets[slot] = cand;
  };
  hooks.on_call = [&](SiteId site, const std::string& callee) {
    prof.call_targets[site] = callee;
  };
  walk_program(p, hooks, &arena, nullptr, nullptr, nullptr, true);
  return prof;
}

void save_profile(const Profile& prof, const std::string& path) {
  json j;
  j["program_hash"] = prof.program_hash;
  json trips = json::object();
  for (const auto& [site, n] : prof.loop_trips) {
    trips[std::to_string(site)] = n;
  }
  j["loop_trips"] = trips;
  j["indirect_targets"] = prof.indirect_targets;
  json calls = json::object();
  for (const auto& [site, callee] : prof.call_targets) {
    calls[std::to_string(site)] = callee;
  }
  j["call_targets"] = calls;
  j["runtime_values"] = prof.runtime_values;
  std::ofstream out(path);
  if (!out) throw IoError("cannot open for writing: " + path);
  out << j.dump(2) << "\n";
}

Profile load_profile(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw IoError("malformed profile " + path + ": " + e.what());
  }
  Profile prof;
  prof.program_hash = j.value("program_hash", "");
  // Bind sub-objects before .items(): the proxy does not keep a temporary
  // json alive.
  const json trips = j.value("loop_trips", json::object());
  for (const auto& [site, n] : trips.items()) {
    prof.loop_trips[std::stoi(site)] = n.get<std::int64_t>();
  }
  const json indirect = j.value("indirect_targets", json::object());
  for (const auto& [slot, cand] : indirect.items()) {
    prof.indirect_targets[slot] = cand.get<std::size_t>();
  }
  const json calls = j.value("call_targets", json::object());
  for (const auto& [site, callee] : calls.items()) {
    prof.call_targets[std::stoi(site)] = callee.get<std::string>();
  }
  if (j.contains("runtime_values")) {
    prof.runtime_values =
        j.at("runtime_values").get<std::map<std::string, std::int64_t>>();
  }
  return prof;
}

}  // namespace taskweave::tracer
