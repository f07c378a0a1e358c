#include "taskweave/preprocess.hpp"

#include <algorithm>

namespace taskweave::preprocess {

using tir::BufferSlice;
using tir::IndexExpr;
using tir::SiteId;
using tir::Statement;
using tracer::Profile;

namespace {

struct Env {
  std::map<std::string, std::int64_t> vars;        // unrolled induction values
  std::map<std::string, std::string> renames;      // rolled loop vars, renamed
  std::map<std::string, BufferSlice> params;       // inlined arguments
  std::string suffix;                              // "[i]" per unrolled level
};

class Flattener {
 public:
  Flattener(const tir::TirProgram& p, const Profile& prof)
      : p_(p), prof_(prof) {}

  tir::TirProgram run() {
    const auto it = p_.functions.find(p_.entry);
    if (it == p_.functions.end()) {
      throw FlattenError("entry function '" + p_.entry + "' not found");
    }
    tir::TirProgram out;
    out.name = p_.name;
    out.buffers = p_.buffers;
    out.runtime_values = prof_.runtime_values.empty() ? p_.runtime_values
                                                      : prof_.runtime_values;
    out.entry = "main";
    out.flattened = true;
    tir::Function main_fn;
    main_fn.body = emit_body(it->second.body, Env{});
    out.functions["main"] = std::move(main_fn);
    out.site_map = std::move(site_map_);
    return out;
  }

 private:
  SiteId fresh(SiteId origin) {
    const SiteId s = next_++;
    site_map_[s] = p_.origin_site(origin);
    return s;
  }

  IndexExpr subst(const IndexExpr& e, const Env& env) const {
    IndexExpr out;
    out.base = e.base;
    for (const auto& [var, coeff] : e.terms) {
      if (const auto rn = env.renames.find(var); rn != env.renames.end()) {
        out.terms.emplace_back(rn->second, coeff);
      } else if (const auto it = env.vars.find(var); it != env.vars.end()) {
        out.base += coeff * it->second;
      } else {
        out.terms.emplace_back(var, coeff);
      }
    }
    return out;
  }

  BufferSlice subst_slice(const BufferSlice& s, const Env& env,
                          SiteId site) const {
    IndexExpr off = subst(s.offset, env);
    if (s.ref.kind == tir::SliceRef::Kind::Param) {
      const auto it = env.params.find(s.ref.name);
      if (it == env.params.end()) {
        throw FlattenError("unbound parameter '" + s.ref.name + "' at site " +
                           std::to_string(site));
      }
      const BufferSlice& arg = it->second;  // already caller-substituted
      IndexExpr sum = arg.offset;
      sum.base += off.base;
      for (const auto& t : off.terms) sum.terms.push_back(t);
      return {arg.ref, std::move(sum), s.len};
    }
    return {s.ref, std::move(off), s.len};
  }

  std::vector<BufferSlice> subst_all(const std::vector<BufferSlice>& ss,
                                     const Env& env, SiteId site) const {
    std::vector<BufferSlice> out;
    out.reserve(ss.size());
    for (const auto& s : ss) out.push_back(subst_slice(s, env, site));
    return out;
  }

  const tir::KernelSpec& resolved_candidate(const tir::IndirectCall& ic,
                                            SiteId site) const {
    const auto it = prof_.indirect_targets.find(ic.slot);
    if (it == prof_.indirect_targets.end()) {
      throw FlattenError("call slot '" + ic.slot + "' at site " +
                         std::to_string(site) + " has no profiled target");
    }
    if (it->second >= ic.candidates.size()) {
      throw FlattenError("profiled target " + std::to_string(it->second) +
                         " out of range for slot '" + ic.slot + "' at site " +
                         std::to_string(site));
    }
    return ic.candidates[it->second];
  }

  bool has_type2(const std::vector<Statement>& body) const {
    return std::any_of(body.begin(), body.end(), [&](const Statement& st) {
      if (const auto* ct = std::get_if<tir::CallTask>(&st.node)) {
        return ct->kernel.task_kind == tir::TaskKind::Type2;
      }
      if (const auto* lp = std::get_if<tir::Loop>(&st.node)) {
        return has_type2(lp->body);
      }
      if (const auto* ic = std::get_if<tir::IndirectCall>(&st.node)) {
        const auto it = prof_.indirect_targets.find(ic->slot);
        if (it != prof_.indirect_targets.end() &&
            it->second < ic->candidates.size()) {
          return ic->candidates[it->second].task_kind == tir::TaskKind::Type2;
        }
        // Unprofiled (never executed): pessimistic over the candidate set.
        return std::any_of(ic->candidates.begin(), ic->candidates.end(),
                           [](const tir::KernelSpec& k) {
                             return k.task_kind == tir::TaskKind::Type2;
                           });
      }
      const auto& cf = std::get<tir::CallFn>(st.node);
      const auto it = p_.functions.find(cf.callee);
      return it != p_.functions.end() && has_type2(it->second.body);
    });
  }

  static bool param_mentions(const Env& env, const std::string& var) {
    for (const auto& [name, arg] : env.params) {
      for (const auto& [v, coeff] : arg.offset.terms) {
        if (v == var) return true;
      }
    }
    return false;
  }

  std::int64_t loop_trips(const tir::Loop& lp, SiteId site) const {
    if (lp.trip.kind == tir::TripSource::Kind::Constant) return lp.trip.n;
    const auto it = prof_.loop_trips.find(p_.origin_site(site));
    if (it == prof_.loop_trips.end()) {
      throw FlattenError("loop at site " + std::to_string(site) +
                         " has runtime trip count but no profile entry");
    }
    return it->second;
  }

  void emit_stmt(const Statement& st, const Env& env,
                 std::vector<Statement>& out) {
    if (const auto* ct = std::get_if<tir::CallTask>(&st.node)) {
      out.push_back({fresh(st.site),
                     tir::CallTask{ct->name + env.suffix, ct->kernel,
                                   subst_all(ct->reads, env, st.site),
                                   subst_all(ct->writes, env, st.site)}});
    } else if (const auto* lp = std::get_if<tir::Loop>(&st.node)) {
      if (has_type2(lp->body)) {
        const std::int64_t trips = loop_trips(*lp, st.site);
        for (std::int64_t i = 0; i < trips; ++i) {
          Env it_env = env;
          it_env.vars[lp->var] = i;
          it_env.suffix = env.suffix + "[" + std::to_string(i) + "]";
          for (const auto& inner : lp->body) emit_stmt(inner, it_env, out);
        }
      } else {
        // Type-1-only loop: keep rolled, flatten its body in place. The
        // loop variable shadows any same-named unrolled outer variable; it
        // is renamed when an inlined argument slice still refers to an
        // outer variable of the same name.
        const SiteId site = fresh(st.site);
        Env body_env = env;
        body_env.vars.erase(lp->var);
        body_env.renames.erase(lp->var);
        std::string var = lp->var;
        if (param_mentions(env, lp->var)) {
          var = lp->var + "$" + std::to_string(site);
          body_env.renames[lp->var] = var;
        }
        std::vector<Statement> body;
        for (const auto& inner : lp->body) emit_stmt(inner, body_env, body);
        out.push_back({site, tir::Loop{var, lp->trip, std::move(body)}});
      }
    } else if (const auto* ic = std::get_if<tir::IndirectCall>(&st.node)) {
      const tir::KernelSpec& kernel = resolved_candidate(*ic, st.site);
      out.push_back(
          {fresh(st.site),
           tir::CallTask{ic->slot + ":" + tir::to_string(kernel.id) + env.suffix,
                         kernel, subst_all(ic->reads, env, st.site),
                         subst_all(ic->writes, env, st.site)}});
    } else {
      const auto& cf = std::get<tir::CallFn>(st.node);
      const auto it = p_.functions.find(cf.callee);
      if (it == p_.functions.end()) {
        throw FlattenError("unknown function '" + cf.callee + "' at site " +
                           std::to_string(st.site));
      }
      const tir::Function& fn = it->second;
      if (fn.params.size() != cf.args.size()) {
        throw FlattenError("call to '" + cf.callee + "' arity mismatch at site " +
                           std::to_string(st.site));
      }
      Env callee;
      callee.suffix = env.suffix;
      for (std::size_t i = 0; i < fn.params.size(); ++i) {
        callee.params[fn.params[i]] = subst_slice(cf.args[i], env, st.site);
      }
      for (const auto& inner : fn.body) emit_stmt(inner, callee, out);
    }
  }

  std::vector<Statement> emit_body(const std::vector<Statement>& body,
                                   const Env& env) {
    std::vector<Statement> out;
    for (const auto& st : body) emit_stmt(st, env, out);
    return out;
  }

  const tir::TirProgram& p_;
  const Profile& prof_;
  SiteId next_ = 0;
  std::map<SiteId, SiteId> site_map_;
};

}  // namespace

tir::TirProgram flatten(const tir::TirProgram& p, const Profile& prof) {
  return Flattener(p, prof).run();
}

}  // namespace taskweave::preprocess
