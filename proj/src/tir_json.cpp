#include "taskweave/tir_json.hpp"

#include <fstream>

#include "taskweave/util.hpp"

namespace taskweave::tir {

using nlohmann::json;

json to_json(const KernelSpec& k) {
  json j;
  j["id"] = to_string(k.id);
  j["task_kind"] = to_string(k.task_kind);
  if (!k.params.empty()) j["params"] = k.params;
  if (!k.op.empty()) j["op"] = k.op;
  return j;
}

KernelSpec kernel_from_json(const json& j) {
  KernelSpec k;
  k.id = kernel_id_from_string(j.at("id").get<std::string>());
  k.task_kind = task_kind_from_string(j.at("task_kind").get<std::string>());
  if (j.contains("params")) {
    k.params = j.at("params").get<std::map<std::string, std::int64_t>>();
  }
  if (j.contains("op")) k.op = j.at("op").get<std::string>();
  return k;
}

json to_json(const IndexExpr& e) {
  if (e.is_constant()) return json(e.base);
  json j;
  j["base"] = e.base;
  json terms = json::array();
  for (const auto& [var, coeff] : e.terms) terms.push_back(json{var, coeff});
  j["terms"] = terms;
  return j;
}

IndexExpr index_expr_from_json(const json& j) {
  IndexExpr e;
  if (j.is_number()) {
    e.base = j.get<std::int64_t>();
    return e;
  }
  e.base = j.value("base", std::int64_t{0});
  if (j.contains("terms")) {
    for (const auto& t : j.at("terms")) {
      e.terms.emplace_back(t.at(0).get<std::string>(),
                           t.at(1).get<std::int64_t>());
    }
  }
  return e;
}

json to_json(const BufferSlice& s) {
  json j;
  if (s.ref.kind == SliceRef::Kind::Buffer) {
    j["buf"] = s.ref.name;
  } else {
    j["param"] = s.ref.name;
  }
  j["offset"] = to_json(s.offset);
  j["len"] = s.len;
  return j;
}

BufferSlice slice_from_json(const json& j) {
  BufferSlice s;
  if (j.contains("buf")) {
    s.ref = SliceRef::buffer(j.at("buf").get<std::string>());
  } else {
    s.ref = SliceRef::param(j.at("param").get<std::string>());
  }
  s.offset = index_expr_from_json(j.at("offset"));
  s.len = j.at("len").get<std::uint64_t>();
  return s;
}

namespace {

json slices_to_json(const std::vector<BufferSlice>& v) {
  json a = json::array();
  for (const auto& s : v) a.push_back(to_json(s));
  return a;
}

std::vector<BufferSlice> slices_from_json(const json& a) {
  std::vector<BufferSlice> v;
  for (const auto& s : a) v.push_back(slice_from_json(s));
  return v;
}

json statement_to_json(const Statement& st);

json body_to_json(const std::vector<Statement>& body) {
  json a = json::array();
  for (const auto& st : body) a.push_back(statement_to_json(st));
  return a;
}

json statement_to_json(const Statement& st) {
  json j;
  j["site"] = st.site;
  if (const auto* call = std::get_if<CallTask>(&st.node)) {
    j["stmt"] = "call_task";
    j["name"] = call->name;
    j["kernel"] = to_json(call->kernel);
    j["reads"] = slices_to_json(call->reads);
    j["writes"] = slices_to_json(call->writes);
  } else if (const auto* loop = std::get_if<Loop>(&st.node)) {
    j["stmt"] = "loop";
    j["var"] = loop->var;
    if (loop->trip.kind == TripSource::Kind::Constant) {
      j["trip"] = {{"kind", "constant"}, {"n", loop->trip.n}};
    } else {
      j["trip"] = {{"kind", "runtime"}, {"key", loop->trip.key}};
    }
    j["body"] = body_to_json(loop->body);
  } else if (const auto* ind = std::get_if<IndirectCall>(&st.node)) {
    j["stmt"] = "indirect_call";
    j["slot"] = ind->slot;
    json cands = json::array();
    for (const auto& k : ind->candidates) cands.push_back(to_json(k));
    j["candidates"] = cands;
    j["reads"] = slices_to_json(ind->reads);
    j["writes"] = slices_to_json(ind->writes);
  } else if (const auto* call_fn = std::get_if<CallFn>(&st.node)) {
    j["stmt"] = "call_fn";
    j["callee"] = call_fn->callee;
    j["args"] = slices_to_json(call_fn->args);
  }
  return j;
}

Statement statement_from_json(const json& j);

std::vector<Statement> body_from_json(const json& a) {
  std::vector<Statement> v;
  for (const auto& s : a) v.push_back(statement_from_json(s));
  return v;
}

Statement statement_from_json(const json& j) {
  Statement st;
  st.site = j.at("site").get<SiteId>();
  const auto kind = j.at("stmt").get<std::string>();
  if (kind == "call_task") {
    CallTask call;
    call.name = j.value("name", "");
    call.kernel = kernel_from_json(j.at("kernel"));
    call.reads = slices_from_json(j.at("reads"));
    call.writes = slices_from_json(j.at("writes"));
    st.node = std::move(call);
  } else if (kind == "loop") {
    Loop loop;
    loop.var = j.at("var").get<std::string>();
    const auto& t = j.at("trip");
    if (t.at("kind").get<std::string>() == "constant") {
      loop.trip = TripSource::constant(t.at("n").get<std::int64_t>());
    } else {
      loop.trip = TripSource::runtime(t.at("key").get<std::string>());
    }
    loop.body = body_from_json(j.at("body"));
    st.node = std::move(loop);
  } else if (kind == "indirect_call") {
    IndirectCall ind;
    ind.slot = j.at("slot").get<std::string>();
    for (const auto& c : j.at("candidates")) {
      ind.candidates.push_back(kernel_from_json(c));
    }
    ind.reads = slices_from_json(j.at("reads"));
    ind.writes = slices_from_json(j.at("writes"));
    st.node = std::move(ind);
  } else if (kind == "call_fn") {
    CallFn call_fn;
    call_fn.callee = j.at("callee").get<std::string>();
    call_fn.args = slices_from_json(j.at("args"));
    st.node = std::move(call_fn);
  } else {
    throw std::invalid_argument("unknown statement kind: " + kind);
  }
  return st;
}

}  // namespace

json to_json(const TirProgram& p) {
  json j;
  j["version"] = 1;
  j["name"] = p.name;
  json bufs = json::array();
  for (const auto& b : p.buffers) {
    bufs.push_back({{"id", b.id},
                    {"size_bytes", b.size_bytes},
                    {"element_kind", to_string(b.element_kind)}});
  }
  j["buffers"] = bufs;
  json fns;
  for (const auto& [name, fn] : p.functions) {
    fns[name] = {{"params", fn.params}, {"body", body_to_json(fn.body)}};
  }
  j["functions"] = fns;
  j["entry"] = p.entry;
  if (!p.runtime_values.empty()) j["runtime_values"] = p.runtime_values;
  if (!p.slot_bindings.empty()) {
    json slots;
    for (const auto& [slot, expr] : p.slot_bindings) {
      slots[slot] = to_json(expr);
    }
    j["slot_bindings"] = slots;
  }
  if (p.flattened) {
    j["flattened"] = true;
    json sm;
    for (const auto& [flat, orig] : p.site_map) {
      sm[std::to_string(flat)] = orig;
    }
    j["site_map"] = sm;
  }
  return j;
}

TirProgram program_from_json(const json& j) {
  TirProgram p;
  p.name = j.value("name", "");
  for (const auto& b : j.at("buffers")) {
    Buffer buf;
    buf.id = b.at("id").get<std::string>();
    buf.size_bytes = b.at("size_bytes").get<std::uint64_t>();
    buf.element_kind =
        element_kind_from_string(b.at("element_kind").get<std::string>());
    p.buffers.push_back(std::move(buf));
  }
  for (const auto& [name, fj] : j.at("functions").items()) {
    Function fn;
    fn.params = fj.value("params", std::vector<std::string>{});
    fn.body = body_from_json(fj.at("body"));
    p.functions.emplace(name, std::move(fn));
  }
  p.entry = j.value("entry", "");
  if (j.contains("runtime_values")) {
    p.runtime_values =
        j.at("runtime_values").get<std::map<std::string, std::int64_t>>();
  }
  if (j.contains("slot_bindings")) {
    for (const auto& [slot, ej] : j.at("slot_bindings").items()) {
      p.slot_bindings.emplace(slot, index_expr_from_json(ej));
    }
  }
  p.flattened = j.value("flattened", false);
  if (j.contains("site_map")) {
    for (const auto& [flat, orig] : j.at("site_map").items()) {
      p.site_map.emplace(static_cast<SiteId>(std::stol(flat)),
                         orig.get<SiteId>());
    }
  }
  return p;
}

std::string program_hash(const TirProgram& p) {
  return to_hex(fnv1a64(to_json(p).dump()));
}

void save_program(const TirProgram& p, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open for writing: " + path);
  out << to_json(p).dump(2) << "\n";
}

TirProgram load_program(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw IoError(path + ": " + e.what());
  }
  return program_from_json(j);
}

}  // namespace taskweave::tir
