#include "taskweave/platform.hpp"
#include "taskweave/util.hpp"

#include <algorithm>
#include <fstream>

#include <json.hpp>

namespace taskweave::rt {

using nlohmann::json;

std::string to_string(PeKind k) {
  return k == PeKind::CpuCore ? "cpu" : "accel";
}

PeKind pe_kind_from_string(const std::string& s) {
  if (s == "cpu") return PeKind::CpuCore;
  if (s == "accel") return PeKind::Accelerator;
  throw PlatformError("unknown PE kind: " + s);
}

bool Pe::supports(const tir::KernelSpec& k) const {
  if (kind == PeKind::CpuCore) return true;
  return supported_kernels.count(tir::to_string(k.id)) > 0;
}

std::optional<std::uint64_t> Pe::exec_time(const tir::KernelSpec& k) const {
  for (const std::string& key :
       {k.time_signature(), tir::to_string(k.id), std::string("*")}) {
    auto it = exec_times_ns.find(key);
    if (it != exec_times_ns.end()) return it->second;
  }
  return std::nullopt;
}

const Pe& Platform::pe(int id) const {
  for (const auto& p : pes) {
    if (p.id == id) return p;
  }
  throw PlatformError("no PE with id " + std::to_string(id));
}

std::size_t Platform::cpu_count() const {
  return static_cast<std::size_t>(
      std::count_if(pes.begin(), pes.end(),
                    [](const Pe& p) { return p.kind == PeKind::CpuCore; }));
}

void validate_platform(const Platform& p) {
  if (p.pes.empty()) throw PlatformError("platform has no PEs");
  for (std::size_t i = 0; i < p.pes.size(); ++i) {
    const Pe& pe = p.pes[i];
    if (i > 0 && pe.id <= p.pes[i - 1].id)
      throw PlatformError("PE ids must be unique and ascending");
    if (pe.kind == PeKind::Accelerator && pe.supported_kernels.empty())
      throw PlatformError("accelerator " + std::to_string(pe.id) +
                          " supports no kernel family");
    for (const auto& [key, ns] : pe.exec_times_ns) {
      if (ns == 0)
        throw PlatformError("PE " + std::to_string(pe.id) + " entry '" + key +
                            "' must be > 0 ns");
    }
  }
}

Platform load_platform(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw IoError("malformed platform file " + path + ": " + e.what());
  }
  Platform p;
  p.name = j.value("name", "");
  p.transfer_overhead_ns = j.value("transfer_overhead_ns", 0ull);
  for (const auto& pj : j.at("pes")) {
    Pe pe;
    pe.id = pj.at("id").get<int>();
    pe.kind = pe_kind_from_string(pj.at("kind").get<std::string>());
    pe.label = pj.value("label", to_string(pe.kind) + std::to_string(pe.id));
    pe.dispatch_overhead_ns = pj.value("dispatch_overhead_ns", 0ull);
    if (pj.contains("supported_kernels"))
      for (const auto& s : pj.at("supported_kernels"))
        pe.supported_kernels.insert(s.get<std::string>());
    for (const auto& [key, ns] : pj.at("exec_times_ns").items())
      pe.exec_times_ns[key] = ns.get<std::uint64_t>();
    p.pes.push_back(std::move(pe));
  }
  validate_platform(p);
  return p;
}

void save_platform(const Platform& p, const std::string& path) {
  json j;
  j["name"] = p.name;
  j["transfer_overhead_ns"] = p.transfer_overhead_ns;
  j["pes"] = json::array();
  for (const Pe& pe : p.pes) {
    json pj;
    pj["id"] = pe.id;
    pj["kind"] = to_string(pe.kind);
    pj["label"] = pe.label;
    pj["dispatch_overhead_ns"] = pe.dispatch_overhead_ns;
    if (!pe.supported_kernels.empty())
      pj["supported_kernels"] = pe.supported_kernels;
    pj["exec_times_ns"] = pe.exec_times_ns;
    j["pes"].push_back(std::move(pj));
  }
  std::ofstream out(path);
  if (!out) throw IoError("cannot open for writing: " + path);
  out << j.dump(2) << "\n";
}

Platform make_cpu_fft_platform(int n_cpus, int n_accels, std::uint64_t cpu_ns,
                               std::uint64_t accel_ns) {
  Platform p;
  p.name = std::to_string(n_cpus) + "cpu" + std::to_string(n_accels) + "fft";
  int id = 0;
  for (int i = 0; i < n_cpus; ++i) {
    Pe pe;
    pe.id = id++;
    pe.kind = PeKind::CpuCore;
    pe.label = "cpu" + std::to_string(i);
    pe.exec_times_ns = {{"FFT", cpu_ns}, {"GEMM", cpu_ns}};
    p.pes.push_back(std::move(pe));
  }
  for (int i = 0; i < n_accels; ++i) {
    Pe pe;
    pe.id = id++;
    pe.kind = PeKind::Accelerator;
    pe.label = "fft" + std::to_string(i);
    pe.supported_kernels = {"FFT"};
    pe.exec_times_ns = {{"FFT", accel_ns}};
    p.pes.push_back(std::move(pe));
  }
  validate_platform(p);
  return p;
}

Platform make_fft_grid(int n_accels, std::uint64_t fft_ns) {
  Platform p = make_cpu_fft_platform(0, n_accels, 0, fft_ns);
  p.name = std::to_string(n_accels) + "fft";
  return p;
}

}  // namespace taskweave::rt
