#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "taskweave/tir.hpp"

namespace taskweave::rt {

struct PlatformError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class PeKind { CpuCore, Accelerator };

std::string to_string(PeKind k);
PeKind pe_kind_from_string(const std::string& s);

/// One processing element. CPU cores accept any kernel; accelerators accept
/// only the kernel families they list. Execution times are looked up by the
/// kernel's time signature ("FFT:512"), falling back to its family ("FFT")
/// and then to the wildcard "*".
struct Pe {
  int id = 0;
  PeKind kind = PeKind::CpuCore;
  std::string label;
  std::set<std::string> supported_kernels;  // families; ignored for CPUs
  std::map<std::string, std::uint64_t> exec_times_ns;
  std::uint64_t dispatch_overhead_ns = 0;

  bool supports(const tir::KernelSpec& k) const;
  std::optional<std::uint64_t> exec_time(const tir::KernelSpec& k) const;
};

struct Platform {
  std::string name;
  std::vector<Pe> pes;  // ascending ids
  std::uint64_t transfer_overhead_ns = 0;

  const Pe& pe(int id) const;
  std::size_t cpu_count() const;
};

/// Unique ascending ids, positive table durations, accelerators list at least
/// one kernel family. CPU-less platforms are fine for the virtual simulator;
/// the concurrent runtime re-checks for a host core itself.
void validate_platform(const Platform& p);

Platform load_platform(const std::string& path);
void save_platform(const Platform& p, const std::string& path);

/// n CPU cores (FFT and GEMM at cpu_ns) followed by n_accel FFT accelerators
/// (FFT at accel_ns); zero overheads.
Platform make_cpu_fft_platform(int n_cpus, int n_accels, std::uint64_t cpu_ns,
                               std::uint64_t accel_ns);

/// Pure accelerator grid, DS3 style: n FFT accelerators at fft_ns each.
Platform make_fft_grid(int n_accels, std::uint64_t fft_ns);

}  // namespace taskweave::rt
