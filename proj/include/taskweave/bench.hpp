#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "taskweave/tir.hpp"

namespace taskweave::tir {

/// Generates one of the bundled benchmark programs:
///   running_example      2-pulse read/FFT/write loop through a call slot
///   pulse_doppler        3 FFT phases with parallelism 2P, P, P (P = n_pulses)
///   wifi_tx              scramble/interleave/pilot/modulate + 10 FFT-128
///   radar_correlator     2 FFT-512 + correlate + FFT-512 + peak
///   temporal_mitigation  2 GEMM + subtract + GEMM
/// `n_pulses` applies to pulse_doppler only (4 or 256).
TirProgram build_benchmark(const std::string& name, std::int64_t n_pulses = 4);

/// Benchmark ids accepted by the CLI; pulse_doppler variants are encoded as
/// pulse_doppler and pulse_doppler_256.
const std::vector<std::string>& benchmark_ids();

/// Resolves a CLI id to (name, n_pulses) and builds it.
TirProgram build_benchmark_by_id(const std::string& id);

}  // namespace taskweave::tir
