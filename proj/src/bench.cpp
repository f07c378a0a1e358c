#include "taskweave/bench.hpp"

#include <stdexcept>

namespace taskweave::tir {

namespace {

/// Assigns site ids in program order while assembling statement lists.
class Builder {
 public:
  Statement task(const std::string& name, KernelSpec kernel,
                 std::vector<BufferSlice> reads,
                 std::vector<BufferSlice> writes) {
    return {next_++, CallTask{name, std::move(kernel), std::move(reads),
                              std::move(writes)}};
  }
  Statement loop(const std::string& var, TripSource trip,
                 std::vector<Statement> body) {
    return {next_++, Loop{var, trip, std::move(body)}};
  }
  Statement indirect(const std::string& slot, std::vector<KernelSpec> cands,
                     std::vector<BufferSlice> reads,
                     std::vector<BufferSlice> writes) {
    return {next_++, IndirectCall{slot, std::move(cands), std::move(reads),
                                  std::move(writes)}};
  }
  Statement call(const std::string& callee, std::vector<BufferSlice> args) {
    return {next_++, CallFn{callee, std::move(args)}};
  }

 private:
  SiteId next_ = 0;
};

KernelSpec fft_kernel(std::int64_t n) {
  return {KernelId::Fft, TaskKind::Type2, {{"n", n}}, ""};
}

KernelSpec gemm_kernel(std::int64_t m, std::int64_t k, std::int64_t n) {
  return {KernelId::Gemm, TaskKind::Type2, {{"m", m}, {"k", k}, {"n", n}}, ""};
}

KernelSpec read_kernel(std::int64_t seed) {
  return {KernelId::ReadData, TaskKind::Type1, {{"seed", seed}}, ""};
}

KernelSpec write_kernel() {
  return {KernelId::WriteData, TaskKind::Type1, {}, ""};
}

KernelSpec elem_kernel(const std::string& op) {
  return {KernelId::Elemwise, TaskKind::Type1, {}, op};
}

BufferSlice whole(const std::string& buf, std::uint64_t len) {
  return {SliceRef::buffer(buf), IndexExpr::constant(0), len};
}

BufferSlice window(const std::string& buf, const std::string& var,
                   std::uint64_t len) {
  return {SliceRef::buffer(buf),
          IndexExpr::affine(0, var, static_cast<std::int64_t>(len)), len};
}

BufferSlice param_whole(const std::string& name, std::uint64_t len) {
  return {SliceRef::param(name), IndexExpr::constant(0), len};
}

// Fig-style two-pulse pipeline: a runtime-trip loop calls a helper that
// reads a pulse, transforms it through a call slot, and writes the result.
TirProgram running_example() {
  constexpr std::uint64_t kSlice = 2048 * 8;
  TirProgram p;
  p.name = "running_example";
  p.buffers = {{"a", 2 * kSlice, ElementKind::Complex32},
               {"b", 2 * kSlice, ElementKind::Complex32}};
  p.runtime_values["n_pulses"] = 2;
  p.slot_bindings["transform"] = IndexExpr::constant(0);

  Builder b;
  Function process;
  process.params = {"x", "y"};
  process.body.push_back(b.task("read_pulse", read_kernel(11), {},
                                {param_whole("x", kSlice)}));
  process.body.push_back(b.indirect(
      "transform", {fft_kernel(2048), elem_kernel("copy")},
      {param_whole("x", kSlice)}, {param_whole("y", kSlice)}));
  process.body.push_back(
      b.task("write_pulse", write_kernel(), {param_whole("y", kSlice)}, {}));

  Function main_fn;
  main_fn.body.push_back(
      b.loop("i", TripSource::runtime("n_pulses"),
             {b.call("process_pulse",
                     {window("a", "i", kSlice), window("b", "i", kSlice)})}));

  p.functions["process_pulse"] = std::move(process);
  p.functions["main"] = std::move(main_fn);
  p.entry = "main";
  return p;
}

// Three FFT phases over P pulses: matched filtering of pulse and reference
// spectra, pulse compression, then the Doppler transform. Phase parallelism
// 2P, P, P.
TirProgram pulse_doppler(std::int64_t pulses) {
  if (pulses != 4 && pulses != 256) {
    throw std::invalid_argument("pulse_doppler supports 4 or 256 pulses, got " +
                                std::to_string(pulses));
  }
  constexpr std::uint64_t kSlice = 256 * 8;
  const auto total = static_cast<std::uint64_t>(pulses) * kSlice;
  TirProgram p;
  p.name = pulses == 4 ? "pulse_doppler" : "pulse_doppler_256";
  for (const char* id : {"pulses", "refs", "pfreq", "rfreq", "prod", "corr",
                         "dopp_in", "dopp"}) {
    p.buffers.push_back({id, total, ElementKind::Complex32});
  }

  Builder b;
  const TripSource trip = TripSource::constant(pulses);
  Function main_fn;
  main_fn.body.push_back(b.loop(
      "i", trip,
      {b.task("read_pulse", read_kernel(21), {}, {window("pulses", "i", kSlice)}),
       b.task("read_ref", read_kernel(22), {}, {window("refs", "i", kSlice)})}));
  main_fn.body.push_back(
      b.loop("i", trip,
             {b.task("fft_pulse", fft_kernel(256),
                     {window("pulses", "i", kSlice)},
                     {window("pfreq", "i", kSlice)})}));
  main_fn.body.push_back(b.loop(
      "i", trip,
      {b.task("fft_ref", fft_kernel(256), {window("refs", "i", kSlice)},
              {window("rfreq", "i", kSlice)})}));
  main_fn.body.push_back(b.loop(
      "i", trip,
      {b.task("mix", {KernelId::Correlate, TaskKind::Type1, {}, ""},
              {window("pfreq", "i", kSlice), window("rfreq", "i", kSlice)},
              {window("prod", "i", kSlice)})}));
  main_fn.body.push_back(
      b.loop("i", trip,
             {b.task("fft_compress", fft_kernel(256),
                     {window("prod", "i", kSlice)},
                     {window("corr", "i", kSlice)})}));
  main_fn.body.push_back(b.loop(
      "i", trip,
      {b.task("gather", elem_kernel("copy"), {window("corr", "i", kSlice)},
              {window("dopp_in", "i", kSlice)})}));
  main_fn.body.push_back(b.loop(
      "i", trip,
      {b.task("fft_doppler", fft_kernel(256), {window("dopp_in", "i", kSlice)},
              {window("dopp", "i", kSlice)})}));
  main_fn.body.push_back(
      b.loop("i", trip, {b.task("write_range", write_kernel(),
                                {window("dopp", "i", kSlice)}, {})}));

  p.functions["main"] = std::move(main_fn);
  p.entry = "main";
  return p;
}

// Transmit chain: scramble, interleave, pilot-insert, modulate, then one
// phase of per-symbol FFTs (trip count resolved at run time).
TirProgram wifi_tx() {
  constexpr std::uint64_t kPayload = 960;    // 10 groups of 96 bytes
  constexpr std::uint64_t kFramed = 1280;    // + 32 pilot bytes per group
  constexpr std::uint64_t kSymBytes = 128 * 8;
  TirProgram p;
  p.name = "wifi_tx";
  p.buffers = {{"raw", kPayload, ElementKind::Byte},
               {"scrambled", kPayload, ElementKind::Byte},
               {"interleaved", kPayload, ElementKind::Byte},
               {"framed", kFramed, ElementKind::Byte},
               {"symbols", kFramed * 8, ElementKind::Complex32},
               {"freq", kFramed * 8, ElementKind::Complex32}};
  p.runtime_values["n_symbols"] = 10;

  Builder b;
  Function main_fn;
  main_fn.body.push_back(
      b.task("read_bits", read_kernel(41), {}, {whole("raw", kPayload)}));
  main_fn.body.push_back(
      b.task("scramble", {KernelId::Scrambler, TaskKind::Type1, {}, ""},
             {whole("raw", kPayload)}, {whole("scrambled", kPayload)}));
  main_fn.body.push_back(b.task(
      "interleave",
      {KernelId::Interleaver, TaskKind::Type1, {{"rows", 24}, {"cols", 40}}, ""},
      {whole("scrambled", kPayload)}, {whole("interleaved", kPayload)}));
  main_fn.body.push_back(b.task(
      "pilot_insert",
      {KernelId::PilotInsert, TaskKind::Type1, {{"group", 96}, {"pilots", 32}}, ""},
      {whole("interleaved", kPayload)}, {whole("framed", kFramed)}));
  main_fn.body.push_back(b.task("modulate", elem_kernel("modulate"),
                                {whole("framed", kFramed)},
                                {whole("symbols", kFramed * 8)}));
  main_fn.body.push_back(
      b.loop("s", TripSource::runtime("n_symbols"),
             {b.task("fft_symbol", fft_kernel(128),
                     {window("symbols", "s", kSymBytes)},
                     {window("freq", "s", kSymBytes)})}));
  main_fn.body.push_back(b.task("write_packet", write_kernel(),
                                {whole("freq", kFramed * 8)}, {}));

  p.functions["main"] = std::move(main_fn);
  p.entry = "main";
  return p;
}

// Two spectra in parallel, correlate, inverse transform, peak search.
TirProgram radar_correlator() {
  constexpr std::uint64_t kSlice = 512 * 8;
  TirProgram p;
  p.name = "radar_correlator";
  p.buffers = {{"rx", kSlice, ElementKind::Complex32},
               {"ref", kSlice, ElementKind::Complex32},
               {"rx_f", kSlice, ElementKind::Complex32},
               {"ref_f", kSlice, ElementKind::Complex32},
               {"prod", kSlice, ElementKind::Complex32},
               {"corr", kSlice, ElementKind::Complex32},
               {"peak", 8, ElementKind::Float32}};

  Builder b;
  Function main_fn;
  main_fn.body.push_back(
      b.task("read_rx", read_kernel(31), {}, {whole("rx", kSlice)}));
  main_fn.body.push_back(
      b.task("read_ref", read_kernel(32), {}, {whole("ref", kSlice)}));
  main_fn.body.push_back(b.task("fft_rx", fft_kernel(512),
                                {whole("rx", kSlice)},
                                {whole("rx_f", kSlice)}));
  main_fn.body.push_back(b.task("fft_ref", fft_kernel(512),
                                {whole("ref", kSlice)},
                                {whole("ref_f", kSlice)}));
  main_fn.body.push_back(
      b.task("correlate", {KernelId::Correlate, TaskKind::Type1, {}, ""},
             {whole("rx_f", kSlice), whole("ref_f", kSlice)},
             {whole("prod", kSlice)}));
  main_fn.body.push_back(b.task("fft_lag", fft_kernel(512),
                                {whole("prod", kSlice)},
                                {whole("corr", kSlice)}));
  main_fn.body.push_back(b.task("find_peak", elem_kernel("peak"),
                                {whole("corr", kSlice)}, {whole("peak", 8)}));
  main_fn.body.push_back(b.task("write_result", write_kernel(),
                                {whole("corr", kSlice), whole("peak", 8)}, {}));

  p.functions["main"] = std::move(main_fn);
  p.entry = "main";
  return p;
}

// Successive interference cancellation shaped as two projection GEMMs, a
// subtraction, and one cleanup GEMM over the 4x64 signal matrix.
TirProgram temporal_mitigation() {
  constexpr std::uint64_t kSig = 4 * 64 * 4;  // 4x64 float32
  constexpr std::uint64_t kProj = 4 * 4 * 4;  // 4x4 float32
  TirProgram p;
  p.name = "temporal_mitigation";
  p.buffers = {{"sig", kSig, ElementKind::Float32},
               {"q0", kProj, ElementKind::Float32},
               {"q1", kProj, ElementKind::Float32},
               {"q2", kProj, ElementKind::Float32},
               {"y0", kSig, ElementKind::Float32},
               {"y1", kSig, ElementKind::Float32},
               {"resid", kSig, ElementKind::Float32},
               {"clean", kSig, ElementKind::Float32}};

  Builder b;
  const KernelSpec gemm = gemm_kernel(4, 4, 64);
  Function main_fn;
  main_fn.body.push_back(
      b.task("read_signal", read_kernel(51), {}, {whole("sig", kSig)}));
  main_fn.body.push_back(
      b.task("read_q0", read_kernel(52), {}, {whole("q0", kProj)}));
  main_fn.body.push_back(
      b.task("read_q1", read_kernel(53), {}, {whole("q1", kProj)}));
  main_fn.body.push_back(
      b.task("read_q2", read_kernel(54), {}, {whole("q2", kProj)}));
  main_fn.body.push_back(b.task("project0", gemm,
                                {whole("q0", kProj), whole("sig", kSig)},
                                {whole("y0", kSig)}));
  main_fn.body.push_back(b.task("project1", gemm,
                                {whole("q1", kProj), whole("sig", kSig)},
                                {whole("y1", kSig)}));
  main_fn.body.push_back(b.task("cancel", elem_kernel("sub"),
                                {whole("y0", kSig), whole("y1", kSig)},
                                {whole("resid", kSig)}));
  main_fn.body.push_back(b.task("rebuild", gemm,
                                {whole("q2", kProj), whole("resid", kSig)},
                                {whole("clean", kSig)}));
  main_fn.body.push_back(b.task("write_clean", write_kernel(),
                                {whole("clean", kSig)}, {}));

  p.functions["main"] = std::move(main_fn);
  p.entry = "main";
  return p;
}

}  // namespace

TirProgram build_benchmark(const std::string& name, std::int64_t n_pulses) {
  if (name == "running_example") return running_example();
  if (name == "pulse_doppler") return pulse_doppler(n_pulses);
  if (name == "wifi_tx") return wifi_tx();
  if (name == "radar_correlator") return radar_correlator();
  if (name == "temporal_mitigation") return temporal_mitigation();
  throw std::invalid_argument("unknown benchmark '" + name + "'");
}

const std::vector<std::string>& benchmark_ids() {
  static const std::vector<std::string> ids = {
      "running_example", "pulse_doppler", "pulse_doppler_256",
      "wifi_tx",         "radar_correlator", "temporal_mitigation"};
  return ids;
}

TirProgram build_benchmark_by_id(const std::string& id) {
  if (id == "pulse_doppler_256") return build_benchmark("pulse_doppler", 256);
  return build_benchmark(id);
}

}  // namespace taskweave::tir
