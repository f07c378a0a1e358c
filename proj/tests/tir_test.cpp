#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <complex>
#include <random>

#include "doctest.h"
#include "taskweave/bench.hpp"
#include "taskweave/interp.hpp"
#include "taskweave/kernels.hpp"
#include "taskweave/preprocess.hpp"
#include "taskweave/tir.hpp"
#include "taskweave/tir_json.hpp"

using namespace taskweave;
using namespace taskweave::tir;

namespace {

// O(n^2) direct DFT, the oracle the radix-2 implementation is checked
// against.
std::vector<std::complex<double>> dft(const std::vector<std::complex<float>>& x) {
  const std::size_t n = x.size();
  std::vector<std::complex<double>> out(n);
  for (std::size_t k = 0; k < n; ++k) {
    std::complex<double> acc = 0;
    for (std::size_t j = 0; j < n; ++j) {
      const double ang = -2.0 * M_PI * double(k * j) / double(n);
      acc += std::complex<double>(x[j].real(), x[j].imag()) *
             std::complex<double>(std::cos(ang), std::sin(ang));
    }
    out[k] = acc;
  }
  return out;
}

bool contains(const ValidationReport& r, const std::string& needle) {
  for (const auto& i : r.issues)
    if (i.message.find(needle) != std::string::npos) return true;
  return false;
}

}  // namespace

TEST_CASE("fft-8 of all-ones is the scaled delta") {
  std::vector<std::complex<float>> x(8, {1.0f, 0.0f});
  fft_radix2(x);
  CHECK(x[0].real() == doctest::Approx(8.0f));
  CHECK(x[0].imag() == doctest::Approx(0.0f));
  for (std::size_t k = 1; k < 8; ++k) {
    CHECK(std::abs(x[k]) == doctest::Approx(0.0f).epsilon(1e-5));
  }
}

TEST_CASE("fft of unit impulse is the all-ones spectrum") {
  for (std::size_t n : {2, 8, 64, 256}) {
    std::vector<std::complex<float>> x(n, {0.0f, 0.0f});
    x[0] = {1.0f, 0.0f};
    fft_radix2(x);
    for (const auto& v : x) {
      CHECK(v.real() == doctest::Approx(1.0f).epsilon(1e-5));
      CHECK(v.imag() == doctest::Approx(0.0f).epsilon(1e-5));
    }
  }
}

TEST_CASE("fft matches the direct dft oracle on random inputs") {
  std::mt19937 rng(7);
  std::uniform_real_distribution<float> dist(-1.0f, 1.0f);
  const std::size_t sizes[] = {4, 16, 128, 512};
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = sizes[trial % 4];
    std::vector<std::complex<float>> x(n);
    for (auto& v : x) v = {dist(rng), dist(rng)};
    auto ref = dft(x);
    fft_radix2(x);
    double err = 0, norm = 0;
    for (std::size_t k = 0; k < n; ++k) {
      err += std::norm(std::complex<double>(x[k].real(), x[k].imag()) - ref[k]);
      norm += std::norm(ref[k]);
    }
    REQUIRE(std::sqrt(err / norm) < 1e-4);
  }
}

TEST_CASE("gemm with identity left operand copies the right operand") {
  const std::int64_t m = 4, n = 6;
  Buffer a{"a", std::uint64_t(4 * m * m), ElementKind::Float32};
  Buffer b{"b", std::uint64_t(4 * m * n), ElementKind::Float32};
  Buffer c{"c", std::uint64_t(4 * m * n), ElementKind::Float32};
  Arena arena({a, b, c});
  auto* af = reinterpret_cast<float*>(arena.at(arena.base_of("a"), a.size_bytes));
  for (std::int64_t i = 0; i < m; ++i)
    for (std::int64_t j = 0; j < m; ++j) af[i * m + j] = i == j ? 1.0f : 0.0f;
  auto* bf = reinterpret_cast<float*>(arena.at(arena.base_of("b"), b.size_bytes));
  for (std::int64_t i = 0; i < m * n; ++i) bf[i] = float(i) * 0.5f - 3.0f;

  KernelSpec k{KernelId::Gemm, TaskKind::Type2,
               {{"m", m}, {"k", m}, {"n", n}}, ""};
  std::vector<ResolvedSlice> reads = {
      {"a", 0, a.size_bytes, arena.base_of("a")},
      {"b", 0, b.size_bytes, arena.base_of("b")}};
  std::vector<ResolvedSlice> writes = {
      {"c", 0, c.size_bytes, arena.base_of("c")}};
  kernel_exec(k, reads, writes, arena, nullptr, nullptr);

  const auto* cf =
      reinterpret_cast<const float*>(arena.at(arena.base_of("c"), c.size_bytes));
  for (std::int64_t i = 0; i < m * n; ++i) CHECK(cf[i] == bf[i]);
}

TEST_CASE("fft-8 all-ones through kernel_exec") {
  Buffer in{"in", 64, ElementKind::Complex32};
  Buffer out{"out", 64, ElementKind::Complex32};
  Arena arena({in, out});
  auto* xs = reinterpret_cast<float*>(arena.at(arena.base_of("in"), 64));
  for (int i = 0; i < 8; ++i) {
    xs[2 * i] = 1.0f;
    xs[2 * i + 1] = 0.0f;
  }
  KernelSpec k{KernelId::Fft, TaskKind::Type2, {{"n", 8}}, ""};
  CHECK(k.time_signature() == "FFT:8");
  kernel_exec(k, {{"in", 0, 64, arena.base_of("in")}},
              {{"out", 0, 64, arena.base_of("out")}}, arena, nullptr, nullptr);
  const auto* ys =
      reinterpret_cast<const float*>(arena.at(arena.base_of("out"), 64));
  CHECK(ys[0] == doctest::Approx(8.0f));
  for (int i = 1; i < 16; ++i) CHECK(ys[i] == doctest::Approx(0.0f));
}

TEST_CASE("validation flags the degenerate and boundary cases") {
  TirProgram empty;
  CHECK(contains(validate_program(empty), "missing entry"));

  TirProgram p;
  p.name = "bad";
  p.buffers = {{"buf", 64, ElementKind::Byte}};
  Function main_fn;
  Statement st;
  st.site = 0;
  st.node = CallTask{"t",
                     {KernelId::Elemwise, TaskKind::Type1, {}, "copy"},
                     {{SliceRef::buffer("buf"), IndexExpr::constant(32), 64}},
                     {{SliceRef::buffer("nope"), IndexExpr::constant(0), 8}}};
  main_fn.body.push_back(st);
  p.functions["main"] = main_fn;
  p.entry = "main";
  auto report = validate_program(p);
  CHECK(!report.ok());
  CHECK(contains(report, "exceeds buffer 'buf'"));
  CHECK(contains(report, "undeclared buffer 'nope'"));

  SUBCASE("fft point count must be a power of two") {
    TirProgram q = p;
    q.functions["main"].body[0].node =
        CallTask{"f",
                 {KernelId::Fft, TaskKind::Type2, {{"n", 12}}, ""},
                 {{SliceRef::buffer("buf"), IndexExpr::constant(0), 64}},
                 {{SliceRef::buffer("buf"), IndexExpr::constant(0), 64}}};
    CHECK(contains(validate_program(q), "not a power of two"));
  }
}

TEST_CASE("benchmarks validate clean and serialize loss-free") {
  for (const auto& id : benchmark_ids()) {
    TirProgram p = build_benchmark_by_id(id);
    CAPTURE(id);
    CHECK(validate_program(p).ok());
    const std::string path = "/tmp/tir_test_" + id + ".tir.json";
    save_program(p, path);
    TirProgram q = load_program(path);
    CHECK(program_hash(p) == program_hash(q));
    CHECK(to_json(p) == to_json(q));
  }
  CHECK_THROWS(build_benchmark("no_such_benchmark"));
  CHECK_THROWS(build_benchmark("pulse_doppler", 7));
}

TEST_CASE("interpretation is deterministic") {
  for (const auto& id : benchmark_ids()) {
    TirProgram p = build_benchmark_by_id(id);
    CHECK(tracer::interpret(p) == tracer::interpret(p));
  }
}

TEST_CASE("flattened type-2 statement counts match the published table") {
  const std::pair<const char*, std::size_t> expect[] = {
      {"running_example", 2},  {"pulse_doppler", 16},
      {"pulse_doppler_256", 1024}, {"wifi_tx", 10},
      {"radar_correlator", 3}, {"temporal_mitigation", 3}};
  for (const auto& [id, want] : expect) {
    TirProgram p = build_benchmark_by_id(id);
    TirProgram flat = preprocess::flatten(p, tracer::profile_program(p));
    std::size_t type2 = 0;
    for (const auto& st : flat.functions.at(flat.entry).body) {
      if (const auto* call = std::get_if<CallTask>(&st.node)) {
        if (call->kernel.task_kind == TaskKind::Type2) ++type2;
      }
    }
    CAPTURE(id);
    CHECK(type2 == want);
  }
}
