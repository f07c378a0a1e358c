#pragma once

#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "taskweave/tir.hpp"

namespace taskweave::tir {

struct KernelError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Flat 64-bit address space holding every declared buffer. Buffers are laid
/// out in declaration order at 64-byte aligned, pairwise disjoint bases.
class Arena {
 public:
  static constexpr std::uint64_t kBase = 0x10000;

  explicit Arena(const std::vector<Buffer>& buffers);

  std::uint64_t base_of(const std::string& buffer_id) const;
  const Buffer& buffer_at(std::uint64_t addr) const;

  // Checked access: the range must lie inside a single declared buffer.
  std::uint8_t* at(std::uint64_t addr, std::uint64_t len);
  const std::uint8_t* at(std::uint64_t addr, std::uint64_t len) const;

  std::uint64_t end() const { return end_; }

 private:
  struct Region {
    Buffer buffer;
    std::uint64_t base;
  };
  std::vector<Region> regions_;
  std::uint64_t end_ = kBase;
  std::vector<std::uint8_t> bytes_;
};

/// A slice resolved to a concrete byte range.
struct ResolvedSlice {
  std::string buffer;
  std::uint64_t offset = 0;
  std::uint64_t len = 0;
  std::uint64_t addr = 0;  // arena base + offset
};

/// Receives the byte-level access pattern of a kernel execution.
class MemSink {
 public:
  virtual ~MemSink() = default;
  virtual void load(std::uint64_t addr, std::uint64_t bytes) = 0;
  virtual void store(std::uint64_t addr, std::uint64_t bytes) = 0;
  virtual void mem_copy(std::uint64_t src, std::uint64_t dst,
                        std::uint64_t bytes) = 0;
  virtual void mem_set(std::uint64_t dst, std::uint64_t bytes) = 0;
  virtual void mem_move(std::uint64_t src, std::uint64_t dst,
                        std::uint64_t bytes) = 0;
};

/// Executes one kernel over resolved slices. All kernels read their inputs
/// first and write their outputs afterwards; intrinsic-style kernels
/// (ELEMWISE copy/move/fill, PILOT_INSERT block copies) report MemCpy /
/// MemMove / MemSet instead of per-element loads and stores.
/// `sink` may be null (no access reporting), `output` collects WRITE_DATA
/// payloads.
void kernel_exec(const KernelSpec& kernel,
                 const std::vector<ResolvedSlice>& reads,
                 const std::vector<ResolvedSlice>& writes, Arena& arena,
                 MemSink* sink, std::vector<std::uint8_t>* output);

/// In-place iterative radix-2 FFT (decimation in time, twiddle sign -1).
void fft_radix2(std::vector<std::complex<float>>& data);

}  // namespace taskweave::tir
