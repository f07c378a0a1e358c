#include "taskweave/kernels.hpp"

#include <cmath>
#include <cstring>

#include "taskweave/util.hpp"

namespace taskweave::tir {

Arena::Arena(const std::vector<Buffer>& buffers) {
  std::uint64_t cursor = kBase;
  for (const auto& b : buffers) {
    cursor = align_up(cursor, 64);
    regions_.push_back({b, cursor});
    cursor += b.size_bytes;
  }
  end_ = cursor;
  bytes_.assign(end_ - kBase, 0);
}

std::uint64_t Arena::base_of(const std::string& buffer_id) const {
  for (const auto& r : regions_) {
    if (r.buffer.id == buffer_id) return r.base;
  }
  throw KernelError("unknown buffer '" + buffer_id + "'");
}

const Buffer& Arena::buffer_at(std::uint64_t addr) const {
  for (const auto& r : regions_) {
    if (addr >= r.base && addr < r.base + r.buffer.size_bytes) {
      return r.buffer;
    }
  }
  throw KernelError("address " + std::to_string(addr) +
                    " outside any declared buffer");
}

std::uint8_t* Arena::at(std::uint64_t addr, std::uint64_t len) {
  return const_cast<std::uint8_t*>(
      static_cast<const Arena*>(this)->at(addr, len));
}

const std::uint8_t* Arena::at(std::uint64_t addr, std::uint64_t len) const {
  for (const auto& r : regions_) {
    if (addr >= r.base && addr + len <= r.base + r.buffer.size_bytes) {
      return bytes_.data() + (addr - kBase);
    }
  }
  throw KernelError("access [" + std::to_string(addr) + ", +" +
                    std::to_string(len) + ") outside any declared buffer");
}

void fft_radix2(std::vector<std::complex<float>>& a) {
  const std::size_t n = a.size();
  if (n == 0 || (n & (n - 1)) != 0) {
    throw KernelError("FFT size must be a power of two, got " +
                      std::to_string(n));
  }
  // Bit-reversal permutation.
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double ang = -2.0 * M_PI / static_cast<double>(len);
    const std::complex<float> wlen(static_cast<float>(std::cos(ang)),
                                   static_cast<float>(std::sin(ang)));
    for (std::size_t i = 0; i < n; i += len) {
      std::complex<float> w(1.0f, 0.0f);
      for (std::size_t j = 0; j < len / 2; ++j) {
        const std::complex<float> u = a[i + j];
        const std::complex<float> v = a[i + j + len / 2] * w;
        a[i + j] = u + v;
        a[i + j + len / 2] = u - v;
        w *= wlen;
      }
    }
  }
}

namespace {

void require(bool cond, const std::string& msg) {
  if (!cond) throw KernelError(msg);
}

// Reads one slice, reporting its address range as one load span — traces
// record the byte ranges a kernel pass touches, not individual accesses.
std::vector<std::uint8_t> read_slice(const ResolvedSlice& s,
                                     std::size_t elem_size, Arena& arena,
                                     MemSink* sink) {
  require(s.len % elem_size == 0, "slice length " + std::to_string(s.len) +
                                      " not a multiple of element size");
  const std::uint8_t* src = arena.at(s.addr, s.len);
  if (sink != nullptr && s.len > 0) sink->load(s.addr, s.len);
  return std::vector<std::uint8_t>(src, src + s.len);
}

void write_slice(const ResolvedSlice& s, const std::uint8_t* data,
                 std::size_t elem_size, Arena& arena, MemSink* sink) {
  require(s.len % elem_size == 0, "slice length " + std::to_string(s.len) +
                                      " not a multiple of element size");
  std::uint8_t* dst = arena.at(s.addr, s.len);
  std::memcpy(dst, data, s.len);
  if (sink != nullptr && s.len > 0) sink->store(s.addr, s.len);
}

std::vector<std::complex<float>> as_complex(const std::vector<std::uint8_t>& b) {
  std::vector<std::complex<float>> v(b.size() / 8);
  std::memcpy(v.data(), b.data(), v.size() * 8);
  return v;
}

std::vector<float> as_floats(const std::vector<std::uint8_t>& b) {
  std::vector<float> v(b.size() / 4);
  std::memcpy(v.data(), b.data(), v.size() * 4);
  return v;
}

template <typename T>
std::vector<std::uint8_t> as_bytes(const std::vector<T>& v) {
  std::vector<std::uint8_t> b(v.size() * sizeof(T));
  std::memcpy(b.data(), v.data(), b.size());
  return b;
}

void exec_read_data(const KernelSpec& k, const std::vector<ResolvedSlice>& writes,
                    Arena& arena, MemSink* sink) {
  const std::uint64_t seed =
      static_cast<std::uint64_t>(k.param("seed", 1));
  for (const auto& w : writes) {
    const Buffer& buf = arena.buffer_at(w.addr);
    const std::size_t es = element_size(buf.element_kind);
    std::vector<std::uint8_t> data(w.len);
    const std::uint64_t n = w.len / es;
    // Values depend on the destination offset so distinct slices of one
    // buffer (e.g. per-pulse windows) receive distinct samples.
    const std::uint64_t base = w.offset / es;
    for (std::uint64_t i = 0; i < n; ++i) {
      const std::uint64_t e = base + i;
      switch (buf.element_kind) {
        case ElementKind::Complex32: {
          const float re = unit_float(seed, 2 * e);
          const float im = unit_float(seed, 2 * e + 1);
          std::memcpy(data.data() + i * 8, &re, 4);
          std::memcpy(data.data() + i * 8 + 4, &im, 4);
          break;
        }
        case ElementKind::Float32: {
          const float v = unit_float(seed, e);
          std::memcpy(data.data() + i * 4, &v, 4);
          break;
        }
        case ElementKind::Byte:
          data[i] = static_cast<std::uint8_t>(splitmix64(seed + e));
          break;
      }
    }
    write_slice(w, data.data(), es, arena, sink);
  }
}

void exec_fft(const KernelSpec& k, const std::vector<ResolvedSlice>& reads,
              const std::vector<ResolvedSlice>& writes, Arena& arena,
              MemSink* sink) {
  const std::int64_t n = k.param("n");
  require(reads.size() == 1 && writes.size() == 1,
          "FFT expects one input and one output slice");
  require(static_cast<std::int64_t>(reads[0].len) == 8 * n &&
              static_cast<std::int64_t>(writes[0].len) == 8 * n,
          "FFT slice sizes do not match point count " + std::to_string(n));
  auto data = as_complex(read_slice(reads[0], 8, arena, sink));
  fft_radix2(data);
  write_slice(writes[0], as_bytes(data).data(), 8, arena, sink);
}

void exec_gemm(const KernelSpec& k, const std::vector<ResolvedSlice>& reads,
               const std::vector<ResolvedSlice>& writes, Arena& arena,
               MemSink* sink) {
  const std::int64_t m = k.param("m");
  const std::int64_t kk = k.param("k");
  const std::int64_t n = k.param("n");
  require(m > 0 && kk > 0 && n > 0, "GEMM dimensions must be positive");
  require(reads.size() == 2 && writes.size() == 1,
          "GEMM expects slices A, B -> C");
  require(static_cast<std::int64_t>(reads[0].len) == 4 * m * kk,
          "GEMM A slice size mismatch");
  require(static_cast<std::int64_t>(reads[1].len) == 4 * kk * n,
          "GEMM B slice size mismatch");
  require(static_cast<std::int64_t>(writes[0].len) == 4 * m * n,
          "GEMM C slice size mismatch");
  const auto a = as_floats(read_slice(reads[0], 4, arena, sink));
  const auto b = as_floats(read_slice(reads[1], 4, arena, sink));
  std::vector<float> c(static_cast<std::size_t>(m * n), 0.0f);
  for (std::int64_t i = 0; i < m; ++i) {
    for (std::int64_t j = 0; j < n; ++j) {
      float acc = 0.0f;
      for (std::int64_t l = 0; l < kk; ++l) {
        acc += a[i * kk + l] * b[l * n + j];
      }
      c[i * n + j] = acc;
    }
  }
  write_slice(writes[0], as_bytes(c).data(), 4, arena, sink);
}

// 802.11-style self-synchronizing scrambler, x^7 + x^4 + 1, fixed seed.
void exec_scrambler(const std::vector<ResolvedSlice>& reads,
                    const std::vector<ResolvedSlice>& writes, Arena& arena,
                    MemSink* sink) {
  require(reads.size() == 1 && writes.size() == 1 &&
              reads[0].len == writes[0].len,
          "SCRAMBLER expects equal sized input and output");
  auto data = read_slice(reads[0], 1, arena, sink);
  std::uint8_t state = 0x7F;
  for (auto& byte : data) {
    std::uint8_t key = 0;
    for (int bit = 0; bit < 8; ++bit) {
      const std::uint8_t fb =
          static_cast<std::uint8_t>(((state >> 6) ^ (state >> 3)) & 1);
      state = static_cast<std::uint8_t>(((state << 1) | fb) & 0x7F);
      key = static_cast<std::uint8_t>((key << 1) | fb);
    }
    byte ^= key;
  }
  write_slice(writes[0], data.data(), 1, arena, sink);
}

void exec_interleaver(const KernelSpec& k,
                      const std::vector<ResolvedSlice>& reads,
                      const std::vector<ResolvedSlice>& writes, Arena& arena,
                      MemSink* sink) {
  const std::int64_t rows = k.param("rows");
  const std::int64_t cols = k.param("cols");
  require(rows > 0 && cols > 0, "INTERLEAVER needs rows/cols params");
  require(reads.size() == 1 && writes.size() == 1,
          "INTERLEAVER expects one input and one output");
  require(static_cast<std::int64_t>(reads[0].len) == rows * cols &&
              reads[0].len == writes[0].len,
          "INTERLEAVER slice sizes must equal rows*cols");
  const auto in = read_slice(reads[0], 1, arena, sink);
  std::vector<std::uint8_t> out(in.size());
  for (std::int64_t r = 0; r < rows; ++r) {
    for (std::int64_t c = 0; c < cols; ++c) {
      out[static_cast<std::size_t>(c * rows + r)] =
          in[static_cast<std::size_t>(r * cols + c)];
    }
  }
  write_slice(writes[0], out.data(), 1, arena, sink);
}

// Copies input in groups of `group` bytes, appending `pilots` marker bytes
// after each group. Group copies are reported as MemCpy intrinsics.
void exec_pilot_insert(const KernelSpec& k,
                       const std::vector<ResolvedSlice>& reads,
                       const std::vector<ResolvedSlice>& writes, Arena& arena,
                       MemSink* sink) {
  const std::int64_t group = k.param("group");
  const std::int64_t pilots = k.param("pilots");
  require(group > 0 && pilots >= 0, "PILOT_INSERT needs group/pilots params");
  require(reads.size() == 1 && writes.size() == 1,
          "PILOT_INSERT expects one input and one output");
  require(reads[0].len % static_cast<std::uint64_t>(group) == 0,
          "PILOT_INSERT input not a multiple of group size");
  const std::uint64_t groups = reads[0].len / static_cast<std::uint64_t>(group);
  require(writes[0].len ==
              groups * static_cast<std::uint64_t>(group + pilots),
          "PILOT_INSERT output size mismatch");
  const std::uint8_t* src = arena.at(reads[0].addr, reads[0].len);
  std::uint8_t* dst = arena.at(writes[0].addr, writes[0].len);
  for (std::uint64_t g = 0; g < groups; ++g) {
    const std::uint64_t src_off = g * static_cast<std::uint64_t>(group);
    const std::uint64_t dst_off = g * static_cast<std::uint64_t>(group + pilots);
    std::memcpy(dst + dst_off, src + src_off,
                static_cast<std::size_t>(group));
    if (sink != nullptr) {
      sink->mem_copy(reads[0].addr + src_off, writes[0].addr + dst_off,
                     static_cast<std::uint64_t>(group));
    }
    for (std::int64_t pb = 0; pb < pilots; ++pb) {
      const std::uint64_t p = dst_off + static_cast<std::uint64_t>(group + pb);
      dst[p] = 0x7F;
      if (sink != nullptr) sink->store(writes[0].addr + p, 1);
    }
  }
}

void exec_correlate(const std::vector<ResolvedSlice>& reads,
                    const std::vector<ResolvedSlice>& writes, Arena& arena,
                    MemSink* sink) {
  require(reads.size() == 2 && writes.size() == 1,
          "CORRELATE expects two inputs and one output");
  require(reads[0].len == reads[1].len && reads[0].len == writes[0].len,
          "CORRELATE slices must have equal size");
  const auto x = as_complex(read_slice(reads[0], 8, arena, sink));
  const auto y = as_complex(read_slice(reads[1], 8, arena, sink));
  std::vector<std::complex<float>> z(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) z[i] = x[i] * std::conj(y[i]);
  write_slice(writes[0], as_bytes(z).data(), 8, arena, sink);
}

void exec_elemwise(const KernelSpec& k, const std::vector<ResolvedSlice>& reads,
                   const std::vector<ResolvedSlice>& writes, Arena& arena,
                   MemSink* sink) {
  const std::string& op = k.op;
  if (op == "copy" || op == "move") {
    require(reads.size() == 1 && writes.size() == 1 &&
                reads[0].len == writes[0].len,
            "ELEMWISE " + op + " expects equal sized slices");
    const std::uint8_t* src = arena.at(reads[0].addr, reads[0].len);
    std::uint8_t* dst = arena.at(writes[0].addr, writes[0].len);
    std::memmove(dst, src, reads[0].len);
    if (sink != nullptr) {
      if (op == "copy") {
        sink->mem_copy(reads[0].addr, writes[0].addr, reads[0].len);
      } else {
        sink->mem_move(reads[0].addr, writes[0].addr, reads[0].len);
      }
    }
    return;
  }
  if (op == "fill") {
    require(reads.empty() && writes.size() == 1, "ELEMWISE fill writes only");
    const auto value = static_cast<std::uint8_t>(k.param("value", 0));
    std::uint8_t* dst = arena.at(writes[0].addr, writes[0].len);
    std::memset(dst, value, writes[0].len);
    if (sink != nullptr) sink->mem_set(writes[0].addr, writes[0].len);
    return;
  }
  if (op == "add" || op == "sub" || op == "mul") {
    require(reads.size() == 2 && writes.size() == 1,
            "ELEMWISE " + op + " expects two inputs");
    require(reads[0].len == reads[1].len && reads[0].len == writes[0].len,
            "ELEMWISE " + op + " slices must have equal size");
    const auto a = as_floats(read_slice(reads[0], 4, arena, sink));
    const auto b = as_floats(read_slice(reads[1], 4, arena, sink));
    std::vector<float> out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
      out[i] = op == "add" ? a[i] + b[i]
                           : (op == "sub" ? a[i] - b[i] : a[i] * b[i]);
    }
    write_slice(writes[0], as_bytes(out).data(), 4, arena, sink);
    return;
  }
  if (op == "mag") {
    require(reads.size() == 1 && writes.size() == 1 &&
                writes[0].len * 2 == reads[0].len,
            "ELEMWISE mag maps complex to float");
    const auto in = as_complex(read_slice(reads[0], 8, arena, sink));
    std::vector<float> out(in.size());
    for (std::size_t i = 0; i < in.size(); ++i) out[i] = std::norm(in[i]);
    write_slice(writes[0], as_bytes(out).data(), 4, arena, sink);
    return;
  }
  if (op == "modulate") {
    // Bytes to 16-QAM-style complex points, 1 symbol per input byte.
    require(reads.size() == 1 && writes.size() == 1 &&
                writes[0].len == reads[0].len * 8,
            "ELEMWISE modulate maps bytes to complex");
    const auto in = read_slice(reads[0], 1, arena, sink);
    std::vector<std::complex<float>> out(in.size());
    for (std::size_t i = 0; i < in.size(); ++i) {
      const float re = (static_cast<float>(in[i] & 0xF) - 7.5f) / 7.5f;
      const float im = (static_cast<float>((in[i] >> 4) & 0xF) - 7.5f) / 7.5f;
      out[i] = {re, im};
    }
    write_slice(writes[0], as_bytes(out).data(), 8, arena, sink);
    return;
  }
  if (op == "peak") {
    require(reads.size() == 1 && writes.size() == 1 && writes[0].len == 8,
            "ELEMWISE peak writes {index, power}");
    const auto in = as_complex(read_slice(reads[0], 8, arena, sink));
    std::size_t best = 0;
    float best_mag = -1.0f;
    for (std::size_t i = 0; i < in.size(); ++i) {
      const float m = std::norm(in[i]);
      if (m > best_mag) {
        best_mag = m;
        best = i;
      }
    }
    const float out[2] = {static_cast<float>(best), best_mag};
    write_slice(writes[0], reinterpret_cast<const std::uint8_t*>(out), 4,
                arena, sink);
    return;
  }
  throw KernelError("unknown ELEMWISE op '" + op + "'");
}

}  // namespace

void kernel_exec(const KernelSpec& kernel,
                 const std::vector<ResolvedSlice>& reads,
                 const std::vector<ResolvedSlice>& writes, Arena& arena,
                 MemSink* sink, std::vector<std::uint8_t>* output) {
  switch (kernel.id) {
    case KernelId::ReadData:
      require(reads.empty(), "READ_DATA takes no input slices");
      exec_read_data(kernel, writes, arena, sink);
      return;
    case KernelId::WriteData: {
      require(writes.empty(), "WRITE_DATA takes no output slices");
      for (const auto& r : reads) {
        const Buffer& buf = arena.buffer_at(r.addr);
        auto data = read_slice(r, element_size(buf.element_kind), arena, sink);
        if (output != nullptr) {
          output->insert(output->end(), data.begin(), data.end());
        }
      }
      return;
    }
    case KernelId::Fft:
      exec_fft(kernel, reads, writes, arena, sink);
      return;
    case KernelId::Gemm:
      exec_gemm(kernel, reads, writes, arena, sink);
      return;
    case KernelId::Scrambler:
      exec_scrambler(reads, writes, arena, sink);
      return;
    case KernelId::Interleaver:
      exec_interleaver(kernel, reads, writes, arena, sink);
      return;
    case KernelId::PilotInsert:
      exec_pilot_insert(kernel, reads, writes, arena, sink);
      return;
    case KernelId::Correlate:
      exec_correlate(reads, writes, arena, sink);
      return;
    case KernelId::Elemwise:
      exec_elemwise(kernel, reads, writes, arena, sink);
      return;
    case KernelId::Glue:
      throw KernelError("GLUE tasks are not executable");
  }
  throw KernelError("unhandled kernel");
}

}  // namespace taskweave::tir
