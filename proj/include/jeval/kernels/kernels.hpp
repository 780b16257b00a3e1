#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>

namespace jeval::kernels {

enum class Isa { scalar, avx2 };

// Hot inner loops of the resampling and simulation engines. Every entry has a
// scalar reference implementation and may have vector variants; all variants
// of one entry produce bit-identical output for identical arguments (the
// floating-point reduction order in gather_sum is pinned to make that hold).
struct Ops {
  // Raw generator words for (seed, stream), starting at block 0.
  void (*fill_u32)(std::uint64_t seed, std::uint64_t stream, std::uint32_t* out,
                   std::size_t n);

  // out[i] = (word_i * bound) >> 32, i.e. uniform indices in [0, bound).
  // bound must be >= 1. Bias is O(bound / 2^32).
  void (*fill_indices)(std::uint64_t seed, std::uint64_t stream,
                       std::uint32_t bound, std::uint32_t* out, std::size_t n);

  // out[i] = word_i < cutoff. cutoff lives in [0, 2^32]; passing exactly 2^32
  // yields all ones (cutoff = round(p * 2^32) for Bernoulli(p) draws).
  void (*fill_bernoulli)(std::uint64_t seed, std::uint64_t stream,
                         std::uint64_t cutoff, std::uint8_t* out,
                         std::size_t n);

  // Sum of values[idx[i]] over i in [0, n). Accumulation order: eight striped
  // partial sums, pairwise-reduced as b[j] = a[j] + a[j+4],
  // c0 = b[0] + b[2], c1 = b[1] + b[3], result c0 + c1. The tail element at
  // position i lands in partial sum i mod 8.
  double (*gather_sum)(const double* values, const std::uint32_t* idx,
                       std::size_t n);

  // counts[c] += #{i : codes[i] == c} for codes in 0..3. Codes outside 0..3
  // are ignored.
  void (*count_codes)(const std::uint8_t* codes, std::size_t n,
                      std::uint64_t counts[4]);
};

// Cutoff for fill_bernoulli such that P(word < cutoff) rounds to p.
inline std::uint64_t bernoulli_cutoff(double p) {
  if (p <= 0.0) return 0;
  if (p >= 1.0) return std::uint64_t(1) << 32;
  return std::uint64_t(std::llround(p * 4294967296.0));
}

bool isa_available(Isa isa);

// Table for a specific ISA; throws std::runtime_error if unavailable.
const Ops& ops_for(Isa isa);

// Best available table (cached after first call).
const Ops& ops();

// Override / restore automatic selection. Used by equivalence tests and the
// simulation CLI's --force-isa escape hatch.
void force_isa(Isa isa);
void reset_isa();

const char* isa_name(Isa isa);
Isa active_isa();

namespace detail {
extern const Ops scalar_ops;
#if defined(JEVAL_HAVE_AVX2)
extern const Ops avx2_ops;
#endif
}  // namespace detail

}  // namespace jeval::kernels
