#include <immintrin.h>

#include <cstddef>
#include <cstdint>

#include "jeval/kernels/kernels.hpp"
#include "jeval/kernels/philox.hpp"

// Eight generator blocks are advanced together in struct-of-arrays form, then
// transposed so the stored word order matches the scalar kernel exactly.

namespace jeval::kernels {
namespace {

// hi and lo 32-bit halves of lane-wise u32 * u32 products.
inline void mulhilo8(__m256i x, __m256i m, __m256i& hi, __m256i& lo) {
  const __m256i even = _mm256_mul_epu32(x, m);
  const __m256i odd = _mm256_mul_epu32(_mm256_srli_epi64(x, 32), m);
  lo = _mm256_blend_epi32(even, _mm256_slli_epi64(odd, 32), 0xAA);
  hi = _mm256_blend_epi32(_mm256_srli_epi64(even, 32), odd, 0xAA);
}

struct Blocks8 {
  __m256i w0, w1, w2, w3;  // word k of blocks base..base+7
};

inline Blocks8 philox8(std::uint64_t seed, std::uint64_t stream,
                       std::uint64_t base) {
  alignas(32) std::uint32_t clo[8], chi[8];
  for (int l = 0; l < 8; ++l) {
    const std::uint64_t b = base + std::uint64_t(l);
    clo[l] = std::uint32_t(b);
    chi[l] = std::uint32_t(b >> 32);
  }
  __m256i x0 = _mm256_load_si256(reinterpret_cast<const __m256i*>(clo));
  __m256i x1 = _mm256_load_si256(reinterpret_cast<const __m256i*>(chi));
  __m256i x2 = _mm256_set1_epi32(int(std::uint32_t(stream)));
  __m256i x3 = _mm256_set1_epi32(int(std::uint32_t(stream >> 32)));
  __m256i k0 = _mm256_set1_epi32(int(std::uint32_t(seed)));
  __m256i k1 = _mm256_set1_epi32(int(std::uint32_t(seed >> 32)));
  const __m256i m0 = _mm256_set1_epi32(int(jeval::detail::kPhiloxM0));
  const __m256i m1 = _mm256_set1_epi32(int(jeval::detail::kPhiloxM1));
  const __m256i w0 = _mm256_set1_epi32(int(jeval::detail::kPhiloxW0));
  const __m256i w1 = _mm256_set1_epi32(int(jeval::detail::kPhiloxW1));
  for (int r = 0; r < 10; ++r) {
    __m256i hi0, lo0, hi1, lo1;
    mulhilo8(x0, m0, hi0, lo0);
    mulhilo8(x2, m1, hi1, lo1);
    x0 = _mm256_xor_si256(_mm256_xor_si256(hi1, x1), k0);
    x1 = lo1;
    x2 = _mm256_xor_si256(_mm256_xor_si256(hi0, x3), k1);
    x3 = lo0;
    k0 = _mm256_add_epi32(k0, w0);
    k1 = _mm256_add_epi32(k1, w1);
  }
  return {x0, x1, x2, x3};
}

struct Words32 {
  __m256i r0, r1, r2, r3;  // blocks 0..7 in word order
};

inline Words32 to_word_order(const Blocks8& b) {
  const __m256i t0 = _mm256_unpacklo_epi32(b.w0, b.w1);
  const __m256i t1 = _mm256_unpackhi_epi32(b.w0, b.w1);
  const __m256i t2 = _mm256_unpacklo_epi32(b.w2, b.w3);
  const __m256i t3 = _mm256_unpackhi_epi32(b.w2, b.w3);
  const __m256i u0 = _mm256_unpacklo_epi64(t0, t2);
  const __m256i u1 = _mm256_unpackhi_epi64(t0, t2);
  const __m256i u2 = _mm256_unpacklo_epi64(t1, t3);
  const __m256i u3 = _mm256_unpackhi_epi64(t1, t3);
  return {_mm256_permute2x128_si256(u0, u1, 0x20),
          _mm256_permute2x128_si256(u2, u3, 0x20),
          _mm256_permute2x128_si256(u0, u1, 0x31),
          _mm256_permute2x128_si256(u2, u3, 0x31)};
}

inline Philox4x32::Ctr block_at(std::uint64_t seed, std::uint64_t stream,
                                std::uint64_t block) {
  return Philox4x32::block({std::uint32_t(block), std::uint32_t(block >> 32),
                            std::uint32_t(stream),
                            std::uint32_t(stream >> 32)},
                           {std::uint32_t(seed), std::uint32_t(seed >> 32)});
}

void fill_u32_avx2(std::uint64_t seed, std::uint64_t stream, std::uint32_t* out,
                   std::size_t n) {
  std::uint64_t block = 0;
  std::size_t i = 0;
  for (; i + 32 <= n; i += 32, block += 8) {
    const Words32 w = to_word_order(philox8(seed, stream, block));
    _mm256_storeu_si256(reinterpret_cast<__m256i*>(out + i), w.r0);
    _mm256_storeu_si256(reinterpret_cast<__m256i*>(out + i + 8), w.r1);
    _mm256_storeu_si256(reinterpret_cast<__m256i*>(out + i + 16), w.r2);
    _mm256_storeu_si256(reinterpret_cast<__m256i*>(out + i + 24), w.r3);
  }
  while (i < n) {
    const Philox4x32::Ctr w = block_at(seed, stream, block++);
    for (std::size_t j = 0; j < 4 && i < n; ++j, ++i) out[i] = w[j];
  }
}

// result lane = hi32(word * bound)
inline __m256i mulhi_u32(__m256i x, __m256i m) {
  const __m256i even = _mm256_srli_epi64(_mm256_mul_epu32(x, m), 32);
  const __m256i odd = _mm256_mul_epu32(_mm256_srli_epi64(x, 32), m);
  return _mm256_blend_epi32(even, odd, 0xAA);
}

void fill_indices_avx2(std::uint64_t seed, std::uint64_t stream,
                       std::uint32_t bound, std::uint32_t* out, std::size_t n) {
  const __m256i mb = _mm256_set1_epi32(int(bound));
  std::uint64_t block = 0;
  std::size_t i = 0;
  for (; i + 32 <= n; i += 32, block += 8) {
    const Words32 w = to_word_order(philox8(seed, stream, block));
    _mm256_storeu_si256(reinterpret_cast<__m256i*>(out + i),
                        mulhi_u32(w.r0, mb));
    _mm256_storeu_si256(reinterpret_cast<__m256i*>(out + i + 8),
                        mulhi_u32(w.r1, mb));
    _mm256_storeu_si256(reinterpret_cast<__m256i*>(out + i + 16),
                        mulhi_u32(w.r2, mb));
    _mm256_storeu_si256(reinterpret_cast<__m256i*>(out + i + 24),
                        mulhi_u32(w.r3, mb));
  }
  while (i < n) {
    const Philox4x32::Ctr w = block_at(seed, stream, block++);
    for (std::size_t j = 0; j < 4 && i < n; ++j, ++i)
      out[i] = std::uint32_t((std::uint64_t(w[j]) * bound) >> 32);
  }
}

void fill_bernoulli_avx2(std::uint64_t seed, std::uint64_t stream,
                         std::uint64_t cutoff, std::uint8_t* out,
                         std::size_t n) {
  if (cutoff >= (std::uint64_t(1) << 32)) {
    for (std::size_t i = 0; i < n; ++i) out[i] = 1;
    return;
  }
  const std::uint32_t c = std::uint32_t(cutoff);
  const __m256i bias = _mm256_set1_epi32(int(0x80000000u));
  const __m256i cb = _mm256_set1_epi32(int(c ^ 0x80000000u));
  std::uint64_t block = 0;
  std::size_t i = 0;
  for (; i + 32 <= n; i += 32, block += 8) {
    const Words32 w = to_word_order(philox8(seed, stream, block));
    const __m256i regs[4] = {w.r0, w.r1, w.r2, w.r3};
    for (int rgi = 0; rgi < 4; ++rgi) {
      const __m256i lt =
          _mm256_cmpgt_epi32(cb, _mm256_xor_si256(regs[rgi], bias));
      const int mask = _mm256_movemask_ps(_mm256_castsi256_ps(lt));
      for (int l = 0; l < 8; ++l)
        out[i + std::size_t(rgi) * 8 + std::size_t(l)] =
            std::uint8_t((mask >> l) & 1);
    }
  }
  while (i < n) {
    const Philox4x32::Ctr w = block_at(seed, stream, block++);
    for (std::size_t j = 0; j < 4 && i < n; ++j, ++i) out[i] = w[j] < c ? 1 : 0;
  }
}

double gather_sum_avx2(const double* values, const std::uint32_t* idx,
                       std::size_t n) {
  __m256d acc_lo = _mm256_setzero_pd();
  __m256d acc_hi = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    const __m128i ix0 =
        _mm_loadu_si128(reinterpret_cast<const __m128i*>(idx + i));
    const __m128i ix1 =
        _mm_loadu_si128(reinterpret_cast<const __m128i*>(idx + i + 4));
    acc_lo = _mm256_add_pd(acc_lo, _mm256_i32gather_pd(values, ix0, 8));
    acc_hi = _mm256_add_pd(acc_hi, _mm256_i32gather_pd(values, ix1, 8));
  }
  alignas(32) double acc[8];
  _mm256_store_pd(acc, acc_lo);
  _mm256_store_pd(acc + 4, acc_hi);
  for (; i < n; ++i) acc[i & 7] += values[idx[i]];
  const double b0 = acc[0] + acc[4];
  const double b1 = acc[1] + acc[5];
  const double b2 = acc[2] + acc[6];
  const double b3 = acc[3] + acc[7];
  const double c0 = b0 + b2;
  const double c1 = b1 + b3;
  return c0 + c1;
}

void count_codes_avx2(const std::uint8_t* codes, std::size_t n,
                      std::uint64_t counts[4]) {
  std::size_t i = 0;
  for (; i + 32 <= n; i += 32) {
    const __m256i v =
        _mm256_loadu_si256(reinterpret_cast<const __m256i*>(codes + i));
    for (int c = 0; c < 4; ++c) {
      const __m256i eq = _mm256_cmpeq_epi8(v, _mm256_set1_epi8(char(c)));
      counts[c] +=
          std::uint64_t(__builtin_popcount(unsigned(_mm256_movemask_epi8(eq))));
    }
  }
  for (; i < n; ++i)
    if (codes[i] < 4) ++counts[codes[i]];
}

}  // namespace

namespace detail {
const Ops avx2_ops = {
    fill_u32_avx2,       fill_indices_avx2, fill_bernoulli_avx2,
    gather_sum_avx2,     count_codes_avx2,
};
}  // namespace detail

}  // namespace jeval::kernels
