#include <cstddef>
#include <cstdint>

#include "jeval/kernels/kernels.hpp"
#include "jeval/kernels/philox.hpp"

namespace jeval::kernels {
namespace {

inline Philox4x32::Ctr block_at(std::uint64_t seed, std::uint64_t stream,
                                std::uint64_t block) {
  return Philox4x32::block({std::uint32_t(block), std::uint32_t(block >> 32),
                            std::uint32_t(stream),
                            std::uint32_t(stream >> 32)},
                           {std::uint32_t(seed), std::uint32_t(seed >> 32)});
}

void fill_u32_scalar(std::uint64_t seed, std::uint64_t stream,
                     std::uint32_t* out, std::size_t n) {
  std::uint64_t block = 0;
  std::size_t i = 0;
  while (i + 4 <= n) {
    const Philox4x32::Ctr w = block_at(seed, stream, block++);
    out[i + 0] = w[0];
    out[i + 1] = w[1];
    out[i + 2] = w[2];
    out[i + 3] = w[3];
    i += 4;
  }
  if (i < n) {
    const Philox4x32::Ctr w = block_at(seed, stream, block);
    for (std::size_t j = 0; i < n; ++i, ++j) out[i] = w[j];
  }
}

void fill_indices_scalar(std::uint64_t seed, std::uint64_t stream,
                         std::uint32_t bound, std::uint32_t* out,
                         std::size_t n) {
  std::uint64_t block = 0;
  std::size_t i = 0;
  while (i < n) {
    const Philox4x32::Ctr w = block_at(seed, stream, block++);
    const std::size_t take = (n - i < 4) ? n - i : 4;
    for (std::size_t j = 0; j < take; ++j)
      out[i + j] = std::uint32_t((std::uint64_t(w[j]) * bound) >> 32);
    i += take;
  }
}

void fill_bernoulli_scalar(std::uint64_t seed, std::uint64_t stream,
                           std::uint64_t cutoff, std::uint8_t* out,
                           std::size_t n) {
  if (cutoff >= (std::uint64_t(1) << 32)) {
    for (std::size_t i = 0; i < n; ++i) out[i] = 1;
    return;
  }
  const std::uint32_t c = std::uint32_t(cutoff);
  std::uint64_t block = 0;
  std::size_t i = 0;
  while (i < n) {
    const Philox4x32::Ctr w = block_at(seed, stream, block++);
    const std::size_t take = (n - i < 4) ? n - i : 4;
    for (std::size_t j = 0; j < take; ++j) out[i + j] = w[j] < c ? 1 : 0;
    i += take;
  }
}

double gather_sum_scalar(const double* values, const std::uint32_t* idx,
                         std::size_t n) {
  double acc[8] = {0, 0, 0, 0, 0, 0, 0, 0};
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8)
    for (std::size_t j = 0; j < 8; ++j) acc[j] += values[idx[i + j]];
  for (; i < n; ++i) acc[i & 7] += values[idx[i]];
  const double b0 = acc[0] + acc[4];
  const double b1 = acc[1] + acc[5];
  const double b2 = acc[2] + acc[6];
  const double b3 = acc[3] + acc[7];
  const double c0 = b0 + b2;
  const double c1 = b1 + b3;
  return c0 + c1;
}

void count_codes_scalar(const std::uint8_t* codes, std::size_t n,
                        std::uint64_t counts[4]) {
  for (std::size_t i = 0; i < n; ++i)
    if (codes[i] < 4) ++counts[codes[i]];
}

}  // namespace

namespace detail {
const Ops scalar_ops = {
    fill_u32_scalar,       fill_indices_scalar, fill_bernoulli_scalar,
    gather_sum_scalar,     count_codes_scalar,
};
}  // namespace detail

}  // namespace jeval::kernels
