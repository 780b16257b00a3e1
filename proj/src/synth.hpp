#pragma once

// Internal synthetic-data helpers shared by the analytics validator and the
// simulation harness. Not part of the public headers.

#include <cstdint>
#include <span>
#include <vector>

#include "jeval/kernels/kernels.hpp"
#include "jeval/kernels/philox.hpp"
#include "jeval/measurement.hpp"

namespace jeval::synth {

// Per-purpose salts keep counter streams disjoint between consumers that
// share one user-facing seed.
inline constexpr std::uint64_t kSaltBiasVal = 0x616e626975ull;
inline constexpr std::uint64_t kSaltSimGen = 0x73696d67656eull;
inline constexpr std::uint64_t kSaltBootstrap = 0x626f6f74ull;
inline constexpr std::uint64_t kSaltPooling = 0x706f6f6cull;

// Judge labels for known truth: P(1|z=1) = q1, P(1|z=0) = 1 - q0.
inline void judge_labels(std::span<const std::uint8_t> z,
                         const JudgeErrorRates& r, std::uint64_t seed,
                         std::uint64_t stream, std::vector<std::uint32_t>& u,
                         std::span<std::uint8_t> zhat) {
  const kernels::Ops& k = kernels::ops();
  u.resize(z.size());
  if (!z.empty()) k.fill_u32(seed, stream, u.data(), u.size());
  const std::uint64_t cut1 = kernels::bernoulli_cutoff(r.q1);
  const std::uint64_t cut0 = kernels::bernoulli_cutoff(1.0 - r.q0);
  for (std::size_t i = 0; i < z.size(); ++i)
    zhat[i] = std::uint64_t(u[i]) < (z[i] ? cut1 : cut0) ? 1 : 0;
}

struct PairCounts {
  std::uint64_t n00 = 0, n01 = 0, n10 = 0, n11 = 0;  // indexed (z, zhat)

  std::int64_t m0() const { return std::int64_t(n00 + n01); }
  std::int64_t m1() const { return std::int64_t(n10 + n11); }
  std::int64_t agree0() const { return std::int64_t(n00); }
  std::int64_t agree1() const { return std::int64_t(n11); }
};

inline PairCounts count_pairs(std::span<const std::uint8_t> z,
                              std::span<const std::uint8_t> zhat,
                              std::vector<std::uint8_t>& codes) {
  codes.resize(z.size());
  for (std::size_t i = 0; i < z.size(); ++i)
    codes[i] = std::uint8_t(z[i] * 2 + zhat[i]);
  std::uint64_t c[4] = {0, 0, 0, 0};
  kernels::ops().count_codes(codes.data(), codes.size(), c);
  return {c[0], c[1], c[2], c[3]};
}

}  // namespace jeval::synth
