#pragma once

#include <array>
#include <cstdint>

namespace jeval {

namespace detail {
inline constexpr std::uint32_t kPhiloxM0 = 0xD2511F53u;
inline constexpr std::uint32_t kPhiloxM1 = 0xCD9E8D57u;
inline constexpr std::uint32_t kPhiloxW0 = 0x9E3779B9u;
inline constexpr std::uint32_t kPhiloxW1 = 0xBB67AE85u;
}  // namespace detail

// Counter-based generator: a pure function from (128-bit counter, 64-bit key)
// to four 32-bit words, ten rounds. Distinct counters give independent-looking
// output with no shared state, so replicates and workers can each own a slice
// of counter space and any of them can be regenerated in isolation.
struct Philox4x32 {
  using Ctr = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static constexpr Ctr round(const Ctr& x, const Key& k) {
    const std::uint64_t p0 = std::uint64_t(detail::kPhiloxM0) * x[0];
    const std::uint64_t p1 = std::uint64_t(detail::kPhiloxM1) * x[2];
    return Ctr{
        std::uint32_t(p1 >> 32) ^ x[1] ^ k[0],
        std::uint32_t(p1),
        std::uint32_t(p0 >> 32) ^ x[3] ^ k[1],
        std::uint32_t(p0),
    };
  }

  static constexpr Ctr block(Ctr ctr, Key key) {
    for (int r = 0; r < 10; ++r) {
      ctr = round(ctr, key);
      key[0] += detail::kPhiloxW0;
      key[1] += detail::kPhiloxW1;
    }
    return ctr;
  }
};

// One generator block used as a keyed PRF: maps (seed, two salts) to a fresh
// 64-bit seed. Decouples consumers that share one user-facing seed.
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t salt_a,
                                    std::uint64_t salt_b = 0) {
  const Philox4x32::Ctr w = Philox4x32::block(
      {std::uint32_t(salt_a), std::uint32_t(salt_a >> 32),
       std::uint32_t(salt_b), std::uint32_t(salt_b >> 32)},
      {std::uint32_t(seed), std::uint32_t(seed >> 32)});
  return std::uint64_t(w[0]) | (std::uint64_t(w[1]) << 32);
}

// Stream ids partition counter space by consumer so no two purposes ever see
// the same block. Layout: [63:56] domain, [55:44] pool, [43:36] attempt,
// [35:0] replicate.
constexpr std::uint64_t stream_id(std::uint32_t domain, std::uint64_t rep,
                                  std::uint32_t attempt = 0,
                                  std::uint32_t pool = 0) {
  return (std::uint64_t(domain & 0xFFu) << 56) |
         (std::uint64_t(pool & 0xFFFu) << 44) |
         (std::uint64_t(attempt & 0xFFu) << 36) |
         (rep & 0xFFFFFFFFFull);
}

// Sequential view over one counter stream. The counter is
// {block_lo, block_hi, stream_lo, stream_hi} with the key equal to the seed;
// word i of the stream is word i%4 of block i/4, which the batch fill
// kernels reproduce exactly.
class PhiloxStream {
 public:
  PhiloxStream(std::uint64_t seed, std::uint64_t stream)
      : key_{std::uint32_t(seed), std::uint32_t(seed >> 32)},
        stream_lo_(std::uint32_t(stream)),
        stream_hi_(std::uint32_t(stream >> 32)) {}

  std::uint32_t next_u32() {
    if (pos_ == 4) refill();
    return buf_[pos_++];
  }

  std::uint64_t next_u64() {
    const std::uint64_t lo = next_u32();
    const std::uint64_t hi = next_u32();
    return lo | (hi << 32);
  }

  // Uniform in [0,1) with 53 random bits.
  double next_double() { return double(next_u64() >> 11) * 0x1.0p-53; }

  // Multiply-shift range map. Bias is O(bound / 2^32): irrelevant at the
  // bounds used here, and branch-free so the vector kernels match bit for bit.
  std::uint32_t below(std::uint32_t bound) {
    return std::uint32_t((std::uint64_t(next_u32()) * bound) >> 32);
  }

  bool bernoulli(double p) { return next_double() < p; }

 private:
  void refill() {
    buf_ = Philox4x32::block({std::uint32_t(block_),
                              std::uint32_t(block_ >> 32), stream_lo_,
                              stream_hi_},
                             key_);
    ++block_;
    pos_ = 0;
  }

  Philox4x32::Key key_;
  std::uint32_t stream_lo_;
  std::uint32_t stream_hi_;
  std::uint64_t block_ = 0;
  Philox4x32::Ctr buf_{};
  int pos_ = 4;
};

}  // namespace jeval
