#include <atomic>
#include <stdexcept>

#include "jeval/kernels/kernels.hpp"

namespace jeval::kernels {
namespace {

bool cpu_has_avx2() {
#if defined(JEVAL_HAVE_AVX2) && (defined(__x86_64__) || defined(__i386__))
  return __builtin_cpu_supports("avx2");
#else
  return false;
#endif
}

Isa detect_best() { return cpu_has_avx2() ? Isa::avx2 : Isa::scalar; }

std::atomic<int> forced{-1};  // -1: auto

}  // namespace

bool isa_available(Isa isa) {
  switch (isa) {
    case Isa::scalar:
      return true;
    case Isa::avx2:
      return cpu_has_avx2();
  }
  return false;
}

const Ops& ops_for(Isa isa) {
  switch (isa) {
    case Isa::scalar:
      return detail::scalar_ops;
    case Isa::avx2:
#if defined(JEVAL_HAVE_AVX2)
      if (cpu_has_avx2()) return detail::avx2_ops;
#endif
      throw std::runtime_error("avx2 kernels unavailable on this machine");
  }
  throw std::runtime_error("unknown isa");
}

Isa active_isa() {
  const int f = forced.load(std::memory_order_relaxed);
  if (f >= 0) return Isa(f);
  static const Isa best = detect_best();
  return best;
}

const Ops& ops() { return ops_for(active_isa()); }

void force_isa(Isa isa) {
  if (!isa_available(isa))
    throw std::runtime_error("cannot force unavailable isa");
  forced.store(int(isa), std::memory_order_relaxed);
}

void reset_isa() { forced.store(-1, std::memory_order_relaxed); }

const char* isa_name(Isa isa) {
  switch (isa) {
    case Isa::scalar:
      return "scalar";
    case Isa::avx2:
      return "avx2";
  }
  return "?";
}

}  // namespace jeval::kernels
