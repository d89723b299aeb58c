#include <atomic>
#include <cstdlib>
#include <string_view>

#include "evtrack/kernels.hpp"

namespace evtrack::kernels {
namespace {

Isa detect() noexcept {
  Isa isa = avx2_supported() ? Isa::Avx2 : Isa::Scalar;
  if (const char* env = std::getenv("EVTRACK_ISA")) {
    if (std::string_view(env) == "scalar") isa = Isa::Scalar;
  }
  return isa;
}

std::atomic<Isa>& current() noexcept {
  static std::atomic<Isa> isa{detect()};
  return isa;
}

}  // namespace

std::string_view to_string(Isa isa) noexcept {
  return isa == Isa::Avx2 ? "avx2" : "scalar";
}

bool avx2_supported() noexcept {
#if defined(EVTRACK_HAVE_AVX2) && (defined(__x86_64__) || defined(__i386__))
  return __builtin_cpu_supports("avx2");
#else
  return false;
#endif
}

Isa active_isa() noexcept { return current().load(std::memory_order_relaxed); }

Isa force_isa(Isa isa) noexcept {
  if (isa == Isa::Avx2 && !avx2_supported()) isa = Isa::Scalar;
  current().store(isa, std::memory_order_relaxed);
  return isa;
}

void fading_scores(std::span<const std::uint32_t> hits, std::span<const std::uint32_t> sizes,
                   std::span<const double> decays, std::uint32_t self_size,
                   std::span<double> out) noexcept {
  const std::size_t n = hits.size();
#ifdef EVTRACK_HAVE_AVX2
  if (active_isa() == Isa::Avx2) {
    avx2::fading_scores(hits.data(), sizes.data(), decays.data(), self_size, out.data(), n);
    return;
  }
#endif
  scalar::fading_scores(hits.data(), sizes.data(), decays.data(), self_size, out.data(), n);
}

void classify_weights(std::span<const double> sums, std::span<const double> decays,
                      double threshold, std::span<double> weights,
                      std::span<std::uint8_t> core) noexcept {
  const std::size_t n = sums.size();
#ifdef EVTRACK_HAVE_AVX2
  if (active_isa() == Isa::Avx2) {
    avx2::classify_weights(sums.data(), decays.data(), threshold, weights.data(), core.data(), n);
    return;
  }
#endif
  scalar::classify_weights(sums.data(), decays.data(), threshold, weights.data(), core.data(), n);
}

std::uint32_t intersect_count(std::span<const std::uint32_t> a,
                              std::span<const std::uint32_t> b) noexcept {
#ifdef EVTRACK_HAVE_AVX2
  if (active_isa() == Isa::Avx2) return avx2::intersect_count(a.data(), a.size(), b.data(), b.size());
#endif
  return scalar::intersect_count(a.data(), a.size(), b.data(), b.size());
}

}  // namespace evtrack::kernels
