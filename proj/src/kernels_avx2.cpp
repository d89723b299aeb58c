// Compiled with -mavx2 (no -mfma). Only reached through the dispatcher after
// a CPUID check.
#include <immintrin.h>

#include "evtrack/kernels.hpp"

namespace evtrack::kernels::avx2 {

void fading_scores(const std::uint32_t* hits, const std::uint32_t* sizes, const double* decays,
                   std::uint32_t self_size, double* out, std::size_t n) noexcept {
  const __m128i self = _mm_set1_epi32(static_cast<int>(self_size));
  const __m256d zero = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m128i h = _mm_loadu_si128(reinterpret_cast<const __m128i*>(hits + i));
    __m128i s = _mm_loadu_si128(reinterpret_cast<const __m128i*>(sizes + i));
    __m128i uni = _mm_sub_epi32(_mm_add_epi32(self, s), h);
    __m256d hd = _mm256_cvtepi32_pd(h);
    __m256d denom = _mm256_mul_pd(_mm256_cvtepi32_pd(uni), _mm256_loadu_pd(decays + i));
    __m256d score = _mm256_div_pd(hd, denom);
    __m256d is_zero = _mm256_cmp_pd(hd, zero, _CMP_EQ_OQ);
    _mm256_storeu_pd(out + i, _mm256_blendv_pd(score, zero, is_zero));
  }
  scalar::fading_scores(hits + i, sizes + i, decays + i, self_size, out + i, n - i);
}

void classify_weights(const double* sums, const double* decays, double threshold,
                      double* weights, std::uint8_t* core, std::size_t n) noexcept {
  const __m256d thr = _mm256_set1_pd(threshold);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d w = _mm256_div_pd(_mm256_loadu_pd(sums + i), _mm256_loadu_pd(decays + i));
    _mm256_storeu_pd(weights + i, w);
    int mask = _mm256_movemask_pd(_mm256_cmp_pd(w, thr, _CMP_GE_OQ));
    core[i] = static_cast<std::uint8_t>(mask & 1);
    core[i + 1] = static_cast<std::uint8_t>((mask >> 1) & 1);
    core[i + 2] = static_cast<std::uint8_t>((mask >> 2) & 1);
    core[i + 3] = static_cast<std::uint8_t>((mask >> 3) & 1);
  }
  scalar::classify_weights(sums + i, decays + i, threshold, weights + i, core + i, n - i);
}

std::uint32_t intersect_count(const std::uint32_t* a, std::size_t na, const std::uint32_t* b,
                              std::size_t nb) noexcept {
  std::uint32_t count = 0;
  std::size_t i = 0;
  std::size_t j = 0;
  const __m256i rot = _mm256_setr_epi32(1, 2, 3, 4, 5, 6, 7, 0);
  while (i + 8 <= na && j + 8 <= nb) {
    __m256i va = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(a + i));
    __m256i vb = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(b + j));
    __m256i hit = _mm256_cmpeq_epi32(va, vb);
    for (int r = 1; r < 8; ++r) {
      vb = _mm256_permutevar8x32_epi32(vb, rot);
      hit = _mm256_or_si256(hit, _mm256_cmpeq_epi32(va, vb));
    }
    count += static_cast<std::uint32_t>(
        __builtin_popcount(static_cast<unsigned>(_mm256_movemask_ps(_mm256_castsi256_ps(hit)))));
    std::uint32_t amax = a[i + 7];
    std::uint32_t bmax = b[j + 7];
    if (amax <= bmax) i += 8;
    if (bmax <= amax) j += 8;
  }
  return count + scalar::intersect_count(a + i, na - i, b + j, nb - j);
}

}  // namespace evtrack::kernels::avx2
