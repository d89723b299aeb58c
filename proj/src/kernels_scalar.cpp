#include "evtrack/kernels.hpp"

namespace evtrack::kernels::scalar {

void fading_scores(const std::uint32_t* hits, const std::uint32_t* sizes, const double* decays,
                   std::uint32_t self_size, double* out, std::size_t n) noexcept {
  for (std::size_t i = 0; i < n; ++i) {
    std::uint32_t h = hits[i];
    out[i] = h == 0 ? 0.0
                    : static_cast<double>(h) /
                          (static_cast<double>(self_size + sizes[i] - h) * decays[i]);
  }
}

void classify_weights(const double* sums, const double* decays, double threshold,
                      double* weights, std::uint8_t* core, std::size_t n) noexcept {
  for (std::size_t i = 0; i < n; ++i) {
    double w = sums[i] / decays[i];
    weights[i] = w;
    core[i] = w >= threshold ? 1 : 0;
  }
}

std::uint32_t intersect_count(const std::uint32_t* a, std::size_t na, const std::uint32_t* b,
                              std::size_t nb) noexcept {
  std::uint32_t count = 0;
  std::size_t i = 0;
  std::size_t j = 0;
  while (i < na && j < nb) {
    if (a[i] < b[j]) {
      ++i;
    } else if (b[j] < a[i]) {
      ++j;
    } else {
      ++count;
      ++i;
      ++j;
    }
  }
  return count;
}

}  // namespace evtrack::kernels::scalar
