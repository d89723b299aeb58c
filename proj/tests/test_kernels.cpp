#include <doctest.h>

#include <cstring>
#include <random>

#include "evtrack/kernels.hpp"
#include "evtrack/similarity.hpp"

using namespace evtrack;

namespace {

template <class T>
bool same_bits(const std::vector<T>& a, const std::vector<T>& b) {
  return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(T)) == 0;
}

std::vector<std::uint32_t> sorted_set(std::mt19937_64& rng, std::size_t n, std::uint32_t range) {
  std::vector<std::uint32_t> v;
  for (std::size_t i = 0; i < n; ++i) v.push_back(static_cast<std::uint32_t>(rng() % range));
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

}  // namespace

TEST_CASE("scalar fading_scores matches the shared formula") {
  std::vector<std::uint32_t> hits{0, 1, 2, 3}, sizes{2, 2, 4, 3};
  std::vector<double> decays{1, 1, 2, 2.718281828459045}, out(4);
  kernels::scalar::fading_scores(hits.data(), sizes.data(), decays.data(), 3, out.data(), 4);
  for (std::size_t i = 0; i < 4; ++i) CHECK(out[i] == fading_score(hits[i], 3, sizes[i], decays[i]));
  CHECK(out[2] == 0.2);
}

#ifdef EVTRACK_HAVE_AVX2
TEST_CASE("AVX2 kernels are bit-identical to the scalar reference") {
  if (!kernels::avx2_supported()) {
    MESSAGE("AVX2 not available; skipping");
    return;
  }
  std::mt19937_64 rng(17);
  for (std::size_t n : {0u, 1u, 3u, 4u, 5u, 7u, 8u, 31u, 64u, 1001u}) {
    std::vector<std::uint32_t> hits(n), sizes(n);
    std::vector<double> decays(n), sums(n);
    const std::uint32_t self = 1 + static_cast<std::uint32_t>(rng() % 12);
    for (std::size_t i = 0; i < n; ++i) {
      sizes[i] = 1 + static_cast<std::uint32_t>(rng() % 12);
      hits[i] = static_cast<std::uint32_t>(rng() % (std::min(self, sizes[i]) + 1));
      decays[i] = decay(static_cast<DecayKind>(rng() % 3), static_cast<double>(rng() % 10));
      sums[i] = from_fixed(static_cast<std::int64_t>(rng() % (std::int64_t{1} << 46)));
    }
    std::vector<double> s_out(n), v_out(n), s_w(n), v_w(n);
    std::vector<std::uint8_t> s_c(n), v_c(n);
    kernels::scalar::fading_scores(hits.data(), sizes.data(), decays.data(), self, s_out.data(), n);
    kernels::avx2::fading_scores(hits.data(), sizes.data(), decays.data(), self, v_out.data(), n);
    CHECK(same_bits(s_out, v_out));
    kernels::scalar::classify_weights(sums.data(), decays.data(), 0.5, s_w.data(), s_c.data(), n);
    kernels::avx2::classify_weights(sums.data(), decays.data(), 0.5, v_w.data(), v_c.data(), n);
    CHECK(same_bits(s_w, v_w));
    CHECK(s_c == v_c);
  }
  for (int trial = 0; trial < 300; ++trial) {
    auto a = sorted_set(rng, rng() % 80, 200);
    auto b = sorted_set(rng, rng() % 80, 200);
    std::vector<std::uint32_t> both;
    std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(both));
    CHECK(kernels::scalar::intersect_count(a.data(), a.size(), b.data(), b.size()) == both.size());
    CHECK(kernels::avx2::intersect_count(a.data(), a.size(), b.data(), b.size()) == both.size());
  }
}
#endif

TEST_CASE("dispatch can be pinned") {
  kernels::Isa before = kernels::active_isa();
  CHECK(kernels::force_isa(kernels::Isa::Scalar) == kernels::Isa::Scalar);
  CHECK(kernels::active_isa() == kernels::Isa::Scalar);
  std::vector<std::uint32_t> a{1, 3, 5}, b{3, 4, 5};
  CHECK(kernels::intersect_count(a, b) == 2);
  kernels::Isa got = kernels::force_isa(kernels::Isa::Avx2);
  CHECK(got == (kernels::avx2_supported() ? kernels::Isa::Avx2 : kernels::Isa::Scalar));
  CHECK(kernels::intersect_count(a, b) == 2);
  kernels::force_isa(before);
}
