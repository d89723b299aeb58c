#pragma once
// Data-parallel inner loops with a scalar reference and an AVX2 variant.
//
// The active variant is picked once at startup from CPUID and can be pinned
// with force_isa() (tests) or EVTRACK_ISA=scalar|avx2 (environment). Every
// variant returns bit-identical results: no FMA, IEEE division and compares
// only.

#include <cstdint>
#include <span>
#include <string_view>

namespace evtrack::kernels {

enum class Isa { Scalar, Avx2 };

std::string_view to_string(Isa isa) noexcept;

bool avx2_supported() noexcept;
Isa active_isa() noexcept;
/// Pins the variant; requesting Avx2 on a machine without it selects Scalar.
/// Returns the variant actually selected.
Isa force_isa(Isa isa) noexcept;

/// out[i] = hits[i] / ((self_size + sizes[i] - hits[i]) * decays[i]), 0 when hits[i] == 0.
void fading_scores(std::span<const std::uint32_t> hits, std::span<const std::uint32_t> sizes,
                   std::span<const double> decays, std::uint32_t self_size,
                   std::span<double> out) noexcept;

/// weights[i] = sums[i] / decays[i]; core[i] = weights[i] >= threshold.
void classify_weights(std::span<const double> sums, std::span<const double> decays,
                      double threshold, std::span<double> weights,
                      std::span<std::uint8_t> core) noexcept;

/// |a ∩ b| for strictly increasing arrays.
std::uint32_t intersect_count(std::span<const std::uint32_t> a,
                              std::span<const std::uint32_t> b) noexcept;

namespace scalar {
void fading_scores(const std::uint32_t* hits, const std::uint32_t* sizes, const double* decays,
                   std::uint32_t self_size, double* out, std::size_t n) noexcept;
void classify_weights(const double* sums, const double* decays, double threshold,
                      double* weights, std::uint8_t* core, std::size_t n) noexcept;
std::uint32_t intersect_count(const std::uint32_t* a, std::size_t na, const std::uint32_t* b,
                              std::size_t nb) noexcept;
}  // namespace scalar

namespace avx2 {
void fading_scores(const std::uint32_t* hits, const std::uint32_t* sizes, const double* decays,
                   std::uint32_t self_size, double* out, std::size_t n) noexcept;
void classify_weights(const double* sums, const double* decays, double threshold,
                      double* weights, std::uint8_t* core, std::size_t n) noexcept;
std::uint32_t intersect_count(const std::uint32_t* a, std::size_t na, const std::uint32_t* b,
                              std::size_t nb) noexcept;
}  // namespace avx2

}  // namespace evtrack::kernels
