#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "evtrack/ingest.hpp"

namespace evtrack {

using Moment = std::int64_t;

/// Time-gap penalty D(x), x = |gap| in window moments. D >= 1, non-decreasing.
enum class DecayKind { Reciprocal, Exponential, None };

std::string_view to_string(DecayKind kind) noexcept;
DecayKind parse_decay_kind(std::string_view name);

struct SimilarityParams {
  DecayKind decay = DecayKind::Reciprocal;
  double eps0 = 0.2;    // edge threshold
  double eps1 = 0.5;    // core-edge threshold
  double delta1 = 0.5;  // core weight threshold

  /// Throws Error(InvalidConfig) unless 0 < eps0 <= eps1 < 1 and delta1 > 0.
  void validate() const;

  friend bool operator==(const SimilarityParams&, const SimilarityParams&) = default;
};

inline Moment to_moment(std::int64_t timestamp, std::int64_t tick_unit) {
  return timestamp / tick_unit;
}

double jaccard(std::span<const std::string> a, std::span<const std::string> b);

/// Throws Error(NegativeGap) when dt < 0.
double decay(DecayKind kind, double dt);

/// The single formula shared by every S_F computation:
/// hits / ((|p| + |q| - hits) * D).
inline double fading_score(std::uint32_t hits, std::uint32_t size_p, std::uint32_t size_q,
                           double decay_value) {
  if (hits == 0) return 0.0;
  return static_cast<double>(hits) /
         (static_cast<double>(size_p + size_q - hits) * decay_value);
}

double fading_similarity(const Post& p, const Post& q, const SimilarityParams& params,
                         std::int64_t tick_unit = 1);

/// Throws Error(InvalidHitCount) when hits > min(|p|, |q|).
double fading_similarity_from_hits(const Post& p, const Post& q, std::uint32_t hits,
                                   const SimilarityParams& params, std::int64_t tick_unit = 1);

/// Memoized D(gap) for integer gaps; values are bit-identical to decay().
class DecayTable {
 public:
  explicit DecayTable(DecayKind kind, std::size_t prefill = 64);

  double at(Moment gap) const {
    if (gap >= 0 && static_cast<std::size_t>(gap) < values_.size()) {
      return values_[static_cast<std::size_t>(gap)];
    }
    return decay(kind_, static_cast<double>(gap));
  }
  DecayKind kind() const { return kind_; }

 private:
  DecayKind kind_;
  std::vector<double> values_;
};

// Neighbor sums are accumulated in fixed point so that delta maintenance is
// exact and independent of summation order.
inline constexpr double kFixedScale = 0x1p44;
inline constexpr double kFixedUnit = 0x1p-44;

inline std::int64_t to_fixed(double w) { return std::llround(w * kFixedScale); }
inline double from_fixed(std::int64_t f) { return static_cast<double>(f) * kFixedUnit; }

// Weights are sums of rationals, so an exact tie with delta1 can land a few
// ulps below it after rounding. Ties within this slack count as reaching it.
inline constexpr double kWeightSlack = 1e-9;
inline double core_threshold(const SimilarityParams& p) { return p.delta1 - kWeightSlack; }

/// w^t(p) from a fixed-point neighbor sum.
inline double weight_from_fixed(std::int64_t sum_fixed, double decay_value) {
  return from_fixed(sum_fixed) / decay_value;
}

}  // namespace evtrack
