#include "evtrack/similarity.hpp"

#include <algorithm>

#include "evtrack/error.hpp"

namespace evtrack {

std::string_view to_string(DecayKind kind) noexcept {
  switch (kind) {
    case DecayKind::Reciprocal: return "reciprocal";
    case DecayKind::Exponential: return "exponential";
    case DecayKind::None: return "none";
  }
  return "reciprocal";
}

DecayKind parse_decay_kind(std::string_view name) {
  if (name == "reciprocal") return DecayKind::Reciprocal;
  if (name == "exponential") return DecayKind::Exponential;
  if (name == "none") return DecayKind::None;
  throw Error(ErrorCode::InvalidConfig, "unknown decay kind '" + std::string(name) + "'");
}

void SimilarityParams::validate() const {
  if (!(eps0 > 0.0 && eps0 <= eps1 && eps1 < 1.0)) {
    throw Error(ErrorCode::InvalidConfig, "require 0 < eps0 <= eps1 < 1");
  }
  if (!(delta1 > 0.0) || !std::isfinite(delta1)) {
    throw Error(ErrorCode::InvalidConfig, "require delta1 > 0");
  }
}

namespace {

std::uint32_t intersection_size(std::span<const std::string> a, std::span<const std::string> b) {
  std::uint32_t n = 0;
  auto i = a.begin();
  auto j = b.begin();
  while (i != a.end() && j != b.end()) {
    if (*i < *j) {
      ++i;
    } else if (*j < *i) {
      ++j;
    } else {
      ++n;
      ++i;
      ++j;
    }
  }
  return n;
}

Moment moment_gap(const Post& p, const Post& q, std::int64_t tick_unit) {
  Moment a = to_moment(p.timestamp, tick_unit);
  Moment b = to_moment(q.timestamp, tick_unit);
  return a > b ? a - b : b - a;
}

}  // namespace

double jaccard(std::span<const std::string> a, std::span<const std::string> b) {
  if (a.empty() && b.empty()) return 0.0;
  std::uint32_t inter = intersection_size(a, b);
  auto uni = static_cast<double>(a.size() + b.size() - inter);
  return static_cast<double>(inter) / uni;
}

double decay(DecayKind kind, double dt) {
  if (dt < 0.0 || std::isnan(dt)) throw Error(ErrorCode::NegativeGap, "time gap must be >= 0");
  switch (kind) {
    case DecayKind::Reciprocal: return dt + 1.0;
    case DecayKind::Exponential: return std::exp(dt);
    case DecayKind::None: return 1.0;
  }
  return 1.0;
}

double fading_similarity(const Post& p, const Post& q, const SimilarityParams& params,
                         std::int64_t tick_unit) {
  std::uint32_t hits = intersection_size(p.entities, q.entities);
  double d = decay(params.decay, static_cast<double>(moment_gap(p, q, tick_unit)));
  return fading_score(hits, static_cast<std::uint32_t>(p.entities.size()),
                      static_cast<std::uint32_t>(q.entities.size()), d);
}

double fading_similarity_from_hits(const Post& p, const Post& q, std::uint32_t hits,
                                   const SimilarityParams& params, std::int64_t tick_unit) {
  if (hits > std::min(p.entities.size(), q.entities.size())) {
    throw Error(ErrorCode::InvalidHitCount, "hit count exceeds the smaller entity set");
  }
  double d = decay(params.decay, static_cast<double>(moment_gap(p, q, tick_unit)));
  return fading_score(hits, static_cast<std::uint32_t>(p.entities.size()),
                      static_cast<std::uint32_t>(q.entities.size()), d);
}

DecayTable::DecayTable(DecayKind kind, std::size_t prefill) : kind_(kind) {
  values_.reserve(prefill);
  for (std::size_t g = 0; g < prefill; ++g) values_.push_back(decay(kind, static_cast<double>(g)));
}

}  // namespace evtrack
