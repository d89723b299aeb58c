#pragma once

#include <string>
#include <vector>

#include "evtrack/eval.hpp"
#include "evtrack/track.hpp"

namespace evtrack::testing {

inline Post make_post(std::string id, std::vector<std::string> l, std::int64_t ts) {
  Post p;
  p.id = std::move(id);
  p.entities = std::move(l);
  p.timestamp = ts;
  p.author = "a";
  return p;
}

inline std::vector<Post> copies(const std::string& prefix, int n, const std::vector<std::string>& l,
                                std::int64_t ts) {
  std::vector<Post> out;
  for (int i = 0; i < n; ++i) out.push_back(make_post(prefix + std::to_string(i), l, ts));
  return out;
}

inline std::vector<Post> join(std::vector<Post> a, const std::vector<Post>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

/// A short tick sequence whose last tick produces exactly one op of `expected`.
/// No decay, window of three moments, first tick ends at moment 0.
struct BehaviorFixture {
  OpKind expected;
  std::vector<std::vector<Post>> ticks;
};

inline const std::vector<std::string> kTopicA{"a1", "a2", "a3"};
inline const std::vector<std::string> kTopicC{"c1", "c2", "c3"};
inline const std::vector<std::string> kBridge{"a1", "a2", "a3", "c1", "c2", "c3"};

inline std::vector<BehaviorFixture> behavior_fixtures() {
  std::vector<BehaviorFixture> f;
  f.push_back({OpKind::Birth, {copies("A", 3, kTopicA, 0)}});
  f.push_back({OpKind::Death, {copies("A", 3, kTopicA, 0), {}, {}, {}}});
  f.push_back({OpKind::Grow, {copies("A", 3, kTopicA, 0), {make_post("A3", kTopicA, 1)}}});
  f.push_back({OpKind::Shrink, {copies("A", 3, kTopicA, 0), copies("B", 3, kTopicA, 1), {}, {}}});
  f.push_back({OpKind::Merge,
               {join(copies("A", 3, kTopicA, 0), copies("C", 3, kTopicC, 0)), {make_post("b", kBridge, 1)}}});
  f.push_back({OpKind::Split,
               {{make_post("b", kBridge, 0)}, join(copies("A", 3, kTopicA, 1), copies("C", 3, kTopicC, 1)), {}, {}}});
  return f;
}

inline SimilarityParams fixture_params() { return {.decay = DecayKind::None}; }
inline WindowConfig fixture_window() { return {.window_len = 3, .step = 1}; }

/// Runs a fixture; returns the ops of its last tick. The engine is left at
/// the final state.
inline std::vector<EvolutionOp> run_fixture(Engine& engine, const BehaviorFixture& f) {
  engine.align_to(0);
  std::vector<EvolutionOp> last;
  for (const auto& batch : f.ticks) last = engine.tick(batch).ops;
  return last;
}

/// In-window posts of a fixture at its final moment.
inline std::vector<Post> fixture_window_posts(const BehaviorFixture& f) {
  const Moment t = static_cast<Moment>(f.ticks.size()) - 1;
  std::vector<Post> out;
  for (const auto& batch : f.ticks) {
    for (const Post& p : batch) {
      if (p.timestamp > t - fixture_window().window_len) out.push_back(p);
    }
  }
  return out;
}

}  // namespace evtrack::testing
