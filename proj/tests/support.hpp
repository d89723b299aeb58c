#pragma once

#include <algorithm>
#include <random>
#include <string>
#include <vector>

#include "evtrack/ingest.hpp"
#include "evtrack/similarity.hpp"

namespace evtrack::testing {

/// Topic-structured random posts, grouped by moment. Topics drift in and
/// out so that clusters are born, grow, merge, split and die.
inline std::vector<std::vector<Post>> random_stream(std::uint64_t seed, Moment moments,
                                                    std::size_t max_per_moment = 30,
                                                    std::size_t topics = 6) {
  std::mt19937_64 rng(seed);
  auto pick = [&](std::size_t n) { return static_cast<std::size_t>(rng() % n); };
  std::vector<std::vector<Post>> out(static_cast<std::size_t>(moments));
  std::size_t serial = 0;
  std::vector<double> heat(topics);
  for (auto& h : heat) h = static_cast<double>(pick(100)) / 100.0;
  for (Moment m = 0; m < moments; ++m) {
    for (auto& h : heat) h = std::clamp(h + (static_cast<double>(pick(41)) - 20.0) / 100.0, 0.0, 1.0);
    const std::size_t n = pick(max_per_moment + 1);
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t topic = pick(topics);
      if (static_cast<double>(pick(100)) / 100.0 > heat[topic]) topic = pick(topics);
      std::vector<std::string> e;
      const std::size_t k = 2 + pick(3);
      for (std::size_t j = 0; j < k; ++j) e.push_back("t" + std::to_string(topic) + "w" + std::to_string(pick(5)));
      if (pick(3) == 0) e.push_back("t" + std::to_string((topic + 1) % topics) + "w" + std::to_string(pick(5)));
      if (pick(4) == 0) e.push_back("x" + std::to_string(pick(200)));
      std::sort(e.begin(), e.end());
      e.erase(std::unique(e.begin(), e.end()), e.end());
      Post p;
      p.id = "r" + std::to_string(serial++);
      p.entities = std::move(e);
      p.timestamp = m;
      p.author = "a" + std::to_string(pick(20));
      out[static_cast<std::size_t>(m)].push_back(std::move(p));
    }
  }
  return out;
}

inline std::vector<Post> window_posts(const std::vector<std::vector<Post>>& stream, Moment t,
                                      Moment len) {
  std::vector<Post> out;
  for (Moment m = std::max<Moment>(0, t - len + 1); m <= t && m < static_cast<Moment>(stream.size()); ++m) {
    const auto& b = stream[static_cast<std::size_t>(m)];
    out.insert(out.end(), b.begin(), b.end());
  }
  return out;
}

}  // namespace evtrack::testing
