#include "evtrack/annotate.hpp"

#include <algorithm>
#include <map>

#include "evtrack/error.hpp"
#include "evtrack/sketch.hpp"
#include "evtrack/track.hpp"

namespace evtrack {

Annotation annotate(std::span<const std::vector<std::string>> post_entities,
                    std::span<const double> post_weights) {
  if (post_entities.empty()) throw Error(ErrorCode::EmptyEvent, "event has no posts");
  std::map<std::string, double> scores;
  for (std::size_t i = 0; i < post_entities.size(); ++i) {
    for (const auto& e : post_entities[i]) scores[e] += post_weights[i];
  }
  Annotation out(scores.begin(), scores.end());
  std::stable_sort(out.begin(), out.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  return out;
}

Annotation annotate(const Cluster& event, const PostNetwork& net, Moment t) {
  std::vector<std::vector<std::string>> entities;
  std::vector<double> weights;
  entities.reserve(event.size());
  weights.reserve(event.size());
  for (const auto* part : {&event.core, &event.border}) {
    for (Seq p : *part) {
      entities.push_back(net.node(p).post.entities);
      weights.push_back(post_weight(net, p, t));
    }
  }
  return annotate(entities, weights);
}

Annotation top_k(Annotation a, std::size_t k) {
  if (k != 0 && a.size() > k) a.resize(k);
  return a;
}

}  // namespace evtrack
