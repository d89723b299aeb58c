#pragma once

#include <span>
#include <string>
#include <utility>
#include <vector>

#include "evtrack/postnet.hpp"

namespace evtrack {

struct Cluster;

/// (entity, popularity) pairs, score descending, ties lexicographic.
using Annotation = std::vector<std::pair<std::string, double>>;

/// One reinforcement step A = Mᵀ H over a post/entity incidence: the score
/// of an entity is the summed weight of the posts containing it.
/// Throws Error(EmptyEvent) when there are no posts.
Annotation annotate(std::span<const std::vector<std::string>> post_entities,
                    std::span<const double> post_weights);

/// Annotates a cluster's core and border posts with their weights at t.
Annotation annotate(const Cluster& event, const PostNetwork& net, Moment t);

/// First k entries (all when k == 0).
Annotation top_k(Annotation a, std::size_t k);

}  // namespace evtrack
