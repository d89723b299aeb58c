#pragma once

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "evtrack/postnet.hpp"
#include "evtrack/track.hpp"

namespace evtrack {

// ---------------------------------------------------------------- oracle

enum class OracleMode {
  BruteForce,  // all pairs, no index, independent of the incremental code
  Indexed,     // fresh network built through linkage search
};

struct OracleResult {
  ClusterFamily family;
  std::vector<std::string> cores;  // post ids, sorted
  std::vector<std::pair<std::string, std::string>> core_edges;  // sorted pairs of ids
  std::size_t num_edges = 0;
  std::size_t num_events = 0;
};

/// Clusters of the given in-window posts at moment t, computed from scratch.
OracleResult oracle_tick(const std::vector<Post>& posts, Moment t, const SimilarityParams& params,
                         std::int64_t tick_unit, std::size_t phi,
                         OracleMode mode = OracleMode::BruteForce);

// -------------------------------------------------------------- baselines

enum class PeakMode { Hashtags, Unigrams };

struct PeakDetection {
  Moment moment;
  std::string term;
  std::size_t count;
  friend bool operator==(const PeakDetection&, const PeakDetection&) = default;
};

/// Flags (moment, term) when the term's count exceeds mean + 2 sigma of its
/// previous `history` moments and is at least `min_count`.
std::vector<PeakDetection> baseline_peaks(const std::vector<Post>& stream, PeakMode mode,
                                          Moment history, std::int64_t tick_unit = 1,
                                          std::size_t min_count = 5);

struct Snapshot {
  Moment t;
  ClusterFamily family;
};

/// Streaming form of baseline_match: feed one snapshot per moment.
class BaselineMatcher {
 public:
  explicit BaselineMatcher(double kappa = 0.9);
  std::vector<EvolutionOp> step(const Snapshot& snapshot);

 private:
  double kappa_;
  ClusterId next_ = 1;
  std::vector<std::vector<std::string>> prev_;
  std::vector<ClusterId> prev_ids_;
};

/// Links clusters of adjacent snapshots whose member Jaccard is >= kappa
/// (greedy, best pairs first). Emits Birth, Death, Grow and Shrink only.
std::vector<EvolutionOp> baseline_match(const std::vector<Snapshot>& snapshots, double kappa = 0.9);

// -------------------------------------------------------------- generator

struct PlantedCluster {
  std::string name;
  Moment start = 0;
  std::size_t posts_per_moment = 20;
};

struct Directive {
  enum class Kind { Merge, Split, Die };
  Kind kind = Kind::Merge;
  std::string a;
  std::string b;     // merge only
  std::string into;  // merge only: name of the merged cluster
  Moment at = 0;
};

struct ScenarioScript {
  std::uint64_t seed = 1;
  Moment moments = 20;       // the stream covers moments [0, moments)
  Moment window_len = 10;    // window the ground truth is computed for
  std::size_t noise_per_moment = 0;
  double noise_rate = 0.0;   // chance a planted post is replaced by noise
  std::size_t bridges_per_moment = 2;
  std::size_t noise_vocabulary = 5000;
  std::vector<PlantedCluster> clusters;
  std::vector<Directive> directives;
};

/// Throws Error(InvalidScript).
ScenarioScript parse_script(const std::string& json_text);
std::string script_to_json(const ScenarioScript& script);

struct GeneratedStream {
  std::vector<Post> posts;          // ordered by timestamp
  std::vector<EvolutionOp> truth;   // kind and t only; ids are planted-cluster ordinals
};

/// Deterministic planted-scenario stream. Ground truth assumes the default
/// density parameters and Reciprocal decay. Throws Error(InvalidScript).
GeneratedStream generate(const ScenarioScript& script);

/// Fixed window whose clusters sit on a ladder of pairwise Jaccard levels;
/// used for density sweeps at moment `eval_moment()`.
struct LadderWindow {
  std::vector<Post> posts;
  Moment eval_moment;
  Moment window_len;
};
LadderWindow density_ladder_window(std::uint64_t seed);

/// Large steady stream: `clusters` topics with `per_cluster` posts each plus
/// `noise` random posts per moment.
std::vector<Post> bench_stream(std::uint64_t seed, Moment moments, std::size_t clusters = 50,
                               std::size_t per_cluster = 20, std::size_t noise = 1000);

// --------------------------------------------------- primitive op counting

struct PostChange {
  enum class Kind { Add, Remove };
  Kind kind;
  Post post;  // for Remove only the id is used
};

/// Cluster primitive operations needed to apply `changes` one post at a
/// time to the network holding `initial`, evaluated at moment t:
/// noise 0; border |N_c|; core +C / ↑ 1; Merge / Split 1 + |N_c|;
/// core deletion with no surviving neighbor cluster 1.
std::size_t primitive_op_count(const std::vector<Post>& initial,
                               const std::vector<PostChange>& changes,
                               const SimilarityParams& params, Moment t);

/// Reorders a change list so that all removals come first (stable).
std::vector<PostChange> deletions_first(std::vector<PostChange> changes);

}  // namespace evtrack
