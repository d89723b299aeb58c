#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "evtrack/postnet.hpp"
#include "evtrack/sketch.hpp"

namespace evtrack {

using ClusterId = std::uint64_t;

/// One sketch component plus the border posts adjacent to it.
struct Cluster {
  ClusterId id = 0;
  std::vector<Seq> core;    // ascending
  std::vector<Seq> border;  // ascending
  Moment born_at = 0;
  std::vector<ClusterId> lineage;  // parents for merge/split results

  std::size_t size() const { return core.size() + border.size(); }
};

/// |core ∪ border| >= phi.
bool classify_event(const Cluster& c, std::size_t phi);
inline bool is_event_size(std::size_t size, std::size_t phi) { return size >= phi; }

/// Cluster membership keyed by post id, for comparing clusterings built on
/// different networks.
struct ClusterShape {
  std::vector<std::string> core;    // sorted
  std::vector<std::string> border;  // sorted
  auto operator<=>(const ClusterShape&) const = default;
};
using ClusterFamily = std::vector<ClusterShape>;  // sorted

/// Gen(component): core posts plus every non-core network neighbor.
Cluster gen_cluster(const PostNetwork& net, const SketchGraph& sketch,
                    const std::vector<Seq>& component);
std::vector<Cluster> gen_clusters(const PostNetwork& net, const SketchGraph& sketch);
ClusterFamily to_family(const PostNetwork& net, const std::vector<Cluster>& clusters);

enum class OpKind { Birth, Death, Grow, Shrink, Merge, Split };

std::string_view to_string(OpKind kind) noexcept;
OpKind parse_op_kind(std::string_view name);

struct EvolutionOp {
  OpKind kind = OpKind::Birth;
  Moment t = 0;
  std::vector<ClusterId> ids;         // subjects before the op
  std::vector<ClusterId> result_ids;  // subjects after the op
  std::size_t size_before = 0;        // summed over ids
  std::size_t size_after = 0;         // summed over result_ids
  bool is_event_before = false;
  bool is_event_after = false;
  std::vector<ClusterId> lineage;
  std::vector<std::string> payload;  // post ids added or removed, sorted
  std::vector<std::pair<std::string, double>> annotation;

  friend bool operator==(const EvolutionOp&, const EvolutionOp&) = default;
};

struct TrackConfig {
  std::size_t phi = 10;
  bool annotate = true;
  std::size_t top_k = 20;
};

struct TickReport {
  Moment t = 0;
  std::size_t posts_in = 0;
  std::size_t posts_out = 0;
  std::size_t window_posts = 0;
  std::size_t num_core = 0;
  std::size_t num_core_edges = 0;
  std::size_t num_clusters = 0;
  std::size_t num_events = 0;
  DeltaSets delta;
};

struct TickResult {
  TickReport report;
  std::vector<EvolutionOp> ops;
};

/// Incremental tracker: post network, sketch, clusters and eTrack, advanced
/// one tick at a time.
class Engine {
 public:
  Engine(SimilarityParams params, WindowConfig window, TrackConfig config = {});

  /// Moves the window by one step, absorbing `incoming` (moments in
  /// (now, now + step]), and returns the evolution ops of the tick.
  TickResult tick(std::vector<Post> incoming);

  /// Places the first window so that it ends at `first_moment`. Only valid
  /// before the first tick.
  void align_to(Moment first_moment);
  bool started() const { return started_; }

  const PostNetwork& network() const { return net_; }
  const IncrementalSketch& sketch() const { return sketch_; }
  const TrackConfig& config() const { return config_; }
  Moment now() const { return net_.now(); }

  std::vector<Cluster> clusters() const;  // ascending id
  std::optional<Cluster> cluster(ClusterId id) const;
  ClusterFamily family() const { return to_family(net_, clusters()); }

  /// Cluster ids owning core posts that share a core edge with `posts`,
  /// excluding the posts themselves.
  std::vector<ClusterId> neighboring_clusters(const std::vector<Seq>& posts) const;

  /// Checks slot, border and counter bookkeeping against the network.
  /// Throws Error(InconsistentState) on mismatch.
  void check_invariants() const;

  ClusterId next_cluster_id() const { return next_id_; }

  // Snapshot support.
  struct SlotRecord {
    Slot slot;
    ClusterId id;
    Moment born_at;
    std::vector<ClusterId> lineage;
  };
  std::vector<SlotRecord> slot_records() const;
  PostNetwork& mutable_network() { return net_; }
  /// Rebuilds sketch and cluster bookkeeping after the network and each
  /// core's TrackState.slot were restored.
  void restore(const std::vector<SlotRecord>& slots, ClusterId next_id);

 private:
  struct SlotData {
    bool alive = false;
    ClusterId id = 0;
    Moment born_at = 0;
    std::vector<ClusterId> lineage;
    std::unordered_set<Seq> border;
  };
  struct Journal {
    std::unordered_map<Seq, int> delta;
    std::unordered_map<Seq, std::string> names;
  };

  SlotData& slot(Slot s);
  std::size_t slot_size(Slot s) const;
  void touch(Slot s, std::size_t core_count);
  void note(Slot s, Seq p, int change);
  ClusterId fresh_id() { return next_id_++; }
  std::string name_of(Seq p) const;
  void recompute_borders(std::vector<Seq> dirty);
  Cluster make_cluster(Slot s) const;

  PostNetwork net_;
  IncrementalSketch sketch_;
  TrackConfig config_;
  std::vector<SlotData> slots_;
  ClusterId next_id_ = 1;
  bool started_ = false;

  // per-tick scratch
  std::unordered_map<ClusterId, std::size_t> start_size_;
  std::unordered_map<ClusterId, std::size_t> consumed_size_;
  std::unordered_set<ClusterId> created_;
  std::map<ClusterId, Journal> journal_;
  std::unordered_map<Seq, std::string> departed_;
};

}  // namespace evtrack
