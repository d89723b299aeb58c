#pragma once

#include <cstdint>
#include <limits>
#include <queue>
#include <tuple>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "evtrack/postnet.hpp"

namespace evtrack {

enum class NodeType { Core, Border, Noise };

inline constexpr Moment kNeverExpires = std::numeric_limits<Moment>::max();

/// w^t(p) = neighbor sum / D(t - moment). Throws Error(FutureQuery) if t < moment.
double post_weight(const PostNetwork& net, Seq p, Moment t);
NodeType classify_node(const PostNetwork& net, Seq p, Moment t);

/// Last moment at which a post with this neighbor sum is still core.
/// Throws Error(NotCore) if the post is not core at its own moment.
Moment core_expiry(std::int64_t sum_fixed, Moment moment, const SimilarityParams& params,
                   const DecayTable& decay);
Moment core_expiry(const PostNetwork& net, Seq p);

/// Core posts, core edges among them, and a component label per core post.
struct SketchGraph {
  std::vector<Seq> cores;                       // ascending
  std::vector<std::pair<Seq, Seq>> core_edges;  // first < second, ascending
  std::unordered_map<Seq, std::uint32_t> label;

  /// Components as sorted member lists, ordered by smallest member.
  std::vector<std::vector<Seq>> components() const;
  std::size_t component_count() const { return components().size(); }
};

/// Same cores, same core edges, same partition (labels may differ).
bool equivalent(const SketchGraph& a, const SketchGraph& b);

/// From-scratch sketch of the whole network at moment t.
SketchGraph rebuild_sketch(const PostNetwork& net, Moment t);

/// Overlap posts whose core status changes across a tick, by cause. Each
/// changed post appears in exactly one set; posts demoted and re-promoted
/// within the tick are unchanged and appear in none.
struct DeltaSets {
  std::vector<Seq> promoted;         // S+ : became core through G_n
  std::vector<Seq> demoted_removal;  // S- : lost core through G_o
  std::vector<Seq> demoted_decay;    // S⊙ : lost core through time passing
  std::vector<std::uint8_t> new_core;  // per incoming post: core at the new moment

  bool empty() const {
    return promoted.empty() && demoted_removal.empty() && demoted_decay.empty();
  }
};

/// One bulk processed by the incremental sketch, in processing order
/// (all deletions, then all additions).
struct BulkChange {
  enum class Phase { Deletion, Addition };
  Phase phase = Phase::Deletion;
  std::vector<Seq> bulk;        // core posts removed or added, ascending
  Slot slot = kNoSlot;          // deletion: owning component; addition: resulting component
  std::vector<Slot> neighbors;  // N_c: surviving fragments (deletion) or pre-existing neighbor components (addition)
  std::vector<Slot> created;    // slots allocated by this bulk
  std::vector<Slot> released;   // slots freed by this bulk
  std::vector<std::size_t> core_before;  // core counts before the bulk: {slot} (deletion) or per neighbor (addition)
};

struct ApplyResult {
  std::vector<BulkChange> changes;
  std::vector<Seq> lost_edge;       // overlap posts that lost an edge to G_o
  std::vector<Seq> gained_edge;     // overlap posts that gained an edge to G_n
  std::vector<Seq> status_changed;  // overlap posts in any delta set
  std::vector<Seq> added_cores;     // G_n cores and S+
};

struct SketchStats {
  Moment t = 0;
  std::size_t num_core = 0;
  std::size_t num_core_edges = 0;
  std::size_t num_components = 0;
};

/// Sketch graph maintained across ticks. Core flags and component labels
/// live in each node's TrackState; component membership lives here.
class IncrementalSketch {
 public:
  IncrementalSketch() = default;

  /// Rebuilds core flags, components and the expiry queue from the network.
  /// With `keep_labels`, component slots are read from each core's TrackState
  /// (snapshot restore); otherwise they are assigned afresh.
  void reset_from(PostNetwork& net, bool keep_labels);

  DeltaSets compute_delta_sets(const PostNetwork& net, const WindowDelta& delta,
                               const LinkPlan& links);

  /// Applies the delta to the network and the sketch: G_o cores, S-, S⊙ are
  /// removed per owning component, then G_n cores and S+ are added as
  /// connected bulks.
  ApplyResult apply_delta(PostNetwork& net, const WindowDelta& delta, const LinkPlan& links,
                          const DeltaSets& sets);

  SketchGraph export_graph(const PostNetwork& net) const;
  SketchStats stats(const PostNetwork& net) const;

  bool slot_alive(Slot s) const { return s < components_.size() && components_[s].alive; }
  const std::unordered_set<Seq>& members(Slot s) const { return components_[s].cores; }
  std::vector<Slot> live_slots() const;
  std::size_t num_core() const { return num_core_; }
  std::size_t num_core_edges() const { return num_core_edges_; }

  /// Slots freed during a tick become reusable only after this call.
  void release_pending();

  /// Nodes expanded by fragment searches since construction (instrumentation).
  std::uint64_t search_expansions() const { return search_expansions_; }

 private:
  struct Component {
    bool alive = false;
    std::unordered_set<Seq> cores;
  };
  struct ExpiryEntry {
    Moment expiry;
    Seq seq;
    std::uint32_t version;
    bool operator>(const ExpiryEntry& o) const {
      return std::tie(expiry, seq) > std::tie(o.expiry, o.seq);
    }
  };

  Slot allocate();
  void release(Slot s);
  void schedule(const PostNetwork& net, TrackState& st, Seq s);
  std::vector<std::vector<Seq>> split_search(const PostNetwork& net, Slot slot,
                                             std::vector<Seq> seeds, bool& has_remainder);

  std::vector<Component> components_;
  std::vector<Slot> free_;
  std::vector<Slot> pending_free_;
  std::priority_queue<ExpiryEntry, std::vector<ExpiryEntry>, std::greater<>> expiry_;
  std::vector<Seq> popped_;  // expired entries consumed by compute_delta_sets
  std::size_t num_core_ = 0;
  std::size_t num_core_edges_ = 0;
  std::uint64_t search_expansions_ = 0;
};

}  // namespace evtrack
