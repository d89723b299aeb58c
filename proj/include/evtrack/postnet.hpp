#pragma once

#include <cstdint>
#include <deque>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "evtrack/ingest.hpp"
#include "evtrack/similarity.hpp"

namespace evtrack {

using Seq = std::uint64_t;       // arrival ordinal; ascending seq implies non-decreasing moment
using EntityId = std::uint32_t;  // interned entity
using Slot = std::uint32_t;      // internal cluster handle, see track.hpp

inline constexpr Slot kNoSlot = std::numeric_limits<Slot>::max();
inline constexpr Moment kNoMoment = std::numeric_limits<Moment>::min();

struct WindowConfig {
  Moment window_len = 10;
  Moment step = 1;
  std::int64_t tick_unit = 1;

  /// window_len > 2, 1 <= step < window_len, tick_unit >= 1.
  void validate() const;

  friend bool operator==(const WindowConfig&, const WindowConfig&) = default;
};

struct Edge {
  Seq to;
  double weight;
};

using Link = Edge;

/// Fields owned by the sketch and tracking layers; the network only stores them.
struct TrackState {
  bool core = false;
  Slot slot = kNoSlot;
  std::uint32_t version = 0;
  std::vector<Slot> border_in;
};

struct Node {
  Post post;
  Moment moment = 0;
  Seq seq = 0;
  std::vector<EntityId> entity_ids;  // sorted
  std::vector<Edge> edges;           // sorted by `to`
  std::int64_t sum_fixed = 0;
  bool alive = false;
  TrackState track;
};

/// Posts leaving (V_o) and entering (V_n) the window on one tick.
struct WindowDelta {
  Moment from = 0;
  Moment to = 0;
  std::vector<Seq> old_posts;     // ascending
  std::vector<Post> new_posts;    // stable-sorted by moment
  std::vector<Moment> new_moments;
  Seq first_new_seq = 0;          // new_posts[i] will receive first_new_seq + i

  bool empty() const { return old_posts.empty() && new_posts.empty(); }
};

/// Links of each incoming post, to surviving posts and to earlier incoming
/// posts (addressed by their future seq).
using LinkPlan = std::vector<std::vector<Link>>;

/// Evolving similarity graph over the in-window posts.
///
/// Edge (p, q) exists iff S_F(p, q) >= eps0. Each node caches the fixed-point
/// sum of its incident edge weights. Single writer; queries between ticks.
class PostNetwork {
 public:
  PostNetwork(SimilarityParams params, WindowConfig window);

  const SimilarityParams& params() const { return params_; }
  const WindowConfig& window() const { return window_; }
  const DecayTable& decay_table() const { return decay_; }

  Moment now() const { return now_; }
  void set_now(Moment t) { now_ = t; }

  std::size_t size() const { return alive_count_; }
  std::size_t edge_count() const { return edge_count_; }
  bool contains(std::string_view id) const;
  std::optional<Seq> find(std::string_view id) const;
  Seq next_seq() const { return next_seq_; }
  Moment moment_of(const Post& p) const { return to_moment(p.timestamp, window_.tick_unit); }

  bool alive(Seq s) const {
    return s >= base_seq_ && s < next_seq_ && nodes_[s - base_seq_].alive;
  }
  const Node& node(Seq s) const { return nodes_[s - base_seq_]; }
  TrackState& track_state(Seq s) { return nodes_[s - base_seq_].track; }
  std::span<const Edge> neighbors(Seq s) const { return node(s).edges; }
  double neighbor_sum(Seq s) const { return from_fixed(node(s).sum_fixed); }
  std::int64_t neighbor_sum_fixed(Seq s) const { return node(s).sum_fixed; }
  /// Weight of edge (a, b), or nullopt.
  std::optional<double> edge_weight(Seq a, Seq b) const;

  /// Alive seqs, ascending.
  std::vector<Seq> seqs() const;
  template <class F>
  void for_each_node(F&& f) const {
    for (const Node& n : nodes_) {
      if (n.alive) f(n);
    }
  }
  /// Alive seqs with moment <= m, ascending.
  std::vector<Seq> seqs_through(Moment m) const;

  std::optional<EntityId> entity_id(std::string_view e) const;
  const std::string& entity_name(EntityId id) const { return entity_names_[id]; }
  std::span<const Seq> posting(EntityId id) const { return postings_[id]; }

  /// Neighbors of a post not yet in the network, found by walking its
  /// entities through the inverted index and scoring hit counts. Posts with
  /// moment <= skip_through are ignored. Result ascending by seq.
  std::vector<Link> linkage_search(const Post& p, Moment skip_through = kNoMoment) const;
  /// Seqs touched by the most recent linkage search (candidate set N').
  std::span<const Seq> last_candidates() const { return touched_; }
  std::uint64_t candidates_read() const { return candidates_read_; }

  /// Inserts p with linkage-search edges. Returns the neighbors whose sum changed.
  std::vector<Seq> add_post(Post p);
  /// Removes a post and its edges. Returns the former neighbors.
  std::vector<Seq> remove_post(std::string_view id);

  /// Computes the tick delta for moving the window to now + step. Advances
  /// now but leaves the graph untouched.
  WindowDelta advance_window(std::vector<Post> incoming);
  /// Links every incoming post would receive, ignoring expiring posts.
  LinkPlan plan_links(const WindowDelta& delta) const;
  /// Removes V_o. Returns overlap posts that lost an edge, ascending.
  std::vector<Seq> expire(const WindowDelta& delta);
  /// Inserts V_n with planned links. Returns overlap posts that gained an edge, ascending.
  std::vector<Seq> insert_planned(const WindowDelta& delta, const LinkPlan& links);

  /// Restores a node with a given seq (snapshot loading). Seqs must be ascending.
  void restore_node(Seq seq, Post p, Moment moment);
  void restore_edge(Seq a, Seq b, double weight);
  void restore_counters(Seq next_seq, Moment now);

 private:
  Node& mutable_node(Seq s) { return nodes_[s - base_seq_]; }
  EntityId intern(const std::string& e);
  Seq insert_node(Post p, Moment m, Seq seq);
  void attach_links(Seq s, const std::vector<Link>& links, std::vector<Seq>* changed);
  void kill_node(Seq s);
  void pop_dead_front();
  void score_candidates(std::uint32_t self_size, Moment self_moment, std::vector<Link>& out) const;

  SimilarityParams params_;
  WindowConfig window_;
  DecayTable decay_;
  Moment now_ = -1;

  std::deque<Node> nodes_;
  Seq base_seq_ = 0;
  Seq next_seq_ = 0;
  std::size_t alive_count_ = 0;
  std::size_t edge_count_ = 0;
  std::unordered_map<std::string, Seq> by_id_;
  std::map<Moment, std::vector<Seq>> by_moment_;

  std::unordered_map<std::string, EntityId> entity_ids_;
  std::vector<std::string> entity_names_;
  std::vector<std::vector<Seq>> postings_;

  // linkage-search scratch (single writer)
  mutable std::vector<std::uint32_t> hit_count_;
  mutable std::vector<Seq> touched_;
  mutable std::vector<std::uint32_t> k_hits_, k_sizes_;
  mutable std::vector<double> k_decays_, k_scores_;
  mutable std::uint64_t candidates_read_ = 0;
};

}  // namespace evtrack
