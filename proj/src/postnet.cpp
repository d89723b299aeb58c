#include "evtrack/postnet.hpp"

#include <algorithm>

#include "evtrack/error.hpp"
#include "evtrack/kernels.hpp"

namespace evtrack {

void WindowConfig::validate() const {
  if (window_len <= 2) throw Error(ErrorCode::InvalidConfig, "window_len must be > 2");
  if (step < 1 || step >= window_len) {
    throw Error(ErrorCode::InvalidConfig, "step must satisfy 1 <= step < window_len");
  }
  if (tick_unit < 1) throw Error(ErrorCode::InvalidConfig, "tick_unit must be >= 1");
}

PostNetwork::PostNetwork(SimilarityParams params, WindowConfig window)
    : params_(params), window_(window), decay_(params.decay, static_cast<std::size_t>(window.window_len) + 2) {
  params_.validate();
  window_.validate();
}

bool PostNetwork::contains(std::string_view id) const { return find(id).has_value(); }

std::optional<Seq> PostNetwork::find(std::string_view id) const {
  auto it = by_id_.find(std::string(id));
  if (it == by_id_.end()) return std::nullopt;
  return it->second;
}

std::optional<double> PostNetwork::edge_weight(Seq a, Seq b) const {
  if (!alive(a) || !alive(b)) return std::nullopt;
  const auto& edges = node(a).edges;
  auto it = std::lower_bound(edges.begin(), edges.end(), b,
                             [](const Edge& e, Seq s) { return e.to < s; });
  if (it == edges.end() || it->to != b) return std::nullopt;
  return it->weight;
}

std::vector<Seq> PostNetwork::seqs() const {
  std::vector<Seq> out;
  out.reserve(alive_count_);
  for_each_node([&](const Node& n) { out.push_back(n.seq); });
  return out;
}

std::vector<Seq> PostNetwork::seqs_through(Moment m) const {
  std::vector<Seq> out;
  for (auto it = by_moment_.begin(); it != by_moment_.end() && it->first <= m; ++it) {
    out.insert(out.end(), it->second.begin(), it->second.end());
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::optional<EntityId> PostNetwork::entity_id(std::string_view e) const {
  auto it = entity_ids_.find(std::string(e));
  if (it == entity_ids_.end()) return std::nullopt;
  return it->second;
}

EntityId PostNetwork::intern(const std::string& e) {
  auto [it, inserted] = entity_ids_.try_emplace(e, static_cast<EntityId>(entity_names_.size()));
  if (inserted) {
    entity_names_.push_back(e);
    postings_.emplace_back();
  }
  return it->second;
}

void PostNetwork::score_candidates(std::uint32_t self_size, Moment self_moment,
                                   std::vector<Link>& out) const {
  const std::size_t n = touched_.size();
  k_hits_.resize(n);
  k_sizes_.resize(n);
  k_decays_.resize(n);
  k_scores_.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Node& q = node(touched_[i]);
    auto& h = hit_count_[touched_[i] - base_seq_];
    k_hits_[i] = h;
    h = 0;
    k_sizes_[i] = static_cast<std::uint32_t>(q.entity_ids.size());
    Moment gap = self_moment > q.moment ? self_moment - q.moment : q.moment - self_moment;
    k_decays_[i] = decay_.at(gap);
  }
  kernels::fading_scores(k_hits_, k_sizes_, k_decays_, self_size, k_scores_);
  for (std::size_t i = 0; i < n; ++i) {
    if (k_scores_[i] >= params_.eps0) out.push_back({touched_[i], k_scores_[i]});
  }
}

std::vector<Link> PostNetwork::linkage_search(const Post& p, Moment skip_through) const {
  touched_.clear();
  if (hit_count_.size() < next_seq_ - base_seq_) hit_count_.resize(next_seq_ - base_seq_, 0);
  for (const auto& e : p.entities) {
    auto id = entity_id(e);
    if (!id) continue;
    for (Seq q : postings_[*id]) {
      if (node(q).moment <= skip_through) continue;
      if (hit_count_[q - base_seq_]++ == 0) touched_.push_back(q);
    }
  }
  candidates_read_ += touched_.size();
  std::sort(touched_.begin(), touched_.end());
  std::vector<Link> out;
  score_candidates(static_cast<std::uint32_t>(p.entities.size()), moment_of(p), out);
  return out;
}

Seq PostNetwork::insert_node(Post p, Moment m, Seq seq) {
  if (nodes_.empty()) base_seq_ = seq;
  while (base_seq_ + nodes_.size() < seq) {
    Node tomb;
    tomb.seq = base_seq_ + nodes_.size();
    nodes_.push_back(std::move(tomb));
  }
  if (base_seq_ + nodes_.size() != seq) {
    throw Error(ErrorCode::InconsistentState, "seq out of order");
  }
  Node n;
  n.moment = m;
  n.seq = seq;
  n.alive = true;
  n.entity_ids.reserve(p.entities.size());
  for (const auto& e : p.entities) n.entity_ids.push_back(intern(e));
  std::sort(n.entity_ids.begin(), n.entity_ids.end());
  for (EntityId e : n.entity_ids) postings_[e].push_back(seq);
  by_id_.emplace(p.id, seq);
  by_moment_[m].push_back(seq);
  n.post = std::move(p);
  nodes_.push_back(std::move(n));
  next_seq_ = std::max(next_seq_, seq + 1);
  ++alive_count_;
  return seq;
}

void PostNetwork::attach_links(Seq s, const std::vector<Link>& links, std::vector<Seq>* changed) {
  Node& self = mutable_node(s);
  self.edges = links;
  for (const Link& l : links) {
    std::int64_t wf = to_fixed(l.weight);
    self.sum_fixed += wf;
    Node& q = mutable_node(l.to);
    q.edges.push_back({s, l.weight});
    q.sum_fixed += wf;
    if (changed) changed->push_back(l.to);
  }
  edge_count_ += links.size();
}

std::vector<Seq> PostNetwork::add_post(Post p) {
  if (contains(p.id)) throw Error(ErrorCode::DuplicatePost, p.id);
  Moment m = moment_of(p);
  auto links = linkage_search(p);
  Seq s = insert_node(std::move(p), m, next_seq_);
  std::vector<Seq> changed;
  attach_links(s, links, &changed);
  return changed;
}

void PostNetwork::kill_node(Seq s) {
  Node& n = mutable_node(s);
  for (EntityId e : n.entity_ids) {
    auto& list = postings_[e];
    auto it = std::lower_bound(list.begin(), list.end(), s);
    if (it != list.end() && *it == s) list.erase(it);
  }
  by_id_.erase(n.post.id);
  if (auto it = by_moment_.find(n.moment); it != by_moment_.end()) {
    std::erase(it->second, s);
    if (it->second.empty()) by_moment_.erase(it);
  }
  n.alive = false;
  n.post = Post{};
  n.entity_ids = {};
  n.edges = {};
  n.track = TrackState{};
  n.sum_fixed = 0;
  --alive_count_;
}

void PostNetwork::pop_dead_front() {
  while (!nodes_.empty() && !nodes_.front().alive) {
    nodes_.pop_front();
    ++base_seq_;
  }
  if (nodes_.empty()) base_seq_ = next_seq_;
}

std::vector<Seq> PostNetwork::remove_post(std::string_view id) {
  auto found = find(id);
  if (!found) throw Error(ErrorCode::UnknownPost, std::string(id));
  Seq s = *found;
  std::vector<Seq> changed;
  for (const Edge& e : node(s).edges) {
    Node& q = mutable_node(e.to);
    auto it = std::lower_bound(q.edges.begin(), q.edges.end(), s,
                               [](const Edge& x, Seq v) { return x.to < v; });
    if (it != q.edges.end() && it->to == s) q.edges.erase(it);
    q.sum_fixed -= to_fixed(e.weight);
    changed.push_back(e.to);
  }
  edge_count_ -= node(s).edges.size();
  kill_node(s);
  pop_dead_front();
  return changed;
}

WindowDelta PostNetwork::advance_window(std::vector<Post> incoming) {
  WindowDelta d;
  d.from = now_;
  d.to = now_ + window_.step;
  std::unordered_map<std::string, int> batch_ids;
  for (const Post& p : incoming) {
    Moment m = moment_of(p);
    if (m <= d.from) {
      throw Error(ErrorCode::StaleTimestamp,
                  "post " + p.id + " maps to moment " + std::to_string(m) +
                      " <= now " + std::to_string(d.from));
    }
    if (m > d.to) {
      throw Error(ErrorCode::InconsistentDelta,
                  "post " + p.id + " maps beyond the tick horizon " + std::to_string(d.to));
    }
    if (contains(p.id) || !batch_ids.emplace(p.id, 0).second) {
      throw Error(ErrorCode::DuplicatePost, p.id);
    }
  }
  std::stable_sort(incoming.begin(), incoming.end(), [this](const Post& a, const Post& b) {
    return moment_of(a) < moment_of(b);
  });
  d.new_moments.reserve(incoming.size());
  for (const Post& p : incoming) d.new_moments.push_back(moment_of(p));
  d.new_posts = std::move(incoming);
  d.old_posts = seqs_through(d.to - window_.window_len);
  d.first_new_seq = next_seq_;
  now_ = d.to;
  return d;
}

LinkPlan PostNetwork::plan_links(const WindowDelta& delta) const {
  const Moment cutoff = delta.to - window_.window_len;
  LinkPlan plan(delta.new_posts.size());
  std::unordered_map<std::string, std::vector<std::uint32_t>> staged;
  std::vector<std::uint32_t> staged_hits(delta.new_posts.size(), 0);
  std::vector<std::uint32_t> staged_touched;
  for (std::size_t j = 0; j < delta.new_posts.size(); ++j) {
    const Post& p = delta.new_posts[j];
    auto links = linkage_search(p, cutoff);
    staged_touched.clear();
    for (const auto& e : p.entities) {
      auto it = staged.find(e);
      if (it == staged.end()) continue;
      for (std::uint32_t k : it->second) {
        if (staged_hits[k]++ == 0) staged_touched.push_back(k);
      }
    }
    std::sort(staged_touched.begin(), staged_touched.end());
    for (std::uint32_t k : staged_touched) {
      Moment gap = delta.new_moments[j] - delta.new_moments[k];
      double w = fading_score(staged_hits[k], static_cast<std::uint32_t>(p.entities.size()),
                              static_cast<std::uint32_t>(delta.new_posts[k].entities.size()),
                              decay_.at(gap < 0 ? -gap : gap));
      staged_hits[k] = 0;
      if (w >= params_.eps0) links.push_back({delta.first_new_seq + k, w});
    }
    for (const auto& e : p.entities) staged[e].push_back(static_cast<std::uint32_t>(j));
    plan[j] = std::move(links);
  }
  return plan;
}

std::vector<Seq> PostNetwork::expire(const WindowDelta& delta) {
  for (Seq o : delta.old_posts) {
    if (!alive(o)) throw Error(ErrorCode::InconsistentDelta, "expiring post is not in the network");
    mutable_node(o).alive = false;
  }
  std::vector<Seq> changed;
  std::size_t removed_edges = 0;
  for (Seq o : delta.old_posts) {
    for (const Edge& e : node(o).edges) {
      if (alive(e.to)) {
        mutable_node(e.to).sum_fixed -= to_fixed(e.weight);
        changed.push_back(e.to);
        ++removed_edges;
      } else if (e.to > o) {
        ++removed_edges;
      }
    }
  }
  std::sort(changed.begin(), changed.end());
  changed.erase(std::unique(changed.begin(), changed.end()), changed.end());
  for (Seq q : changed) {
    std::erase_if(mutable_node(q).edges, [this](const Edge& e) { return !alive(e.to); });
  }
  edge_count_ -= removed_edges;

  std::vector<EntityId> touched_entities;
  for (Seq o : delta.old_posts) {
    Node& n = mutable_node(o);
    touched_entities.insert(touched_entities.end(), n.entity_ids.begin(), n.entity_ids.end());
    by_id_.erase(n.post.id);
    if (auto it = by_moment_.find(n.moment); it != by_moment_.end()) {
      std::erase(it->second, o);
      if (it->second.empty()) by_moment_.erase(it);
    }
    n.post = Post{};
    n.entity_ids = {};
    n.edges = {};
    n.track = TrackState{};
    n.sum_fixed = 0;
    --alive_count_;
  }
  std::sort(touched_entities.begin(), touched_entities.end());
  touched_entities.erase(std::unique(touched_entities.begin(), touched_entities.end()),
                         touched_entities.end());
  for (EntityId e : touched_entities) {
    std::erase_if(postings_[e], [this](Seq s) { return !alive(s); });
  }
  pop_dead_front();
  return changed;
}

std::vector<Seq> PostNetwork::insert_planned(const WindowDelta& delta, const LinkPlan& links) {
  if (links.size() != delta.new_posts.size() || next_seq_ != delta.first_new_seq) {
    throw Error(ErrorCode::InconsistentDelta, "link plan does not match the delta");
  }
  std::vector<Seq> changed;
  for (std::size_t j = 0; j < delta.new_posts.size(); ++j) {
    Seq s = insert_node(delta.new_posts[j], delta.new_moments[j], delta.first_new_seq + j);
    attach_links(s, links[j], &changed);
  }
  std::erase_if(changed, [&](Seq q) { return q >= delta.first_new_seq; });
  std::sort(changed.begin(), changed.end());
  changed.erase(std::unique(changed.begin(), changed.end()), changed.end());
  return changed;
}

void PostNetwork::restore_node(Seq seq, Post p, Moment moment) {
  if (by_id_.count(p.id)) throw Error(ErrorCode::CorruptSnapshot, "duplicate post " + p.id);
  if (!nodes_.empty() && seq < base_seq_ + nodes_.size()) {
    throw Error(ErrorCode::CorruptSnapshot, "node seqs not ascending");
  }
  insert_node(std::move(p), moment, seq);
}

void PostNetwork::restore_edge(Seq a, Seq b, double weight) {
  if (!alive(a) || !alive(b) || a == b) throw Error(ErrorCode::CorruptSnapshot, "dangling edge");
  std::int64_t wf = to_fixed(weight);
  for (auto [x, y] : {std::pair{a, b}, std::pair{b, a}}) {
    Node& n = mutable_node(x);
    auto it = std::lower_bound(n.edges.begin(), n.edges.end(), y,
                               [](const Edge& e, Seq v) { return e.to < v; });
    if (it != n.edges.end() && it->to == y) throw Error(ErrorCode::CorruptSnapshot, "duplicate edge");
    n.edges.insert(it, {y, weight});
    n.sum_fixed += wf;
  }
  ++edge_count_;
}

void PostNetwork::restore_counters(Seq next_seq, Moment now) {
  if (next_seq < next_seq_) throw Error(ErrorCode::CorruptSnapshot, "next_seq behind stored nodes");
  next_seq_ = next_seq;
  now_ = now;
  pop_dead_front();
}

}  // namespace evtrack
