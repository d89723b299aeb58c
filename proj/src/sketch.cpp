#include "evtrack/sketch.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "evtrack/error.hpp"
#include "evtrack/kernels.hpp"

namespace evtrack {
namespace {

bool core_at(std::int64_t sum_fixed, Moment gap, const SimilarityParams& params,
             const DecayTable& decay) {
  return weight_from_fixed(sum_fixed, decay.at(gap)) >= core_threshold(params);
}

struct UnionFind {
  std::vector<std::uint32_t> parent;
  explicit UnionFind(std::size_t n) : parent(n) {
    std::iota(parent.begin(), parent.end(), 0u);
  }
  std::uint32_t find(std::uint32_t x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  }
  void unite(std::uint32_t a, std::uint32_t b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  }
};

void sort_unique(std::vector<Seq>& v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
}

}  // namespace

double post_weight(const PostNetwork& net, Seq p, Moment t) {
  const Node& n = net.node(p);
  if (t < n.moment) throw Error(ErrorCode::FutureQuery, "weight queried before the post's moment");
  return weight_from_fixed(n.sum_fixed, net.decay_table().at(t - n.moment));
}

NodeType classify_node(const PostNetwork& net, Seq p, Moment t) {
  if (post_weight(net, p, t) >= core_threshold(net.params())) return NodeType::Core;
  for (const Edge& e : net.neighbors(p)) {
    const Node& q = net.node(e.to);
    if (t >= q.moment && post_weight(net, e.to, t) >= core_threshold(net.params())) return NodeType::Border;
  }
  return NodeType::Noise;
}

Moment core_expiry(std::int64_t sum_fixed, Moment moment, const SimilarityParams& params,
                   const DecayTable& decay) {
  if (!core_at(sum_fixed, 0, params, decay)) {
    throw Error(ErrorCode::NotCore, "expiry requested for a non-core post");
  }
  constexpr double kCap = 1e15;
  const double ratio = from_fixed(sum_fixed) / params.delta1;
  double x = 0;
  switch (decay.kind()) {
    case DecayKind::None:
      return kNeverExpires;
    case DecayKind::Reciprocal:
      x = std::floor(ratio - 1.0);
      break;
    case DecayKind::Exponential:
      x = std::floor(std::log(ratio));
      break;
  }
  x = std::clamp(x, 0.0, kCap);
  auto gap = static_cast<Moment>(x);
  while (gap > 0 && !core_at(sum_fixed, gap, params, decay)) --gap;
  while (gap < static_cast<Moment>(kCap) && core_at(sum_fixed, gap + 1, params, decay)) ++gap;
  return moment + gap;
}

Moment core_expiry(const PostNetwork& net, Seq p) {
  const Node& n = net.node(p);
  return core_expiry(n.sum_fixed, n.moment, net.params(), net.decay_table());
}

std::vector<std::vector<Seq>> SketchGraph::components() const {
  std::unordered_map<std::uint32_t, std::vector<Seq>> groups;
  for (Seq c : cores) groups[label.at(c)].push_back(c);
  std::vector<std::vector<Seq>> out;
  out.reserve(groups.size());
  for (auto& [l, members] : groups) {
    std::sort(members.begin(), members.end());
    out.push_back(std::move(members));
  }
  std::sort(out.begin(), out.end());
  return out;
}

bool equivalent(const SketchGraph& a, const SketchGraph& b) {
  return a.cores == b.cores && a.core_edges == b.core_edges && a.components() == b.components();
}

SketchGraph rebuild_sketch(const PostNetwork& net, Moment t) {
  std::vector<Seq> seqs = net.seqs();
  const std::size_t n = seqs.size();
  std::vector<double> sums(n), decays(n), weights(n);
  std::vector<std::uint8_t> core(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Node& node = net.node(seqs[i]);
    if (t < node.moment) throw Error(ErrorCode::FutureQuery, "sketch requested before a post's moment");
    sums[i] = from_fixed(node.sum_fixed);
    decays[i] = net.decay_table().at(t - node.moment);
  }
  kernels::classify_weights(sums, decays, core_threshold(net.params()), weights, core);

  SketchGraph g;
  std::unordered_map<Seq, std::uint32_t> index;
  for (std::size_t i = 0; i < n; ++i) {
    if (core[i]) {
      index.emplace(seqs[i], static_cast<std::uint32_t>(g.cores.size()));
      g.cores.push_back(seqs[i]);
    }
  }
  UnionFind uf(g.cores.size());
  for (Seq c : g.cores) {
    for (const Edge& e : net.neighbors(c)) {
      if (e.to <= c || e.weight < net.params().eps1) continue;
      auto it = index.find(e.to);
      if (it == index.end()) continue;
      g.core_edges.emplace_back(c, e.to);
      uf.unite(index[c], it->second);
    }
  }
  std::sort(g.core_edges.begin(), g.core_edges.end());
  for (std::size_t i = 0; i < g.cores.size(); ++i) {
    g.label.emplace(g.cores[i], uf.find(static_cast<std::uint32_t>(i)));
  }
  return g;
}

Slot IncrementalSketch::allocate() {
  Slot s;
  if (!free_.empty()) {
    s = free_.back();
    free_.pop_back();
  } else {
    s = static_cast<Slot>(components_.size());
    components_.emplace_back();
  }
  components_[s].alive = true;
  components_[s].cores.clear();
  return s;
}

void IncrementalSketch::release(Slot s) {
  components_[s].alive = false;
  components_[s].cores.clear();
  pending_free_.push_back(s);
}

void IncrementalSketch::release_pending() {
  // Highest slot popped last so allocation prefers low slots.
  free_.insert(free_.end(), pending_free_.begin(), pending_free_.end());
  std::sort(free_.begin(), free_.end(), std::greater<>());
  pending_free_.clear();
}

std::vector<Slot> IncrementalSketch::live_slots() const {
  std::vector<Slot> out;
  for (Slot s = 0; s < components_.size(); ++s) {
    if (components_[s].alive) out.push_back(s);
  }
  return out;
}

void IncrementalSketch::schedule(const PostNetwork& net, TrackState& st, Seq s) {
  ++st.version;
  if (st.core) expiry_.push({core_expiry(net, s), s, st.version});
}

void IncrementalSketch::reset_from(PostNetwork& net, bool keep_labels) {
  components_.clear();
  free_.clear();
  pending_free_.clear();
  expiry_ = {};
  popped_.clear();
  num_core_ = 0;
  num_core_edges_ = 0;

  SketchGraph g = rebuild_sketch(net, net.now());
  std::unordered_set<Seq> cores(g.cores.begin(), g.cores.end());
  net.for_each_node([&](const Node& n) {
    TrackState& st = net.track_state(n.seq);
    st.core = cores.count(n.seq) > 0;
    if (!st.core) st.slot = kNoSlot;
  });
  num_core_ = g.cores.size();
  num_core_edges_ = g.core_edges.size();

  if (keep_labels) {
    for (Seq c : g.cores) {
      Slot s = net.track_state(c).slot;
      if (s == kNoSlot) throw Error(ErrorCode::CorruptSnapshot, "core post without a component");
      if (s >= components_.size()) components_.resize(s + 1);
      components_[s].alive = true;
      components_[s].cores.insert(c);
    }
    for (Slot s = static_cast<Slot>(components_.size()); s-- > 0;) {
      if (!components_[s].alive) free_.push_back(s);
    }
  } else {
    for (const auto& members : g.components()) {
      Slot s = allocate();
      for (Seq c : members) {
        components_[s].cores.insert(c);
        net.track_state(c).slot = s;
      }
    }
  }
  for (Seq c : g.cores) {
    TrackState& st = net.track_state(c);
    expiry_.push({core_expiry(net, c), c, st.version});
  }
}

DeltaSets IncrementalSketch::compute_delta_sets(const PostNetwork& net, const WindowDelta& delta,
                                                const LinkPlan& links) {
  const SimilarityParams& params = net.params();
  const DecayTable& decay = net.decay_table();
  const Moment cutoff = delta.to - net.window().window_len;
  auto in_overlap = [&](Seq q) { return net.alive(q) && net.node(q).moment > cutoff; };

  std::unordered_map<Seq, std::int64_t> removed, added;
  for (Seq o : delta.old_posts) {
    for (const Edge& e : net.neighbors(o)) {
      if (in_overlap(e.to)) removed[e.to] += to_fixed(e.weight);
    }
  }
  DeltaSets sets;
  std::vector<std::int64_t> new_sums(delta.new_posts.size(), 0);
  for (std::size_t j = 0; j < links.size(); ++j) {
    for (const Link& l : links[j]) {
      std::int64_t wf = to_fixed(l.weight);
      new_sums[j] += wf;
      if (l.to >= delta.first_new_seq) {
        new_sums[l.to - delta.first_new_seq] += wf;
      } else {
        added[l.to] += wf;
      }
    }
  }
  sets.new_core.resize(delta.new_posts.size());
  for (std::size_t j = 0; j < delta.new_posts.size(); ++j) {
    sets.new_core[j] = core_at(new_sums[j], delta.to - delta.new_moments[j], params, decay);
  }

  popped_.clear();
  while (!expiry_.empty() && expiry_.top().expiry < delta.to) {
    ExpiryEntry top = expiry_.top();
    expiry_.pop();
    if (!in_overlap(top.seq)) continue;
    const Node& n = net.node(top.seq);
    if (n.track.version != top.version || !n.track.core) continue;
    popped_.push_back(top.seq);
  }
  std::vector<Seq> candidates = popped_;
  for (const auto& [q, w] : removed) candidates.push_back(q);
  for (const auto& [q, w] : added) candidates.push_back(q);
  sort_unique(candidates);
  popped_ = candidates;

  for (Seq q : candidates) {
    const Node& n = net.node(q);
    const bool a = n.track.core;
    auto rit = removed.find(q);
    auto ait = added.find(q);
    const std::int64_t sum_b = n.sum_fixed - (rit == removed.end() ? 0 : rit->second);
    const std::int64_t sum_d = sum_b + (ait == added.end() ? 0 : ait->second);
    const bool d = core_at(sum_d, delta.to - n.moment, params, decay);
    if (a && !d) {
      const bool b = delta.from >= n.moment && core_at(sum_b, delta.from - n.moment, params, decay);
      (b ? sets.demoted_decay : sets.demoted_removal).push_back(q);
    } else if (!a && d) {
      sets.promoted.push_back(q);
    }
  }
  return sets;
}

std::vector<std::vector<Seq>> IncrementalSketch::split_search(const PostNetwork& net, Slot slot,
                                                              std::vector<Seq> seeds,
                                                              bool& has_remainder) {
  has_remainder = false;
  sort_unique(seeds);
  if (seeds.size() <= 1) {
    has_remainder = !seeds.empty();
    return {};
  }
  const double eps1 = net.params().eps1;
  const std::size_t k = seeds.size();
  UnionFind uf(k);
  std::vector<std::vector<Seq>> queue(k), members(k);
  std::vector<std::size_t> head(k, 0);
  std::vector<std::uint8_t> exhausted(k, 0);
  std::unordered_map<Seq, std::uint32_t> owner;
  for (std::uint32_t g = 0; g < k; ++g) {
    owner.emplace(seeds[g], g);
    queue[g].push_back(seeds[g]);
    members[g].push_back(seeds[g]);
  }
  std::size_t active = k;
  std::vector<std::vector<Seq>> fragments;

  auto absorb = [&](std::uint32_t into, std::uint32_t from) {
    std::vector<Seq> rest(queue[from].begin() + static_cast<std::ptrdiff_t>(head[from]),
                          queue[from].end());
    if (queue[into].size() - head[into] < rest.size()) {
      std::swap(queue[into], queue[from]);
      std::swap(head[into], head[from]);
      rest.assign(queue[from].begin() + static_cast<std::ptrdiff_t>(head[from]),
                  queue[from].end());
    }
    queue[into].insert(queue[into].end(), rest.begin(), rest.end());
    if (members[into].size() < members[from].size()) std::swap(members[into], members[from]);
    members[into].insert(members[into].end(), members[from].begin(), members[from].end());
    queue[from].clear();
    head[from] = 0;
    members[from].clear();
  };

  while (active > 1) {
    for (std::uint32_t g = 0; g < k && active > 1; ++g) {
      if (uf.find(g) != g || exhausted[g]) continue;
      if (head[g] == queue[g].size()) {
        exhausted[g] = 1;
        --active;
        fragments.push_back(std::move(members[g]));
        continue;
      }
      Seq u = queue[g][head[g]++];
      ++search_expansions_;
      for (const Edge& e : net.neighbors(u)) {
        if (e.weight < eps1) continue;
        const Node& v = net.node(e.to);
        if (!v.track.core || v.track.slot != slot) continue;
        auto [it, fresh] = owner.emplace(e.to, g);
        if (fresh) {
          queue[g].push_back(e.to);
          members[g].push_back(e.to);
          continue;
        }
        std::uint32_t other = uf.find(it->second);
        if (other == g) continue;
        uf.parent[other] = g;
        absorb(g, other);
        --active;
      }
    }
  }
  has_remainder = active == 1;
  for (auto& f : fragments) std::sort(f.begin(), f.end());
  return fragments;
}

ApplyResult IncrementalSketch::apply_delta(PostNetwork& net, const WindowDelta& delta,
                                           const LinkPlan& links, const DeltaSets& sets) {
  release_pending();
  const double eps1 = net.params().eps1;
  ApplyResult result;

  // Deletion phase.
  std::vector<Seq> del;
  for (Seq o : delta.old_posts) {
    if (net.node(o).track.core) del.push_back(o);
  }
  del.insert(del.end(), sets.demoted_removal.begin(), sets.demoted_removal.end());
  del.insert(del.end(), sets.demoted_decay.begin(), sets.demoted_decay.end());
  sort_unique(del);
  std::unordered_set<Seq> del_set(del.begin(), del.end());

  struct Group {
    Slot slot;
    std::vector<Seq> cores;
    std::vector<Seq> seeds;
    std::size_t core_before = 0;
  };
  std::vector<Group> groups;
  std::unordered_map<Slot, std::size_t> group_of;
  for (Seq d : del) {
    TrackState& st = net.track_state(d);
    auto [it, fresh] = group_of.emplace(st.slot, groups.size());
    if (fresh) groups.push_back({st.slot, {}, {}});
    groups[it->second].cores.push_back(d);
  }
  for (Group& g : groups) g.core_before = components_[g.slot].cores.size();
  for (Seq d : del) net.track_state(d).core = false;
  for (Seq d : del) {
    for (const Edge& e : net.neighbors(d)) {
      if (e.weight < eps1) continue;
      const TrackState& v = net.node(e.to).track;
      if (v.core) {
        --num_core_edges_;
        groups[group_of[net.node(d).track.slot]].seeds.push_back(e.to);
      } else if (e.to > d && del_set.count(e.to)) {
        --num_core_edges_;
      }
    }
  }
  for (Seq d : del) {
    Slot s = net.node(d).track.slot;
    components_[s].cores.erase(d);
    net.track_state(d).slot = kNoSlot;
  }
  num_core_ -= del.size();

  result.lost_edge = net.expire(delta);

  for (Group& g : groups) {
    BulkChange ch;
    ch.phase = BulkChange::Phase::Deletion;
    ch.bulk = g.cores;
    ch.slot = g.slot;
    ch.core_before.push_back(g.core_before);
    if (components_[g.slot].cores.empty()) {
      release(g.slot);
      ch.released.push_back(g.slot);
      result.changes.push_back(std::move(ch));
      continue;
    }
    bool has_remainder = false;
    auto fragments = split_search(net, g.slot, g.seeds, has_remainder);
    if (fragments.empty() || (fragments.size() == 1 && !has_remainder)) {
      ch.neighbors.push_back(g.slot);
      result.changes.push_back(std::move(ch));
      continue;
    }
    std::size_t keep = fragments.size();
    if (!has_remainder) {
      keep = 0;
      for (std::size_t i = 1; i < fragments.size(); ++i) {
        if (fragments[i].size() > fragments[keep].size()) keep = i;
      }
    }
    ch.neighbors.push_back(g.slot);
    for (std::size_t i = 0; i < fragments.size(); ++i) {
      if (i == keep) continue;
      Slot s = allocate();
      for (Seq c : fragments[i]) {
        components_[g.slot].cores.erase(c);
        components_[s].cores.insert(c);
        net.track_state(c).slot = s;
      }
      ch.neighbors.push_back(s);
      ch.created.push_back(s);
    }
    result.changes.push_back(std::move(ch));
  }

  // Addition phase.
  result.gained_edge = net.insert_planned(delta, links);
  std::vector<Seq> add = sets.promoted;
  for (std::size_t j = 0; j < sets.new_core.size(); ++j) {
    if (sets.new_core[j]) add.push_back(delta.first_new_seq + j);
  }
  sort_unique(add);
  std::unordered_set<Seq> add_set(add.begin(), add.end());
  for (Seq a : add) {
    TrackState& st = net.track_state(a);
    st.core = true;
    st.slot = kNoSlot;
  }
  for (Seq a : add) {
    for (const Edge& e : net.neighbors(a)) {
      if (e.weight < eps1 || !net.node(e.to).track.core) continue;
      if (!add_set.count(e.to) || e.to > a) ++num_core_edges_;
    }
  }
  num_core_ += add.size();

  std::unordered_set<Seq> seen;
  for (Seq start : add) {
    if (!seen.insert(start).second) continue;
    std::vector<Seq> bulk{start};
    for (std::size_t i = 0; i < bulk.size(); ++i) {
      for (const Edge& e : net.neighbors(bulk[i])) {
        if (e.weight >= eps1 && add_set.count(e.to) && seen.insert(e.to).second) {
          bulk.push_back(e.to);
        }
      }
    }
    std::sort(bulk.begin(), bulk.end());
    std::vector<Slot> nbr;
    for (Seq u : bulk) {
      for (const Edge& e : net.neighbors(u)) {
        const TrackState& v = net.node(e.to).track;
        if (e.weight >= eps1 && v.core && v.slot != kNoSlot) nbr.push_back(v.slot);
      }
    }
    std::sort(nbr.begin(), nbr.end());
    nbr.erase(std::unique(nbr.begin(), nbr.end()), nbr.end());

    BulkChange ch;
    ch.phase = BulkChange::Phase::Addition;
    ch.neighbors = nbr;
    for (Slot s : nbr) ch.core_before.push_back(components_[s].cores.size());
    if (nbr.empty()) {
      ch.slot = allocate();
      ch.created.push_back(ch.slot);
    } else {
      ch.slot = nbr.front();
      for (Slot s : nbr) {
        if (components_[s].cores.size() > components_[ch.slot].cores.size()) ch.slot = s;
      }
      for (Slot s : nbr) {
        if (s == ch.slot) continue;
        for (Seq c : components_[s].cores) {
          components_[ch.slot].cores.insert(c);
          net.track_state(c).slot = ch.slot;
        }
        release(s);
        ch.released.push_back(s);
      }
    }
    for (Seq u : bulk) {
      components_[ch.slot].cores.insert(u);
      net.track_state(u).slot = ch.slot;
    }
    ch.bulk = std::move(bulk);
    result.changes.push_back(std::move(ch));
  }

  // Expiry bookkeeping for every post whose sum or status changed.
  result.status_changed = sets.promoted;
  result.status_changed.insert(result.status_changed.end(), sets.demoted_removal.begin(),
                               sets.demoted_removal.end());
  result.status_changed.insert(result.status_changed.end(), sets.demoted_decay.begin(),
                               sets.demoted_decay.end());
  sort_unique(result.status_changed);
  result.added_cores = add;

  std::vector<Seq> touched = popped_;
  touched.insert(touched.end(), result.lost_edge.begin(), result.lost_edge.end());
  touched.insert(touched.end(), result.gained_edge.begin(), result.gained_edge.end());
  touched.insert(touched.end(), add.begin(), add.end());
  sort_unique(touched);
  for (Seq s : touched) {
    if (net.alive(s)) schedule(net, net.track_state(s), s);
  }
  popped_.clear();
  return result;
}

SketchGraph IncrementalSketch::export_graph(const PostNetwork& net) const {
  SketchGraph g;
  net.for_each_node([&](const Node& n) {
    if (!n.track.core) return;
    g.cores.push_back(n.seq);
    g.label.emplace(n.seq, n.track.slot);
    for (const Edge& e : n.edges) {
      if (e.to > n.seq && e.weight >= net.params().eps1 && net.node(e.to).track.core) {
        g.core_edges.emplace_back(n.seq, e.to);
      }
    }
  });
  std::sort(g.core_edges.begin(), g.core_edges.end());
  return g;
}

SketchStats IncrementalSketch::stats(const PostNetwork& net) const {
  SketchStats s;
  s.t = net.now();
  s.num_core = num_core_;
  s.num_core_edges = num_core_edges_;
  s.num_components = live_slots().size();
  return s;
}

}  // namespace evtrack
