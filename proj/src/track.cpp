#include "evtrack/track.hpp"

#include <algorithm>
#include <array>

#include "evtrack/annotate.hpp"
#include "evtrack/error.hpp"

namespace evtrack {
namespace {

constexpr std::array<std::string_view, 6> kOpNames = {"birth", "death", "grow",
                                                      "shrink", "merge", "split"};

void sort_unique(std::vector<Seq>& v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
}

}  // namespace

bool classify_event(const Cluster& c, std::size_t phi) { return is_event_size(c.size(), phi); }

std::string_view to_string(OpKind kind) noexcept {
  return kOpNames[static_cast<std::size_t>(kind)];
}

OpKind parse_op_kind(std::string_view name) {
  for (std::size_t i = 0; i < kOpNames.size(); ++i) {
    if (kOpNames[i] == name) return static_cast<OpKind>(i);
  }
  throw Error(ErrorCode::MalformedRecord, "unknown op kind: " + std::string(name));
}

Cluster gen_cluster(const PostNetwork& net, const SketchGraph& sketch,
                    const std::vector<Seq>& component) {
  Cluster c;
  c.core = component;
  std::sort(c.core.begin(), c.core.end());
  for (Seq p : c.core) {
    for (const Edge& e : net.neighbors(p)) {
      if (!sketch.label.count(e.to)) c.border.push_back(e.to);
    }
  }
  sort_unique(c.border);
  return c;
}

std::vector<Cluster> gen_clusters(const PostNetwork& net, const SketchGraph& sketch) {
  std::vector<Cluster> out;
  for (const auto& comp : sketch.components()) out.push_back(gen_cluster(net, sketch, comp));
  return out;
}

ClusterFamily to_family(const PostNetwork& net, const std::vector<Cluster>& clusters) {
  ClusterFamily fam;
  fam.reserve(clusters.size());
  for (const Cluster& c : clusters) {
    ClusterShape s;
    for (Seq p : c.core) s.core.push_back(net.node(p).post.id);
    for (Seq p : c.border) s.border.push_back(net.node(p).post.id);
    std::sort(s.core.begin(), s.core.end());
    std::sort(s.border.begin(), s.border.end());
    fam.push_back(std::move(s));
  }
  std::sort(fam.begin(), fam.end());
  return fam;
}

Engine::Engine(SimilarityParams params, WindowConfig window, TrackConfig config)
    : net_(params, window), config_(config) {
  if (config_.phi < 1) throw Error(ErrorCode::InvalidConfig, "phi must be >= 1");
}

Engine::SlotData& Engine::slot(Slot s) {
  if (s >= slots_.size()) slots_.resize(s + 1);
  return slots_[s];
}

std::size_t Engine::slot_size(Slot s) const {
  return sketch_.members(s).size() + slots_[s].border.size();
}

void Engine::touch(Slot s, std::size_t core_count) {
  const SlotData& d = slots_[s];
  start_size_.try_emplace(d.id, core_count + d.border.size());
}

std::string Engine::name_of(Seq p) const {
  if (net_.alive(p)) return net_.node(p).post.id;
  auto it = departed_.find(p);
  return it == departed_.end() ? std::string() : it->second;
}

void Engine::note(Slot s, Seq p, int change) {
  Journal& j = journal_[slots_[s].id];
  j.delta[p] += change;
  if (!j.names.count(p)) j.names.emplace(p, name_of(p));
}

void Engine::recompute_borders(std::vector<Seq> dirty) {
  sort_unique(dirty);
  std::vector<Slot> want;
  for (Seq p : dirty) {
    if (!net_.alive(p)) continue;
    TrackState& st = net_.track_state(p);
    want.clear();
    if (!st.core) {
      for (const Edge& e : net_.neighbors(p)) {
        const TrackState& v = net_.node(e.to).track;
        if (v.core) want.push_back(v.slot);
      }
      std::sort(want.begin(), want.end());
      want.erase(std::unique(want.begin(), want.end()), want.end());
    }
    if (want == st.border_in) continue;
    for (Slot s : st.border_in) {
      if (std::binary_search(want.begin(), want.end(), s) || s >= slots_.size() ||
          !slots_[s].alive) {
        continue;
      }
      touch(s, sketch_.members(s).size());
      slots_[s].border.erase(p);
      note(s, p, -1);
    }
    for (Slot s : want) {
      if (std::binary_search(st.border_in.begin(), st.border_in.end(), s) && slots_[s].border.count(p)) {
        continue;
      }
      touch(s, sketch_.members(s).size());
      slots_[s].border.insert(p);
      note(s, p, +1);
    }
    st.border_in = want;
  }
}

void Engine::align_to(Moment first_moment) {
  if (started_) throw Error(ErrorCode::InconsistentState, "engine already started");
  net_.set_now(first_moment - net_.window().step);
}

TickResult Engine::tick(std::vector<Post> incoming) {
  started_ = true;
  start_size_.clear();
  consumed_size_.clear();
  created_.clear();
  journal_.clear();
  departed_.clear();

  WindowDelta delta = net_.advance_window(std::move(incoming));
  LinkPlan plan = net_.plan_links(delta);
  DeltaSets sets = sketch_.compute_delta_sets(net_, delta, plan);
  const Moment t = delta.to;

  for (Seq o : delta.old_posts) {
    departed_.emplace(o, net_.node(o).post.id);
    TrackState& st = net_.track_state(o);
    if (st.core) continue;
    for (Slot s : st.border_in) {
      touch(s, sketch_.members(s).size());
      slots_[s].border.erase(o);
      note(s, o, -1);
    }
    st.border_in.clear();
  }

  ApplyResult applied = sketch_.apply_delta(net_, delta, plan, sets);

  std::vector<EvolutionOp> ops;
  std::vector<Seq> dirty;
  auto names = [this](const std::vector<Seq>& seqs) {
    std::vector<std::string> out;
    out.reserve(seqs.size());
    for (Seq s : seqs) out.push_back(name_of(s));
    std::sort(out.begin(), out.end());
    return out;
  };
  auto retire = [&](Slot s, std::size_t size) {
    SlotData& d = slots_[s];
    consumed_size_[d.id] = size;
    dirty.insert(dirty.end(), d.border.begin(), d.border.end());
    d.alive = false;
    d.border.clear();
  };
  auto open = [&](Slot s, std::vector<ClusterId> lineage) {
    SlotData& d = slot(s);
    d.alive = true;
    d.id = fresh_id();
    d.born_at = t;
    d.lineage = std::move(lineage);
    created_.insert(d.id);
    return d.id;
  };

  for (const BulkChange& ch : applied.changes) {
    if (ch.phase == BulkChange::Phase::Deletion) {
      const Slot x = ch.slot;
      touch(x, ch.core_before.front());
      const ClusterId old = slots_[x].id;
      if (ch.neighbors.empty()) {
        EvolutionOp op;
        op.kind = OpKind::Death;
        op.ids = {old};
        op.payload = names(ch.bulk);
        ops.push_back(std::move(op));
        retire(x, 0);
      } else if (ch.neighbors.size() == 1) {
        for (Seq d : ch.bulk) note(x, d, -1);
      } else {
        EvolutionOp op;
        op.kind = OpKind::Split;
        op.ids = {old};
        op.lineage = {old};
        op.payload = names(ch.bulk);
        consumed_size_[old] = 0;
        dirty.insert(dirty.end(), slots_[x].border.begin(), slots_[x].border.end());
        for (Slot n : ch.neighbors) {
          if (n != x) slot(n).border.clear();
          op.result_ids.push_back(open(n, {old}));
        }
        ops.push_back(std::move(op));
      }
    } else {
      for (std::size_t i = 0; i < ch.neighbors.size(); ++i) {
        touch(ch.neighbors[i], ch.core_before[i]);
      }
      if (ch.neighbors.empty()) {
        EvolutionOp op;
        op.kind = OpKind::Birth;
        slot(ch.slot).border.clear();
        op.result_ids = {open(ch.slot, {})};
        op.payload = names(ch.bulk);
        ops.push_back(std::move(op));
      } else if (ch.neighbors.size() == 1) {
        for (Seq u : ch.bulk) note(ch.slot, u, +1);
      } else {
        EvolutionOp op;
        op.kind = OpKind::Merge;
        for (std::size_t i = 0; i < ch.neighbors.size(); ++i) {
          Slot n = ch.neighbors[i];
          op.ids.push_back(slots_[n].id);
          if (n != ch.slot) {
            retire(n, ch.core_before[i] + slots_[n].border.size());
          } else {
            consumed_size_[slots_[n].id] = ch.core_before[i] + slots_[n].border.size();
            dirty.insert(dirty.end(), slots_[n].border.begin(), slots_[n].border.end());
          }
        }
        std::sort(op.ids.begin(), op.ids.end());
        op.lineage = op.ids;
        op.result_ids = {open(ch.slot, op.ids)};
        op.payload = names(ch.bulk);
        ops.push_back(std::move(op));
      }
    }
  }

  for (std::size_t j = 0; j < delta.new_posts.size(); ++j) dirty.push_back(delta.first_new_seq + j);
  dirty.insert(dirty.end(), applied.lost_edge.begin(), applied.lost_edge.end());
  dirty.insert(dirty.end(), applied.gained_edge.begin(), applied.gained_edge.end());
  for (Seq p : applied.status_changed) {
    dirty.push_back(p);
    for (const Edge& e : net_.neighbors(p)) dirty.push_back(e.to);
  }
  recompute_borders(std::move(dirty));

  auto final_size = [&](ClusterId id, Slot hint) -> std::size_t {
    if (hint != kNoSlot && slots_[hint].alive && slots_[hint].id == id) return slot_size(hint);
    auto it = consumed_size_.find(id);
    return it == consumed_size_.end() ? 0 : it->second;
  };
  std::unordered_map<ClusterId, Slot> slot_of;
  for (Slot s = 0; s < slots_.size(); ++s) {
    if (slots_[s].alive) slot_of.emplace(slots_[s].id, s);
  }
  auto lookup = [&](ClusterId id) {
    auto it = slot_of.find(id);
    return it == slot_of.end() ? kNoSlot : it->second;
  };

  const std::size_t phi = config_.phi;
  for (EvolutionOp& op : ops) {
    op.t = t;
    for (ClusterId id : op.ids) {
      auto it = start_size_.find(id);
      std::size_t s = it == start_size_.end() ? 0 : it->second;
      op.size_before += s;
      op.is_event_before = op.is_event_before || is_event_size(s, phi);
    }
    for (ClusterId id : op.result_ids) {
      std::size_t s = final_size(id, lookup(id));
      op.size_after += s;
      op.is_event_after = op.is_event_after || is_event_size(s, phi);
    }
  }

  for (auto& [id, j] : journal_) {
    if (created_.count(id)) continue;
    Slot s = lookup(id);
    if (s == kNoSlot) continue;
    std::vector<std::string> added, removed;
    for (const auto& [p, c] : j.delta) {
      if (c > 0) added.push_back(j.names[p]);
      if (c < 0) removed.push_back(j.names[p]);
    }
    const std::size_t before = start_size_.count(id) ? start_size_[id] : slot_size(s);
    std::size_t mid = before - removed.size();
    if (!removed.empty()) {
      EvolutionOp op;
      op.kind = OpKind::Shrink;
      op.t = t;
      op.ids = op.result_ids = {id};
      op.size_before = before;
      op.size_after = mid;
      op.is_event_before = is_event_size(before, phi);
      op.is_event_after = is_event_size(mid, phi);
      std::sort(removed.begin(), removed.end());
      op.payload = std::move(removed);
      ops.push_back(std::move(op));
    }
    if (!added.empty()) {
      EvolutionOp op;
      op.kind = OpKind::Grow;
      op.t = t;
      op.ids = op.result_ids = {id};
      op.size_before = mid;
      op.size_after = slot_size(s);
      op.is_event_before = is_event_size(mid, phi);
      op.is_event_after = is_event_size(op.size_after, phi);
      std::sort(added.begin(), added.end());
      op.payload = std::move(added);
      ops.push_back(std::move(op));
    }
  }

  if (config_.annotate) {
    for (EvolutionOp& op : ops) {
      if (op.result_ids.size() != 1 || !op.is_event_after) continue;
      Slot s = lookup(op.result_ids.front());
      if (s == kNoSlot) continue;
      op.annotation = top_k(annotate(make_cluster(s), net_, t), config_.top_k);
    }
  }

  TickResult result;
  TickReport& r = result.report;
  r.t = t;
  r.posts_in = delta.new_posts.size();
  r.posts_out = delta.old_posts.size();
  r.window_posts = net_.size();
  r.num_core = sketch_.num_core();
  r.num_core_edges = sketch_.num_core_edges();
  for (const auto& [id, s] : slot_of) {
    ++r.num_clusters;
    if (is_event_size(slot_size(s), phi)) ++r.num_events;
  }
  r.delta = std::move(sets);
  result.ops = std::move(ops);
  return result;
}

Cluster Engine::make_cluster(Slot s) const {
  const SlotData& d = slots_[s];
  Cluster c;
  c.id = d.id;
  c.born_at = d.born_at;
  c.lineage = d.lineage;
  c.core.assign(sketch_.members(s).begin(), sketch_.members(s).end());
  c.border.assign(d.border.begin(), d.border.end());
  std::sort(c.core.begin(), c.core.end());
  std::sort(c.border.begin(), c.border.end());
  return c;
}

std::vector<Cluster> Engine::clusters() const {
  std::vector<Cluster> out;
  for (Slot s = 0; s < slots_.size(); ++s) {
    if (slots_[s].alive) out.push_back(make_cluster(s));
  }
  std::sort(out.begin(), out.end(), [](const Cluster& a, const Cluster& b) { return a.id < b.id; });
  return out;
}

std::optional<Cluster> Engine::cluster(ClusterId id) const {
  for (Slot s = 0; s < slots_.size(); ++s) {
    if (slots_[s].alive && slots_[s].id == id) return make_cluster(s);
  }
  return std::nullopt;
}

std::vector<ClusterId> Engine::neighboring_clusters(const std::vector<Seq>& posts) const {
  std::unordered_set<Seq> bulk(posts.begin(), posts.end());
  std::vector<ClusterId> out;
  for (Seq p : posts) {
    for (const Edge& e : net_.neighbors(p)) {
      if (e.weight < net_.params().eps1 || bulk.count(e.to)) continue;
      const TrackState& v = net_.node(e.to).track;
      if (v.core && v.slot != kNoSlot) out.push_back(slots_[v.slot].id);
    }
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

void Engine::check_invariants() const {
  auto fail = [](const std::string& what) { throw Error(ErrorCode::InconsistentState, what); };
  std::size_t cores = 0;
  net_.for_each_node([&](const Node& n) {
    const TrackState& st = n.track;
    if (st.core) {
      ++cores;
      if (!sketch_.slot_alive(st.slot) || !sketch_.members(st.slot).count(n.seq)) {
        fail("core post " + n.post.id + " not in its component");
      }
      if (!st.border_in.empty()) fail("core post " + n.post.id + " listed as border");
    } else if (st.slot != kNoSlot) {
      fail("non-core post " + n.post.id + " carries a component");
    }
    for (Slot s : st.border_in) {
      if (s >= slots_.size() || !slots_[s].alive || !slots_[s].border.count(n.seq)) {
        fail("border record of " + n.post.id + " is stale");
      }
    }
  });
  if (cores != sketch_.num_core()) fail("core counter drift");
  for (Slot s = 0; s < slots_.size(); ++s) {
    if (slots_[s].alive != sketch_.slot_alive(s)) fail("slot liveness mismatch");
    if (!slots_[s].alive) continue;
    for (Seq b : slots_[s].border) {
      if (!net_.alive(b)) fail("dead border post");
      const auto& bi = net_.node(b).track.border_in;
      if (!std::binary_search(bi.begin(), bi.end(), s)) fail("border set not mirrored");
    }
  }
}

std::vector<Engine::SlotRecord> Engine::slot_records() const {
  std::vector<SlotRecord> out;
  for (Slot s = 0; s < slots_.size(); ++s) {
    if (slots_[s].alive) out.push_back({s, slots_[s].id, slots_[s].born_at, slots_[s].lineage});
  }
  return out;
}

void Engine::restore(const std::vector<SlotRecord>& records, ClusterId next_id) {
  sketch_.reset_from(net_, true);
  slots_.clear();
  for (const SlotRecord& r : records) {
    SlotData& d = slot(r.slot);
    if (d.alive) throw Error(ErrorCode::CorruptSnapshot, "duplicate cluster slot");
    d.alive = true;
    d.id = r.id;
    d.born_at = r.born_at;
    d.lineage = r.lineage;
  }
  for (Slot s : sketch_.live_slots()) {
    if (s >= slots_.size() || !slots_[s].alive) {
      throw Error(ErrorCode::CorruptSnapshot, "component without a cluster record");
    }
  }
  for (Slot s = 0; s < slots_.size(); ++s) {
    if (slots_[s].alive && !sketch_.slot_alive(s)) {
      throw Error(ErrorCode::CorruptSnapshot, "cluster record without core posts");
    }
  }
  next_id_ = next_id;
  started_ = true;
  std::vector<Seq> all = net_.seqs();
  for (Seq p : all) net_.track_state(p).border_in.clear();
  recompute_borders(std::move(all));
  start_size_.clear();
  journal_.clear();
}

}  // namespace evtrack
