#include "evtrack/eval.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include <json.hpp>

#include "evtrack/error.hpp"
#include "evtrack/kernels.hpp"
#include "evtrack/sketch.hpp"

namespace evtrack {
namespace {

using json = nlohmann::json;

struct DisjointSets {
  std::vector<std::size_t> parent;
  explicit DisjointSets(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  std::size_t find(std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  }
  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  }
};

OracleResult finish_oracle(const std::vector<std::string>& ids,
                           const std::vector<std::vector<std::pair<std::size_t, double>>>& adj,
                           const std::vector<std::uint8_t>& core, double eps1, std::size_t phi,
                           std::size_t num_edges) {
  OracleResult r;
  r.num_edges = num_edges;
  const std::size_t n = ids.size();
  DisjointSets ds(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!core[i]) continue;
    r.cores.push_back(ids[i]);
    for (const auto& [j, w] : adj[i]) {
      if (j > i && core[j] && w >= eps1) {
        ds.unite(i, j);
        auto [a, b] = std::minmax(ids[i], ids[j]);
        r.core_edges.emplace_back(a, b);
      }
    }
  }
  std::sort(r.cores.begin(), r.cores.end());
  std::sort(r.core_edges.begin(), r.core_edges.end());
  std::map<std::size_t, std::pair<std::set<std::size_t>, std::set<std::size_t>>> groups;
  for (std::size_t i = 0; i < n; ++i) {
    if (!core[i]) continue;
    auto& g = groups[ds.find(i)];
    g.first.insert(i);
    for (const auto& [j, w] : adj[i]) {
      if (!core[j]) g.second.insert(j);
    }
  }
  for (const auto& [root, g] : groups) {
    ClusterShape s;
    for (std::size_t i : g.first) s.core.push_back(ids[i]);
    for (std::size_t i : g.second) s.border.push_back(ids[i]);
    std::sort(s.core.begin(), s.core.end());
    std::sort(s.border.begin(), s.border.end());
    if (is_event_size(s.core.size() + s.border.size(), phi)) ++r.num_events;
    r.family.push_back(std::move(s));
  }
  std::sort(r.family.begin(), r.family.end());
  return r;
}

OracleResult oracle_brute(const std::vector<Post>& posts, Moment t, const SimilarityParams& params,
                          std::int64_t tick_unit, std::size_t phi) {
  const std::size_t n = posts.size();
  std::unordered_map<std::string, std::uint32_t> intern;
  std::vector<std::vector<std::uint32_t>> sets(n);
  std::vector<Moment> moments(n);
  std::vector<std::string> ids(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (const auto& e : posts[i].entities) {
      sets[i].push_back(intern.try_emplace(e, static_cast<std::uint32_t>(intern.size())).first->second);
    }
    std::sort(sets[i].begin(), sets[i].end());
    moments[i] = to_moment(posts[i].timestamp, tick_unit);
    if (moments[i] > t) throw Error(ErrorCode::FutureQuery, "oracle post after evaluation moment");
    ids[i] = posts[i].id;
  }
  std::vector<std::vector<std::pair<std::size_t, double>>> adj(n);
  std::vector<std::int64_t> sums(n, 0);
  std::size_t edges = 0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      std::uint32_t hits = kernels::intersect_count(sets[i], sets[j]);
      if (hits == 0) continue;
      Moment gap = moments[i] > moments[j] ? moments[i] - moments[j] : moments[j] - moments[i];
      double w = fading_score(hits, static_cast<std::uint32_t>(sets[i].size()),
                              static_cast<std::uint32_t>(sets[j].size()),
                              decay(params.decay, static_cast<double>(gap)));
      if (w < params.eps0) continue;
      adj[i].emplace_back(j, w);
      adj[j].emplace_back(i, w);
      sums[i] += to_fixed(w);
      sums[j] += to_fixed(w);
      ++edges;
    }
  }
  std::vector<std::uint8_t> core(n);
  for (std::size_t i = 0; i < n; ++i) {
    double d = decay(params.decay, static_cast<double>(t - moments[i]));
    core[i] = weight_from_fixed(sums[i], d) >= core_threshold(params);
  }
  return finish_oracle(ids, adj, core, params.eps1, phi, edges);
}

OracleResult oracle_indexed(const std::vector<Post>& posts, Moment t,
                            const SimilarityParams& params, std::int64_t tick_unit,
                            std::size_t phi) {
  WindowConfig wc;
  Moment oldest = t;
  for (const Post& p : posts) oldest = std::min(oldest, to_moment(p.timestamp, tick_unit));
  wc.window_len = std::max<Moment>(3, t - oldest + 2);
  wc.tick_unit = tick_unit;
  PostNetwork net(params, wc);
  for (const Post& p : posts) net.add_post(p);
  net.set_now(t);
  SketchGraph g = rebuild_sketch(net, t);
  OracleResult r;
  r.num_edges = net.edge_count();
  for (Seq c : g.cores) r.cores.push_back(net.node(c).post.id);
  std::sort(r.cores.begin(), r.cores.end());
  for (auto [a, b] : g.core_edges) {
    auto [x, y] = std::minmax(net.node(a).post.id, net.node(b).post.id);
    r.core_edges.emplace_back(x, y);
  }
  std::sort(r.core_edges.begin(), r.core_edges.end());
  auto clusters = gen_clusters(net, g);
  for (const Cluster& c : clusters) {
    if (classify_event(c, phi)) ++r.num_events;
  }
  r.family = to_family(net, clusters);
  return r;
}

std::vector<std::string> hashtags(const std::string& text) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < text.size()) {
    if (text[i] != '#') {
      ++i;
      continue;
    }
    std::size_t j = i + 1;
    std::string tag;
    while (j < text.size()) {
      auto c = static_cast<unsigned char>(text[j]);
      if (!(std::isalnum(c) || c == '_' || c >= 0x80)) break;
      tag.push_back(static_cast<char>(std::tolower(c)));
      ++j;
    }
    if (!tag.empty()) out.push_back(tag);
    i = j;
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

}  // namespace

OracleResult oracle_tick(const std::vector<Post>& posts, Moment t, const SimilarityParams& params,
                         std::int64_t tick_unit, std::size_t phi, OracleMode mode) {
  if (mode == OracleMode::Indexed) return oracle_indexed(posts, t, params, tick_unit, phi);
  return oracle_brute(posts, t, params, tick_unit, phi);
}

std::vector<PeakDetection> baseline_peaks(const std::vector<Post>& stream, PeakMode mode,
                                          Moment history, std::int64_t tick_unit,
                                          std::size_t min_count) {
  std::map<Moment, std::map<std::string, std::size_t>> counts;
  for (const Post& p : stream) {
    auto& bucket = counts[to_moment(p.timestamp, tick_unit)];
    if (mode == PeakMode::Hashtags) {
      for (const auto& tag : hashtags(p.text)) ++bucket[tag];
    } else {
      for (const auto& e : p.entities) ++bucket[e];
    }
  }
  std::vector<PeakDetection> out;
  if (counts.empty()) return out;
  const Moment first = counts.begin()->first;
  std::map<std::string, std::map<Moment, std::size_t>> series;
  for (const auto& [m, bucket] : counts) {
    for (const auto& [term, c] : bucket) series[term][m] = c;
  }
  for (const auto& [m, bucket] : counts) {
    const Moment lo = std::max(first, m - history);
    const Moment len = m - lo;
    if (len <= 0) continue;
    for (const auto& [term, c] : bucket) {
      if (c < min_count) continue;
      const auto& s = series[term];
      double sum = 0, sq = 0;
      for (auto it = s.lower_bound(lo); it != s.end() && it->first < m; ++it) {
        sum += static_cast<double>(it->second);
        sq += static_cast<double>(it->second) * static_cast<double>(it->second);
      }
      const double mean = sum / static_cast<double>(len);
      const double var = std::max(0.0, sq / static_cast<double>(len) - mean * mean);
      if (static_cast<double>(c) > mean + 2.0 * std::sqrt(var)) out.push_back({m, term, c});
    }
  }
  return out;
}

BaselineMatcher::BaselineMatcher(double kappa) : kappa_(kappa) {
  if (!(kappa > 0.0 && kappa <= 1.0)) throw Error(ErrorCode::InvalidConfig, "kappa must be in (0, 1]");
}

std::vector<EvolutionOp> BaselineMatcher::step(const Snapshot& snapshot) {
  const Moment t = snapshot.t;
  std::vector<EvolutionOp> ops;
  std::vector<std::vector<std::string>> cur;
  for (const auto& s : snapshot.family) {
    std::vector<std::string> m = s.core;
    m.insert(m.end(), s.border.begin(), s.border.end());
    std::sort(m.begin(), m.end());
    m.erase(std::unique(m.begin(), m.end()), m.end());
    cur.push_back(std::move(m));
  }
  std::vector<ClusterId> cur_ids(cur.size(), 0);

  struct Candidate {
    double j;
    std::size_t a, b;
  };
  std::vector<Candidate> cands;
  std::unordered_map<std::string, std::vector<std::size_t>> owner;
  for (std::size_t b = 0; b < cur.size(); ++b) {
    for (const auto& p : cur[b]) owner[p].push_back(b);
  }
  for (std::size_t a = 0; a < prev_.size(); ++a) {
    std::map<std::size_t, std::size_t> inter;
    for (const auto& p : prev_[a]) {
      if (auto it = owner.find(p); it != owner.end()) {
        for (std::size_t b : it->second) ++inter[b];
      }
    }
    for (auto [b, c] : inter) {
      double j = static_cast<double>(c) / static_cast<double>(prev_[a].size() + cur[b].size() - c);
      if (j >= kappa_) cands.push_back({j, a, b});
    }
  }
  std::sort(cands.begin(), cands.end(), [](const Candidate& x, const Candidate& y) {
    if (x.j != y.j) return x.j > y.j;
    return std::tie(x.a, x.b) < std::tie(y.a, y.b);
  });
  std::vector<std::uint8_t> used_a(prev_.size(), 0), used_b(cur.size(), 0);
  for (const Candidate& c : cands) {
    if (used_a[c.a] || used_b[c.b]) continue;
    used_a[c.a] = used_b[c.b] = 1;
    cur_ids[c.b] = prev_ids_[c.a];
    if (prev_[c.a] == cur[c.b]) continue;
    EvolutionOp op;
    op.t = t;
    op.ids = op.result_ids = {prev_ids_[c.a]};
    op.size_before = prev_[c.a].size();
    op.size_after = cur[c.b].size();
    const bool grow = prev_[c.a].size() <= cur[c.b].size();
    op.kind = grow ? OpKind::Grow : OpKind::Shrink;
    const auto& from = grow ? cur[c.b] : prev_[c.a];
    const auto& minus = grow ? prev_[c.a] : cur[c.b];
    std::set_difference(from.begin(), from.end(), minus.begin(), minus.end(),
                        std::back_inserter(op.payload));
    ops.push_back(std::move(op));
  }
  for (std::size_t a = 0; a < prev_.size(); ++a) {
    if (used_a[a]) continue;
    EvolutionOp op;
    op.kind = OpKind::Death;
    op.t = t;
    op.ids = {prev_ids_[a]};
    op.size_before = prev_[a].size();
    op.payload = prev_[a];
    ops.push_back(std::move(op));
  }
  for (std::size_t b = 0; b < cur.size(); ++b) {
    if (used_b[b]) continue;
    cur_ids[b] = next_++;
    EvolutionOp op;
    op.kind = OpKind::Birth;
    op.t = t;
    op.result_ids = {cur_ids[b]};
    op.size_after = cur[b].size();
    op.payload = cur[b];
    ops.push_back(std::move(op));
  }
  prev_ = std::move(cur);
  prev_ids_ = std::move(cur_ids);
  return ops;
}

std::vector<EvolutionOp> baseline_match(const std::vector<Snapshot>& snapshots, double kappa) {
  BaselineMatcher matcher(kappa);
  std::vector<EvolutionOp> ops;
  for (const Snapshot& s : snapshots) {
    auto step = matcher.step(s);
    ops.insert(ops.end(), std::make_move_iterator(step.begin()), std::make_move_iterator(step.end()));
  }
  return ops;
}

// ---------------------------------------------------------------- scripts

namespace {

Directive::Kind parse_directive_kind(const std::string& s) {
  if (s == "merge") return Directive::Kind::Merge;
  if (s == "split") return Directive::Kind::Split;
  if (s == "die") return Directive::Kind::Die;
  throw Error(ErrorCode::InvalidScript, "unknown directive: " + s);
}

std::string_view directive_name(Directive::Kind k) {
  switch (k) {
    case Directive::Kind::Merge: return "merge";
    case Directive::Kind::Split: return "split";
    case Directive::Kind::Die: return "die";
  }
  return "?";
}

struct Source {
  Moment first = 0;
  Moment last = 0;  // inclusive
  bool active(Moment lo, Moment hi) const { return first <= hi && last >= lo && first <= last; }
};

struct Plan {
  std::vector<std::string> names;  // planted clusters
  std::vector<Source> planted;
  struct Bridge {
    std::size_t a, b;
    std::string into;
    Source span;
  };
  std::vector<Bridge> bridges;
};

Plan plan_script(const ScenarioScript& s) {
  if (s.moments < 1) throw Error(ErrorCode::InvalidScript, "moments must be >= 1");
  if (s.window_len < 3) throw Error(ErrorCode::InvalidScript, "window_len must be >= 3");
  if (s.noise_rate < 0.0 || s.noise_rate > 1.0) throw Error(ErrorCode::InvalidScript, "noise_rate must be in [0, 1]");
  if (s.noise_vocabulary < 8) throw Error(ErrorCode::InvalidScript, "noise_vocabulary too small");
  Plan plan;
  std::unordered_map<std::string, std::size_t> index;
  for (const auto& c : s.clusters) {
    if (c.name.empty() || !index.emplace(c.name, plan.names.size()).second) {
      throw Error(ErrorCode::InvalidScript, "duplicate or empty cluster name: " + c.name);
    }
    if (c.start < 0 || c.start >= s.moments) throw Error(ErrorCode::InvalidScript, "cluster start outside the stream: " + c.name);
    if (c.posts_per_moment < 2) throw Error(ErrorCode::InvalidScript, "posts_per_moment must be >= 2: " + c.name);
    plan.names.push_back(c.name);
    plan.planted.push_back({c.start, s.moments - 1});
  }
  std::unordered_map<std::string, std::size_t> merged;  // into -> bridge index
  std::vector<std::ptrdiff_t> in_merge(plan.names.size(), -1);
  std::vector<Directive> ds = s.directives;
  std::stable_sort(ds.begin(), ds.end(), [](const Directive& x, const Directive& y) { return x.at < y.at; });
  auto planted = [&](const std::string& n) -> std::size_t {
    auto it = index.find(n);
    if (it == index.end()) throw Error(ErrorCode::InvalidScript, "unknown cluster: " + n);
    return it->second;
  };
  for (const Directive& d : ds) {
    if (d.at < 1 || d.at >= s.moments) throw Error(ErrorCode::InvalidScript, "directive moment outside the stream");
    const Moment last = d.at - s.window_len;
    switch (d.kind) {
      case Directive::Kind::Merge: {
        std::size_t a = planted(d.a), b = planted(d.b);
        if (a == b) throw Error(ErrorCode::InvalidScript, "merge of a cluster with itself");
        if (d.into.empty() || index.count(d.into) || merged.count(d.into)) {
          throw Error(ErrorCode::InvalidScript, "merge needs a fresh 'into' name");
        }
        for (std::size_t x : {a, b}) {
          if (in_merge[x] >= 0) throw Error(ErrorCode::InvalidScript, "cluster already merged: " + plan.names[x]);
          if (plan.planted[x].first >= d.at || plan.planted[x].last < d.at) {
            throw Error(ErrorCode::InvalidScript, "merge needs both clusters posting before and at the merge: " + plan.names[x]);
          }
          in_merge[x] = static_cast<std::ptrdiff_t>(plan.bridges.size());
        }
        merged.emplace(d.into, plan.bridges.size());
        plan.bridges.push_back({a, b, d.into, {d.at, s.moments - 1}});
        break;
      }
      case Directive::Kind::Split: {
        auto it = merged.find(d.a);
        if (it == merged.end()) throw Error(ErrorCode::InvalidScript, "split target is not a merge result: " + d.a);
        auto& br = plan.bridges[it->second];
        if (in_merge[br.a] != static_cast<std::ptrdiff_t>(it->second)) {
          throw Error(ErrorCode::InvalidScript, "merge already dissolved: " + d.a);
        }
        if (last < br.span.first) throw Error(ErrorCode::InvalidScript, "split must come at least window_len after the merge");
        for (std::size_t x : {br.a, br.b}) {
          if (plan.planted[x].last <= last) throw Error(ErrorCode::InvalidScript, "split parts must keep posting");
          in_merge[x] = -1;
        }
        br.span.last = last;
        break;
      }
      case Directive::Kind::Die: {
        if (auto it = merged.find(d.a); it != merged.end()) {
          auto& br = plan.bridges[it->second];
          if (in_merge[br.a] != static_cast<std::ptrdiff_t>(it->second)) {
            throw Error(ErrorCode::InvalidScript, "merge already dissolved: " + d.a);
          }
          if (last < br.span.first) throw Error(ErrorCode::InvalidScript, "die too soon after merge");
          br.span.last = last;
          for (std::size_t x : {br.a, br.b}) {
            plan.planted[x].last = last;
            in_merge[x] = -2;
          }
          break;
        }
        std::size_t a = planted(d.a);
        if (in_merge[a] >= 0) throw Error(ErrorCode::InvalidScript, "die on a merged part: " + d.a);
        if (in_merge[a] == -2 || plan.planted[a].last < s.moments - 1) {
          throw Error(ErrorCode::InvalidScript, "cluster already dead: " + d.a);
        }
        if (last < plan.planted[a].first) throw Error(ErrorCode::InvalidScript, "die before the cluster is born: " + d.a);
        plan.planted[a].last = last;
        in_merge[a] = -2;
        break;
      }
    }
  }
  return plan;
}

/// Components of planted clusters present in the window ending at t.
std::vector<std::vector<std::size_t>> truth_components(const Plan& plan,
                                                       const std::vector<std::vector<Moment>>& posted,
                                                       Moment t, Moment len) {
  const Moment lo = t - len + 1;
  auto present = [&](std::size_t x) {
    auto it = std::lower_bound(posted[x].begin(), posted[x].end(), lo);
    return it != posted[x].end() && *it <= t;
  };
  DisjointSets ds(plan.names.size());
  for (const auto& br : plan.bridges) {
    if (br.span.active(lo, t) && present(br.a) && present(br.b)) ds.unite(br.a, br.b);
  }
  std::map<std::size_t, std::vector<std::size_t>> groups;
  for (std::size_t x = 0; x < plan.names.size(); ++x) {
    if (present(x)) groups[ds.find(x)].push_back(x);
  }
  std::vector<std::vector<std::size_t>> out;
  for (auto& [r, g] : groups) out.push_back(std::move(g));
  return out;
}

std::string entity(std::size_t cluster, const char* kind, std::size_t i) {
  return "c" + std::to_string(cluster) + kind + std::to_string(i);
}

std::vector<std::string> topic_template(std::size_t cluster, std::size_t filler) {
  return {entity(cluster, "t", 0), entity(cluster, "t", 1), entity(cluster, "t", 2),
          entity(cluster, "f", filler)};
}

Post make_post(std::string id, Moment m, std::vector<std::string> entities, std::uint64_t author,
               bool hashtag) {
  std::sort(entities.begin(), entities.end());
  entities.erase(std::unique(entities.begin(), entities.end()), entities.end());
  Post p;
  p.id = std::move(id);
  p.timestamp = m;
  p.author = "u" + std::to_string(author);
  for (std::size_t i = 0; i < entities.size(); ++i) {
    if (i) p.text += ' ';
    if (hashtag && i == 0) p.text += '#';
    p.text += entities[i];
  }
  p.entities = std::move(entities);
  return p;
}

std::vector<std::string> noise_entities(std::mt19937_64& rng, std::size_t vocab, std::size_t k) {
  std::vector<std::string> out;
  while (out.size() < k) {
    std::string w = "n" + std::to_string(rng() % vocab);
    if (std::find(out.begin(), out.end(), w) == out.end()) out.push_back(std::move(w));
  }
  return out;
}

double unit(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1p-53;
}

}  // namespace

ScenarioScript parse_script(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidScript, e.what());
  }
  try {
    ScenarioScript s;
    s.seed = j.value("seed", s.seed);
    s.moments = j.value("moments", s.moments);
    s.window_len = j.value("window_len", s.window_len);
    s.noise_per_moment = j.value("noise_per_moment", s.noise_per_moment);
    s.noise_rate = j.value("noise_rate", s.noise_rate);
    s.bridges_per_moment = j.value("bridges_per_moment", s.bridges_per_moment);
    s.noise_vocabulary = j.value("noise_vocabulary", s.noise_vocabulary);
    for (const auto& c : j.value("clusters", json::array())) {
      PlantedCluster pc;
      pc.name = c.at("name").get<std::string>();
      pc.start = c.value("start", pc.start);
      pc.posts_per_moment = c.value("posts_per_moment", pc.posts_per_moment);
      s.clusters.push_back(std::move(pc));
    }
    for (const auto& d : j.value("directives", json::array())) {
      Directive dir;
      dir.kind = parse_directive_kind(d.at("op").get<std::string>());
      dir.a = d.at("a").get<std::string>();
      dir.b = d.value("b", std::string());
      dir.into = d.value("into", std::string());
      dir.at = d.at("at").get<Moment>();
      s.directives.push_back(std::move(dir));
    }
    plan_script(s);
    return s;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidScript, e.what());
  }
}

std::string script_to_json(const ScenarioScript& s) {
  json j;
  j["seed"] = s.seed;
  j["moments"] = s.moments;
  j["window_len"] = s.window_len;
  j["noise_per_moment"] = s.noise_per_moment;
  j["noise_rate"] = s.noise_rate;
  j["bridges_per_moment"] = s.bridges_per_moment;
  j["noise_vocabulary"] = s.noise_vocabulary;
  j["clusters"] = json::array();
  for (const auto& c : s.clusters) {
    j["clusters"].push_back({{"name", c.name}, {"start", c.start}, {"posts_per_moment", c.posts_per_moment}});
  }
  j["directives"] = json::array();
  for (const auto& d : s.directives) {
    json x = {{"op", directive_name(d.kind)}, {"a", d.a}, {"at", d.at}};
    if (d.kind == Directive::Kind::Merge) {
      x["b"] = d.b;
      x["into"] = d.into;
    }
    j["directives"].push_back(std::move(x));
  }
  return j.dump(2);
}

GeneratedStream generate(const ScenarioScript& script) {
  const Plan plan = plan_script(script);
  std::mt19937_64 rng(script.seed);
  GeneratedStream out;
  std::vector<std::vector<Moment>> posted(plan.names.size());

  for (Moment m = 0; m < script.moments; ++m) {
    std::size_t k = 0;
    auto next_id = [&] { return "m" + std::to_string(m) + "-" + std::to_string(k++); };
    auto add_noise = [&] {
      out.posts.push_back(make_post(next_id(), m, noise_entities(rng, script.noise_vocabulary, 4),
                                    rng() % 1000, false));
    };
    for (std::size_t c = 0; c < plan.names.size(); ++c) {
      const Source& src = plan.planted[c];
      if (!src.active(m, m)) continue;
      const std::size_t n = script.clusters[c].posts_per_moment;
      bool any = false;
      for (std::size_t i = 0; i < n; ++i) {
        bool anchor = i < 2 && script.noise_rate < 1.0;
        if (!anchor && unit(rng) < script.noise_rate) {
          add_noise();
          continue;
        }
        out.posts.push_back(make_post(next_id(), m, topic_template(c, i % 2), rng() % 1000, true));
        any = true;
      }
      if (any) posted[c].push_back(m);
    }
    for (const auto& br : plan.bridges) {
      if (!br.span.active(m, m)) continue;
      for (std::size_t i = 0; i < script.bridges_per_moment; ++i) {
        auto e = topic_template(br.a, 0);
        auto f = topic_template(br.b, 0);
        e.insert(e.end(), f.begin(), f.end());
        out.posts.push_back(make_post(next_id(), m, std::move(e), rng() % 1000, true));
      }
    }
    for (std::size_t i = 0; i < script.noise_per_moment; ++i) add_noise();
  }

  std::vector<std::vector<std::size_t>> prev;
  for (Moment t = 0; t < script.moments; ++t) {
    auto cur = truth_components(plan, posted, t, script.window_len);
    auto has_post = [&](const std::vector<std::size_t>& comp, Moment m) {
      if (m < 0) return false;
      for (std::size_t x : comp) {
        if (std::binary_search(posted[x].begin(), posted[x].end(), m)) return true;
      }
      for (const auto& br : plan.bridges) {
        bool inside = std::find(comp.begin(), comp.end(), br.a) != comp.end();
        if (inside && br.span.active(m, m) && script.bridges_per_moment > 0) return true;
      }
      return false;
    };
    auto overlap = [](const std::vector<std::size_t>& x, const std::vector<std::size_t>& y) {
      for (std::size_t a : x) {
        if (std::find(y.begin(), y.end(), a) != y.end()) return true;
      }
      return false;
    };
    auto emit = [&](OpKind kind) {
      EvolutionOp op;
      op.kind = kind;
      op.t = t;
      out.truth.push_back(std::move(op));
    };
    for (const auto& p : prev) {
      std::size_t succ = 0;
      for (const auto& c : cur) succ += overlap(p, c);
      if (succ == 0) emit(OpKind::Death);
      if (succ >= 2) emit(OpKind::Split);
    }
    for (const auto& c : cur) {
      std::size_t pred = 0;
      const std::vector<std::size_t>* only = nullptr;
      for (const auto& p : prev) {
        if (overlap(p, c)) {
          ++pred;
          only = &p;
        }
      }
      if (pred == 0) {
        emit(OpKind::Birth);
      } else if (pred >= 2) {
        emit(OpKind::Merge);
      } else {
        std::size_t fan = 0;
        for (const auto& c2 : cur) fan += overlap(*only, c2);
        if (fan != 1) continue;
        if (has_post(*only, t - script.window_len)) emit(OpKind::Shrink);
        if (has_post(c, t)) emit(OpKind::Grow);
      }
    }
    prev = std::move(cur);
  }
  return out;
}

LadderWindow density_ladder_window(std::uint64_t seed) {
  // (shared core, private petals) -> pairwise Jaccard core / (core + 2 petals)
  constexpr std::pair<int, int> kLevels[] = {{2, 2}, {3, 2}, {2, 1}, {3, 1}, {4, 1}, {5, 1}, {8, 1}};
  LadderWindow w;
  w.eval_moment = 19;
  w.window_len = 25;
  std::mt19937_64 rng(seed);
  std::size_t serial = 0;
  std::size_t cluster = 0;
  for (std::size_t level = 0; level < std::size(kLevels); ++level) {
    const auto [shared, petals] = kLevels[level];
    // Posts at moment m, evaluated at 19, decay by (20 - m); with n = 21 - m
    // posts each weight is exactly the pairwise Jaccard. Denser levels sit
    // earlier and so hold more posts.
    const Moment m = static_cast<Moment>(std::size(kLevels) - 1 - level);
    const std::size_t n = static_cast<std::size_t>(w.eval_moment - m + 2);
    for (int copy = 0; copy < 2; ++copy, ++cluster) {
      for (std::size_t i = 0; i < n; ++i) {
        std::vector<std::string> e;
        for (int s = 0; s < shared; ++s) e.push_back("l" + std::to_string(cluster) + "s" + std::to_string(s));
        for (int p = 0; p < petals; ++p) {
          e.push_back("l" + std::to_string(cluster) + "p" + std::to_string(i) + "x" + std::to_string(p));
        }
        w.posts.push_back(make_post("d" + std::to_string(serial++), m, std::move(e), rng() % 1000, false));
      }
    }
  }
  for (std::size_t i = 0; i < 60; ++i) {
    Moment m = static_cast<Moment>(rng() % 12);
    w.posts.push_back(make_post("d" + std::to_string(serial++), m, noise_entities(rng, 2000, 3),
                                rng() % 1000, false));
  }
  std::stable_sort(w.posts.begin(), w.posts.end(),
                   [](const Post& a, const Post& b) { return a.timestamp < b.timestamp; });
  return w;
}

std::vector<Post> bench_stream(std::uint64_t seed, Moment moments, std::size_t clusters,
                               std::size_t per_cluster, std::size_t noise) {
  std::mt19937_64 rng(seed);
  std::vector<Post> out;
  out.reserve(static_cast<std::size_t>(moments) * (clusters * per_cluster + noise));
  const std::size_t vocab = std::max<std::size_t>(20 * noise, 1000);
  for (Moment m = 0; m < moments; ++m) {
    std::size_t k = 0;
    for (std::size_t c = 0; c < clusters; ++c) {
      for (std::size_t i = 0; i < per_cluster; ++i) {
        out.push_back(make_post("b" + std::to_string(m) + "-" + std::to_string(k++), m,
                                topic_template(c, i % 2), rng() % 100000, false));
      }
    }
    for (std::size_t i = 0; i < noise; ++i) {
      out.push_back(make_post("b" + std::to_string(m) + "-" + std::to_string(k++), m,
                              noise_entities(rng, vocab, 4), rng() % 100000, false));
    }
  }
  return out;
}

// -------------------------------------------------- primitive op counting

namespace {

struct Labels {
  std::unordered_map<Seq, std::uint32_t> core_label;
};

Labels label_network(const PostNetwork& net, Moment t) {
  Labels l;
  l.core_label = rebuild_sketch(net, t).label;
  return l;
}

std::size_t distinct_labels(const PostNetwork& net, const Labels& labels, Seq p, double min_weight) {
  std::set<std::uint32_t> seen;
  for (const Edge& e : net.neighbors(p)) {
    if (e.weight < min_weight) continue;
    auto it = labels.core_label.find(e.to);
    if (it != labels.core_label.end()) seen.insert(it->second);
  }
  return seen.size();
}

std::size_t core_cost(std::size_t n) { return n >= 2 ? 1 + n : 1; }

}  // namespace

std::size_t primitive_op_count(const std::vector<Post>& initial,
                               const std::vector<PostChange>& changes,
                               const SimilarityParams& params, Moment t) {
  WindowConfig wc;
  Moment oldest = t;
  for (const Post& p : initial) oldest = std::min(oldest, p.timestamp);
  for (const PostChange& ch : changes) {
    if (ch.kind == PostChange::Kind::Add) oldest = std::min(oldest, ch.post.timestamp);
  }
  wc.window_len = std::max<Moment>(3, t - oldest + 2);
  PostNetwork net(params, wc);
  for (const Post& p : initial) net.add_post(p);
  net.set_now(t);
  std::size_t ops = 0;
  for (const PostChange& ch : changes) {
    if (ch.kind == PostChange::Kind::Add) {
      Labels before = label_network(net, t);
      net.add_post(ch.post);
      Seq s = *net.find(ch.post.id);
      Labels after = label_network(net, t);
      if (after.core_label.count(s)) {
        // Neighbor clusters as they were before the post arrived.
        std::set<std::uint32_t> nc;
        for (const Edge& e : net.neighbors(s)) {
          if (e.weight < params.eps1) continue;
          if (auto it = before.core_label.find(e.to); it != before.core_label.end()) nc.insert(it->second);
        }
        ops += core_cost(nc.size());
      } else {
        ops += distinct_labels(net, after, s, 0.0);
      }
    } else {
      auto found = net.find(ch.post.id);
      if (!found) throw Error(ErrorCode::UnknownPost, ch.post.id);
      Seq s = *found;
      Labels before = label_network(net, t);
      if (!before.core_label.count(s)) {
        ops += distinct_labels(net, before, s, 0.0);
        net.remove_post(ch.post.id);
        continue;
      }
      std::vector<Seq> core_nbrs;
      for (const Edge& e : net.neighbors(s)) {
        if (e.weight >= params.eps1 && before.core_label.count(e.to)) core_nbrs.push_back(e.to);
      }
      net.remove_post(ch.post.id);
      Labels after = label_network(net, t);
      std::set<std::uint32_t> nc;
      for (Seq q : core_nbrs) {
        if (auto it = after.core_label.find(q); it != after.core_label.end()) nc.insert(it->second);
      }
      ops += core_cost(nc.size());
    }
  }
  return ops;
}

std::vector<PostChange> deletions_first(std::vector<PostChange> changes) {
  std::stable_partition(changes.begin(), changes.end(),
                        [](const PostChange& c) { return c.kind == PostChange::Kind::Remove; });
  return changes;
}

}  // namespace evtrack
