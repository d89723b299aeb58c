// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>

#include "evtrack/annotate.hpp"
#include "evtrack/eval.hpp"
#include "evtrack/records.hpp"
#include "evtrack/runner.hpp"
#include "evtrack/snapshot.hpp"
#include "evtrack/track.hpp"
#include "fixtures.hpp"
#include "support.hpp"

using namespace evtrack;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

class Checker {
 public:
  void expect(bool ok, const std::string& what) {
    if (!ok && failures_.size() < 5) failures_.push_back(what);
    if (!ok) ++failed_;
  }
  bool ok() const { return failed_ == 0; }
  std::string failures() const {
    std::string s;
    for (const auto& f : failures_) s += (s.empty() ? "" : "; ") + f;
    if (failed_ > failures_.size()) s += "; ...";
    return s;
  }

 private:
  std::vector<std::string> failures_;
  std::size_t failed_ = 0;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::set<std::string> core_names(const Engine& e) {
  std::set<std::string> out;
  for (Seq s : e.sketch().export_graph(e.network()).cores) out.insert(e.network().node(s).post.id);
  return out;
}

std::set<std::string> names(const PostNetwork& net, const std::vector<Seq>& s) {
  std::set<std::string> out;
  for (Seq x : s) out.insert(net.node(x).post.id);
  return out;
}

std::vector<Post> flatten(const std::vector<std::vector<Post>>& stream) {
  std::vector<Post> out;
  for (const auto& b : stream) out.insert(out.end(), b.begin(), b.end());
  return out;
}

// ---------------------------------------------------------------- 1 and 2

struct RandomRuns {
  Outcome equivalence;
  Outcome structure;
};

RandomRuns random_runs() {
  auto t0 = std::chrono::steady_clock::now();
  Checker eq, st;
  constexpr int kStreams = 24;
  constexpr Moment kMoments = 40;
  std::size_t ticks = 0, max_window = 0, max_clusters = 0;
  std::set<DecayKind> decays;
  for (int s = 1; s <= kStreams; ++s) {
    SimilarityParams sp{.decay = static_cast<DecayKind>(s % 3)};
    WindowConfig wc{.window_len = 6 + s % 4, .step = 1 + s % 2};
    decays.insert(sp.decay);
    Engine e(sp, wc, {.phi = 5, .annotate = true, .top_k = 5});
    auto stream = testing::random_stream(static_cast<std::uint64_t>(s) * 7919, kMoments);
    e.align_to(wc.step - 1);
    for (Moment t = wc.step - 1; t < kMoments; t += wc.step) {
      std::vector<Post> batch;
      std::set<std::string> incoming;
      for (Moment m = t - wc.step + 1; m <= t; ++m) {
        for (const Post& p : stream[m]) {
          batch.push_back(p);
          incoming.insert(p.id);
        }
      }
      std::set<std::string> before = core_names(e), expiring;
      for (Seq x : e.network().seqs_through(t - wc.window_len)) expiring.insert(e.network().node(x).post.id);
      TickResult r = e.tick(batch);
      ++ticks;
      const std::string where = fmt("stream %d t=%lld", s, static_cast<long long>(t));
      try {
        e.check_invariants();
      } catch (const std::exception& ex) {
        eq.expect(false, where + ": " + ex.what());
      }
      auto window = testing::window_posts(stream, t, wc.window_len);
      max_window = std::max(max_window, window.size());
      OracleResult o = oracle_tick(window, t, sp, 1, 5);
      ClusterFamily fam = e.family();
      max_clusters = std::max(max_clusters, fam.size());
      eq.expect(fam == o.family, where + ": cluster family differs from the oracle");

      // set identity over core posts
      const auto& net = e.network();
      const auto& d = r.report.delta;
      auto plus = names(net, d.promoted), minus = names(net, d.demoted_removal), fade = names(net, d.demoted_decay);
      std::set<std::string> expected;
      for (const auto& c : before) {
        if (!expiring.count(c) && !minus.count(c) && !fade.count(c)) expected.insert(c);
      }
      expected.insert(plus.begin(), plus.end());
      std::set<std::string> after = core_names(e), overlap, fresh;
      for (const auto& c : after) (incoming.count(c) ? fresh : overlap).insert(c);
      st.expect(overlap == expected, where + ": core identity");
      st.expect(std::set<std::string>(o.cores.begin(), o.cores.end()) == after, where + ": cores vs oracle");
      // sketch equivalence: incremental sketch equals a rebuild and the oracle's core edges
      SketchGraph inc = e.sketch().export_graph(net);
      st.expect(equivalent(inc, rebuild_sketch(net, t)), where + ": sketch differs from rebuild");
      std::vector<std::pair<std::string, std::string>> edges;
      for (auto [a, b] : inc.core_edges) edges.push_back(std::minmax(net.node(a).post.id, net.node(b).post.id));
      std::sort(edges.begin(), edges.end());
      st.expect(edges == o.core_edges, where + ": core edges vs oracle");
    }
  }
  const double secs = seconds_since(t0);
  RandomRuns out;
  out.equivalence.pass = eq.ok() && secs < 60.0 && ticks >= kStreams * 20 && max_window <= 500 && decays.size() == 3;
  out.equivalence.detail = fmt("%d streams, %zu ticks, max %zu posts in window, max %zu clusters, 3 decay kinds, %.2f s",
                               kStreams, ticks, max_window, max_clusters, secs) +
                           (eq.ok() ? "" : " | " + eq.failures());
  out.structure.pass = st.ok();
  out.structure.detail = fmt("core-set identity and sketch equivalence checked on %zu ticks", ticks) +
                        (st.ok() ? "" : " | " + st.failures());
  return out;
}

// ---------------------------------------------------------------- 3

Outcome behavior_table() {
  Checker c;
  std::string seen;
  for (const auto& f : testing::behavior_fixtures()) {
    Engine e(testing::fixture_params(), testing::fixture_window(), {.phi = 3});
    auto ops = testing::run_fixture(e, f);
    const std::string name(to_string(f.expected));
    c.expect(ops.size() == 1, name + ": expected exactly one op");
    if (ops.size() != 1) continue;
    c.expect(ops[0].kind == f.expected, name + ": got " + std::string(to_string(ops[0].kind)));
    OracleResult o = oracle_tick(testing::fixture_window_posts(f), e.now(), testing::fixture_params(), 1, 3);
    c.expect(e.family() == o.family, name + ": clusters differ from the oracle");
    std::set<ClusterShape> truth(o.family.begin(), o.family.end());
    for (ClusterId id : ops[0].result_ids) {
      auto cl = e.cluster(id);
      c.expect(cl && truth.count(to_family(e.network(), {*cl}).front()), name + ": result membership");
    }
    seen += (seen.empty() ? "" : ",") + name;
  }
  return {c.ok(), "fixtures " + seen + (c.ok() ? "" : " | " + c.failures())};
}

// ---------------------------------------------------------------- 4

Outcome deletions_first_order() {
  std::vector<double> first, mixed;
  std::mt19937_64 rng(4242);
  for (std::uint64_t seed = 1; first.size() < 120; ++seed) {
    SimilarityParams sp{.decay = static_cast<DecayKind>(seed % 3)};
    const Moment len = 5;
    auto stream = testing::random_stream(seed * 31, 16, 24);
    for (Moment t = len; t + 1 < 16 && first.size() < 120; ++t) {
      auto initial = testing::window_posts(stream, t, len);
      std::vector<PostChange> changes;
      for (const Post& p : stream[t + 1 - len]) changes.push_back({PostChange::Kind::Remove, p});
      for (const Post& p : stream[t + 1]) changes.push_back({PostChange::Kind::Add, p});
      if (changes.empty()) continue;
      std::shuffle(changes.begin(), changes.end(), rng);
      mixed.push_back(static_cast<double>(primitive_op_count(initial, changes, sp, t + 1)));
      first.push_back(static_cast<double>(primitive_op_count(initial, deletions_first(changes), sp, t + 1)));
    }
  }
  auto mean = [](const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size()); };
  const double a = mean(first), b = mean(mixed);
  return {first.size() >= 100 && a <= b,
          fmt("%zu batched ticks: mean ops deletions-first %.2f vs interleaved %.2f", first.size(), a, b)};
}

// ---------------------------------------------------------------- 5

Outcome merge_split_recovery() {
  Checker c;
  std::size_t scenarios = 0, planted = 0, baseline_ms = 0;
  for (std::uint64_t seed : {3u, 11u, 29u}) {
    ScenarioScript s;
    s.seed = seed;
    s.moments = 40;
    s.noise_per_moment = 40;
    s.clusters = {{"a", 0, 12}, {"b", 0, 14}, {"c", 2, 12}, {"d", 2, 10}};
    s.directives = {{Directive::Kind::Merge, "a", "b", "ab", 8},
                    {Directive::Kind::Merge, "c", "d", "cd", 14},
                    {Directive::Kind::Split, "ab", "", "", 24},
                    {Directive::Kind::Split, "cd", "", "", 30}};
    GeneratedStream g = generate(s);
    EngineConfig cfg;
    cfg.window.window_len = s.window_len;
    std::ostringstream ops;
    run_track(vector_source(g.posts), cfg, &ops);
    std::multiset<std::pair<Moment, OpKind>> got, want;
    std::istringstream in(ops.str());
    for (std::string line; std::getline(in, line);) {
      EvolutionOp op = op_from_json_line(line);
      got.insert({op.t, op.kind});
    }
    for (const auto& op : g.truth) {
      want.insert({op.t, op.kind});
      if (op.kind == OpKind::Merge || op.kind == OpKind::Split) ++planted;
    }
    c.expect(got == want, fmt("seed %llu: tracked ops differ from ground truth", static_cast<unsigned long long>(seed)));
    for (auto k : {std::pair{Moment{8}, OpKind::Merge}, {Moment{14}, OpKind::Merge}, {Moment{24}, OpKind::Split},
                   {Moment{30}, OpKind::Split}}) {
      c.expect(got.count(k) == 1, fmt("seed %llu: missing scheduled op", static_cast<unsigned long long>(seed)));
    }
    RunOptions opts;
    opts.kappa = 0.9;
    RunReport base = run_oracle(vector_source(g.posts), cfg, nullptr, opts);
    auto totals = base.op_totals();
    baseline_ms += totals[static_cast<std::size_t>(OpKind::Merge)] + totals[static_cast<std::size_t>(OpKind::Split)];
    ++scenarios;
  }
  c.expect(baseline_ms == 0, "baseline emitted merge/split");
  return {c.ok(), fmt("%zu scenarios, %zu planted merge/split recovered at the scheduled moments; baseline merge/split ops: %zu",
                      scenarios, planted, baseline_ms) +
                      (c.ok() ? "" : " | " + c.failures())};
}

// ---------------------------------------------------------------- 6

Outcome speedup() {
  const Moment moments = 22;
  auto stream = bench_stream(7, moments);
  const std::size_t per_moment = stream.size() / static_cast<std::size_t>(moments);
  std::vector<double> ratios;
  std::string table;
  for (Moment step = 1; step <= 4; ++step) {
    EngineConfig c;
    c.window.window_len = 10;
    c.window.step = step;
    c.track.annotate = false;
    RunOptions opts;
    opts.emit_ops = false;
    opts.oracle_mode = OracleMode::Indexed;
    RunReport tr = run_track(vector_source(stream), c, nullptr, opts);
    RunReport orc = run_oracle(vector_source(stream), c, nullptr, opts);
    const std::size_t warm = static_cast<std::size_t>((c.window.window_len + step - 1) / step);
    const double a = tr.mean_tick_ms(warm), b = orc.mean_tick_ms(warm);
    ratios.push_back(a / b);
    table += fmt("%sstep/window %.1f: %.1f/%.1f ms = %.2f", table.empty() ? "" : ", ", static_cast<double>(step) / 10.0, a, b, a / b);
  }
  bool monotone = true;
  for (std::size_t i = 1; i < ratios.size(); ++i) monotone = monotone && ratios[i] >= ratios[i - 1] * 0.9;
  return {per_moment >= 2000 && ratios[0] < 0.5 && monotone,
          fmt("%zu posts/moment; ", per_moment) + table};
}

// ---------------------------------------------------------------- 7

Outcome density_sweep() {
  LadderWindow w = density_ladder_window(1);
  std::vector<Post> in;
  for (const Post& p : w.posts) {
    if (p.timestamp > w.eval_moment - w.window_len && p.timestamp <= w.eval_moment) in.push_back(p);
  }
  struct Row {
    double d;
    std::size_t cores, edges, events;
  };
  std::vector<Row> rows;
  for (double d : {0.3, 0.4, 0.5, 0.6, 0.7, 0.8}) {
    SimilarityParams sp{.eps0 = 0.2, .eps1 = d, .delta1 = d};
    OracleResult o = oracle_tick(in, w.eval_moment, sp, 1, 10, OracleMode::Indexed);
    // the incremental engine must agree with the oracle on this window
    Engine e(sp, {.window_len = w.window_len}, {.phi = 10, .annotate = false});
    e.align_to(0);
    std::size_t i = 0;
    for (Moment t = 0; t <= w.eval_moment; ++t) {
      std::vector<Post> batch;
      while (i < in.size() && in[i].timestamp == t) batch.push_back(in[i++]);
      e.tick(batch);
    }
    if (e.family() != o.family) return {false, fmt("engine and oracle disagree at %.1f", d)};
    rows.push_back({d, o.cores.size(), o.core_edges.size(), o.num_events});
  }
  bool ok = true;
  std::string detail;
  for (std::size_t k = 0; k < rows.size(); ++k) {
    detail += fmt("%s%.1f:%zu/%zu/%zu", k ? " " : "", rows[k].d, rows[k].cores, rows[k].edges, rows[k].events);
    if (k == 0) continue;
    const Row &a = rows[k - 1], &b = rows[k];
    ok = ok && b.cores <= a.cores && b.edges <= a.edges && b.events <= a.events;
    if (a.cores && a.events && b.cores && b.events) {
      const double rc = static_cast<double>(b.cores) / static_cast<double>(a.cores);
      const double re = static_cast<double>(b.events) / static_cast<double>(a.events);
      ok = ok && re <= rc;
    }
  }
  return {ok, "delta1=eps1: cores/core-edges/events " + detail};
}

// ---------------------------------------------------------------- 8

Outcome numeric_checks() {
  Checker c;
  auto near = [&](double got, double want, double tol, const std::string& what) {
    c.expect(std::abs(got - want) <= tol, what + fmt(" (%.17g vs %.17g)", got, want));
  };
  auto post = [](std::vector<std::string> l, std::int64_t ts) { return testing::make_post("p", std::move(l), ts); };
  SimilarityParams rec, ex{.decay = DecayKind::Exponential};
  std::vector<std::string> ab{"a", "b"}, bc{"b", "c"};
  near(jaccard(ab, bc), 1.0 / 3, 1e-9, "jaccard");
  near(decay(DecayKind::Reciprocal, 0), 1.0, 1e-9, "D(0)");
  near(decay(DecayKind::Exponential, 1), std::exp(1.0), 1e-9, "e");
  near(decay(DecayKind::None, 7), 1.0, 1e-9, "None");
  near(fading_similarity(post(ab, 0), post(bc, 0), rec), 1.0 / 3, 1e-9, "S_F gap 0");
  near(fading_similarity(post(ab, 0), post(bc, 1), rec), 1.0 / 6, 1e-9, "S_F gap 1");
  near(fading_similarity(post(ab, 0), post(bc, 1), ex), 1.0 / (3 * std::exp(1.0)), 1e-9, "S_F exponential");
  near(fading_score(2, 3, 4, 2.0), 0.2, 1e-9, "0.2");
  near(fading_score(1, 2, 2, 1.0), 1.0 / 3, 1e-9, "hits 1/3");
  DecayTable table(DecayKind::Reciprocal);
  c.expect(core_expiry(to_fixed(1.0), 0, rec, table) == 1, "core expiry");

  // hits from an entity walk against set Jaccard over decay
  std::mt19937_64 rng(8);
  double worst = 0;
  for (int i = 0; i < 10000; ++i) {
    auto make = [&] {
      std::vector<std::string> l;
      for (int j = 0, n = 1 + static_cast<int>(rng() % 8); j < n; ++j) l.push_back("e" + std::to_string(rng() % 16));
      std::sort(l.begin(), l.end());
      l.erase(std::unique(l.begin(), l.end()), l.end());
      return post(l, static_cast<std::int64_t>(rng() % 6));
    };
    Post p = make(), q = make();
    SimilarityParams sp{.decay = static_cast<DecayKind>(i % 3)};
    std::map<std::string, int> walk;
    for (const auto& e : q.entities) walk[e] = 1;
    std::uint32_t hits = 0;
    for (const auto& e : p.entities) hits += walk.count(e) ? 1 : 0;
    const double by_hits = fading_similarity_from_hits(p, q, hits, sp);
    const double by_sets = jaccard(p.entities, q.entities) /
                       decay(sp.decay, static_cast<double>(std::abs(p.timestamp - q.timestamp)));
    worst = std::max(worst, std::abs(by_hits - by_sets));
  }
  c.expect(worst <= 1e-12, fmt("hits vs jaccard worst %.3g", worst));

  // annotation: linearity and ranking under positive scaling
  std::size_t fixtures = 0;
  for (int trial = 0; trial < 300; ++trial, ++fixtures) {
    std::vector<std::vector<std::string>> posts(1 + rng() % 10);
    std::vector<double> w1, w2;
    std::uniform_real_distribution<double> u(0.0, 2.0);
    for (auto& p : posts) {
      for (int k = 0, n = 1 + static_cast<int>(rng() % 4); k < n; ++k) p.push_back("x" + std::to_string(rng() % 12));
      std::sort(p.begin(), p.end());
      p.erase(std::unique(p.begin(), p.end()), p.end());
      w1.push_back(u(rng));
      w2.push_back(u(rng));
    }
    auto m1 = annotate(posts, w1), m2 = annotate(posts, w2);
    std::map<std::string, double> s1(m1.begin(), m1.end()), s2(m2.begin(), m2.end());
    std::vector<double> sum(w1.size()), scaled(w1.size());
    for (std::size_t i = 0; i < w1.size(); ++i) {
      sum[i] = w1[i] + 3.0 * w2[i];
      scaled[i] = 8.0 * w1[i];
    }
    for (const auto& [e, s] : annotate(posts, sum)) near(s, s1[e] + 3.0 * s2[e], 1e-12, "linearity");
    auto big = annotate(posts, scaled);
    for (std::size_t i = 0; i < m1.size(); ++i) c.expect(big[i].first == m1[i].first, "argsort under scaling");
  }
  return {c.ok(), fmt("worked examples, hits vs jaccard on 10^4 pairs (worst %.1e), annotation linearity on %zu fixtures",
                      worst, fixtures) +
                      (c.ok() ? "" : " | " + c.failures())};
}

// ---------------------------------------------------------------- 9

Outcome determinism_and_snapshots() {
  Checker c;
  auto posts = flatten(testing::random_stream(77, 40, 40));
  EngineConfig cfg;
  cfg.window.window_len = 8;
  cfg.track.phi = 5;
  cfg.track.top_k = 5;
  auto run = [&](const std::vector<Post>& p, Engine* e) {
    std::ostringstream out;
    run_track(vector_source(p), cfg, &out, {}, e);
    return out.str();
  };
  const std::string a = run(posts, nullptr), b = run(posts, nullptr);
  c.expect(!a.empty() && a == b, "repeated runs differ");
  std::size_t resumes = 0;
  for (std::int64_t cut : {5, 13, 21, 34}) {
    std::vector<Post> head, tail;
    for (const Post& p : posts) (p.timestamp < cut ? head : tail).push_back(p);
    Engine e(cfg.similarity, cfg.window, cfg.track);
    const std::string first = run(head, &e);
    LoadedSnapshot s = deserialize_snapshot(serialize_snapshot(e, cfg));
    const std::string second = run(tail, s.engine.get());
    c.expect(first + second == a, fmt("resume at %lld differs", static_cast<long long>(cut)));
    ++resumes;
  }
  return {c.ok(), fmt("2 identical runs (%zu bytes of ops), %zu snapshot resumes replay identically", a.size(), resumes) +
                      (c.ok() ? "" : " | " + c.failures())};
}

}  // namespace

int main() {
  int failed = 0;
  auto report = [&](int n, const char* title, const Outcome& o) {
    std::printf("criterion %d %-28s %s  %s\n", n, title, o.pass ? "PASS" : "FAIL", o.detail.c_str());
    std::fflush(stdout);
    failed += o.pass ? 0 : 1;
  };
  auto guarded = [](const std::function<Outcome()>& f) {
    try {
      return f();
    } catch (const std::exception& e) {
      return Outcome{false, std::string("exception: ") + e.what()};
    }
  };
  RandomRuns rr;
  try {
    rr = random_runs();
  } catch (const std::exception& e) {
    rr.equivalence = rr.structure = {false, std::string("exception: ") + e.what()};
  }
  report(1, "oracle equivalence", rr.equivalence);
  report(2, "set identity / sketch", rr.structure);
  report(3, "behavior table", guarded(behavior_table));
  report(4, "deletions first", guarded(deletions_first_order));
  report(5, "merge/split recovery", guarded(merge_split_recovery));
  report(6, "incremental speedup", guarded(speedup));
  report(7, "density monotonicity", guarded(density_sweep));
  report(8, "numeric checks", guarded(numeric_checks));
  report(9, "determinism + snapshot", guarded(determinism_and_snapshots));
  return failed == 0 ? 0 : 1;
}
