#include <doctest.h>

#include <set>

#include "evtrack/error.hpp"
#include "evtrack/eval.hpp"
#include "fixtures.hpp"
#include "support.hpp"

using namespace evtrack;
using evtrack::testing::copies;
using evtrack::testing::join;
using evtrack::testing::make_post;

namespace {

ClusterShape shape(std::vector<std::string> core, std::vector<std::string> border = {}) {
  std::sort(core.begin(), core.end());
  std::sort(border.begin(), border.end());
  return {core, border};
}

std::vector<OpKind> kinds(const std::vector<EvolutionOp>& ops) {
  std::vector<OpKind> k;
  for (const auto& op : ops) k.push_back(op.kind);
  return k;
}

ErrorCode code_of(auto&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error thrown");
  return ErrorCode::Io;
}

}  // namespace

TEST_CASE("oracle") {
  SimilarityParams none{.decay = DecayKind::None};
  CHECK(oracle_tick({make_post("p", {"a"}, 0)}, 0, none, 1, 10).family.empty());

  // hand enumeration of the merge fixture after the bridge arrives
  auto posts = join(join(copies("A", 3, testing::kTopicA, 0), copies("C", 3, testing::kTopicC, 0)),
                    {make_post("b", testing::kBridge, 1)});
  for (OracleMode mode : {OracleMode::BruteForce, OracleMode::Indexed}) {
    OracleResult r = oracle_tick(posts, 1, none, 1, 3, mode);
    CHECK(r.family == ClusterFamily{shape({"A0", "A1", "A2", "C0", "C1", "C2", "b"})});
    CHECK(r.cores.size() == 7);
    CHECK(r.core_edges.size() == 3 + 3 + 6);
    CHECK(r.num_edges == 12);
    CHECK(r.num_events == 1);
  }

  for (std::uint64_t seed = 41; seed <= 44; ++seed) {
    auto stream = testing::random_stream(seed, 12, 40);
    SimilarityParams sp{.decay = static_cast<DecayKind>(seed % 3)};
    auto window = testing::window_posts(stream, 11, 8);
    auto brute = oracle_tick(window, 11, sp, 1, 5, OracleMode::BruteForce);
    auto indexed = oracle_tick(window, 11, sp, 1, 5, OracleMode::Indexed);
    CHECK(brute.family == indexed.family);
    CHECK(brute.core_edges == indexed.core_edges);
    CHECK(brute.num_edges == indexed.num_edges);
    CHECK(oracle_tick(window, 11, sp, 1, 5).family == brute.family);
  }
}

TEST_CASE("peak baseline") {
  auto series = [](std::vector<std::size_t> counts, const std::string& term) {
    std::vector<Post> out;
    for (std::size_t m = 0; m < counts.size(); ++m) {
      for (std::size_t i = 0; i < counts[m]; ++i) {
        out.push_back(make_post(term + std::to_string(m) + "_" + std::to_string(i), {term}, static_cast<std::int64_t>(m)));
      }
    }
    return out;
  };
  // history 2,2,2,2 at the spike: mean 2, sigma 0; 20 > 2
  auto spike = baseline_peaks(series({2, 2, 2, 2, 20}, "quake"), PeakMode::Unigrams, 4);
  CHECK(spike == std::vector<PeakDetection>{{4, "quake", 20}});
  // history 5,7,5,7: mean 6, sigma 1; 8 = mean + 2 sigma does not fire, 9 does.
  // Moment 1 fires in both (history {5}, sigma 0).
  auto at4 = [](std::vector<PeakDetection> d) {
    std::erase_if(d, [](const PeakDetection& x) { return x.moment != 4; });
    return d.size();
  };
  CHECK(at4(baseline_peaks(series({5, 7, 5, 7, 8}, "x"), PeakMode::Unigrams, 4)) == 0);
  CHECK(at4(baseline_peaks(series({5, 7, 5, 7, 9}, "x"), PeakMode::Unigrams, 4)) == 1);
  CHECK(baseline_peaks(series({5, 7, 5, 7, 9}, "x"), PeakMode::Unigrams, 4).front().moment == 1);
  CHECK(baseline_peaks(series({6, 6, 6, 6, 6}, "flat"), PeakMode::Unigrams, 4).empty());
  CHECK(baseline_peaks(series({50}, "first"), PeakMode::Unigrams, 4).empty());

  std::vector<Post> tagged;
  for (int m = 0; m < 3; ++m) {
    for (int i = 0; i < (m == 2 ? 8 : 1); ++i) {
      Post p = make_post("h" + std::to_string(m) + std::to_string(i), {"word"}, m);
      p.text = "look #Eclipse now";
      tagged.push_back(p);
    }
  }
  auto tags = baseline_peaks(tagged, PeakMode::Hashtags, 2);
  REQUIRE(tags.size() == 1);
  CHECK(tags[0].term == "eclipse");
  CHECK(tags[0].moment == 2);
}

TEST_CASE("overlap matching baseline") {
  ClusterFamily a{shape({"1", "2", "3"})};
  auto same = baseline_match({{0, a}, {1, a}, {2, a}});
  CHECK(kinds(same) == std::vector<OpKind>{OpKind::Birth});

  ClusterFamily two{shape({"a1", "a2", "a3", "a4"}), shape({"c1", "c2", "c3", "c4"})};
  ClusterFamily merged{shape({"a1", "a2", "a3", "a4", "c1", "c2", "c3", "c4", "b"})};
  auto ops = baseline_match({{0, two}, {1, merged}}, 0.9);
  CHECK(kinds(ops) == std::vector<OpKind>{OpKind::Birth, OpKind::Birth, OpKind::Death, OpKind::Death, OpKind::Birth});

  std::vector<std::string> ten, nine;
  for (int i = 0; i < 10; ++i) ten.push_back("p" + std::to_string(i));
  nine.assign(ten.begin(), ten.begin() + 9);
  auto edge = baseline_match({{0, {shape(ten)}}, {1, {shape(nine)}}}, 0.9);  // 9/10 = kappa
  REQUIRE(edge.size() == 2);
  CHECK(edge[1].kind == OpKind::Shrink);
  CHECK(edge[1].payload == std::vector<std::string>{"p9"});
  CHECK(edge[1].ids == edge[0].result_ids);
  auto miss = baseline_match({{0, {shape(ten)}}, {1, {shape(nine)}}}, 0.91);
  CHECK(kinds(miss) == std::vector<OpKind>{OpKind::Birth, OpKind::Death, OpKind::Birth});
  CHECK_THROWS_AS(BaselineMatcher(0.0), Error);
}

TEST_CASE("generator") {
  ScenarioScript one;
  one.moments = 3;
  one.clusters = {{"a", 0, 20}};
  GeneratedStream g = generate(one);
  CHECK(g.posts.size() >= 60);
  CHECK(kinds(g.truth) == std::vector<OpKind>{OpKind::Birth, OpKind::Grow, OpKind::Grow});
  CHECK(generate(one).posts == g.posts);

  ScenarioScript merge;
  merge.moments = 12;
  merge.clusters = {{"a", 0, 12}, {"b", 0, 12}};
  merge.directives = {{Directive::Kind::Merge, "a", "b", "ab", 5}};
  auto truth = generate(merge).truth;
  std::set<std::pair<Moment, OpKind>> structural;
  for (const auto& op : truth) {
    if (op.kind != OpKind::Grow && op.kind != OpKind::Shrink) structural.insert({op.t, op.kind});
  }
  CHECK(structural == std::set<std::pair<Moment, OpKind>>{{0, OpKind::Birth}, {5, OpKind::Merge}});

  ScenarioScript noisy = one;
  noisy.noise_rate = 1.0;
  noisy.noise_per_moment = 5;
  CHECK(generate(noisy).truth.empty());

  ScenarioScript other = merge;
  other.seed = 2;
  CHECK(generate(other).posts != generate(merge).posts);
  CHECK(parse_script(script_to_json(merge)).directives.size() == 1);
  CHECK(generate(parse_script(script_to_json(merge))).posts == generate(merge).posts);
}

TEST_CASE("generated scenarios are recovered by the tracker") {
  ScenarioScript s;
  s.seed = 5;
  s.moments = 30;
  s.noise_per_moment = 30;
  s.clusters = {{"a", 0, 12}, {"b", 0, 12}, {"c", 3, 10}};
  s.directives = {{Directive::Kind::Merge, "a", "b", "ab", 8},
                  {Directive::Kind::Split, "ab", "", "", 20},
                  {Directive::Kind::Die, "c", "", "", 25}};
  GeneratedStream g = generate(s);
  Engine e({}, {.window_len = s.window_len});
  std::multiset<std::pair<Moment, OpKind>> got, want;
  std::size_t i = 0;
  e.align_to(0);
  for (Moment t = 0; t < s.moments; ++t) {
    std::vector<Post> batch;
    while (i < g.posts.size() && g.posts[i].timestamp == t) batch.push_back(g.posts[i++]);
    for (const auto& op : e.tick(batch).ops) got.insert({op.t, op.kind});
  }
  for (const auto& op : g.truth) want.insert({op.t, op.kind});
  CHECK(got == want);
}

TEST_CASE("script errors") {
  CHECK(code_of([] { parse_script("{"); }) == ErrorCode::InvalidScript);
  CHECK(code_of([] { parse_script(R"({"clusters":[{"name":"a"}],"directives":[{"op":"die","a":"zz","at":3}]})"); }) ==
        ErrorCode::InvalidScript);
  CHECK(code_of([] { parse_script(R"({"clusters":[{"name":"a"},{"name":"a"}]})"); }) == ErrorCode::InvalidScript);
  CHECK(code_of([] { parse_script(R"({"clusters":[{"name":"a"}],"directives":[{"op":"explode","a":"a","at":3}]})"); }) ==
        ErrorCode::InvalidScript);
  CHECK(code_of([] { parse_script(R"({"noise_rate":2})"); }) == ErrorCode::InvalidScript);
  CHECK(code_of([] {
          parse_script(R"({"clusters":[{"name":"a"},{"name":"b"}],"directives":[{"op":"merge","a":"a","b":"b","into":"ab","at":4},{"op":"split","a":"ab","at":6}]})");
        }) == ErrorCode::InvalidScript);
}

TEST_CASE("fixtures for sweeps and benchmarks") {
  auto ladder = density_ladder_window(1);
  CHECK(ladder.posts.size() > 100);
  CHECK(ladder.eval_moment >= 0);
  CHECK(density_ladder_window(1).posts == ladder.posts);
  auto bench = bench_stream(3, 2, 5, 4, 10);
  CHECK(bench.size() == 2 * (5 * 4 + 10));
  CHECK(std::is_sorted(bench.begin(), bench.end(), [](const Post& a, const Post& b) { return a.timestamp < b.timestamp; }));
}

TEST_CASE("primitive op counting") {
  SimilarityParams none{.decay = DecayKind::None};
  auto base = join(copies("A", 3, testing::kTopicA, 0), copies("C", 3, testing::kTopicC, 0));
  using K = PostChange::Kind;
  // noise
  CHECK(primitive_op_count(base, {{K::Add, make_post("n", {"zz"}, 0)}}, none, 0) == 0);
  // J = 1/6 to every core: no edges at all
  SimilarityParams high{.decay = DecayKind::None, .delta1 = 2.0};
  CHECK(primitive_op_count(base, {{K::Add, make_post("x", {"a1", "c1", "z1", "z2"}, 0)}}, high, 0) == 0);
  // J = 2/7 to all six cores: w = 12/7 < 2, a border of both clusters
  CHECK(primitive_op_count(base, {{K::Add, make_post("x", {"a1", "a2", "c1", "c2", "z1", "z2"}, 0)}}, high, 0) == 2);
  // core joining one cluster, core bridging two
  CHECK(primitive_op_count(base, {{K::Add, make_post("g", testing::kTopicA, 0)}}, none, 0) == 1);
  CHECK(primitive_op_count(base, {{K::Add, make_post("b", testing::kBridge, 0)}}, none, 0) == 3);
  // removals
  CHECK(primitive_op_count(base, {{K::Remove, make_post("A0", {}, 0)}}, none, 0) == 1);
  auto bridged = join(base, {make_post("b", testing::kBridge, 0)});
  CHECK(primitive_op_count(bridged, {{K::Remove, make_post("b", {}, 0)}}, none, 0) == 3);

  std::vector<PostChange> mixed{{K::Add, make_post("x", {"q"}, 0)},
                                {K::Remove, make_post("A0", {}, 0)},
                                {K::Add, make_post("y", {"q"}, 0)},
                                {K::Remove, make_post("C0", {}, 0)}};
  auto ordered = deletions_first(mixed);
  std::vector<std::string> ids;
  for (const auto& c : ordered) ids.push_back(c.post.id);
  CHECK(ids == std::vector<std::string>{"A0", "C0", "x", "y"});
}
