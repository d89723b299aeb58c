#include "evtrack/runner.hpp"

#include <chrono>
#include <deque>
#include <istream>
#include <ostream>
#include <unordered_set>

#include <json.hpp>

#include "evtrack/error.hpp"
#include "evtrack/records.hpp"
#include "evtrack/snapshot.hpp"

namespace evtrack {
namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point since) {
  return std::chrono::duration<double, std::milli>(Clock::now() - since).count();
}

/// Groups a moment-ordered post stream into contiguous ticks.
class Batcher {
 public:
  Batcher(const WindowConfig& window, RunReport& report) : window_(window), report_(report) {}

  /// Calls tick(batch, t) for every completed tick. `now` is the end of the
  /// last processed tick, or nullopt before the first.
  template <class Tick, class Contains>
  void run(const PostSource& source, std::optional<Moment> now, Tick&& tick, Contains&& contains,
           bool drain, const std::function<bool()>& window_empty) {
    std::vector<Post> batch;
    std::unordered_set<std::string> batch_ids;
    auto flush = [&] {
      const Moment t = *now + window_.step;
      tick(std::move(batch), t);
      batch.clear();
      batch_ids.clear();
      now = t;
    };
    while (auto p = source()) {
      const Moment m = to_moment(p->timestamp, window_.tick_unit);
      if (!now) now = m - window_.step;
      while (m > *now + window_.step) flush();
      if (m <= *now) {
        ++report_.late;
        continue;
      }
      if (contains(p->id) || !batch_ids.insert(p->id).second) {
        ++report_.duplicates;
        continue;
      }
      batch.push_back(std::move(*p));
    }
    if (!batch.empty()) flush();
    if (drain && now) {
      while (!window_empty()) flush();
    }
  }

 private:
  WindowConfig window_;
  RunReport& report_;
};

PostSource reader_source(PostReader& reader) {
  return [&reader]() { return reader.next(); };
}

void copy_reader_counts(const PostReader& reader, RunReport& report) {
  report.lines_read = reader.lines_read();
  report.skipped = reader.skipped();
  report.dropped_empty = reader.dropped_empty();
}

}  // namespace

std::array<std::size_t, 6> RunReport::op_totals() const {
  std::array<std::size_t, 6> total{};
  for (const TickStat& t : ticks) {
    for (std::size_t k = 0; k < 6; ++k) total[k] += t.ops[k];
  }
  return total;
}

double RunReport::mean_tick_ms(std::size_t skip) const {
  double sum = 0;
  std::size_t n = 0;
  for (std::size_t i = skip; i < ticks.size(); ++i, ++n) sum += ticks[i].wall_ms;
  return n ? sum / static_cast<double>(n) : 0.0;
}

std::string RunReport::to_json() const {
  using nlohmann::json;
  json j;
  j["mode"] = mode;
  j["config"] = json::parse(config_to_json(config));
  std::ostringstream header;
  header << "(delta1,eps0,eps1)=(" << config.similarity.delta1 << "," << config.similarity.eps0
         << "," << config.similarity.eps1 << ") phi=" << config.track.phi;
  j["header"] = header.str();
  j["num_ticks"] = ticks.size();
  j["lines_read"] = lines_read;
  j["skipped"] = skipped;
  j["dropped_empty"] = dropped_empty;
  j["late"] = late;
  j["duplicates"] = duplicates;
  json totals;
  auto tot = op_totals();
  for (std::size_t k = 0; k < 6; ++k) totals[std::string(to_string(static_cast<OpKind>(k)))] = tot[k];
  j["op_totals"] = totals;
  j["mean_tick_ms"] = mean_tick_ms();
  json per = json::array();
  for (const TickStat& t : ticks) {
    json x;
    x["t"] = t.t;
    x["posts_in"] = t.posts_in;
    x["posts_out"] = t.posts_out;
    x["window_posts"] = t.window_posts;
    x["num_core"] = t.num_core;
    x["num_clusters"] = t.num_clusters;
    x["num_events"] = t.num_events;
    json ops;
    for (std::size_t k = 0; k < 6; ++k) ops[std::string(to_string(static_cast<OpKind>(k)))] = t.ops[k];
    x["ops"] = ops;
    x["wall_ms"] = t.wall_ms;
    per.push_back(std::move(x));
  }
  j["ticks"] = std::move(per);
  return j.dump();
}

PostSource vector_source(const std::vector<Post>& posts) {
  auto i = std::make_shared<std::size_t>(0);
  return [&posts, i]() -> std::optional<Post> {
    if (*i >= posts.size()) return std::nullopt;
    return posts[(*i)++];
  };
}

RunReport run_track(const PostSource& source, const EngineConfig& config, std::ostream* ops_out,
                    const RunOptions& options, Engine* resume) {
  config.validate();
  RunReport report;
  report.mode = "track";
  report.config = config;
  std::unique_ptr<Engine> owned;
  Engine* engine = resume;
  if (!engine) {
    owned = std::make_unique<Engine>(config.similarity, config.window, config.track);
    engine = owned.get();
  }
  std::optional<Moment> now;
  if (engine->started()) now = engine->now();
  std::size_t tick_count = 0;

  auto tick = [&](std::vector<Post> batch, Moment t) {
    if (!engine->started()) engine->align_to(t);
    auto start = Clock::now();
    TickResult r = engine->tick(std::move(batch));
    TickStat st;
    st.wall_ms = elapsed_ms(start);
    st.t = r.report.t;
    st.posts_in = r.report.posts_in;
    st.posts_out = r.report.posts_out;
    st.window_posts = r.report.window_posts;
    st.num_core = r.report.num_core;
    st.num_clusters = r.report.num_clusters;
    st.num_events = r.report.num_events;
    for (const EvolutionOp& op : r.ops) {
      ++st.ops[static_cast<std::size_t>(op.kind)];
      if (ops_out && options.emit_ops) *ops_out << op_to_json_line(op) << '\n';
    }
    if (options.stats_out) *options.stats_out << sketch_stats_line(engine->sketch().stats(engine->network())) << '\n';
    report.ticks.push_back(st);
    ++tick_count;
    if (config.snapshot_interval > 0 && tick_count % static_cast<std::size_t>(config.snapshot_interval) == 0) {
      save_snapshot(*engine, config, config.snapshot_path);
    }
    if (options.on_tick) options.on_tick(*engine, r);
  };
  Batcher batcher(config.window, report);
  batcher.run(
      source, now, tick, [&](const std::string& id) { return engine->network().contains(id); },
      options.drain, [&] { return engine->network().size() == 0; });
  if (ops_out) ops_out->flush();
  return report;
}

RunReport run_track(std::istream& in, const EngineConfig& config, std::ostream* ops_out,
                    const RunOptions& options, Engine* engine) {
  PostReader reader(in, config.entity_mode);
  RunReport report = run_track(reader_source(reader), config, ops_out, options, engine);
  copy_reader_counts(reader, report);
  return report;
}

RunReport run_oracle(const PostSource& source, const EngineConfig& config, std::ostream* ops_out,
                     const RunOptions& options) {
  config.validate();
  RunReport report;
  report.mode = "oracle";
  report.config = config;
  std::deque<Post> window;
  std::unordered_set<std::string> window_ids;
  BaselineMatcher matcher(options.kappa);
  const Moment len = config.window.window_len;
  const std::int64_t unit = config.window.tick_unit;

  auto tick = [&](std::vector<Post> batch, Moment t) {
    auto start = Clock::now();
    TickStat st;
    st.t = t;
    st.posts_in = batch.size();
    while (!window.empty() && to_moment(window.front().timestamp, unit) <= t - len) {
      window_ids.erase(window.front().id);
      window.pop_front();
      ++st.posts_out;
    }
    std::stable_sort(batch.begin(), batch.end(), [unit](const Post& a, const Post& b) {
      return to_moment(a.timestamp, unit) < to_moment(b.timestamp, unit);
    });
    for (Post& p : batch) {
      window_ids.insert(p.id);
      window.push_back(std::move(p));
    }
    std::vector<Post> posts(window.begin(), window.end());
    OracleResult o = oracle_tick(posts, t, config.similarity, unit, config.track.phi, options.oracle_mode);
    auto ops = matcher.step({t, o.family});
    st.wall_ms = elapsed_ms(start);
    st.window_posts = window.size();
    st.num_core = o.cores.size();
    st.num_clusters = o.family.size();
    st.num_events = o.num_events;
    for (const EvolutionOp& op : ops) {
      ++st.ops[static_cast<std::size_t>(op.kind)];
      if (ops_out && options.emit_ops) *ops_out << op_to_json_line(op) << '\n';
    }
    report.ticks.push_back(st);
  };
  Batcher batcher(config.window, report);
  batcher.run(
      source, std::nullopt, tick, [&](const std::string& id) { return window_ids.count(id) > 0; },
      options.drain, [&] { return window.empty(); });
  if (ops_out) ops_out->flush();
  return report;
}

RunReport run_oracle(std::istream& in, const EngineConfig& config, std::ostream* ops_out,
                     const RunOptions& options) {
  PostReader reader(in, config.entity_mode);
  RunReport report = run_oracle(reader_source(reader), config, ops_out, options);
  copy_reader_counts(reader, report);
  return report;
}

}  // namespace evtrack
