#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "evtrack/annotate.hpp"
#include "evtrack/config.hpp"
#include "evtrack/error.hpp"
#include "evtrack/eval.hpp"
#include "evtrack/ingest.hpp"
#include "evtrack/records.hpp"
#include "evtrack/runner.hpp"
#include "evtrack/snapshot.hpp"

using namespace evtrack;

namespace {

enum Exit { kOk = 0, kUsage = 1, kInput = 2, kInvariant = 3 };

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidConfig:
    case ErrorCode::InvalidScript:
    case ErrorCode::Io:
      return kUsage;
    case ErrorCode::InconsistentDelta:
    case ErrorCode::InconsistentState:
      return kInvariant;
    default:
      return kInput;
  }
}

struct ConfigFlags {
  std::string config_path;
  std::optional<std::int64_t> window_len, step, tick_unit, top_k, snapshot_interval;
  std::optional<double> delta1, eps0, eps1;
  std::optional<std::string> decay, snapshot_path;
  std::optional<std::size_t> phi;
  bool no_annotate = false;
  bool strict_entities = false;

  void add_to(CLI::App* app) {
    app->add_option("--config", config_path, "JSON config file")->check(CLI::ExistingFile);
    app->add_option("--window-len", window_len, "window length in moments");
    app->add_option("--step", step, "moments per tick");
    app->add_option("--tick-unit", tick_unit, "raw timestamp units per moment");
    app->add_option("--delta1", delta1, "core weight threshold");
    app->add_option("--eps0", eps0, "edge similarity threshold");
    app->add_option("--eps1", eps1, "core edge similarity threshold");
    app->add_option("--decay", decay, "reciprocal | exponential | none");
    app->add_option("--phi", phi, "minimum event size");
    app->add_option("--top-k", top_k, "annotation entities per op (0 = all)");
    app->add_flag("--no-annotate", no_annotate, "skip annotations");
    app->add_flag("--strict-entities", strict_entities, "require an entities field on every record");
    app->add_option("--snapshot-path", snapshot_path, "periodic snapshot file");
    app->add_option("--snapshot-interval", snapshot_interval, "ticks between snapshots");
  }

  EngineConfig resolve(EngineConfig c = {}) const {
    if (!config_path.empty()) c = load_config_file(config_path, c);
    if (window_len) c.window.window_len = *window_len;
    if (step) c.window.step = *step;
    if (tick_unit) c.window.tick_unit = *tick_unit;
    if (delta1) c.similarity.delta1 = *delta1;
    if (eps0) c.similarity.eps0 = *eps0;
    if (eps1) c.similarity.eps1 = *eps1;
    if (decay) {
      try {
        c.similarity.decay = parse_decay_kind(*decay);
      } catch (const Error&) {
        throw Error(ErrorCode::InvalidConfig, "unknown decay kind " + *decay);
      }
    }
    if (phi) c.track.phi = *phi;
    if (top_k) {
      if (*top_k < 0) throw Error(ErrorCode::InvalidConfig, "top_k must be >= 0");
      c.track.top_k = static_cast<std::size_t>(*top_k);
    }
    if (no_annotate) c.track.annotate = false;
    if (strict_entities) c.entity_mode = EntityMode::RequireSupplied;
    if (snapshot_path) c.snapshot_path = *snapshot_path;
    if (snapshot_interval) c.snapshot_interval = *snapshot_interval;
    c.validate();
    return c;
  }
};

class Input {
 public:
  explicit Input(const std::string& path) {
    if (path.empty() || path == "-") return;
    file_ = std::make_unique<std::ifstream>(path);
    if (!*file_) throw Error(ErrorCode::Io, "cannot open " + path);
  }
  std::istream& get() { return file_ ? *file_ : std::cin; }

 private:
  std::unique_ptr<std::ifstream> file_;
};

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path);
  out << text;
}

void emit_report(const RunReport& report, const std::string& path) {
  if (path.empty()) {
    std::cerr << report.to_json() << '\n';
  } else {
    write_text(path, report.to_json() + "\n");
  }
}

struct StatsFile {
  std::unique_ptr<std::ofstream> out;
  explicit StatsFile(const std::string& path) {
    if (path.empty()) return;
    out = std::make_unique<std::ofstream>(path);
    if (!*out) throw Error(ErrorCode::Io, "cannot write " + path);
  }
  std::ostream* get() { return out.get(); }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Incremental event evolution tracking over post streams"};
  app.require_subcommand(1);

  // track
  auto* track = app.add_subcommand("track", "run the incremental tracker and emit evolution ops");
  ConfigFlags track_flags;
  track_flags.add_to(track);
  std::string track_input, track_report, track_snap_in, track_snap_out, track_stats;
  bool track_drain = false;
  track->add_option("-i,--input", track_input, "posts JSONL (default stdin)");
  track->add_option("--report", track_report, "write the run report here instead of stderr");
  track->add_option("--snapshot-in", track_snap_in, "resume from a snapshot")->check(CLI::ExistingFile);
  track->add_option("--snapshot-out", track_snap_out, "write a snapshot after the last tick");
  track->add_option("--stats", track_stats, "per-tick sketch statistics JSONL");
  track->add_flag("--drain", track_drain, "keep ticking until the window is empty");

  // oracle
  auto* oracle = app.add_subcommand("oracle", "recluster every tick from scratch and link by overlap");
  ConfigFlags oracle_flags;
  oracle_flags.add_to(oracle);
  std::string oracle_input, oracle_report, oracle_mode = "brute";
  double kappa = 0.9;
  bool oracle_drain = false;
  oracle->add_option("-i,--input", oracle_input, "posts JSONL (default stdin)");
  oracle->add_option("--report", oracle_report, "write the run report here instead of stderr");
  oracle->add_option("--mode", oracle_mode, "brute | indexed")->check(CLI::IsMember({"brute", "indexed"}));
  oracle->add_option("--kappa", kappa, "overlap fraction for linking")->check(CLI::Range(0.0, 1.0));
  oracle->add_flag("--drain", oracle_drain, "keep ticking until the window is empty");

  // bench
  auto* bench = app.add_subcommand("bench", "per-tick wall clock of tracker vs from-scratch");
  ConfigFlags bench_flags;
  bench_flags.add_to(bench);
  std::uint64_t bench_seed = 7;
  std::int64_t bench_moments = 24, bench_max_step = 4;
  std::size_t bench_noise = 1000, bench_clusters = 50, bench_per_cluster = 20;
  bench->add_option("--seed", bench_seed);
  bench->add_option("--moments", bench_moments, "stream length");
  bench->add_option("--max-step", bench_max_step, "largest step to measure");
  bench->add_option("--noise", bench_noise, "noise posts per moment");
  bench->add_option("--clusters", bench_clusters, "topics per moment");
  bench->add_option("--per-cluster", bench_per_cluster, "posts per topic per moment");

  // synth
  auto* synth = app.add_subcommand("synth", "generate a planted-scenario stream");
  std::string synth_script, synth_truth;
  synth->add_option("script", synth_script, "scenario script JSON")->required()->check(CLI::ExistingFile);
  synth->add_option("--truth", synth_truth, "write ground-truth ops JSONL here");

  // annotate-dump
  auto* adump = app.add_subcommand("annotate-dump", "print the annotation of every event at the end of the input");
  ConfigFlags adump_flags;
  adump_flags.add_to(adump);
  std::string adump_input;
  adump->add_option("-i,--input", adump_input, "posts JSONL (default stdin)");

  // snapshot
  auto* snap = app.add_subcommand("snapshot", "inspect a snapshot file");
  std::string snap_path;
  snap->add_option("file", snap_path, "snapshot file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }

  try {
    if (*track) {
      EngineConfig config;
      std::unique_ptr<Engine> resumed;
      if (!track_snap_in.empty()) {
        LoadedSnapshot s = load_snapshot(track_snap_in);
        config = s.config;
        resumed = std::move(s.engine);
        // Only run plumbing may change on resume; model parameters come from the snapshot.
        if (track_flags.snapshot_path) config.snapshot_path = *track_flags.snapshot_path;
        if (track_flags.snapshot_interval) config.snapshot_interval = *track_flags.snapshot_interval;
        config.validate();
      } else {
        config = track_flags.resolve();
      }
      Input in(track_input);
      StatsFile stats(track_stats);
      RunOptions opts;
      opts.drain = track_drain;
      opts.stats_out = stats.get();
      std::unique_ptr<Engine> fresh;
      Engine* engine = resumed.get();
      if (!engine) {
        fresh = std::make_unique<Engine>(config.similarity, config.window, config.track);
        engine = fresh.get();
      }
      RunReport report = run_track(in.get(), config, &std::cout, opts, engine);
      if (!track_snap_out.empty()) save_snapshot(*engine, config, track_snap_out);
      emit_report(report, track_report);
    } else if (*oracle) {
      EngineConfig config = oracle_flags.resolve();
      Input in(oracle_input);
      RunOptions opts;
      opts.drain = oracle_drain;
      opts.kappa = kappa;
      opts.oracle_mode = oracle_mode == "indexed" ? OracleMode::Indexed : OracleMode::BruteForce;
      RunReport report = run_oracle(in.get(), config, &std::cout, opts);
      emit_report(report, oracle_report);
    } else if (*bench) {
      EngineConfig base = bench_flags.resolve();
      base.track.annotate = false;
      std::vector<Post> stream =
          bench_stream(bench_seed, bench_moments, bench_clusters, bench_per_cluster, bench_noise);
      std::printf("# posts=%zu moments=%lld window_len=%lld\n", stream.size(),
                  static_cast<long long>(bench_moments), static_cast<long long>(base.window.window_len));
      std::printf("%-6s %-12s %-14s %-14s %-8s\n", "step", "step/window", "track_ms", "oracle_ms", "ratio");
      for (std::int64_t step = 1; step <= bench_max_step && step < base.window.window_len; ++step) {
        EngineConfig c = base;
        c.window.step = step;
        RunOptions opts;
        opts.emit_ops = false;
        opts.oracle_mode = OracleMode::Indexed;
        RunReport tr = run_track(vector_source(stream), c, nullptr, opts);
        RunReport orc = run_oracle(vector_source(stream), c, nullptr, opts);
        // Skip ticks until the window is full.
        std::size_t warm = static_cast<std::size_t>((c.window.window_len + step - 1) / step);
        double t_ms = tr.mean_tick_ms(warm), o_ms = orc.mean_tick_ms(warm);
        std::printf("%-6lld %-12.2f %-14.3f %-14.3f %-8.3f\n", static_cast<long long>(step),
                    static_cast<double>(step) / static_cast<double>(c.window.window_len), t_ms, o_ms,
                    o_ms > 0 ? t_ms / o_ms : 0.0);
      }
    } else if (*synth) {
      ScenarioScript script = parse_script(read_file(synth_script));
      GeneratedStream g = generate(script);
      for (const Post& p : g.posts) std::cout << post_to_json_line(p) << '\n';
      if (!synth_truth.empty()) {
        std::ostringstream truth;
        for (const EvolutionOp& op : g.truth) truth << op_to_json_line(op) << '\n';
        write_text(synth_truth, truth.str());
      }
    } else if (*adump) {
      EngineConfig config = adump_flags.resolve();
      config.track.annotate = false;
      Input in(adump_input);
      Engine engine(config.similarity, config.window, config.track);
      RunOptions opts;
      opts.emit_ops = false;
      run_track(in.get(), config, nullptr, opts, &engine);
      for (const Cluster& c : engine.clusters()) {
        if (!is_event_size(c.size(), config.track.phi)) continue;
        nlohmann::json j;
        j["t"] = engine.now();
        j["id"] = c.id;
        j["size"] = c.size();
        nlohmann::json ents = nlohmann::json::array();
        for (const auto& [entity, score] : top_k(annotate(c, engine.network(), engine.now()), config.track.top_k)) {
          ents.push_back({entity, score});
        }
        j["entities"] = std::move(ents);
        std::cout << j.dump() << '\n';
      }
    } else if (*snap) {
      SnapshotInfo info = inspect_snapshot(read_file(snap_path));
      nlohmann::json j;
      j["version"] = info.version;
      j["now"] = info.now;
      j["posts"] = info.posts;
      j["edges"] = info.edges;
      j["clusters"] = info.clusters;
      j["config"] = nlohmann::json::parse(info.config_json);
      std::cout << j.dump() << '\n';
    }
  } catch (const Error& e) {
    std::cerr << "evtrack: " << e.what() << '\n';
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << "evtrack: " << e.what() << '\n';
    return kInvariant;
  }
  std::cout.flush();
  return kOk;
}
