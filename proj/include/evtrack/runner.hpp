#pragma once

#include <array>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "evtrack/config.hpp"
#include "evtrack/eval.hpp"
#include "evtrack/track.hpp"

namespace evtrack {

struct TickStat {
  Moment t = 0;
  std::size_t posts_in = 0;
  std::size_t posts_out = 0;
  std::size_t window_posts = 0;
  std::size_t num_core = 0;
  std::size_t num_clusters = 0;
  std::size_t num_events = 0;
  std::array<std::size_t, 6> ops{};  // indexed by OpKind
  double wall_ms = 0;
};

struct RunReport {
  std::string mode;
  EngineConfig config;
  std::vector<TickStat> ticks;
  std::uint64_t lines_read = 0;
  std::uint64_t skipped = 0;        // unparseable or malformed lines
  std::uint64_t dropped_empty = 0;  // posts without entities
  std::uint64_t late = 0;           // posts older than the current tick
  std::uint64_t duplicates = 0;     // ids already in the window

  std::array<std::size_t, 6> op_totals() const;
  /// Mean wall clock over ticks with index >= skip.
  double mean_tick_ms(std::size_t skip = 0) const;
  std::string to_json() const;
};

struct RunOptions {
  bool drain = false;  // keep ticking after the input ends until the window is empty
  bool emit_ops = true;
  std::ostream* stats_out = nullptr;  // per-tick sketch statistics (track only)
  OracleMode oracle_mode = OracleMode::BruteForce;
  double kappa = 0.9;
  /// Called after every tick (track only).
  std::function<void(const Engine&, const TickResult&)> on_tick;
};

/// Pull-based post source; returns nullopt at end of input.
using PostSource = std::function<std::optional<Post>()>;
PostSource vector_source(const std::vector<Post>& posts);

/// Streams posts through the incremental engine. When `engine` is given the
/// run continues from its state (snapshot resume).
RunReport run_track(const PostSource& source, const EngineConfig& config, std::ostream* ops_out,
                    const RunOptions& options = {}, Engine* engine = nullptr);
RunReport run_track(std::istream& in, const EngineConfig& config, std::ostream* ops_out,
                    const RunOptions& options = {}, Engine* engine = nullptr);

/// Per-tick from-scratch clustering linked by baseline_match.
RunReport run_oracle(const PostSource& source, const EngineConfig& config, std::ostream* ops_out,
                     const RunOptions& options = {});
RunReport run_oracle(std::istream& in, const EngineConfig& config, std::ostream* ops_out,
                     const RunOptions& options = {});

}  // namespace evtrack
