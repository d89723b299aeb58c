#pragma once

#include <cstdint>
#include <string>

#include "evtrack/ingest.hpp"
#include "evtrack/postnet.hpp"
#include "evtrack/similarity.hpp"
#include "evtrack/track.hpp"

namespace evtrack {

struct EngineConfig {
  SimilarityParams similarity;
  WindowConfig window;
  TrackConfig track;
  EntityMode entity_mode = EntityMode::PreferSupplied;
  std::string snapshot_path;        // empty: no periodic snapshots
  std::int64_t snapshot_interval = 0;  // ticks between snapshots; 0 disables

  /// Throws Error(InvalidConfig).
  void validate() const;
};

/// Keys: window_len, step, tick_unit, delta1, eps0, eps1, decay, phi, top_k,
/// annotate, strict_entities, snapshot_path, snapshot_interval. Missing keys
/// keep the values already in `base`. Throws Error(InvalidConfig).
EngineConfig config_from_json(const std::string& text, EngineConfig base = {});
EngineConfig load_config_file(const std::string& path, EngineConfig base = {});
std::string config_to_json(const EngineConfig& config);

}  // namespace evtrack
