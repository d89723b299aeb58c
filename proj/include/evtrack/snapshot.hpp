#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <string_view>

#include "evtrack/config.hpp"
#include "evtrack/track.hpp"

namespace evtrack {

inline constexpr std::uint32_t kSnapshotVersion = 1;

struct LoadedSnapshot {
  EngineConfig config;
  std::unique_ptr<Engine> engine;
};

struct SnapshotInfo {
  std::uint32_t version = 0;
  Moment now = 0;
  std::size_t posts = 0;
  std::size_t edges = 0;
  std::size_t clusters = 0;
  std::string config_json;
};

/// Binary engine state: magic "EVTRSNAP", version, payload length, payload,
/// FNV-1a 64 checksum of the payload.
std::string serialize_snapshot(const Engine& engine, const EngineConfig& config);
/// Throws Error(VersionMismatch) or Error(CorruptSnapshot).
LoadedSnapshot deserialize_snapshot(std::string_view bytes);
SnapshotInfo inspect_snapshot(std::string_view bytes);

/// Writes atomically through a temporary file. Throws Error(Io).
void save_snapshot(const Engine& engine, const EngineConfig& config, const std::string& path);
LoadedSnapshot load_snapshot(const std::string& path);
std::string read_file(const std::string& path);

}  // namespace evtrack
