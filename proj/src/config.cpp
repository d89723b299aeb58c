#include "evtrack/config.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "evtrack/error.hpp"

namespace evtrack {

using json = nlohmann::json;

void EngineConfig::validate() const {
  similarity.validate();
  window.validate();
  if (track.phi < 1) throw Error(ErrorCode::InvalidConfig, "phi must be >= 1");
  if (snapshot_interval < 0) throw Error(ErrorCode::InvalidConfig, "snapshot_interval must be >= 0");
  if (snapshot_interval > 0 && snapshot_path.empty()) {
    throw Error(ErrorCode::InvalidConfig, "snapshot_interval needs snapshot_path");
  }
}

EngineConfig config_from_json(const std::string& text, EngineConfig c) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidConfig, e.what());
  }
  if (!j.is_object()) throw Error(ErrorCode::InvalidConfig, "config must be a JSON object");
  static const char* kKeys[] = {"window_len", "step", "tick_unit", "delta1", "eps0", "eps1", "decay",
                                "phi", "top_k", "annotate", "strict_entities", "snapshot_path",
                                "snapshot_interval"};
  for (const auto& [key, value] : j.items()) {
    if (std::find(std::begin(kKeys), std::end(kKeys), key) == std::end(kKeys)) {
      throw Error(ErrorCode::InvalidConfig, "unknown config key: " + key);
    }
  }
  try {
    c.window.window_len = j.value("window_len", c.window.window_len);
    c.window.step = j.value("step", c.window.step);
    c.window.tick_unit = j.value("tick_unit", c.window.tick_unit);
    c.similarity.delta1 = j.value("delta1", c.similarity.delta1);
    c.similarity.eps0 = j.value("eps0", c.similarity.eps0);
    c.similarity.eps1 = j.value("eps1", c.similarity.eps1);
    if (j.contains("decay")) c.similarity.decay = parse_decay_kind(j["decay"].get<std::string>());
    c.track.phi = j.value("phi", c.track.phi);
    c.track.top_k = j.value("top_k", c.track.top_k);
    c.track.annotate = j.value("annotate", c.track.annotate);
    if (j.contains("strict_entities")) {
      c.entity_mode = j["strict_entities"].get<bool>() ? EntityMode::RequireSupplied
                                                       : EntityMode::PreferSupplied;
    }
    c.snapshot_path = j.value("snapshot_path", c.snapshot_path);
    c.snapshot_interval = j.value("snapshot_interval", c.snapshot_interval);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidConfig, e.what());
  }
  return c;
}

EngineConfig load_config_file(const std::string& path, EngineConfig base) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::InvalidConfig, "cannot open config file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return config_from_json(ss.str(), std::move(base));
}

std::string config_to_json(const EngineConfig& c) {
  json j;
  j["window_len"] = c.window.window_len;
  j["step"] = c.window.step;
  j["tick_unit"] = c.window.tick_unit;
  j["delta1"] = c.similarity.delta1;
  j["eps0"] = c.similarity.eps0;
  j["eps1"] = c.similarity.eps1;
  j["decay"] = to_string(c.similarity.decay);
  j["phi"] = c.track.phi;
  j["top_k"] = c.track.top_k;
  j["annotate"] = c.track.annotate;
  j["strict_entities"] = c.entity_mode == EntityMode::RequireSupplied;
  j["snapshot_path"] = c.snapshot_path;
  j["snapshot_interval"] = c.snapshot_interval;
  return j.dump();
}

}  // namespace evtrack
