#include "evtrack/records.hpp"

#include <json.hpp>

#include "evtrack/error.hpp"

namespace evtrack {

using json = nlohmann::json;

std::string op_to_json_line(const EvolutionOp& op) {
  json j;
  j["t"] = op.t;
  j["kind"] = to_string(op.kind);
  j["ids"] = op.ids;
  j["result_ids"] = op.result_ids;
  j["size_before"] = op.size_before;
  j["size_after"] = op.size_after;
  j["is_event_before"] = op.is_event_before;
  j["is_event_after"] = op.is_event_after;
  j["lineage"] = op.lineage;
  j["payload"] = op.payload;
  json ann = json::array();
  for (const auto& [e, s] : op.annotation) ann.push_back(json::array({e, s}));
  j["annotation"] = std::move(ann);
  return j.dump();
}

EvolutionOp op_from_json_line(std::string_view line) {
  try {
    json j = json::parse(line);
    EvolutionOp op;
    op.t = j.at("t").get<Moment>();
    op.kind = parse_op_kind(j.at("kind").get<std::string>());
    op.ids = j.value("ids", std::vector<ClusterId>{});
    op.result_ids = j.value("result_ids", std::vector<ClusterId>{});
    op.size_before = j.value("size_before", std::size_t{0});
    op.size_after = j.value("size_after", std::size_t{0});
    op.is_event_before = j.value("is_event_before", false);
    op.is_event_after = j.value("is_event_after", false);
    op.lineage = j.value("lineage", std::vector<ClusterId>{});
    op.payload = j.value("payload", std::vector<std::string>{});
    for (const auto& a : j.value("annotation", json::array())) {
      op.annotation.emplace_back(a.at(0).get<std::string>(), a.at(1).get<double>());
    }
    return op;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::MalformedRecord, e.what());
  }
}

std::string sketch_stats_line(const SketchStats& s) {
  json j;
  j["t"] = s.t;
  j["num_core"] = s.num_core;
  j["num_core_edges"] = s.num_core_edges;
  j["num_components"] = s.num_components;
  return j.dump();
}

}  // namespace evtrack
