#pragma once

#include <string>
#include <string_view>

#include "evtrack/sketch.hpp"
#include "evtrack/track.hpp"

namespace evtrack {

/// One op as a single-line JSON object:
/// {t, kind, ids, result_ids, size_before, size_after, is_event_before,
///  is_event_after, lineage, payload, annotation}.
std::string op_to_json_line(const EvolutionOp& op);
/// Throws Error(MalformedRecord).
EvolutionOp op_from_json_line(std::string_view line);

/// {t, num_core, num_core_edges, num_components}
std::string sketch_stats_line(const SketchStats& stats);

}  // namespace evtrack
