#pragma once

#include <string>

#include <json.hpp>

#include "backchain/engine.hpp"
#include "backchain/text.hpp"

namespace backchain {

inline constexpr std::string_view kTraceSchemaVersion = "trace/1";

enum class TraceFormat { Json, Dot };

nlohmann::ordered_json trace_to_json(const ProofTrace& trace);
nlohmann::ordered_json stats_to_json(const ModuleCallStats& stats);
/// Inverse of trace_to_json. Throws SchemaError on malformed input.
ProofTrace trace_from_json(const nlohmann::json& j);

/// Graphviz rendering: one node per trace node (goal text and outcome), plus
/// one box per fact that decided a goal. Nodes and fact checks answered from
/// a cache are filled blue; cycle cuts are dashed.
std::string trace_to_dot(const ProofTrace& trace, const Theory& theory,
                         const TemplatePack& pack = TemplatePack::v1());

std::string export_trace(const ProofTrace& trace, const Theory& theory, TraceFormat format);

}  // namespace backchain
