#pragma once

// Internal nlohmann/json conversions shared by the core translation units.
// Not installed; public headers expose string- and path-based APIs only.

#include <json.hpp>

#include "groundcheck/document_graph.hpp"

namespace groundcheck::detail {

using json = nlohmann::ordered_json;

json node_to_json(const GraphNode& node);
GraphNode node_from_json(const json& j);

json document_graph_to_json(const DocumentGraph& g);
DocumentGraph document_graph_from_json(const json& j);

json aligned_graph_to_json_obj(const AlignedGraph& g);
AlignedGraph aligned_graph_from_json_obj(const json& j);

}  // namespace groundcheck::detail
