#pragma once

#include <string>
#include <vector>

namespace recov {

// One node of a recovered object graph. Array and list elements are named
// "[i]"; map entries keep their field names.
struct GraphNode {
  std::string name;
  std::string type_name;
  std::string value;
  std::vector<GraphNode> children;

  const GraphNode* child(const std::string& child_name) const;
  bool operator==(const GraphNode&) const = default;
};

struct ObjectGraph {
  std::string root_name;
  GraphNode root;

  bool operator==(const ObjectGraph&) const = default;
};

enum class RootKeyStyle {
  name_only,       // "atomicRef": {...}, as in recovery outputs
  name_and_type,   // "atomicRef|T": {...}, as inside alias/def prompts
};

// Renders `{"root": {"child|type": ...}}`. Nodes with children become JSON
// objects; nodes without children carry their value string.
std::string render_graph_json(const ObjectGraph& graph, RootKeyStyle style, int indent);

std::size_t count_nodes(const GraphNode& node);

}  // namespace recov
