#include "recov/object_graph.hpp"

#include "json.hpp"

namespace recov {

using ojson = nlohmann::ordered_json;

const GraphNode* GraphNode::child(const std::string& child_name) const {
  for (const auto& c : children)
    if (c.name == child_name) return &c;
  return nullptr;
}

namespace {

ojson node_body(const GraphNode& node) {
  if (node.children.empty()) return node.value;
  ojson obj = ojson::object();
  for (const auto& c : node.children) obj[c.name + "|" + c.type_name] = node_body(c);
  return obj;
}

}  // namespace

std::string render_graph_json(const ObjectGraph& graph, RootKeyStyle style, int indent) {
  ojson root = ojson::object();
  std::string key = graph.root_name;
  if (style == RootKeyStyle::name_and_type) key += "|" + graph.root.type_name;
  root[key] = node_body(graph.root);
  return root.dump(indent);
}

std::size_t count_nodes(const GraphNode& node) {
  std::size_t n = 1;
  for (const auto& c : node.children) n += count_nodes(c);
  return n;
}

}  // namespace recov
