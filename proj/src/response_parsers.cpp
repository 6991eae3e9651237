#include "json.hpp"
#include "recov/llm_backend.hpp"

namespace recov {

using ojson = nlohmann::ordered_json;

std::string strip_thoughts(const std::string& text) {
  std::string out = text;
  for (;;) {
    auto open = out.find("<thought>");
    if (open == std::string::npos) break;
    auto close = out.find("</thought>", open);
    if (close == std::string::npos) break;
    out.erase(open, close + 10 - open);
  }
  return out;
}

namespace {

std::string scalar_text(const ojson& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_null()) return "null";
  return v.dump();
}

GraphNode parse_node(const std::string& name, const std::string& type, const ojson& v, const std::string& where) {
  GraphNode node;
  node.name = name;
  node.type_name = type;
  if (v.is_object()) {
    for (auto it = v.begin(); it != v.end(); ++it) {
      const std::string& key = it.key();
      auto bar = key.find('|');
      if (bar == std::string::npos)
        throw MalformedGraph("key '" + key + "' under " + where + " lacks the name|type separator");
      node.children.push_back(parse_node(key.substr(0, bar), key.substr(bar + 1), it.value(), where + "." + key));
    }
  } else if (v.is_array()) {
    for (std::size_t i = 0; i < v.size(); ++i) {
      std::string label = "[" + std::to_string(i) + "]";
      node.children.push_back(parse_node(label, "", v[i], where + label));
    }
  } else {
    node.value = scalar_text(v);
  }
  return node;
}

// Index just past the JSON object starting at `start`, or npos.
std::size_t object_end(const std::string& s, std::size_t start) {
  int depth = 0;
  bool in_string = false;
  for (std::size_t i = start; i < s.size(); ++i) {
    char c = s[i];
    if (in_string) {
      if (c == '\\') ++i;
      else if (c == '"') in_string = false;
      continue;
    }
    if (c == '"') in_string = true;
    else if (c == '{') ++depth;
    else if (c == '}' && --depth == 0) return i + 1;
  }
  return std::string::npos;
}

}  // namespace

ObjectGraph parse_graph_response(const std::string& text) {
  const std::string body = strip_thoughts(text);
  auto fence = body.find("```json");
  if (fence == std::string::npos) throw NoJsonBlock("response has no ```json block");
  auto start = fence + 7;
  auto close = body.find("```", start);
  std::string block = body.substr(start, close == std::string::npos ? std::string::npos : close - start);
  ojson doc;
  try {
    doc = ojson::parse(block);
  } catch (const ojson::parse_error& e) {
    throw MalformedGraph(std::string("invalid JSON: ") + e.what());
  }
  if (!doc.is_object() || doc.size() != 1) throw MalformedGraph("graph must be an object with exactly one root key");
  const std::string& key = doc.begin().key();
  auto bar = key.find('|');
  ObjectGraph g;
  g.root_name = key.substr(0, bar);
  if (g.root_name.empty()) throw MalformedGraph("empty root name");
  g.root = parse_node(g.root_name, bar == std::string::npos ? "" : key.substr(bar + 1), doc.begin().value(), key);
  return g;
}

AliasVerdict parse_alias_response(const std::string& text) {
  const std::string body = strip_thoughts(text);
  auto open = body.find('{');
  if (open == std::string::npos) throw NoJsonBlock("response has no JSON object");
  auto end = object_end(body, open);
  if (end == std::string::npos) throw NoJsonBlock("unterminated JSON object");
  ojson doc;
  try {
    doc = ojson::parse(body.substr(open, end - open));
  } catch (const ojson::parse_error& e) {
    throw NoJsonBlock(std::string("invalid JSON object: ") + e.what());
  }
  AliasVerdict v;
  for (auto it = doc.begin(); it != doc.end(); ++it) v.pairs[it.key()] = scalar_text(it.value());
  return v;
}

bool parse_verdict_response(const std::string& text) {
  const std::string body = strip_thoughts(text);
  auto t = body.find("<T>");
  auto f = body.find("<F>");
  if (t == std::string::npos && f == std::string::npos) throw NoVerdict("response contains neither <T> nor <F>");
  return t < f;
}

}  // namespace recov
