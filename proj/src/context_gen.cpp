#include "recov/context_gen.hpp"

#include <regex>
#include <set>

#include "recov/llm_backend.hpp"

namespace recov {

namespace {

bool is_quoted(const std::string& s) { return s.size() >= 2 && s.front() == '"' && s.back() == '"'; }

std::size_t unquoted_length(const std::string& s) {
  std::size_t n = 0;
  for (std::size_t i = 1; i + 1 < s.size(); ++i) {
    if (s[i] == '\\') ++i;
    ++n;
  }
  return n;
}

std::string placeholder_text(std::size_t length) {
  std::string out;
  for (std::size_t i = 0; i < length; ++i) out += static_cast<char>('a' + i % 26);
  return "\"" + out + "\"";
}

bool is_int_literal(const std::string& s) { return std::regex_match(s, std::regex("-?[0-9]+")); }

enum class ElemKind { integer, text, builder, boolean, null };

ElemKind classify(const std::string& item, bool builder_elements) {
  if (is_quoted(item)) return builder_elements ? ElemKind::builder : ElemKind::text;
  if (is_int_literal(item)) return ElemKind::integer;
  if (item == "true" || item == "false") return ElemKind::boolean;
  if (item == "null") return ElemKind::null;
  throw UnsupportedShape("cannot rebuild element '" + item + "'");
}

std::string element_expr(ElemKind kind, const std::string& item, std::size_t position) {
  switch (kind) {
    case ElemKind::integer: return std::to_string(position);
    case ElemKind::text: return placeholder_text(unquoted_length(item));
    case ElemKind::builder: return "new StrBuf()";
    case ElemKind::boolean: return "true";
    case ElemKind::null: return "null";
  }
  return "null";
}

// Postfix chain of `root` inside `code`, e.g. "list.get(i).charAt(1)";
// bare identifier arguments become 0.
std::string call_chain(const std::string& code, const std::string& root) {
  std::regex word("(^|[^A-Za-z0-9_$.])" + root + "(?![A-Za-z0-9_$])");
  std::smatch m;
  if (!std::regex_search(code, m, word)) throw UnsupportedShape("step code does not mention '" + root + "'");
  std::size_t pos = m.position(0) + m.length(0);
  std::string chain = root;
  auto skip_balanced = [&](char open, char close) {
    int depth = 0;
    std::size_t start = pos;
    for (; pos < code.size(); ++pos) {
      if (code[pos] == '"') {
        for (++pos; pos < code.size() && code[pos] != '"'; ++pos)
          if (code[pos] == '\\') ++pos;
        continue;
      }
      if (code[pos] == open) ++depth;
      if (code[pos] == close && --depth == 0) {
        ++pos;
        return code.substr(start, pos - start);
      }
    }
    throw UnsupportedShape("unbalanced call in step code");
  };
  auto rewrite_args = [](const std::string& group) {
    std::string inner = group.substr(1, group.size() - 2);
    std::string out;
    for (const auto& arg : split_rendered_items(inner)) {
      if (!out.empty()) out += ", ";
      out += is_identifier(arg) && arg != "true" && arg != "false" && arg != "null" ? "0" : arg;
    }
    return group.front() + out + group.back();
  };
  while (pos < code.size()) {
    if (code[pos] == '.') {
      std::size_t start = ++pos;
      while (pos < code.size() && (std::isalnum(static_cast<unsigned char>(code[pos])) || code[pos] == '_')) ++pos;
      if (start == pos) break;
      chain += "." + code.substr(start, pos - start);
    } else if (code[pos] == '(') {
      chain += rewrite_args(skip_balanced('(', ')'));
    } else if (code[pos] == '[') {
      chain += rewrite_args(skip_balanced('[', ']'));
    } else {
      break;
    }
  }
  return chain;
}

// Method names called on the root and on the value the first call returns.
std::pair<std::string, std::string> chain_methods(const std::string& chain) {
  std::smatch m;
  std::regex first("^[A-Za-z_$][A-Za-z0-9_$]*\\.([A-Za-z_][A-Za-z0-9_]*)\\((?:[^()]|\\([^()]*\\))*\\)(?:\\.([A-Za-z_][A-Za-z0-9_]*)\\()?");
  if (!std::regex_search(chain, m, first)) return {};
  return {m[1].str(), m[2].matched ? m[2].str() : std::string()};
}

}  // namespace

std::vector<std::string> split_rendered_items(const std::string& body) {
  std::vector<std::string> items;
  std::string cur;
  int depth = 0;
  bool in_string = false;
  for (std::size_t i = 0; i < body.size(); ++i) {
    char c = body[i];
    if (in_string) {
      cur += c;
      if (c == '\\' && i + 1 < body.size()) cur += body[++i];
      else if (c == '"') in_string = false;
      continue;
    }
    if (c == '"') in_string = true;
    if (c == '[' || c == '{' || c == '(') ++depth;
    if (c == ']' || c == '}' || c == ')') --depth;
    if (c == ',' && depth == 0) {
      auto t = mini::trim(cur);
      if (!t.empty()) items.push_back(t);
      cur.clear();
      continue;
    }
    cur += c;
  }
  auto t = mini::trim(cur);
  if (!t.empty()) items.push_back(t);
  return items;
}

Probe synthesize_probe(const std::string& step_code, const std::string& root_name, const std::string& root_value,
                       const std::string& root_type, int budget_lines) {
  if (budget_lines < 3) throw UnsupportedShape("probe budget must be at least 3 lines");
  if (!is_identifier(root_name)) throw UnsupportedShape("invalid root name '" + root_name + "'");
  const std::string chain = call_chain(step_code, root_name);
  auto [first_method, element_method] = chain_methods(chain);


  const std::string& r = root_name;
  std::vector<std::string> lines;
  auto finish = [&] {
    lines.push_back("probe_result = " + chain + ";");
    if (static_cast<int>(lines.size()) > budget_lines)
      throw UnsupportedShape("probe needs " + std::to_string(lines.size()) + " lines, budget is " +
                             std::to_string(budget_lines));
  };

  if (root_type == "List") {
    if (root_value.size() < 2 || root_value.front() != '[' || root_value.back() != ']')
      throw UnsupportedShape("list value '" + root_value + "' is not bracketed");
    auto items = split_rendered_items(root_value.substr(1, root_value.size() - 2));
    bool builders = !element_method.empty() && (first_method == "get" || first_method == "getFirst");
    lines.push_back(r + " = new List();");
    std::size_t straight = 0;
    for (const auto& item : items) straight += classify(item, builders) == ElemKind::builder ? 2 : 1;
    if (static_cast<int>(lines.size() + straight + 1) <= budget_lines) {
      for (std::size_t i = 0; i < items.size(); ++i) {
        ElemKind kind = classify(items[i], builders);
        lines.push_back(r + ".add(" + element_expr(kind, items[i], i) + ");");
        if (kind == ElemKind::builder)
          lines.push_back(r + ".get(" + std::to_string(i) + ").append(" +
                          placeholder_text(unquoted_length(items[i])) + ");");
      }
    } else {
      ElemKind kind = classify(items.front(), builders);
      std::string elem = kind == ElemKind::integer ? "probe_i"
                         : kind == ElemKind::builder
                             ? "new StrBuf().append(" + placeholder_text(unquoted_length(items.front())) + ")"
                             : element_expr(kind, items.front(), 0);
      lines.push_back("probe_i = 0;");
      lines.push_back("while (probe_i < " + std::to_string(items.size()) + ") {");
      lines.push_back("  " + r + ".add(" + elem + ");");
      lines.push_back("  probe_i = probe_i + 1;");
      lines.push_back("}");
    }
  } else if (root_type == "Map") {
    if (root_value.size() < 2 || root_value.front() != '{' || root_value.back() != '}')
      throw UnsupportedShape("map value '" + root_value + "' is not braced");
    auto items = split_rendered_items(root_value.substr(1, root_value.size() - 2));
    bool builders = !element_method.empty() && first_method == "get";
    lines.push_back(r + " = new Map();");
    std::vector<std::pair<std::string, std::string>> entries;
    for (const auto& item : items) {
      std::size_t eq = std::string::npos;
      bool in_string = false;
      for (std::size_t i = 0; i < item.size(); ++i) {
        if (item[i] == '"' && (i == 0 || item[i - 1] != '\\')) in_string = !in_string;
        if (!in_string && item[i] == '=') {
          eq = i;
          break;
        }
      }
      if (eq == std::string::npos) throw UnsupportedShape("map entry '" + item + "' has no '='");
      std::string key = mini::trim(item.substr(0, eq));
      if (!is_quoted(key) && !is_int_literal(key)) throw UnsupportedShape("unsupported map key '" + key + "'");
      entries.emplace_back(key, mini::trim(item.substr(eq + 1)));
    }
    std::size_t straight = 0;
    for (const auto& [k, v] : entries) straight += classify(v, builders) == ElemKind::builder ? 2 : 1;
    if (static_cast<int>(lines.size() + straight + 1) <= budget_lines) {
      for (std::size_t i = 0; i < entries.size(); ++i) {
        const auto& [key, value] = entries[i];
        ElemKind kind = classify(value, builders);
        lines.push_back(r + ".put(" + key + ", " + element_expr(kind, value, i) + ");");
        if (kind == ElemKind::builder)
          lines.push_back(r + ".get(" + key + ").append(" + placeholder_text(unquoted_length(value)) + ");");
      }
    } else {
      ElemKind kind = classify(entries.front().second, builders);
      std::string value = kind == ElemKind::integer ? "probe_i"
                          : kind == ElemKind::builder
                              ? "new StrBuf().append(" + placeholder_text(unquoted_length(entries.front().second)) + ")"
                              : element_expr(kind, entries.front().second, 0);
      lines.push_back("probe_i = 0;");
      lines.push_back("while (probe_i < " + std::to_string(entries.size()) + ") {");
      lines.push_back("  " + r + ".put(probe_i, " + value + ");");
      lines.push_back("  probe_i = probe_i + 1;");
      lines.push_back("}");
    }
  } else if (root_type == "StrBuf") {
    lines.push_back(r + " = new StrBuf();");
    if (!root_value.empty()) lines.push_back(r + ".append(" + placeholder_text(root_value.size()) + ");");
  } else if (root_type == "int") {
    lines.push_back(r + " = 1;");
  } else if (root_type == "string") {
    lines.push_back(r + " = " + placeholder_text(root_value.size()) + ";");
  } else if (root_type == "bool") {
    lines.push_back(r + " = true;");
  } else {
    throw UnsupportedShape("no probe template for type '" + root_type + "'");
  }
  finish();

  Probe probe;
  probe.root_name = root_name;
  probe.root_type = root_type;
  probe.line_count = static_cast<int>(lines.size());
  std::string text;
  for (const auto& l : lines) text += l + "\n";
  probe.program.files[kProbeFile] = text;
  probe.program.entry = "main";
  return probe;
}

PromptExample harvest_example(const Probe& probe, const std::string& focal_path) {
  Execution exec;
  try {
    exec = run_full(probe.program, 0);
  } catch (const Error& e) {
    throw ProbeFault(std::string("probe does not parse: ") + e.what());
  }
  if (exec.fault) throw ProbeFault("probe faulted: " + exec.fault->message);
  // Last top-level step of the probe: the final statement.
  std::optional<StepId> last;
  for (const auto& s : exec.trace.steps())
    if (s.instruction.file_id == kProbeFile && !s.caller_step) last = s.step_id;
  if (!last) throw ProbeFault("probe executed no statements");
  auto snap = snapshot_before(exec, *last);
  auto it = snap.locals.find(probe.root_name);
  if (it == snap.locals.end()) throw ProbeFault("probe root '" + probe.root_name + "' is not live");

  ObjectGraph graph{probe.root_name, graph_from_heap(snap.heap, probe.root_name, it->second)};
  auto structures = class_structures(*exec.linked);
  std::vector<std::string> used;
  std::set<std::string> seen;
  std::vector<const GraphNode*> stack{&graph.root};
  while (!stack.empty()) {
    const GraphNode* n = stack.back();
    stack.pop_back();
    auto s = structures.find(n->type_name);
    if (s != structures.end() && seen.insert(n->type_name).second) used.push_back(s->second);
    for (auto c = n->children.rbegin(); c != n->children.rend(); ++c) stack.push_back(&*c);
  }
  PromptExample ex;
  ex.input_block = render_example_input(mini::render_value(snap.heap, it->second), graph.root.type_name, used,
                                        focal_path);
  ex.output_block = render_example_output(graph);
  return ex;
}

}  // namespace recov
