#include "recov/slicer.hpp"

#include <algorithm>
#include <deque>
#include <regex>
#include <unordered_map>

#include "json.hpp"
#include "recov/context_gen.hpp"
#include "recov/llm_backend.hpp"

namespace recov {

namespace {

using json = nlohmann::ordered_json;

const std::set<VarId> kEmpty;

std::string step_str(StepId s) { return std::to_string(s.value); }

// Recorded instances referenced by steps before the query, grouped by location.
using LocationIndex = std::unordered_map<std::string, std::vector<VarId>>;

LocationIndex index_locations(const Trace& trace, StepId query_step) {
  LocationIndex idx;
  for (const auto& s : trace.steps()) {
    if (s.step_id >= query_step) break;
    for (const auto* list : {&s.reads, &s.writes})
      for (VarId id : *list) {
        const auto& v = trace.variable(id);
        if (v.location.kind == MemoryLocation::Kind::recorded) idx[v.location.token].push_back(id);
      }
  }
  return idx;
}

// Adds `id` and every recorded instance sharing its location.
std::size_t add_with_closure(AliasMap& map, const MemoryLocation& key, VarId id, const Trace& trace,
                             const LocationIndex& idx) {
  std::size_t added = map.add(key, id) ? 1 : 0;
  const auto& v = trace.variable(id);
  if (v.location.kind != MemoryLocation::Kind::recorded) return added;
  auto it = idx.find(v.location.token);
  if (it == idx.end()) return added;
  for (VarId other : it->second) added += map.add(key, other) ? 1 : 0;
  return added;
}

bool intersects(const std::vector<VarId>& ids, const std::set<VarId>& set) {
  return std::any_of(ids.begin(), ids.end(), [&](VarId id) { return set.count(id) > 0; });
}

const VariableInstance* find_named(const Trace& trace, const std::vector<VarId>& ids, const std::string& name) {
  for (VarId id : ids) {
    const auto& v = trace.variable(id);
    if (v.name == name) return &v;
  }
  return nullptr;
}

std::vector<std::string> split_args(const std::string& text) { return split_rendered_items(text); }

ObjectGraph root_only_graph(const VariableInstance& root) {
  return ObjectGraph{root.name, GraphNode{root.name, root.type_name, root.content, {}}};
}

template <class F>
auto guarded(std::vector<ProvenanceEvent>* log, std::optional<StepId> step, const std::string& what, F&& fn)
    -> std::optional<decltype(fn())> {
  try {
    return fn();
  } catch (const std::exception& e) {
    if (log) log->push_back({"degraded", step, what + ": " + e.what(), {}});
    return std::nullopt;
  }
}

}  // namespace

bool SliceResult::degraded() const { return count("degraded") > 0; }

std::size_t SliceResult::count(const std::string& kind) const {
  return static_cast<std::size_t>(
      std::count_if(provenance.begin(), provenance.end(), [&](const auto& e) { return e.kind == kind; }));
}

std::string serialize_slice_result(const SliceResult& r) {
  json j;
  j["def_step"] = r.def_step ? json(r.def_step->value) : json(nullptr);
  j["case"] = to_string(r.case_kind);
  json events = json::array();
  for (const auto& e : r.provenance) {
    json ev;
    ev["kind"] = e.kind;
    ev["step"] = e.step ? json(e.step->value) : json(nullptr);
    ev["detail"] = e.detail;
    ev["notes"] = e.notes;
    events.push_back(std::move(ev));
  }
  j["provenance"] = std::move(events);
  return j.dump(2);
}

SliceResult parse_slice_result(const std::string& text) {
  try {
    auto j = json::parse(text);
    SliceResult r;
    if (!j.at("def_step").is_null()) r.def_step = StepId{j.at("def_step").get<std::uint64_t>()};
    auto kind = parse_case_kind(j.at("case").get<std::string>());
    if (!kind) throw Error("MalformedResult", "unknown case '" + j.at("case").get<std::string>() + "'");
    r.case_kind = *kind;
    for (const auto& ev : j.at("provenance")) {
      ProvenanceEvent e;
      e.kind = ev.at("kind").get<std::string>();
      if (!ev.at("step").is_null()) e.step = StepId{ev.at("step").get<std::uint64_t>()};
      e.detail = ev.at("detail").get<std::string>();
      e.notes = ev.at("notes").get<std::vector<std::string>>();
      r.provenance.push_back(std::move(e));
    }
    return r;
  } catch (const json::exception& e) {
    throw Error("MalformedResult", e.what());
  }
}

const std::set<VarId>& AliasMap::at(const MemoryLocation& loc) const {
  auto it = entries_.find(loc);
  return it == entries_.end() ? kEmpty : it->second;
}

bool AliasMap::add(const MemoryLocation& loc, VarId id) { return entries_[loc].insert(id).second; }

std::vector<PathNode> resolve_path_nodes(const Trace& trace, const SliceQuery& query) {
  const Step* q = trace.find_step(query.step_id);
  if (!q) {
    std::string range = trace.step_count() ? "1.." + std::to_string(trace.step_count()) : "empty trace";
    throw InvalidQuery("step " + step_str(query.step_id) + " is not in the trace (valid: " + range + ")");
  }
  const std::string& root = query.path.root_name();
  const VariableInstance* root_var = find_named(trace, q->reads, root);
  if (!root_var) {
    for (auto it = trace.steps().rbegin(); it != trace.steps().rend() && !root_var; ++it) {
      if (it->step_id >= query.step_id) continue;
      root_var = find_named(trace, it->writes, root);
      if (!root_var) root_var = find_named(trace, it->reads, root);
    }
  }
  if (!root_var) throw InvalidQuery("no instance named '" + root + "' is visible at step " + step_str(query.step_id));

  std::vector<PathNode> nodes;
  const VariableInstance* cur = root_var;
  for (std::size_t len = 1; len <= query.path.size(); ++len) {
    ReferencePath prefix = query.path.prefix(len);
    const VariableInstance* inst = nullptr;
    if (len == 1) {
      inst = root_var;
    } else {
      const auto& seg = query.path.segments()[len - 1];
      if (cur)
        for (const auto& edge : cur->children)
          if (edge.label == seg.edge_label()) inst = trace.find_variable(edge.var_id);
      if (!inst) inst = find_named(trace, q->reads, render_path(prefix));
    }
    PathNode node{prefix, std::nullopt, {}};
    if (inst) {
      node.instance = inst->var_id;
      node.loc = inst->location;
    } else {
      node.loc = MemoryLocation{MemoryLocation::Kind::synthetic, "q" + step_str(query.step_id) + ":" + render_path(prefix)};
    }
    nodes.push_back(std::move(node));
    cur = inst;
  }
  return nodes;
}

std::optional<VarId> is_must_alias(const Trace& trace, const Step& step, const std::set<VarId>& aliases) {
  static const std::regex assign(R"(^\s*([A-Za-z_$][A-Za-z0-9_$]*)\s*=\s*([A-Za-z_$][A-Za-z0-9_$]*(?:\.[A-Za-z_$][A-Za-z0-9_$]*)*)\s*;?\s*$)");
  const std::string& code = step.instruction.code_text;
  std::smatch m;
  if (std::regex_match(code, m, assign)) {
    const auto* src = find_named(trace, step.reads, m[2].str());
    const auto* dst = find_named(trace, step.writes, m[1].str());
    if (src && dst && aliases.count(src->var_id)) return dst->var_id;
    return std::nullopt;
  }
  // Parameter binding at a function entry: positional match against the
  // caller's argument text.
  static const std::regex entry(R"(^\s*fun\s+([A-Za-z_$][A-Za-z0-9_$]*)\s*\(([^)]*)\))");
  if (!std::regex_search(code, m, entry) || !step.caller_step) return std::nullopt;
  const std::string fname = m[1].str();
  auto params = split_args(m[2].str());
  const Step* caller = trace.find_step(*step.caller_step);
  if (!caller) return std::nullopt;
  const std::string& ccode = caller->instruction.code_text;
  std::size_t pos = std::string::npos;
  if (fname == "init") {
    static const std::regex ctor(R"(new\s+[A-Za-z_$][A-Za-z0-9_$]*\s*\()");
    std::smatch cm;
    if (std::regex_search(ccode, cm, ctor)) pos = cm.position(0) + cm.length(0) - 1;
  } else {
    std::regex call("(^|[^A-Za-z0-9_$])" + fname + R"(\s*\()");
    std::smatch cm;
    if (std::regex_search(ccode, cm, call)) pos = cm.position(0) + cm.length(0) - 1;
  }
  if (pos == std::string::npos) return std::nullopt;
  int depth = 0;
  std::size_t end = pos;
  for (; end < ccode.size(); ++end) {
    if (ccode[end] == '(') ++depth;
    if (ccode[end] == ')' && --depth == 0) break;
  }
  if (end >= ccode.size()) return std::nullopt;
  auto args = split_args(ccode.substr(pos + 1, end - pos - 1));
  for (std::size_t i = 0; i < args.size() && i < params.size(); ++i) {
    const auto* src = find_named(trace, caller->reads, args[i]);
    if (!src || !aliases.count(src->var_id)) continue;
    if (const auto* dst = find_named(trace, step.writes, params[i])) return dst->var_id;
  }
  return std::nullopt;
}

std::set<VarId> infer_alias_over_trace(const std::vector<PathNode>& nodes, std::size_t index, AliasMap& alias_map,
                                       const AliasScanContext& ctx) {
  const PathNode& node = nodes.at(index);
  const Trace& trace = ctx.trace;
  LocationIndex locs = index_locations(trace, ctx.query_step);
  auto log = [&](ProvenanceEvent e) {
    if (ctx.log) ctx.log->push_back(std::move(e));
  };

  if (node.instance) {
    std::size_t n = add_with_closure(alias_map, node.loc, *node.instance, trace, locs);
    for (const auto& s : trace.steps()) {
      if (s.step_id >= ctx.query_step) break;
      if (auto hit = is_must_alias(trace, s, alias_map.at(node.loc))) {
        if (alias_map.add(node.loc, *hit)) ++n;
        log({"must_alias", s.step_id, render_path(node.path) + " <- " + trace.variable(*hit).name, {}});
      }
    }
    log({"location_closure", std::nullopt,
         render_path(node.path) + " @" + node.loc.token + ": " + std::to_string(alias_map.at(node.loc).size()) +
             " instances",
         {}});
    (void)n;
    return alias_map.at(node.loc);
  }

  const VarId root_id = *nodes.front().instance;
  for (const auto& s : trace.steps()) {
    if (s.step_id >= ctx.query_step) break;
    if (auto hit = is_must_alias(trace, s, alias_map.at(node.loc))) {
      add_with_closure(alias_map, node.loc, *hit, trace, locs);
      log({"must_alias", s.step_id, render_path(node.path) + " <- " + trace.variable(*hit).name, {}});
      continue;
    }
    if (!s.instruction.is_call_site || !ctx.est) continue;
    std::set<VarId> guard;
    for (std::size_t k = 0; k <= index; ++k) {
      const auto& set = alias_map.at(nodes[k].loc);
      guard.insert(set.begin(), set.end());
    }
    guard.insert(root_id);
    if (!intersects(s.reads, guard)) continue;
    AliasRequest req{&trace, s.step_id, ctx.query_step, root_id, ctx.known_graph, {node.path}};
    auto verdict = guarded(ctx.log, s.step_id, "alias inference failed",
                           [&] { return ctx.est->infer_alias(req); });
    if (!verdict) continue;
    std::vector<std::string> affirmed;
    for (const auto& [field, expr] : verdict->value.pairs) {
      bool any = false;
      for (const auto* list : {&s.reads, &s.writes})
        for (VarId id : *list)
          if (trace.variable(id).name == expr) {
            add_with_closure(alias_map, node.loc, id, trace, locs);
            any = true;
          }
      if (any) affirmed.push_back(field + "=" + expr);
    }
    std::string detail = render_path(node.path) + ": ";
    for (std::size_t i = 0; i < affirmed.size(); ++i) detail += (i ? ", " : "") + affirmed[i];
    if (affirmed.empty()) detail += "no alias";
    log({"alias_inference", s.step_id, detail, verdict->notes});
  }
  return alias_map.at(node.loc);
}

std::set<VarId> get_handle(const std::vector<PathNode>& nodes, const AliasMap& alias_map) {
  std::set<VarId> h;
  for (const auto& n : nodes) {
    const auto& set = alias_map.at(n.loc);
    h.insert(set.begin(), set.end());
    if (n.instance) h.insert(*n.instance);
  }
  return h;
}

DefVerdict is_def_step(const Trace& trace, const AliasMap& alias_map, const std::vector<PathNode>& nodes,
                       const Step& step, StepId query_step, ExecutionEstimator* est, const ObjectGraph& known_graph,
                       std::vector<ProvenanceEvent>* log) {
  const PathNode& leaf = nodes.back();
  std::set<std::string> leaf_locs;
  if (leaf.instance) leaf_locs.insert(leaf.loc.token);
  for (VarId id : alias_map.at(leaf.loc)) {
    const auto& v = trace.variable(id);
    if (v.location.kind == MemoryLocation::Kind::recorded) leaf_locs.insert(v.location.token);
  }
  for (VarId w : step.writes) {
    const auto& v = trace.variable(w);
    if (v.location.kind == MemoryLocation::Kind::recorded && leaf_locs.count(v.location.token)) {
      if (log) log->push_back({"fast_path", step.step_id, v.name + " @" + v.location.token, {}});
      return DefVerdict::direct;
    }
  }
  std::set<VarId> handle = get_handle(nodes, alias_map);
  if (!step.instruction.is_call_site || !intersects(step.reads, handle) || !est) return DefVerdict::no;
  DefRequest req{&trace, step.step_id, query_step, leaf.path, known_graph};
  auto verdict = guarded(log, step.step_id, "definition inference failed", [&] { return est->infer_is_def(req); });
  if (!verdict) return DefVerdict::no;
  if (log)
    log->push_back({"def_inference", step.step_id, verdict->value ? "writes" : "does not write", verdict->notes});
  return verdict->value ? DefVerdict::via_call : DefVerdict::no;
}

Estimate<ObjectGraph> recover_query_root(const Trace& trace, const SliceQuery& query, ExecutionEstimator& est,
                                         const SliceOptions& opts, std::vector<ProvenanceEvent>* log) {
  std::vector<PathNode> nodes = resolve_path_nodes(trace, query);
  const Step& q = trace.step(query.step_id);
  const VariableInstance& root = trace.variable(*nodes.front().instance);
  RecoveryRequest req;
  req.root_name = root.name;
  req.root_value = root.content;
  req.root_type = root.type_name;
  req.step_code = q.instruction.code_text;
  req.focal_path = query.path;
  req.query_step = query.step_id;
  std::set<std::string> types{root.type_name};
  for (const auto& edge : root.children) types.insert(trace.variable(edge.var_id).type_name);
  for (const auto& t : types)
    if (auto it = opts.class_structures.find(t); it != opts.class_structures.end())
      req.class_structures.push_back(it->second);
  if (opts.adaptive_context) {
    try {
      Probe probe = synthesize_probe(req.step_code, root.name, root.content, root.type_name, opts.probe_budget);
      req.adaptive_example = harvest_example(probe, render_path(query.path));
      if (log)
        log->push_back({"harvest_example", query.step_id,
                        std::to_string(probe.line_count) + "-line probe for " + root.type_name, {}});
    } catch (const Error& e) {
      if (log) log->push_back({"harvest_skipped", query.step_id, e.code() + ": " + e.what(), {}});
    }
  }
  return est.recover_object_graph(req);
}

SliceResult slice(const Trace& trace, const SliceQuery& query, ExecutionEstimator& est, const SliceOptions& opts) {
  SliceResult result;
  auto* log = &result.provenance;
  std::vector<PathNode> nodes = resolve_path_nodes(trace, query);
  const VariableInstance& root = trace.variable(*nodes.front().instance);

  ObjectGraph known = root_only_graph(root);
  bool recovered = true;
  bool needs_recovery = std::any_of(nodes.begin(), nodes.end(), [](const PathNode& n) { return !n.instance; });
  if (needs_recovery) {
    auto graph = guarded(log, query.step_id, "recovery failed",
                         [&] { return recover_query_root(trace, query, est, opts, log); });
    if (graph) {
      known = graph->value;
      log->push_back({"recovery", query.step_id,
                      root.name + ": " + std::to_string(count_nodes(known.root)) + " nodes", graph->notes});
    } else {
      recovered = false;
    }
  }

  AliasMap alias_map;
  AliasScanContext ctx{trace, query.step_id, recovered ? &est : nullptr, known, log};
  for (std::size_t i = 0; i < nodes.size(); ++i) infer_alias_over_trace(nodes, i, alias_map, ctx);

  const auto& steps = trace.steps();
  for (auto it = steps.rbegin(); it != steps.rend(); ++it) {
    if (it->step_id >= query.step_id) continue;
    DefVerdict v = is_def_step(trace, alias_map, nodes, *it, query.step_id, &est, known, log);
    if (v == DefVerdict::no) continue;
    result.def_step = it->step_id;
    result.case_kind = v == DefVerdict::direct ? CaseKind::case1_direct : CaseKind::case2_call_site;
    return result;
  }
  return result;
}

std::vector<ClosureEntry> slice_closure(const Trace& trace, const SliceQuery& query, ExecutionEstimator& est,
                                        const SliceOptions& opts, std::size_t max_queries) {
  std::vector<ClosureEntry> out;
  std::set<std::pair<std::uint64_t, std::string>> seen{{query.step_id.value, render_path(query.path)}};
  std::deque<SliceQuery> pending{query};
  while (!pending.empty() && out.size() < max_queries) {
    SliceQuery q = pending.front();
    pending.pop_front();
    SliceResult r;
    try {
      r = slice(trace, q, est, opts);
    } catch (const InvalidQuery&) {
      if (out.empty()) throw;
      continue;
    }
    if (r.def_step) {
      for (VarId id : trace.step(*r.def_step).reads) {
        const std::string& name = trace.variable(id).name;
        try {
          SliceQuery next{*r.def_step, parse_path(name)};
          if (seen.insert({next.step_id.value, render_path(next.path)}).second) pending.push_back(next);
        } catch (const PathSyntaxError&) {
        }
      }
    }
    out.push_back({q, std::move(r)});
  }
  return out;
}

}  // namespace recov
