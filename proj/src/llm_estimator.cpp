#include <set>

#include "recov/llm_backend.hpp"

namespace recov {

namespace {

bool primitive_type(const std::string& t) { return t == "int" || t == "bool" || t == "string" || t == "null"; }

template <class F>
auto with_backend(F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const TransportError& e) {
    throw BackendUnavailable(e.what());
  } catch (const CacheMissInOfflineMode& e) {
    throw BackendUnavailable(e.what());
  }
}

std::vector<const VariableInstance*> step_instances(const Trace& trace, const Step& step) {
  std::vector<const VariableInstance*> out;
  for (VarId id : step.reads) out.push_back(&trace.variable(id));
  for (VarId id : step.writes) out.push_back(&trace.variable(id));
  return out;
}

}  // namespace

LlmEstimator::LlmEstimator(std::shared_ptr<CompletionClient> client) : client_(std::move(client)) {}

Completion LlmEstimator::ask(const std::string& prompt, std::vector<std::string>& notes) {
  Completion c = client_->complete_cached(prompt);
  notes.push_back("cache_key:" + c.key);
  return c;
}

Estimate<ObjectGraph> LlmEstimator::recover_object_graph(const RecoveryRequest& req) {
  std::vector<std::string> notes;
  const std::string prompt = build_recovery_prompt(req);
  auto attempt = [&](const std::string& p) {
    Completion c = with_backend([&] { return ask(p, notes); });
    ObjectGraph g = parse_graph_response(c.response);
    if (g.root_name != req.root_name)
      throw MalformedGraph("root '" + g.root_name + "' does not match '" + req.root_name + "'");
    if (g.root.type_name.empty()) g.root.type_name = req.root_type;
    if (req.focal_path && !resolve_in_graph(*req.focal_path, g))
      throw MalformedGraph("graph does not contain the focal path " + render_path(*req.focal_path));
    return g;
  };
  try {
    try {
      return {attempt(prompt), notes};
    } catch (const NoJsonBlock& e) {
      notes.push_back("repair");
      return {attempt(repair_prompt(prompt, e.what())), notes};
    } catch (const MalformedGraph& e) {
      notes.push_back("repair");
      return {attempt(repair_prompt(prompt, e.what())), notes};
    }
  } catch (const NoJsonBlock& e) {
    throw RecoveryFailed(e.what());
  } catch (const MalformedGraph& e) {
    throw RecoveryFailed(e.what());
  } catch (const BackendUnavailable& e) {
    throw RecoveryFailed(std::string("backend unavailable: ") + e.what());
  }
}

Estimate<AliasVerdict> LlmEstimator::infer_alias(const AliasRequest& req) {
  const Trace& trace = *req.trace;
  const Step& step = trace.step(req.step);
  const VariableInstance& root = trace.variable(req.known_root);

  AliasPromptInput in;
  in.code = step.instruction.code_text;
  in.callee_source = step.instruction.callee_source;
  in.root_name = root.name;
  in.known_graph = req.known_graph;
  in.fields_of_interest = req.fields_of_interest;
  std::set<std::string> seen_vars;
  std::set<std::string> seen_aliases;
  for (const VariableInstance* v : step_instances(trace, step)) {
    if (seen_vars.insert(v->name).second) {
      in.variables.emplace_back(v->name, v->type_name);
      if (!primitive_type(v->type_name)) {
        AliasPromptInput::FieldListing listing{v->name, {}};
        for (const auto& edge : v->children)
          listing.fields.emplace_back(edge.label, trace.variable(edge.var_id).type_name);
        in.field_listings.push_back(std::move(listing));
      }
    }
    if (v->location == root.location && seen_aliases.insert(v->name).second)
      in.root_aliases_in_code.push_back(v->name);
  }

  std::set<std::string> allowed;
  for (const auto& f : req.fields_of_interest) allowed.insert(render_path(f));

  std::vector<std::string> notes;
  const std::string prompt = build_alias_prompt(in);
  AliasVerdict raw;
  with_backend([&] {
    Completion c = ask(prompt, notes);
    try {
      raw = parse_alias_response(c.response);
    } catch (const NoJsonBlock& e) {
      notes.push_back("repair");
      Completion again = ask(repair_prompt(prompt, e.what()), notes);
      try {
        raw = parse_alias_response(again.response);
      } catch (const NoJsonBlock&) {
        notes.push_back("unparseable");
      }
    }
    return 0;
  });
  AliasVerdict verdict;
  for (const auto& [k, v] : raw.pairs)
    if (allowed.count(k) && !v.empty()) verdict.pairs[k] = v;
  return {std::move(verdict), notes};
}

Estimate<bool> LlmEstimator::infer_is_def(const DefRequest& req) {
  const Trace& trace = *req.trace;
  const Step& target = trace.step(req.target_step);
  const Step& usage = trace.step(req.usage_step);

  DefPromptInput in;
  in.target_code = target.instruction.code_text;
  in.callee_source = target.instruction.callee_source;
  in.root_name = req.queried_field.root_name();
  in.known_graph = req.known_graph;
  in.usage_code = usage.instruction.code_text;
  in.field = req.queried_field;
  std::set<std::string> seen;
  for (VarId id : target.reads) {
    const auto& v = trace.variable(id);
    if (seen.insert(v.name).second) in.variables.push_back({v.name, v.type_name, v.content});
  }

  std::vector<std::string> notes;
  const std::string prompt = build_def_prompt(in);
  bool answer = with_backend([&] {
    Completion c = ask(prompt, notes);
    try {
      return parse_verdict_response(c.response);
    } catch (const NoVerdict& e) {
      notes.push_back("repair");
      Completion again = ask(repair_prompt(prompt, e.what()), notes);
      try {
        return parse_verdict_response(again.response);
      } catch (const NoVerdict& e2) {
        throw BackendUnavailable(e2.what());
      }
    }
  });
  return {answer, notes};
}

}  // namespace recov
