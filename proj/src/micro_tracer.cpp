#include "recov/micro_tracer.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_set>

namespace recov {

std::string to_string(CaseKind kind) {
  switch (kind) {
    case CaseKind::case1_direct: return "case1_direct";
    case CaseKind::case2_call_site: return "case2_call_site";
    case CaseKind::none: return "none";
  }
  return "none";
}

std::optional<CaseKind> parse_case_kind(const std::string& text) {
  if (text == "case1_direct") return CaseKind::case1_direct;
  if (text == "case2_call_site") return CaseKind::case2_call_site;
  if (text == "none") return CaseKind::none;
  return std::nullopt;
}

Execution run_full(const MiniProgram& program, std::uint64_t seed, const mini::RunOptions& opts) {
  Execution exec;
  exec.program = program;
  exec.seed = seed;
  exec.linked = std::make_shared<const mini::Program>(mini::link_program(program.files, program.entry));
  auto result = mini::interpret(*exec.linked, seed, opts);
  exec.trace = std::move(result.trace);
  exec.fault = std::move(result.fault);
  exec.output = std::move(result.output);
  return exec;
}

mini::HeapSnapshot snapshot_before(const Execution& exec, StepId full_step) {
  if (!exec.trace.has_step(full_step)) exec.trace.step(full_step);
  mini::RunOptions opts;
  opts.step_budget = full_step.value + 1;
  auto result = mini::interpret(*exec.linked, exec.seed, opts, full_step.value);
  if (!result.snapshot) throw UnknownStep("execution never reached step " + std::to_string(full_step.value));
  return std::move(*result.snapshot);
}

StepId PartialTrace::to_full(StepId partial_step) const {
  if (partial_step.value == 0 || partial_step.value > full_step_of.size()) trace.step(partial_step);
  return full_step_of[partial_step.value - 1];
}

std::optional<StepId> PartialTrace::to_partial(StepId full_step) const {
  auto it = partial_of_.find(full_step.value);
  if (it == partial_of_.end()) return std::nullopt;
  return StepId{it->second};
}

std::optional<StepId> PartialTrace::anchor_of(StepId full_step) const {
  if (full_step.value >= anchor_.size() || anchor_[full_step.value] == 0) return std::nullopt;
  return StepId{anchor_[full_step.value]};
}

std::vector<std::string> application_files(const MiniProgram& program) {
  std::vector<std::string> out;
  for (const auto& [id, text] : program.files) out.push_back(id);
  return out;
}

namespace {

bool visible_type(const mini::Program& prog, const std::set<std::string>& instrumented,
                  const std::string& type_name) {
  if (type_name == "array") return true;
  const mini::ClassDecl* cls = prog.find_class(type_name);
  return cls && instrumented.count(cls->file);
}

}  // namespace

PartialTrace make_partial(const Execution& exec, const std::vector<std::string>& instrumented_files,
                          int child_depth) {
  const mini::Program& prog = *exec.linked;
  std::set<std::string> instrumented(instrumented_files.begin(), instrumented_files.end());
  for (const auto& f : instrumented)
    if (!prog.file(f)) throw InvalidPartition("partition names unknown file '" + f + "'");

  const Trace& full = exec.trace;
  PartialTrace out;
  out.anchor_.assign(full.step_count() + 2, 0);
  std::vector<const Step*> retained;
  for (const auto& s : full.steps()) {
    std::uint64_t id = s.step_id.value;
    if (id >= out.anchor_.size()) out.anchor_.resize(id + 1, 0);
    if (instrumented.count(s.instruction.file_id)) {
      out.anchor_[id] = id;
      retained.push_back(&s);
      out.full_step_of.push_back(s.step_id);
      out.partial_of_.emplace(id, out.full_step_of.size());
    } else if (s.caller_step && s.caller_step->value < out.anchor_.size()) {
      out.anchor_[id] = out.anchor_[s.caller_step->value];
    }
  }

  // Callees entered directly from a retained step, in call order.
  std::unordered_map<std::uint64_t, std::vector<const mini::FunDecl*>> callees;
  std::unordered_set<std::uint64_t> call_sites;
  for (const auto& s : full.steps()) {
    if (instrumented.count(s.instruction.file_id) || !s.caller_step) continue;
    std::uint64_t caller = s.caller_step->value;
    if (!out.partial_of_.count(caller)) continue;
    call_sites.insert(caller);
    const mini::FunDecl* fn = prog.function_at(s.instruction.file_id, s.instruction.line);
    if (!fn) continue;
    auto& list = callees[caller];
    if (std::find(list.begin(), list.end(), fn) == list.end()) list.push_back(fn);
  }

  std::vector<Step> steps;
  std::unordered_set<std::uint64_t> keep_vars;
  for (std::size_t k = 0; k < retained.size(); ++k) {
    Step s = *retained[k];
    std::uint64_t full_id = s.step_id.value;
    s.step_id = StepId{k + 1};
    if (call_sites.count(full_id)) s.instruction.is_call_site = true;
    auto it = callees.find(full_id);
    if (it != callees.end()) {
      std::string source;
      for (const auto* fn : it->second) {
        if (!source.empty()) source += "\n\n";
        source += prog.function_source(*fn);
      }
      s.instruction.callee_source = source;
    }
    s.caller_step.reset();
    if (auto caller = retained[k]->caller_step) {
      if (caller->value < out.anchor_.size() && out.anchor_[caller->value])
        s.caller_step = StepId{out.partial_of_.at(out.anchor_[caller->value])};
    }
    for (VarId v : s.reads) keep_vars.insert(v.value);
    for (VarId v : s.writes) keep_vars.insert(v.value);
    steps.push_back(std::move(s));
  }

  // Children of instrumented-visible types, up to child_depth layers.
  std::unordered_map<std::uint64_t, std::vector<ChildEdge>> kept_children;
  std::vector<std::pair<std::uint64_t, int>> frontier;
  for (auto v : keep_vars) frontier.emplace_back(v, 0);
  while (!frontier.empty()) {
    auto [id, depth] = frontier.back();
    frontier.pop_back();
    const VariableInstance& v = full.variable(VarId{id});
    auto& kids = kept_children[id];
    if (depth >= child_depth || !visible_type(prog, instrumented, v.type_name)) continue;
    for (const auto& edge : v.children) {
      kids.push_back(edge);
      if (keep_vars.insert(edge.var_id.value).second) frontier.emplace_back(edge.var_id.value, depth + 1);
    }
  }

  std::vector<VariableInstance> vars;
  for (const auto& v : full.variables()) {
    if (!keep_vars.count(v.var_id.value)) continue;
    VariableInstance copy = v;
    copy.children = kept_children[v.var_id.value];
    vars.push_back(std::move(copy));
  }

  Partition partition;
  for (const auto& f : prog.files())
    if (instrumented.count(f->id)) partition.instrumented_files.push_back(f->id);
  for (const auto& [name, fn] : prog.classes()) {
    if (instrumented.count(fn->file)) continue;
    for (const auto& [mname, m] : fn->methods) partition.uninstrumented_routines.push_back(m->qualified_name());
  }
  for (const auto& [name, fn] : prog.functions())
    if (!instrumented.count(fn->file)) partition.uninstrumented_routines.push_back(name);
  partition.uninstrumented_routines.push_back("rand");

  bool everything = partition.instrumented_files.size() == prog.files().size();
  out.trace = Trace(std::move(steps), std::move(vars), std::move(partition),
                    everything ? Completeness::full : Completeness::partial);
  return out;
}

std::vector<StepId> expansion(const Execution& exec, const PartialTrace& partial, StepId partial_step) {
  StepId anchor = partial.to_full(partial_step);
  std::vector<StepId> out{anchor};
  for (const auto& s : exec.trace.steps()) {
    if (s.step_id <= anchor) continue;
    if (partial.to_partial(s.step_id)) continue;
    auto a = partial.anchor_of(s.step_id);
    if (a && *a == anchor) out.push_back(s.step_id);
  }
  return out;
}

GroundTruthAnswer oracle_dependency(const Execution& exec, const PartialTrace& partial,
                                    const SliceQuery& query) {
  StepId full_q = partial.to_full(query.step_id);
  auto snap = snapshot_before(exec, full_q);
  auto resolved = mini::resolve_path(snap, query.path);
  if (!resolved)
    throw UnresolvablePath("path " + render_path(query.path) + " does not name a live instance at step " +
                           std::to_string(query.step_id.value));
  GroundTruthAnswer ans;
  ans.location = resolved->location;
  const auto& steps = exec.trace.steps();
  for (auto it = steps.rbegin(); it != steps.rend(); ++it) {
    if (it->step_id >= full_q) continue;
    bool writes = false;
    for (VarId w : it->writes) {
      const auto& v = exec.trace.variable(w);
      if (v.location.kind == MemoryLocation::Kind::recorded && v.location.token == resolved->location) {
        writes = true;
        break;
      }
    }
    if (!writes) continue;
    ans.full_def_step = it->step_id;
    if (auto p = partial.to_partial(it->step_id)) {
      ans.def_step = p;
      ans.case_kind = CaseKind::case1_direct;
    } else if (auto a = partial.anchor_of(it->step_id)) {
      ans.def_step = partial.to_partial(*a);
      ans.case_kind = CaseKind::case2_call_site;
    }
    return ans;
  }
  return ans;
}

MiniProgram load_program(const std::vector<std::filesystem::path>& files, const std::string& entry) {
  MiniProgram prog;
  prog.entry = entry;
  for (const auto& path : files) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("IoError", "cannot read program file " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    std::string id = path.filename().string();
    if (prog.files.count(id)) throw Error("IoError", "duplicate program file name " + id);
    prog.files.emplace(id, buf.str());
  }
  return prog;
}

}  // namespace recov
