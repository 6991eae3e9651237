#include <set>

#include "recov/estimator.hpp"

namespace recov {

namespace {

GraphNode build_node(const mini::Heap& heap, const std::string& name, const mini::Value& v, int depth,
                     int max_depth, std::set<std::uint64_t>& visiting) {
  GraphNode node;
  node.name = name;
  node.type_name = mini::type_of(heap, v);
  auto r = std::get_if<mini::Ref>(&v);
  if (!r || depth >= max_depth || visiting.count(r->id)) {
    node.value = mini::render_value(heap, v);
    return node;
  }
  const mini::Object& o = heap.at(*r);
  visiting.insert(r->id);
  if (o.is_array) {
    for (std::size_t i = 0; i < o.elements.size(); ++i)
      node.children.push_back(
          build_node(heap, "[" + std::to_string(i) + "]", o.elements[i], depth + 1, max_depth, visiting));
  } else {
    for (const auto& [fname, fv] : o.fields)
      node.children.push_back(build_node(heap, fname, fv, depth + 1, max_depth, visiting));
  }
  visiting.erase(r->id);
  if (node.children.empty()) node.value = mini::render_value(heap, v);
  return node;
}

}  // namespace

GraphNode graph_from_heap(const mini::Heap& heap, const std::string& name, const mini::Value& v,
                          int max_depth) {
  std::set<std::uint64_t> visiting;
  return build_node(heap, name, v, 0, max_depth, visiting);
}

std::map<std::string, std::string> class_structures(const mini::Program& program) {
  std::map<std::string, std::string> out;
  for (const auto& [name, cls] : program.classes()) {
    std::string s = name + ":{";
    for (const auto& f : cls->fields) s += (f.type_name.empty() ? "var" : f.type_name) + " " + f.name + ";";
    out[name] = s + "}";
  }
  return out;
}

OracleEstimator::OracleEstimator(std::shared_ptr<const Execution> exec,
                                 std::shared_ptr<const PartialTrace> partial)
    : exec_(std::move(exec)), partial_(std::move(partial)) {}

std::shared_ptr<const mini::HeapSnapshot> OracleEstimator::snapshot(StepId partial_step) const {
  StepId full = partial_->to_full(partial_step);
  {
    std::lock_guard<std::mutex> lock(mu_);
    auto it = snapshots_.find(full.value);
    if (it != snapshots_.end()) return it->second;
  }
  auto snap = std::make_shared<const mini::HeapSnapshot>(snapshot_before(*exec_, full));
  std::lock_guard<std::mutex> lock(mu_);
  return snapshots_.emplace(full.value, std::move(snap)).first->second;
}

ObjectGraph OracleEstimator::heap_graph(StepId partial_step, const std::string& root_name) const {
  auto snap = snapshot(partial_step);
  auto it = snap->locals.find(root_name);
  if (it == snap->locals.end())
    throw RecoveryFailed("no live variable '" + root_name + "' at step " + std::to_string(partial_step.value));
  return ObjectGraph{root_name, graph_from_heap(snap->heap, root_name, it->second)};
}

Estimate<ObjectGraph> OracleEstimator::recover_object_graph(const RecoveryRequest& req) {
  ObjectGraph g = heap_graph(req.query_step, req.root_name);
  if (req.focal_path && !resolve_in_graph(*req.focal_path, g))
    throw RecoveryFailed("focal path " + render_path(*req.focal_path) + " not present in the heap graph");
  return {std::move(g), {"oracle:heap@" + std::to_string(partial_->to_full(req.query_step).value)}};
}

Estimate<AliasVerdict> OracleEstimator::infer_alias(const AliasRequest& req) {
  auto snap = snapshot(req.query_step);
  const Step& step = req.trace->step(req.step);
  AliasVerdict verdict;
  for (const auto& field : req.fields_of_interest) {
    auto resolved = mini::resolve_path(*snap, field);
    if (!resolved) continue;
    bool found = false;
    for (const auto* list : {&step.reads, &step.writes}) {
      for (VarId id : *list) {
        const auto& v = req.trace->variable(id);
        if (v.location.kind == MemoryLocation::Kind::recorded && v.location.token == resolved->location) {
          verdict.pairs[render_path(field)] = v.name;
          found = true;
          break;
        }
      }
      if (found) break;
    }
  }
  return {std::move(verdict), {}};
}

Estimate<bool> OracleEstimator::infer_is_def(const DefRequest& req) {
  auto snap = snapshot(req.usage_step);
  auto resolved = mini::resolve_path(*snap, req.queried_field);
  if (!resolved) return {false, {"oracle:unresolved"}};
  StepId usage_full = partial_->to_full(req.usage_step);
  for (StepId full : expansion(*exec_, *partial_, req.target_step)) {
    if (full >= usage_full) break;
    for (VarId w : exec_->trace.step(full).writes) {
      const auto& v = exec_->trace.variable(w);
      if (v.location.kind == MemoryLocation::Kind::recorded && v.location.token == resolved->location)
        return {true, {}};
    }
  }
  return {false, {}};
}

}  // namespace recov
