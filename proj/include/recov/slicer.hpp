#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "recov/estimator.hpp"
#include "recov/query.hpp"

namespace recov {

RECOV_DEFINE_ERROR(InvalidQuery);

// One entry of the inference log attached to a slice result.
struct ProvenanceEvent {
  std::string kind;  // recovery, harvest_example, must_alias, alias_inference, ...
  std::optional<StepId> step;
  std::string detail;
  std::vector<std::string> notes;

  bool operator==(const ProvenanceEvent&) const = default;
};

struct SliceResult {
  std::optional<StepId> def_step;
  CaseKind case_kind = CaseKind::none;
  std::vector<ProvenanceEvent> provenance;

  bool degraded() const;
  std::size_t count(const std::string& kind) const;
  bool operator==(const SliceResult&) const = default;
};

std::string serialize_slice_result(const SliceResult& result);
SliceResult parse_slice_result(const std::string& text);

struct SliceOptions {
  bool adaptive_context = true;
  int probe_budget = 12;
  // Type name -> "Type:{fieldType field; ...}" for the recovery prompt.
  std::map<std::string, std::string> class_structures;
};

class AliasMap {
 public:
  const std::set<VarId>& at(const MemoryLocation& loc) const;
  // Returns true when `id` was not yet present.
  bool add(const MemoryLocation& loc, VarId id);
  const std::map<MemoryLocation, std::set<VarId>>& entries() const { return entries_; }
  void clear() { entries_.clear(); }

 private:
  std::map<MemoryLocation, std::set<VarId>> entries_;
};

// A node of the query path: recorded when the trace holds an instance for it.
struct PathNode {
  ReferencePath path;
  std::optional<VarId> instance;
  MemoryLocation loc;
};

// Resolves every prefix of `path` at the query step. Throws InvalidQuery when
// the root names no visible instance.
std::vector<PathNode> resolve_path_nodes(const Trace& trace, const SliceQuery& query);

// Asks the estimator for the query root's object graph, attaching an adaptive
// example unless disabled. Estimator errors propagate.
Estimate<ObjectGraph> recover_query_root(const Trace& trace, const SliceQuery& query, ExecutionEstimator& est,
                                         const SliceOptions& opts, std::vector<ProvenanceEvent>* log = nullptr);

SliceResult slice(const Trace& trace, const SliceQuery& query, ExecutionEstimator& est,
                  const SliceOptions& opts = {});

// Transitive closure by repeated one-step slicing: every variable read at a
// found definition step becomes a new query at that step. Queries that fail
// to resolve are skipped. Stops after `max_queries` slices.
struct ClosureEntry {
  SliceQuery query;
  SliceResult result;
};
std::vector<ClosureEntry> slice_closure(const Trace& trace, const SliceQuery& query, ExecutionEstimator& est,
                                        const SliceOptions& opts = {}, std::size_t max_queries = 64);

// Forward alias scan for node `index` of `nodes`; fills alias_map[nodes[index].loc].
struct AliasScanContext {
  const Trace& trace;
  StepId query_step;
  ExecutionEstimator* est = nullptr;  // null: syntactic aliasing only
  ObjectGraph known_graph;
  std::vector<ProvenanceEvent>* log = nullptr;
};
std::set<VarId> infer_alias_over_trace(const std::vector<PathNode>& nodes, std::size_t index, AliasMap& alias_map,
                                       const AliasScanContext& ctx);

std::set<VarId> get_handle(const std::vector<PathNode>& nodes, const AliasMap& alias_map);

// `x = y` with y's read instance in `aliases`, or a parameter bound from such
// an argument at an instrumented call boundary. Returns the aliased instance.
std::optional<VarId> is_must_alias(const Trace& trace, const Step& step, const std::set<VarId>& aliases);

enum class DefVerdict { no, direct, via_call };
DefVerdict is_def_step(const Trace& trace, const AliasMap& alias_map, const std::vector<PathNode>& nodes,
                       const Step& step, StepId query_step, ExecutionEstimator* est, const ObjectGraph& known_graph,
                       std::vector<ProvenanceEvent>* log);

}  // namespace recov
