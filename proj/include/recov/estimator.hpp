#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "recov/access_path.hpp"
#include "recov/micro_tracer.hpp"
#include "recov/object_graph.hpp"
#include "recov/trace_model.hpp"

namespace recov {

RECOV_DEFINE_ERROR(RecoveryFailed);
RECOV_DEFINE_ERROR(BackendUnavailable);

struct PromptExample {
  std::string input_block;
  std::string output_block;
};

struct RecoveryRequest {
  std::string root_name;
  std::string root_value;
  std::string root_type;
  std::string step_code;
  std::optional<ReferencePath> focal_path;  // nullopt means "#all_fields#"
  std::vector<std::string> class_structures;
  std::optional<PromptExample> adaptive_example;
  StepId query_step;  // partial step whose state is being recovered
};

struct AliasRequest {
  const Trace* trace = nullptr;
  StepId step;
  StepId query_step;
  VarId known_root;
  ObjectGraph known_graph;
  std::vector<ReferencePath> fields_of_interest;
};

struct AliasVerdict {
  std::map<std::string, std::string> pairs;  // rendered field path -> alias expression
};

struct DefRequest {
  const Trace* trace = nullptr;
  StepId target_step;
  StepId usage_step;
  ReferencePath queried_field;
  ObjectGraph known_graph;
};

// Answer plus bookkeeping notes (cache keys, repair attempts) for provenance.
template <class T>
struct Estimate {
  T value;
  std::vector<std::string> notes;
};

class ExecutionEstimator {
 public:
  virtual ~ExecutionEstimator() = default;
  virtual std::string name() const = 0;
  virtual Estimate<ObjectGraph> recover_object_graph(const RecoveryRequest& req) = 0;
  virtual Estimate<AliasVerdict> infer_alias(const AliasRequest& req) = 0;
  virtual Estimate<bool> infer_is_def(const DefRequest& req) = 0;
};

// Exact answers read off the full execution behind a partial trace.
class OracleEstimator : public ExecutionEstimator {
 public:
  OracleEstimator(std::shared_ptr<const Execution> exec, std::shared_ptr<const PartialTrace> partial);

  std::string name() const override { return "oracle"; }
  Estimate<ObjectGraph> recover_object_graph(const RecoveryRequest& req) override;
  Estimate<AliasVerdict> infer_alias(const AliasRequest& req) override;
  Estimate<bool> infer_is_def(const DefRequest& req) override;

  // Heap graph of a local at the start of a partial step; depth-capped.
  ObjectGraph heap_graph(StepId partial_step, const std::string& root_name) const;

 private:
  std::shared_ptr<const mini::HeapSnapshot> snapshot(StepId partial_step) const;

  std::shared_ptr<const Execution> exec_;
  std::shared_ptr<const PartialTrace> partial_;
  mutable std::mutex mu_;
  mutable std::unordered_map<std::uint64_t, std::shared_ptr<const mini::HeapSnapshot>> snapshots_;
};

// Builds a graph from a live heap value. Arrays expose every slot as "[i]".
GraphNode graph_from_heap(const mini::Heap& heap, const std::string& name, const mini::Value& v,
                          int max_depth = 8);

// `Type:{fieldType field; ...}` for each class of the program.
std::map<std::string, std::string> class_structures(const mini::Program& program);

}  // namespace recov
