#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "recov/access_path.hpp"
#include "recov/minilang.hpp"
#include "recov/trace_model.hpp"

namespace recov::mini {

struct Ref {
  std::uint64_t id = 0;
  bool operator==(const Ref&) const = default;
};

using Value = std::variant<std::monostate, long long, bool, std::string, Ref>;

struct Object {
  std::uint64_t id = 0;
  std::string type_name;  // class name, or "array"
  bool is_array = false;
  std::vector<std::pair<std::string, Value>> fields;
  std::vector<Value> elements;

  const Value* field(const std::string& name) const;
  Value* field(const std::string& name);
};

class Heap {
 public:
  Ref allocate(std::string type_name, bool is_array);
  Object& at(Ref r) { return objects_.at(r.id - 1); }
  const Object& at(Ref r) const { return objects_.at(r.id - 1); }
  std::size_t size() const { return objects_.size(); }

 private:
  std::vector<Object> objects_;
};

std::string type_of(const Heap& heap, const Value& v);
// toString-style rendering. Strings and builders are quoted when nested.
std::string render_value(const Heap& heap, const Value& v, bool nested = false);

// Heap state and the executing frame's locals at the start of a step.
struct HeapSnapshot {
  Heap heap;
  std::map<std::string, Value> locals;
  std::uint64_t frame_id = 0;
  std::string function;  // qualified name, empty for the implicit main
};

struct ResolvedValue {
  Value value;
  std::string type_name;
  std::string location;  // "h<id>" for objects, cell token otherwise
};

std::optional<ResolvedValue> resolve_path(const HeapSnapshot& snap, const ReferencePath& path);
std::string location_of(const Value& v, const std::string& cell_token);

struct RunOptions {
  std::uint64_t step_budget = 1'000'000;
  int child_depth = 1;  // recorded child layers per instance
};

struct RunFault {
  std::string code;  // "RuntimeFault" or "StepBudgetExceeded"
  std::string message;
  std::optional<StepId> step;
};

struct RunResult {
  Trace trace;
  std::optional<RunFault> fault;
  std::string output;
  std::optional<HeapSnapshot> snapshot;
};

// Executes the program. With `stop_before`, execution halts when that step is
// about to run and the snapshot is returned instead of a trace.
RunResult interpret(const Program& program, std::uint64_t seed, const RunOptions& opts,
                    std::optional<std::uint64_t> stop_before = std::nullopt);

}  // namespace recov::mini
