#pragma once

#include <compare>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "recov/error.hpp"

namespace recov {

RECOV_DEFINE_ERROR(MalformedTrace);
RECOV_DEFINE_ERROR(DanglingReference);
RECOV_DEFINE_ERROR(UnknownStep);

template <class Tag>
struct Id {
  std::uint64_t value = 0;

  constexpr auto operator<=>(const Id&) const = default;
};

struct StepTag {};
struct VarTag {};
using StepId = Id<StepTag>;
using VarId = Id<VarTag>;

struct MemoryLocation {
  enum class Kind { recorded, synthetic };

  Kind kind = Kind::recorded;
  std::string token;

  auto operator<=>(const MemoryLocation&) const = default;
  std::string str() const;
};

struct ChildEdge {
  std::string label;
  VarId var_id;

  bool operator==(const ChildEdge&) const = default;
};

struct VariableInstance {
  VarId var_id;
  std::string name;
  std::string type_name;
  std::string content;
  MemoryLocation location;
  std::vector<ChildEdge> children;

  bool operator==(const VariableInstance&) const = default;
};

struct Instruction {
  std::string file_id;
  int line = 1;
  std::string code_text;
  bool is_call_site = false;
  std::optional<std::string> callee_source;

  bool operator==(const Instruction&) const = default;
};

struct Step {
  StepId step_id;
  Instruction instruction;
  std::uint32_t order = 1;
  std::vector<VarId> reads;
  std::vector<VarId> writes;
  // Statement step that was executing in the calling frame when this step's
  // frame was entered. Absent for steps of the entry frame.
  std::optional<StepId> caller_step;

  bool operator==(const Step&) const = default;
};

struct Partition {
  std::vector<std::string> instrumented_files;
  std::vector<std::string> uninstrumented_routines;

  bool instruments(const std::string& file_id) const;
  bool operator==(const Partition&) const = default;
};

enum class Completeness { partial, full };

// Ordered steps plus the variable table they reference. Immutable once built.
class Trace {
 public:
  Trace() = default;
  Trace(std::vector<Step> steps, std::vector<VariableInstance> variables,
        Partition partition, Completeness completeness);

  const std::vector<Step>& steps() const { return steps_; }
  const std::vector<VariableInstance>& variables() const { return variables_; }
  const Partition& partition() const { return partition_; }
  Completeness completeness() const { return completeness_; }

  std::size_t step_count() const { return steps_.size(); }
  bool has_step(StepId id) const;
  const Step& step(StepId id) const;  // throws UnknownStep
  const Step* find_step(StepId id) const;
  const VariableInstance* find_variable(VarId id) const;
  const VariableInstance& variable(VarId id) const;  // throws DanglingReference

  bool operator==(const Trace& other) const;

 private:
  void reindex();

  std::vector<Step> steps_;
  std::vector<VariableInstance> variables_;
  Partition partition_;
  Completeness completeness_ = Completeness::partial;
  std::unordered_map<std::uint64_t, std::size_t> step_index_;
  std::unordered_map<std::uint64_t, std::size_t> var_index_;
};

struct Diagnostic {
  enum class Kind {
    DanglingReference,
    PartitionViolation,
    NonMonotonicStep,
    InvalidLine,
    InvalidOrder,
    DuplicateVariable,
    ChildForestViolation,
    CallSiteWithoutCall,
  };

  Kind kind;
  std::optional<StepId> step;
  std::optional<VarId> var;
  std::string message;
};

std::string to_string(Diagnostic::Kind kind);
std::string to_string(Completeness c);

std::vector<Diagnostic> validate_trace(const Trace& trace);

std::string serialize_trace(const Trace& trace);
Trace parse_trace(const std::string& text);  // throws MalformedTrace / DanglingReference
Trace load_trace(const std::filesystem::path& path);
void save_trace(const Trace& trace, const std::filesystem::path& path);

// Greatest step strictly before `before` satisfying `pred`.
std::optional<StepId> last_step_before(const Trace& trace, StepId before,
                                       const std::function<bool(const Step&)>& pred);

}  // namespace recov

template <class Tag>
struct std::hash<recov::Id<Tag>> {
  std::size_t operator()(const recov::Id<Tag>& id) const noexcept {
    return std::hash<std::uint64_t>{}(id.value);
  }
};

template <>
struct std::hash<recov::MemoryLocation> {
  std::size_t operator()(const recov::MemoryLocation& loc) const noexcept {
    return std::hash<std::string>{}(loc.token) ^ (loc.kind == recov::MemoryLocation::Kind::synthetic ? 0x9e3779b9u : 0u);
  }
};
