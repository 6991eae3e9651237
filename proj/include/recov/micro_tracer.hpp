#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "recov/interpreter.hpp"
#include "recov/minilang.hpp"
#include "recov/query.hpp"
#include "recov/trace_model.hpp"

namespace recov {

RECOV_DEFINE_ERROR(UnresolvablePath);
RECOV_DEFINE_ERROR(InvalidPartition);

struct MiniProgram {
  std::map<std::string, std::string> files;  // file id -> source text
  std::string entry = "main";
};

// One full run: the program, its seed and the resulting full trace.
struct Execution {
  MiniProgram program;
  std::uint64_t seed = 0;
  std::shared_ptr<const mini::Program> linked;
  Trace trace;
  std::optional<mini::RunFault> fault;
  std::string output;
};

Execution run_full(const MiniProgram& program, std::uint64_t seed, const mini::RunOptions& opts = {});

// Heap and locals right before `full_step` runs.
mini::HeapSnapshot snapshot_before(const Execution& exec, StepId full_step);

struct PartialTrace {
  Trace trace;
  std::vector<StepId> full_step_of;  // index k-1 holds the full id of partial step k

  StepId to_full(StepId partial_step) const;  // throws UnknownStep
  std::optional<StepId> to_partial(StepId full_step) const;
  // Full id of the nearest retained ancestor of a full step, following
  // caller_step links; absent when the chain never reaches a retained step.
  std::optional<StepId> anchor_of(StepId full_step) const;

 private:
  friend PartialTrace make_partial(const Execution&, const std::vector<std::string>&, int);
  std::unordered_map<std::uint64_t, std::uint64_t> partial_of_;
  std::vector<std::uint64_t> anchor_;  // indexed by full step id, 0 = none
};

PartialTrace make_partial(const Execution& exec, const std::vector<std::string>& instrumented_files,
                          int child_depth = 1);

// Files of the program proper, excluding library files.
std::vector<std::string> application_files(const MiniProgram& program);

// Full step ids covered by a partial step: the step itself plus every
// uninstrumented step whose nearest instrumented ancestor is that step.
std::vector<StepId> expansion(const Execution& exec, const PartialTrace& partial, StepId partial_step);

struct GroundTruthAnswer {
  std::optional<StepId> def_step;  // in the partial trace
  CaseKind case_kind = CaseKind::none;
  std::optional<StepId> full_def_step;  // s* in the full trace
  std::string location;                 // queried location at the query step
};

GroundTruthAnswer oracle_dependency(const Execution& exec, const PartialTrace& partial,
                                    const SliceQuery& query);

MiniProgram load_program(const std::vector<std::filesystem::path>& files, const std::string& entry = "main");

}  // namespace recov
