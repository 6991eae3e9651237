#pragma once

#include <string>
#include <vector>

#include "recov/estimator.hpp"
#include "recov/micro_tracer.hpp"

namespace recov {

RECOV_DEFINE_ERROR(UnsupportedShape);
RECOV_DEFINE_ERROR(ProbeFault);

inline constexpr int kDefaultProbeBudget = 12;
inline constexpr const char* kProbeFile = "probe.mini";

struct Probe {
  MiniProgram program;
  std::string root_name;
  std::string root_type;
  int line_count = 0;
};

// Writes a small program that rebuilds a value shaped like `root_value` in a
// variable named `root_name` and ends with the call chain of `step_code`.
Probe synthesize_probe(const std::string& step_code, const std::string& root_name, const std::string& root_value,
                       const std::string& root_type, int budget_lines = kDefaultProbeBudget);

// Runs the probe fully instrumented and renders the root's graph at its last
// statement as an in-context example.
PromptExample harvest_example(const Probe& probe, const std::string& focal_path = "#all_fields#");

// Splits a rendered container ("[a, b]" or "{k=v, }") into top-level items.
std::vector<std::string> split_rendered_items(const std::string& body);

}  // namespace recov
