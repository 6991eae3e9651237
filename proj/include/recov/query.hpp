#pragma once

#include <optional>
#include <string>

#include "recov/access_path.hpp"
#include "recov/trace_model.hpp"

namespace recov {

struct SliceQuery {
  StepId step_id;
  ReferencePath path;
};

enum class CaseKind { case1_direct, case2_call_site, none };

std::string to_string(CaseKind kind);
std::optional<CaseKind> parse_case_kind(const std::string& text);

}  // namespace recov
