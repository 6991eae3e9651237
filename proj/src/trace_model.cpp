#include "recov/trace_model.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_set>

#include "json.hpp"

namespace recov {

using ojson = nlohmann::ordered_json;

std::string MemoryLocation::str() const {
  return (kind == Kind::recorded ? "recorded:" : "synthetic:") + token;
}

bool Partition::instruments(const std::string& file_id) const {
  return std::find(instrumented_files.begin(), instrumented_files.end(), file_id) !=
         instrumented_files.end();
}

Trace::Trace(std::vector<Step> steps, std::vector<VariableInstance> variables,
             Partition partition, Completeness completeness)
    : steps_(std::move(steps)),
      variables_(std::move(variables)),
      partition_(std::move(partition)),
      completeness_(completeness) {
  reindex();
}

void Trace::reindex() {
  step_index_.clear();
  var_index_.clear();
  step_index_.reserve(steps_.size());
  var_index_.reserve(variables_.size());
  for (std::size_t i = 0; i < steps_.size(); ++i) step_index_.emplace(steps_[i].step_id.value, i);
  for (std::size_t i = 0; i < variables_.size(); ++i)
    var_index_.emplace(variables_[i].var_id.value, i);
}

bool Trace::has_step(StepId id) const { return step_index_.count(id.value) != 0; }

const Step* Trace::find_step(StepId id) const {
  auto it = step_index_.find(id.value);
  return it == step_index_.end() ? nullptr : &steps_[it->second];
}

const Step& Trace::step(StepId id) const {
  if (const Step* s = find_step(id)) return *s;
  std::ostringstream msg;
  msg << "unknown step " << id.value;
  if (steps_.empty())
    msg << " (trace has no steps)";
  else
    msg << " (valid range " << steps_.front().step_id.value << ".." << steps_.back().step_id.value << ")";
  throw UnknownStep(msg.str());
}

const VariableInstance* Trace::find_variable(VarId id) const {
  auto it = var_index_.find(id.value);
  return it == var_index_.end() ? nullptr : &variables_[it->second];
}

const VariableInstance& Trace::variable(VarId id) const {
  if (const VariableInstance* v = find_variable(id)) return *v;
  throw DanglingReference("unknown variable " + std::to_string(id.value));
}

bool Trace::operator==(const Trace& other) const {
  return steps_ == other.steps_ && variables_ == other.variables_ &&
         partition_ == other.partition_ && completeness_ == other.completeness_;
}

std::string to_string(Diagnostic::Kind kind) {
  switch (kind) {
    case Diagnostic::Kind::DanglingReference: return "DanglingReference";
    case Diagnostic::Kind::PartitionViolation: return "PartitionViolation";
    case Diagnostic::Kind::NonMonotonicStep: return "NonMonotonicStep";
    case Diagnostic::Kind::InvalidLine: return "InvalidLine";
    case Diagnostic::Kind::InvalidOrder: return "InvalidOrder";
    case Diagnostic::Kind::DuplicateVariable: return "DuplicateVariable";
    case Diagnostic::Kind::ChildForestViolation: return "ChildForestViolation";
    case Diagnostic::Kind::CallSiteWithoutCall: return "CallSiteWithoutCall";
  }
  return "Unknown";
}

std::string to_string(Completeness c) { return c == Completeness::full ? "full" : "partial"; }

std::vector<Diagnostic> validate_trace(const Trace& trace) {
  std::vector<Diagnostic> out;
  auto add = [&](Diagnostic::Kind kind, std::optional<StepId> step, std::optional<VarId> var,
                 std::string message) {
    out.push_back(Diagnostic{kind, step, var, std::move(message)});
  };

  std::unordered_set<std::uint64_t> seen_vars;
  for (const auto& v : trace.variables()) {
    if (!seen_vars.insert(v.var_id.value).second)
      add(Diagnostic::Kind::DuplicateVariable, std::nullopt, v.var_id,
          "variable id " + std::to_string(v.var_id.value) + " appears more than once");
  }

  std::uint64_t previous = 0;
  for (const auto& s : trace.steps()) {
    const auto id = s.step_id;
    if (id.value <= previous)
      add(Diagnostic::Kind::NonMonotonicStep, id, std::nullopt,
          "step id " + std::to_string(id.value) + " does not increase");
    previous = id.value;
    if (s.instruction.line < 1)
      add(Diagnostic::Kind::InvalidLine, id, std::nullopt, "line must be >= 1");
    if (s.order < 1) add(Diagnostic::Kind::InvalidOrder, id, std::nullopt, "order must be >= 1");
    if (s.instruction.is_call_site && s.instruction.code_text.find('(') == std::string::npos)
      add(Diagnostic::Kind::CallSiteWithoutCall, id, std::nullopt,
          "call site step has no call expression");
    for (const auto* list : {&s.reads, &s.writes}) {
      for (VarId v : *list) {
        if (!trace.find_variable(v))
          add(Diagnostic::Kind::DanglingReference, id, v,
              "step " + std::to_string(id.value) + " references unknown variable " +
                  std::to_string(v.value));
      }
    }
    if (s.caller_step && s.caller_step->value >= id.value)
      add(Diagnostic::Kind::NonMonotonicStep, id, std::nullopt, "caller step must precede step");
    if (trace.completeness() == Completeness::partial &&
        !trace.partition().instruments(s.instruction.file_id))
      add(Diagnostic::Kind::PartitionViolation, id, std::nullopt,
          "step from uninstrumented file '" + s.instruction.file_id + "' in partial trace");
  }

  // Child edges must form a forest: each child has at most one parent and no
  // instance reaches itself.
  std::unordered_map<std::uint64_t, std::uint64_t> parent_of;
  for (const auto& v : trace.variables()) {
    for (const auto& edge : v.children) {
      if (!trace.find_variable(edge.var_id)) {
        add(Diagnostic::Kind::DanglingReference, std::nullopt, v.var_id,
            "variable " + std::to_string(v.var_id.value) + " has unknown child " +
                std::to_string(edge.var_id.value));
        continue;
      }
      auto [it, inserted] = parent_of.emplace(edge.var_id.value, v.var_id.value);
      if (!inserted)
        add(Diagnostic::Kind::ChildForestViolation, std::nullopt, edge.var_id,
            "variable " + std::to_string(edge.var_id.value) + " has more than one parent");
    }
  }
  for (const auto& [child, parent] : parent_of) {
    std::uint64_t cursor = parent;
    std::size_t hops = 0;
    while (hops++ <= parent_of.size()) {
      if (cursor == child) {
        add(Diagnostic::Kind::ChildForestViolation, std::nullopt, VarId{child},
            "variable " + std::to_string(child) + " is its own ancestor");
        break;
      }
      auto it = parent_of.find(cursor);
      if (it == parent_of.end()) break;
      cursor = it->second;
    }
  }
  return out;
}

namespace {

ojson location_to_json(const MemoryLocation& loc) {
  ojson j;
  j["kind"] = loc.kind == MemoryLocation::Kind::recorded ? "recorded" : "synthetic";
  j["token"] = loc.token;
  return j;
}

ojson step_to_json(const Step& s) {
  ojson j;
  j["step_id"] = s.step_id.value;
  j["file"] = s.instruction.file_id;
  j["line"] = s.instruction.line;
  j["order"] = s.order;
  j["code"] = s.instruction.code_text;
  j["is_call_site"] = s.instruction.is_call_site;
  if (s.instruction.callee_source) j["callee_source"] = *s.instruction.callee_source;
  if (s.caller_step) j["caller_step"] = s.caller_step->value;
  ojson reads = ojson::array();
  for (VarId v : s.reads) reads.push_back(v.value);
  ojson writes = ojson::array();
  for (VarId v : s.writes) writes.push_back(v.value);
  j["reads"] = std::move(reads);
  j["writes"] = std::move(writes);
  return j;
}

ojson variable_to_json(const VariableInstance& v) {
  ojson j;
  j["var_id"] = v.var_id.value;
  j["name"] = v.name;
  j["type"] = v.type_name;
  j["content"] = v.content;
  j["location"] = location_to_json(v.location);
  ojson children = ojson::array();
  for (const auto& c : v.children) {
    ojson e;
    e["label"] = c.label;
    e["var_id"] = c.var_id.value;
    children.push_back(std::move(e));
  }
  j["children"] = std::move(children);
  return j;
}

// Schema reader that records the JSON field path for diagnostics.
class Reader {
 public:
  explicit Reader(std::string path) : path_(std::move(path)) {}

  [[noreturn]] void fail(const std::string& what) const {
    throw MalformedTrace(path_ + ": " + what);
  }

  void expect_keys(const ojson& j, std::initializer_list<const char*> required,
                   std::initializer_list<const char*> optional = {}) const {
    if (!j.is_object()) fail("expected object");
    for (const char* k : required)
      if (!j.contains(k)) fail(std::string("missing key '") + k + "'");
    for (auto it = j.begin(); it != j.end(); ++it) {
      bool known = false;
      for (const char* k : required) known = known || it.key() == k;
      for (const char* k : optional) known = known || it.key() == k;
      if (!known) fail("unknown key '" + it.key() + "'");
    }
  }

  Reader at(const std::string& key) const { return Reader(path_ + "." + key); }
  Reader at(std::size_t index) const { return Reader(path_ + "[" + std::to_string(index) + "]"); }

  std::string string(const ojson& j, const char* key) const {
    const auto& v = j.at(key);
    if (!v.is_string()) at(key).fail("expected string");
    return v.get<std::string>();
  }
  std::uint64_t uint(const ojson& j, const char* key) const {
    const auto& v = j.at(key);
    if (!v.is_number_integer()) at(key).fail("expected integer");
    if (v.is_number_integer() && !v.is_number_unsigned() && v.get<std::int64_t>() < 0)
      at(key).fail("expected non-negative integer");
    return v.get<std::uint64_t>();
  }
  std::int64_t integer(const ojson& j, const char* key) const {
    const auto& v = j.at(key);
    if (!v.is_number_integer()) at(key).fail("expected integer");
    return v.get<std::int64_t>();
  }
  bool boolean(const ojson& j, const char* key) const {
    const auto& v = j.at(key);
    if (!v.is_boolean()) at(key).fail("expected boolean");
    return v.get<bool>();
  }
  const ojson& array(const ojson& j, const char* key) const {
    const auto& v = j.at(key);
    if (!v.is_array()) at(key).fail("expected array");
    return v;
  }
  std::vector<std::string> strings(const ojson& j, const char* key) const {
    std::vector<std::string> out;
    const auto& arr = array(j, key);
    for (std::size_t i = 0; i < arr.size(); ++i) {
      if (!arr[i].is_string()) at(key).at(i).fail("expected string");
      out.push_back(arr[i].get<std::string>());
    }
    return out;
  }
  std::vector<VarId> var_ids(const ojson& j, const char* key) const {
    std::vector<VarId> out;
    const auto& arr = array(j, key);
    for (std::size_t i = 0; i < arr.size(); ++i) {
      if (!arr[i].is_number_unsigned()) at(key).at(i).fail("expected variable id");
      out.push_back(VarId{arr[i].get<std::uint64_t>()});
    }
    return out;
  }

 private:
  std::string path_;
};

}  // namespace

std::string serialize_trace(const Trace& trace) {
  ojson root;
  root["version"] = 1;
  root["completeness"] = to_string(trace.completeness());
  ojson partition;
  partition["instrumented_files"] = trace.partition().instrumented_files;
  partition["uninstrumented_routines"] = trace.partition().uninstrumented_routines;
  root["partition"] = std::move(partition);
  ojson vars = ojson::array();
  for (const auto& v : trace.variables()) vars.push_back(variable_to_json(v));
  root["variables"] = std::move(vars);
  ojson steps = ojson::array();
  for (const auto& s : trace.steps()) steps.push_back(step_to_json(s));
  root["steps"] = std::move(steps);
  return root.dump(1);
}

Trace parse_trace(const std::string& text) {
  ojson root;
  try {
    root = ojson::parse(text);
  } catch (const ojson::parse_error& e) {
    throw MalformedTrace(std::string("invalid JSON: ") + e.what());
  }
  Reader r("$");
  r.expect_keys(root, {"version", "completeness", "partition", "variables", "steps"});
  if (r.integer(root, "version") != 1) r.at("version").fail("unsupported version");
  const auto completeness = r.string(root, "completeness");
  if (completeness != "partial" && completeness != "full")
    r.at("completeness").fail("expected \"partial\" or \"full\"");

  Partition partition;
  {
    Reader pr = r.at("partition");
    const auto& pj = root.at("partition");
    pr.expect_keys(pj, {"instrumented_files", "uninstrumented_routines"});
    partition.instrumented_files = pr.strings(pj, "instrumented_files");
    partition.uninstrumented_routines = pr.strings(pj, "uninstrumented_routines");
  }

  std::vector<VariableInstance> variables;
  const auto& vars = r.array(root, "variables");
  variables.reserve(vars.size());
  for (std::size_t i = 0; i < vars.size(); ++i) {
    Reader vr = r.at("variables").at(i);
    const auto& vj = vars[i];
    vr.expect_keys(vj, {"var_id", "name", "type", "content", "location", "children"});
    VariableInstance v;
    v.var_id = VarId{vr.uint(vj, "var_id")};
    v.name = vr.string(vj, "name");
    v.type_name = vr.string(vj, "type");
    v.content = vr.string(vj, "content");
    Reader lr = vr.at("location");
    const auto& lj = vj.at("location");
    lr.expect_keys(lj, {"kind", "token"});
    const auto kind = lr.string(lj, "kind");
    if (kind == "recorded")
      v.location.kind = MemoryLocation::Kind::recorded;
    else if (kind == "synthetic")
      v.location.kind = MemoryLocation::Kind::synthetic;
    else
      lr.at("kind").fail("expected \"recorded\" or \"synthetic\"");
    v.location.token = lr.string(lj, "token");
    const auto& children = vr.array(vj, "children");
    for (std::size_t c = 0; c < children.size(); ++c) {
      Reader cr = vr.at("children").at(c);
      cr.expect_keys(children[c], {"label", "var_id"});
      v.children.push_back(ChildEdge{cr.string(children[c], "label"),
                                     VarId{cr.uint(children[c], "var_id")}});
    }
    variables.push_back(std::move(v));
  }

  std::vector<Step> steps;
  const auto& sj_all = r.array(root, "steps");
  steps.reserve(sj_all.size());
  for (std::size_t i = 0; i < sj_all.size(); ++i) {
    Reader sr = r.at("steps").at(i);
    const auto& sj = sj_all[i];
    sr.expect_keys(sj, {"step_id", "file", "line", "order", "code", "is_call_site", "reads", "writes"},
                   {"callee_source", "caller_step"});
    Step s;
    s.step_id = StepId{sr.uint(sj, "step_id")};
    s.instruction.file_id = sr.string(sj, "file");
    s.instruction.line = static_cast<int>(sr.integer(sj, "line"));
    s.order = static_cast<std::uint32_t>(sr.uint(sj, "order"));
    s.instruction.code_text = sr.string(sj, "code");
    s.instruction.is_call_site = sr.boolean(sj, "is_call_site");
    if (sj.contains("callee_source")) s.instruction.callee_source = sr.string(sj, "callee_source");
    if (sj.contains("caller_step")) s.caller_step = StepId{sr.uint(sj, "caller_step")};
    s.reads = sr.var_ids(sj, "reads");
    s.writes = sr.var_ids(sj, "writes");
    steps.push_back(std::move(s));
  }

  Trace trace(std::move(steps), std::move(variables), std::move(partition),
              completeness == "full" ? Completeness::full : Completeness::partial);
  for (const auto& d : validate_trace(trace)) {
    if (d.kind == Diagnostic::Kind::DanglingReference) throw DanglingReference(d.message);
    throw MalformedTrace(to_string(d.kind) + ": " + d.message);
  }
  return trace;
}

Trace load_trace(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MalformedTrace("cannot open trace file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_trace(buf.str());
}

void save_trace(const Trace& trace, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw MalformedTrace("cannot write trace file " + path.string());
  out << serialize_trace(trace) << '\n';
}

std::optional<StepId> last_step_before(const Trace& trace, StepId before,
                                       const std::function<bool(const Step&)>& pred) {
  if (!trace.has_step(before)) trace.step(before);  // raises UnknownStep
  const auto& steps = trace.steps();
  auto end = std::lower_bound(steps.begin(), steps.end(), before,
                              [](const Step& s, StepId id) { return s.step_id < id; });
  for (auto it = std::make_reverse_iterator(end); it != steps.rend(); ++it)
    if (pred(*it)) return it->step_id;
  return std::nullopt;
}

}  // namespace recov
