// Acceptance checks: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <regex>
#include <sstream>

#include "fake_transport.hpp"
#include "gen.hpp"
#include "golden_fixtures.hpp"
#include "recov/evalkit.hpp"
#include "recov/slicer.hpp"
#include "stub_estimators.hpp"

using namespace recov;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

constexpr int kCasesPerLevel = 60;             // at least 50 per level
constexpr double kOracleBudgetSeconds = 120.0;
constexpr double kMotivatingBudgetSeconds = 1.0;
constexpr double kMetricTolerance = 1e-9;
constexpr int kRoundTrips = 1000;

struct Outcome {
  bool pass;
  std::string detail;
};

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct SliceSetup {
  PreparedCase prepared;
  SliceOptions opts;
};

SliceSetup setup(const CorpusCase& c) {
  SliceSetup s{prepare_case(c), {}};
  s.opts.class_structures = class_structures(*s.prepared.exec->linked);
  return s;
}

std::vector<CorpusCase> sample_cases(int per_level, std::uint64_t first_seed) {
  std::vector<CorpusCase> out;
  for (Level l : all_levels())
    for (int i = 0; i < per_level; ++i) out.push_back(generate_case(LevelSpec::standard(l), first_seed + i));
  return out;
}

Outcome oracle_equivalence() {
  auto t0 = Clock::now();
  std::size_t total = 0, agree = 0;
  std::map<Level, std::size_t> per_level;
  for (const auto& c : sample_cases(kCasesPerLevel, 1)) {
    auto s = setup(c);
    OracleEstimator oracle(s.prepared.exec, s.prepared.partial);
    auto r = slice(s.prepared.partial->trace, c.query, oracle, s.opts);
    ++total;
    ++per_level[c.spec.level];
    if (r.def_step == c.expected.def_step && r.case_kind == c.expected.case_kind) ++agree;
  }
  double secs = seconds_since(t0);
  bool enough = total >= 250;
  for (const auto& [_, n] : per_level) enough = enough && n >= 50;
  std::ostringstream d;
  d << agree << "/" << total << " cases agree in " << secs << " s";
  return {enough && agree == total && secs < kOracleBudgetSeconds, d.str()};
}

struct MotivatingRun {
  std::shared_ptr<Execution> exec;
  std::shared_ptr<PartialTrace> partial;
  SliceOptions opts;
};

MotivatingRun motivating() {
  auto program = load_program({std::string(RECOV_SOURCE_DIR) + "/data/motivating/motivating.mini"});
  MotivatingRun m;
  m.exec = std::make_shared<Execution>(run_full(program, 7));
  m.partial = std::make_shared<PartialTrace>(make_partial(*m.exec, application_files(program)));
  m.opts.class_structures = class_structures(*m.exec->linked);
  return m;
}

const SliceQuery kMotivatingQuery{StepId{13}, parse_path("sharedList.elementData[0].value[1]")};

Outcome motivating_example() {
  auto t0 = Clock::now();
  auto m = motivating();
  OracleEstimator oracle(m.exec, m.partial);
  auto r = slice(m.partial->trace, kMotivatingQuery, oracle, m.opts);
  double secs = seconds_since(t0);
  std::ostringstream d;
  d << "def_step=" << (r.def_step ? std::to_string(r.def_step->value) : "none") << " case=" << to_string(r.case_kind)
    << " in " << secs << " s";
  return {r.def_step == StepId{8} && r.case_kind == CaseKind::case2_call_site && secs < kMotivatingBudgetSeconds,
          d.str()};
}

Outcome golden_prompts() {
  using namespace recov::fixtures;
  int ok = 0;
  ok += build_recovery_prompt(recovery_request()) == golden("recovery_atomicref.txt");
  ok += build_alias_prompt(alias_input()) == golden("alias_atomicref.txt");
  ok += build_def_prompt(def_input()) == golden("def_compareandset.txt");
  auto g = parse_graph_response(golden("recovery_response.txt"));
  const GraphNode* leaf = resolve_in_graph(focal(), g);
  ok += leaf && leaf->value == "42";
  ok += parse_alias_response(golden("alias_response.txt")).pairs.size() == 3;
  ok += parse_verdict_response(golden("def_response.txt"));
  // The worked example embedded in the alias prompt.
  auto example = parse_alias_response("{\n\"list.elementData.elementData[0]\":\"item\"\n}");
  ok += example.pairs == std::map<std::string, std::string>{{"list.elementData.elementData[0]", "item"}};
  return {ok == 7, std::to_string(ok) + "/7 prompt and parse checks"};
}

bool near(double a, double b) { return std::fabs(a - b) <= kMetricTolerance; }

Outcome metric_arithmetic() {
  auto ans = [](std::optional<std::uint64_t> s, CaseKind k) {
    SliceResult r;
    if (s) r.def_step = StepId{*s};
    r.case_kind = k;
    return r;
  };
  auto truth = [](std::uint64_t s, CaseKind k) {
    GroundTruthAnswer g;
    g.def_step = StepId{s};
    g.case_kind = k;
    return g;
  };
  const auto c2 = CaseKind::case2_call_site;
  auto dep = score_dependency({ans(1, c2), ans(2, c2), ans(3, c2), ans(9, c2), ans(std::nullopt, CaseKind::none)},
                              {truth(1, c2), truth(2, c2), truth(3, c2), truth(4, c2), truth(5, c2)});
  auto leaf = [](const char* n, const char* v) { return GraphNode{n, "int", v, {}}; };
  ObjectGraph t{"r", {"r", "T", "", {leaf("a", "1"), leaf("b", "2"), leaf("c", "3"), leaf("d", "4"), leaf("e", "5")}}};
  ObjectGraph p{"r", {"r", "T", "", {leaf("a", "1"), leaf("b", "2"), leaf("c", "3"), leaf("z", "0")}}};
  auto rec = score_recovery({p}, {t});
  auto all = score_dependency({ans(1, c2), ans(2, c2)}, {truth(1, c2), truth(2, c2)});
  bool ok = dep.counts == ScoreCounts{3, 4, 5, 5} && near(dep.precision, 0.75) && near(dep.recall, 0.6) &&
            rec.counts.x == 3 && rec.counts.c == 4 && rec.counts.k == 5 && near(rec.precision, 0.75) &&
            near(rec.recall, 0.6) && all.counts.x == all.counts.d && near(all.success_ratio, 1.0);
  std::ostringstream d;
  d << "dependency P=" << dep.precision << " R=" << dep.recall << "; recovery P=" << rec.precision
    << " R=" << rec.recall << "; x=d success=" << all.success_ratio;
  return {ok, d.str()};
}

Outcome path_grammar() {
  gen::Rng rng(2024);
  int round_trips = 0;
  for (int i = 0; i < kRoundTrips; ++i) {
    auto sample = gen::random_path(rng);
    try {
      auto parsed = parse_path(sample.text);
      if (parsed == sample.path && render_path(parsed) == sample.text) ++round_trips;
    } catch (const PathSyntaxError&) {
    }
  }
  struct Bad {
    const char* text;
    std::size_t offset;
  };
  const Bad bad[] = {
      {"", 0},         {".", 0},          {"1abc", 0},         {"a.", 2},      {"a..", 2},
      {"a[", 2},       {"a[]", 2},        {"a[1", 3},          {"a[x]", 2},    {"a[\"k]", 5},
      {"a]", 1},       {"a b", 2},        {"a.1b", 2},         {"a[-]", 3},    {"a[1]]", 4},
      {"a[\"\\n\"]", 4}, {"a[1234567890123456789]", 2}, {"a.b[", 4}, {"a-b", 1}, {"a[1.5]", 3},
  };
  int rejected = 0;
  for (const auto& b : bad) {
    try {
      parse_path(b.text);
    } catch (const PathSyntaxError& e) {
      if (e.offset() == b.offset) ++rejected;
    }
  }
  std::ostringstream d;
  d << round_trips << "/" << kRoundTrips << " round trips, " << rejected << "/20 malformed rejected at offset";
  return {round_trips == kRoundTrips && rejected == 20, d.str()};
}

// Scripted model: recovery prompts get a chain along the focal path, alias
// prompts an empty object, definition prompts a verdict keyed on the target.
std::string scripted_model(const std::string& prompt) {
  auto last_slot = [&](const std::string& heading) {
    std::size_t at = prompt.rfind(heading + "\n`");
    if (at == std::string::npos) return std::string();
    at += heading.size() + 2;
    return prompt.substr(at, prompt.find('`', at) - at);
  };
  if (prompt.find("**Target Line:**") != std::string::npos) {
    std::string target = last_slot("**Target Line:**");
    return target.find("append") != std::string::npos ? "**Answer:** <T>" : "**Answer:** <F>";
  }
  if (prompt.find("identify all the aliases") != std::string::npos) return "```json\n{}\n```";
  std::string root = last_slot("**Focal Variable Name:**");
  std::string focal = last_slot("**Focal Variable Path:**");
  std::vector<std::string> names;
  try {
    auto path = parse_path(focal);
    std::string rendered = path.root_name();
    for (std::size_t i = 1; i < path.size(); ++i) {
      std::string full = render_path(ReferencePath(std::vector<PathSegment>(
          path.segments().begin(), path.segments().begin() + static_cast<std::ptrdiff_t>(i) + 1)));
      names.push_back(full.substr(rendered.size()));
      rendered = full;
    }
  } catch (const PathSyntaxError&) {
  }
  std::string body = "\"0\"";
  for (auto it = names.rbegin(); it != names.rend(); ++it) {
    std::string label = *it;
    if (label.front() == '.') label.erase(0, 1);
    body = "{\"" + label + "|Object\": " + body + "}";
  }
  return "```json\n{\"" + root + "\": " + (names.empty() ? "{}" : body) + "}\n```";
}

Outcome cache_replay() {
  fs::path dir = fs::temp_directory_path() / "recov_acceptance_cache";
  fs::remove_all(dir);
  auto cache = std::make_shared<CompletionCache>(dir);
  auto transport = std::make_shared<stubs::ScriptedTransport>();
  transport->fallback = scripted_model;

  auto cases = sample_cases(4, 500);
  auto run_all = [&](std::shared_ptr<CompletionClient> client) {
    std::vector<std::string> out;
    LlmEstimator est(client);
    auto m = motivating();
    out.push_back(serialize_slice_result(slice(m.partial->trace, kMotivatingQuery, est, m.opts)));
    for (const auto& c : cases) {
      auto s = setup(c);
      out.push_back(serialize_slice_result(slice(s.prepared.partial->trace, c.query, est, s.opts)));
    }
    return out;
  };
  CompletionConfig live;
  live.backoff = std::chrono::milliseconds(0);
  auto recorder = std::make_shared<CompletionClient>(live, cache, transport);
  auto first = run_all(recorder);

  CompletionConfig offline = live;
  offline.offline = true;
  auto replayer = std::make_shared<CompletionClient>(offline, cache, nullptr);
  auto second = run_all(replayer);

  std::size_t degraded = 0;
  for (const auto& r : second) degraded += parse_slice_result(r).degraded();
  std::ostringstream d;
  d << first.size() << " slices, " << recorder->network_calls() << " recorded calls, "
    << replayer->network_calls() << " replay calls, " << degraded << " degraded on replay";
  return {first == second && replayer->network_calls() == 0 && recorder->network_calls() > 0 && degraded == 0,
          d.str()};
}

Outcome ablation() {
  std::size_t triggered = 0, harvested_default = 0, harvested_off = 0, mismatched = 0;
  for (const auto& c : sample_cases(10, 700)) {
    auto s = setup(c);
    OracleEstimator oracle(s.prepared.exec, s.prepared.partial);
    auto on = slice(s.prepared.partial->trace, c.query, oracle, s.opts);
    s.opts.adaptive_context = false;
    auto off = slice(s.prepared.partial->trace, c.query, oracle, s.opts);
    harvested_off += off.count("harvest_example");
    if (on.count("recovery") > 0) {
      ++triggered;
      if (on.count("harvest_example") == 1) ++harvested_default;
    }
    if (on.def_step != off.def_step || on.case_kind != off.case_kind) ++mismatched;
  }
  std::ostringstream d;
  d << harvested_default << "/" << triggered << " recoveries carried an example by default, " << harvested_off
    << " with the flag off";
  return {triggered > 0 && harvested_default == triggered && harvested_off == 0 && mismatched == 0, d.str()};
}

Outcome degradation() {
  stubs::FailingEstimator failing;
  std::size_t total = 0, ok = 0;
  auto check = [&](const SliceResult& r) {
    ++total;
    bool allowed = !r.def_step || r.count("fast_path") > 0;
    if (allowed && r.degraded() && r.case_kind != CaseKind::case2_call_site) ++ok;
  };
  auto m = motivating();
  check(slice(m.partial->trace, kMotivatingQuery, failing, m.opts));
  for (const auto& c : sample_cases(6, 900)) {
    auto s = setup(c);
    check(slice(s.prepared.partial->trace, c.query, failing, s.opts));
  }
  return {ok == total, std::to_string(ok) + "/" + std::to_string(total) + " degraded without case2 answers"};
}

}  // namespace

int main() {
  const std::pair<const char*, std::function<Outcome()>> criteria[] = {
      {"oracle-equivalence", oracle_equivalence},
      {"motivating-example", motivating_example},
      {"golden-prompts", golden_prompts},
      {"metric-arithmetic", metric_arithmetic},
      {"path-grammar", path_grammar},
      {"cache-replay", cache_replay},
      {"adaptive-context-ablation", ablation},
      {"backend-failure-degradation", degradation},
  };
  int failures = 0;
  for (const auto& [name, run] : criteria) {
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    failures += !o.pass;
    std::cout << (o.pass ? "PASS " : "FAIL ") << name << ": " << o.detail << std::endl;
  }
  return failures == 0 ? 0 : 1;
}
