#include <filesystem>
#include <regex>

#include "doctest.h"
#include "recov/evalkit.hpp"
#include "recov/slicer.hpp"

using namespace recov;
namespace fs = std::filesystem;

namespace {

std::string all_text(const CorpusCase& c) {
  std::string out;
  for (const auto& [_, text] : c.program.files) out += text;
  return out;
}

bool mentions(const std::string& text, const char* pattern) { return std::regex_search(text, std::regex(pattern)); }

SliceResult answer(std::optional<std::uint64_t> step, CaseKind kind) {
  SliceResult r;
  if (step) r.def_step = StepId{*step};
  r.case_kind = kind;
  return r;
}

GroundTruthAnswer truth(std::optional<std::uint64_t> step, CaseKind kind) {
  GroundTruthAnswer g;
  if (step) g.def_step = StepId{*step};
  g.case_kind = kind;
  return g;
}

GraphNode leaf(const std::string& name, const std::string& value) { return {name, "int", value, {}}; }

}  // namespace

TEST_CASE("level names round-trip") {
  CHECK(all_levels().size() == 5);
  for (Level l : all_levels()) CHECK(parse_level(to_string(l)) == l);
  CHECK_FALSE(parse_level("expert"));
  auto spec = LevelSpec::standard(Level::noisy_context);
  CHECK(spec.noise_min == 3);
  CHECK(spec.noise_max == 8);
  CHECK(LevelSpec::standard(Level::inter_file).file_count == 3);
  CHECK(LevelSpec::standard(Level::variable_aliasing).alias_depth == 2);
}

TEST_CASE("generation is deterministic per level and seed") {
  for (Level l : all_levels()) {
    auto a = generate_case(LevelSpec::standard(l), 77);
    auto b = generate_case(LevelSpec::standard(l), 77);
    CHECK(a.program.files == b.program.files);
    CHECK(a.query.step_id == b.query.step_id);
    CHECK(render_path(a.query.path) == render_path(b.query.path));
    CHECK(a.expected.def_step == b.expected.def_step);
  }
  CHECK(generate_case(LevelSpec::standard(Level::basic_operations), 1).program.files !=
        generate_case(LevelSpec::standard(Level::basic_operations), 2).program.files);
  // The same seed gives different programs at different levels.
  CHECK(generate_case(LevelSpec::standard(Level::basic_operations), 5).program.files !=
        generate_case(LevelSpec::standard(Level::noisy_context), 5).program.files);
}

TEST_CASE("each level adds its own kind of difficulty") {
  int noisy_with_noise = 0, aliased = 0, wrapped = 0;
  for (std::uint64_t seed = 1; seed <= 30; ++seed) {
    auto basic = generate_case(LevelSpec::standard(Level::basic_operations), seed);
    CHECK(basic.program.files.size() == 1);
    // The string builder scenario reads length() itself; anything else is noise.
    CHECK_FALSE(mentions(all_text(basic), R"(\bn\d+ = (?!\w+\.length\(\);)|print\(|\bview\d|\balias\d|\bfun\s)"));

    auto noisy = generate_case(LevelSpec::standard(Level::noisy_context), seed);
    if (mentions(all_text(noisy), R"(\bn\d+\b|print\()")) ++noisy_with_noise;

    auto alias = generate_case(LevelSpec::standard(Level::variable_aliasing), seed);
    if (mentions(all_text(alias), R"(\b(view|alias|elem)\d+ = )")) ++aliased;

    auto inter = generate_case(LevelSpec::standard(Level::interprocedural), seed);
    CHECK(inter.program.files.size() == 1);
    if (mentions(all_text(inter), R"(\bfun (store|update|apply|push))")) ++wrapped;

    auto files = generate_case(LevelSpec::standard(Level::inter_file), seed);
    CHECK(files.program.files.size() == 3);
    CHECK(files.program.files.count(kMainFile) == 1);
  }
  CHECK(noisy_with_noise == 30);
  CHECK(aliased >= 20);
  CHECK(wrapped == 30);
}

TEST_CASE("ground truth is reproduced by the oracle slicer over a large sweep") {
  std::size_t total = 0, agree = 0;
  for (Level l : all_levels()) {
    for (std::uint64_t seed = 100; seed < 300; ++seed) {
      auto c = generate_case(LevelSpec::standard(l), seed);
      auto p = prepare_case(c);
      OracleEstimator oracle(p.exec, p.partial);
      SliceOptions opts;
      opts.class_structures = class_structures(*p.exec->linked);
      auto r = slice(p.partial->trace, c.query, oracle, opts);
      ++total;
      if (r.def_step == c.expected.def_step && r.case_kind == c.expected.case_kind) ++agree;
      CHECK(c.query.step_id.value <= p.partial->trace.step_count());
    }
  }
  CHECK(total == 1000);
  CHECK(agree == total);
}

TEST_CASE("dependency scores follow the x/c/k/d tally") {
  std::vector<GroundTruthAnswer> expected = {
      truth(2, CaseKind::case2_call_site), truth(4, CaseKind::case1_direct), truth(5, CaseKind::case2_call_site),
      truth(7, CaseKind::case2_call_site), truth(9, CaseKind::case1_direct)};
  std::vector<SliceResult> predicted = {
      answer(2, CaseKind::case2_call_site), answer(4, CaseKind::case1_direct), answer(5, CaseKind::case2_call_site),
      answer(6, CaseKind::case2_call_site), answer(std::nullopt, CaseKind::none)};
  auto r = score_dependency(predicted, expected);
  CHECK(r.counts == ScoreCounts{3, 4, 5, 5});
  CHECK(r.precision == doctest::Approx(0.75));
  CHECK(r.recall == doctest::Approx(0.6));
  CHECK(r.success_ratio == doctest::Approx(0.6));

  // Right step, wrong case is not correct.
  auto wrong_case = score_dependency({answer(2, CaseKind::case1_direct)}, {truth(2, CaseKind::case2_call_site)});
  CHECK(wrong_case.counts == ScoreCounts{0, 1, 1, 1});

  // A correct "none" counts as emitted and correct.
  auto none = score_dependency({answer(std::nullopt, CaseKind::none), answer(3, CaseKind::case1_direct)},
                               {truth(std::nullopt, CaseKind::none), truth(3, CaseKind::case1_direct)});
  CHECK(none.counts == ScoreCounts{2, 2, 2, 2});
  CHECK(none.precision == 1.0);
  CHECK(none.recall == 1.0);

  auto empty = score_dependency({}, {});
  CHECK(empty.precision == 0.0);
  CHECK_THROWS_AS(score_dependency({answer(1, CaseKind::case1_direct)}, {}), LengthMismatch);
}

TEST_CASE("recovery scores pool node matches across pairs") {
  ObjectGraph t1{"r", {"r", "T", "", {leaf("a", "1"), leaf("b", "2"), leaf("c", "3")}}};
  ObjectGraph p1{"r", {"r", "T", "", {leaf("a", "1"), leaf("b", "2"), leaf("z", "9")}}};
  ObjectGraph t2{"s", {"s", "T", "", {{"d", "D", "", {leaf("e", "5")}}}}};
  ObjectGraph p2{"s", {"s", "T", "", {{"d", "D", "", {leaf("e", "5")}}, leaf("extra", "0")}}};
  // Pair 1: 2 of 3 predicted match. Pair 2: both truth nodes match, one extra.
  auto r = score_recovery({p1, p2}, {t1, t2});
  CHECK(r.counts.x == 4);
  CHECK(r.counts.c == 6);
  CHECK(r.counts.k == 5);
  CHECK(r.precision == doctest::Approx(4.0 / 6.0));
  CHECK(r.recall == doctest::Approx(0.8));
  CHECK(r.success_ratio == 0.0);

  auto x3 = score_recovery({ObjectGraph{"r", {"r", "T", "", {leaf("a", "1"), leaf("b", "2"), leaf("c", "3"),
                                                              leaf("q", "0")}}}},
                           {ObjectGraph{"r", {"r", "T", "", {leaf("a", "1"), leaf("b", "2"), leaf("c", "3"),
                                                              leaf("d", "4"), leaf("e", "5")}}}});
  CHECK(x3.counts.x == 3);
  CHECK(x3.precision == doctest::Approx(0.75));
  CHECK(x3.recall == doctest::Approx(0.6));

  auto exact = score_recovery({t1, t2}, {t1, t2});
  CHECK(exact.precision == 1.0);
  CHECK(exact.recall == 1.0);
  CHECK(exact.success_ratio == 1.0);
  CHECK_THROWS_AS(score_recovery({t1}, {t1, t2}), LengthMismatch);
}

TEST_CASE("cases survive a write/read round-trip") {
  fs::path root = fs::temp_directory_path() / "recov_evalkit_corpus";
  fs::remove_all(root);
  std::vector<CorpusCase> cases;
  for (Level l : all_levels()) cases.push_back(generate_case(LevelSpec::standard(l), 9));
  for (const auto& c : cases) write_case(c, root);
  auto dirs = list_cases(root);
  REQUIRE(dirs.size() == cases.size());
  for (const auto& dir : dirs) {
    auto back = read_case(dir);
    bool matched = false;
    for (const auto& c : cases) {
      if (c.spec.level != back.spec.level) continue;
      matched = true;
      CHECK(back.program.files == c.program.files);
      CHECK(back.seed == c.seed);
      CHECK(back.query.step_id == c.query.step_id);
      CHECK(render_path(back.query.path) == render_path(c.query.path));
      CHECK(back.expected.def_step == c.expected.def_step);
      CHECK(back.expected.case_kind == c.expected.case_kind);
      CHECK(back.expected.location == c.expected.location);
    }
    CHECK(matched);
  }
  CHECK_THROWS_AS(read_case(root / "nowhere"), CorpusError);
}
