#include "doctest.h"
#include "golden_fixtures.hpp"

using namespace recov;
namespace fx = recov::fixtures;

TEST_CASE("recovery prompt matches the reference byte for byte") {
  CHECK(build_recovery_prompt(fx::recovery_request()) == fx::golden("recovery_atomicref.txt"));
}

TEST_CASE("alias prompt matches the reference byte for byte") {
  CHECK(build_alias_prompt(fx::alias_input()) == fx::golden("alias_atomicref.txt"));
}

TEST_CASE("definition prompt matches the reference byte for byte") {
  CHECK(build_def_prompt(fx::def_input()) == fx::golden("def_compareandset.txt"));
}

TEST_CASE("recovery prompt without focal path uses the sentinel") {
  auto req = fx::recovery_request();
  req.focal_path.reset();
  auto p = build_recovery_prompt(req);
  CHECK(p.find("**Focal Variable Path:**\n`#all_fields#`\n\n**Related") != std::string::npos);
}

TEST_CASE("adaptive example replaces the static one") {
  auto req = fx::recovery_request();
  req.adaptive_example = PromptExample{"INPUT-BLOCK", "OUTPUT-BLOCK"};
  auto p = build_recovery_prompt(req);
  CHECK(p.find("INPUT-BLOCK\n\n**Expected Output:**\nOUTPUT-BLOCK\n\n## Task") != std::string::npos);
  CHECK(p.find("pairOffset") == std::string::npos);
}

TEST_CASE("empty slots are rejected") {
  auto req = fx::recovery_request();
  req.step_code.clear();
  CHECK_THROWS_AS(build_recovery_prompt(req), SlotMissing);
  auto a = fx::alias_input();
  a.root_name.clear();
  CHECK_THROWS_AS(build_alias_prompt(a), SlotMissing);
  auto d = fx::def_input();
  d.usage_code.clear();
  CHECK_THROWS_AS(build_def_prompt(d), SlotMissing);
}

TEST_CASE("missing callee source gets a placeholder") {
  auto a = fx::alias_input();
  a.callee_source.reset();
  CHECK(build_alias_prompt(a).find("in the code:\n(source not available)\n\n") != std::string::npos);
}

TEST_CASE("alias prompt omits the where block without aliases") {
  auto a = fx::alias_input();
  a.root_aliases_in_code.clear();
  auto p = build_alias_prompt(a);
  CHECK(p.find("where\n") == std::string::npos);
}

TEST_CASE("reference recovery response parses into the expected graph") {
  auto g = parse_graph_response(fx::golden("recovery_response.txt"));
  CHECK(g.root_name == "atomicRef");
  REQUIRE(g.root.children.size() == 1);
  const auto* pair = g.root.child("pair");
  REQUIRE(pair);
  CHECK(pair->type_name == fx::kStampedPair);
  const auto* ref = pair->child("reference");
  REQUIRE(ref);
  CHECK(ref->type_name == "java.lang.Integer");
  CHECK(ref->value == "42");
}

TEST_CASE("reference alias response parses into three pairs") {
  auto v = parse_alias_response(fx::golden("alias_response.txt"));
  REQUIRE(v.pairs.size() == 3);
  CHECK(v.pairs.at("atomicRef") == "AtomicStampedReference_instance");
  CHECK(v.pairs.at("atomicRef.pair") == "AtomicStampedReference_instance.pair");
  CHECK(v.pairs.at("atomicRef.pair.reference") == "initialRef");
}

TEST_CASE("reference definition response parses as true") {
  CHECK(parse_verdict_response(fx::golden("def_response.txt")) == true);
  CHECK(parse_verdict_response("**Answer:** <F> because") == false);
  CHECK(parse_verdict_response("<thought>maybe <T></thought> Answer: <F>") == false);
  CHECK_THROWS_AS(parse_verdict_response("I am not sure."), NoVerdict);
}

TEST_CASE("graph responses without a json block or with bad keys are rejected") {
  CHECK_THROWS_AS(parse_graph_response("no json here"), NoJsonBlock);
  CHECK_THROWS_AS(parse_graph_response("```json\n{\"a\": {\"b\": \"1\"}}\n```"), MalformedGraph);
  CHECK_THROWS_AS(parse_graph_response("```json\n{\"a\": 1, \"b\": 2}\n```"), MalformedGraph);
  CHECK_THROWS_AS(parse_graph_response("```json\n{\"a\": [1, \n```"), MalformedGraph);
}

TEST_CASE("json arrays in a graph become indexed children") {
  auto g = parse_graph_response("```json\n{\"xs\": {\"elementData|int[]\": [\"1\", \"2\"]}}\n```");
  const auto* data = g.root.child("elementData");
  REQUIRE(data);
  REQUIRE(data->children.size() == 2);
  CHECK(data->children[1].name == "[1]");
  CHECK(data->children[1].value == "2");
}

TEST_CASE("recovered graph renders back in the output layout") {
  auto g = parse_graph_response(fx::golden("recovery_response.txt"));
  auto block = render_example_output(g);
  CHECK(block.rfind("```json\n{\n  \"atomicRef\": {\n    \"pair|", 0) == 0);
  CHECK(parse_graph_response(block) == g);
}

TEST_CASE("the alias prompt's worked example parses to its single pair") {
  auto v = parse_alias_response("{\n\"list.elementData.elementData[0]\":\"item\"\n}");
  CHECK(v.pairs == std::map<std::string, std::string>{{"list.elementData.elementData[0]", "item"}});
}
