#include "doctest.h"
#include "recov/estimator.hpp"
#include "recov/evalkit.hpp"
#include "recov/object_graph.hpp"

using namespace recov;

namespace {

struct Fixture {
  MiniProgram program = load_program({std::string(RECOV_SOURCE_DIR) + "/data/motivating/motivating.mini"});
  std::shared_ptr<Execution> exec = std::make_shared<Execution>(run_full(program, 7));
  std::shared_ptr<PartialTrace> partial =
      std::make_shared<PartialTrace>(make_partial(*exec, application_files(program)));
  OracleEstimator est{exec, partial};

  VarId read_of(StepId step, const std::string& name) const {
    for (VarId v : partial->trace.step(step).reads)
      if (partial->trace.variable(v).name == name) return v;
    FAIL("no read named " << name);
    return {};
  }
};

RecoveryRequest list_request() {
  RecoveryRequest r;
  r.root_name = "sharedList";
  r.root_type = "List";
  r.root_value = "[\"002\"]";
  r.step_code = "c = sharedList.get(0).charAt(1);";
  r.query_step = StepId{13};
  return r;
}

}  // namespace

TEST_CASE("oracle recovery reads the heap at the query step") {
  Fixture f;
  auto g = f.est.recover_object_graph(list_request()).value;
  CHECK(g.root_name == "sharedList");
  CHECK(g.root.type_name == "List");
  const GraphNode* elems = g.root.child("elementData");
  REQUIRE(elems);
  const GraphNode* buf = elems->child("[0]");
  REQUIRE(buf);
  CHECK(buf->type_name == "StrBuf");
  CHECK(buf->child("count")->value == "3");
  CHECK(buf->child("value")->child("[1]")->value == "0");
  CHECK(buf->child("value")->child("[2]")->value == "2");
  CHECK(g.root.child("size")->value == "1");

  // Earlier query steps see earlier heap states.
  auto early = list_request();
  early.query_step = StepId{6};
  auto g6 = f.est.recover_object_graph(early).value;
  CHECK(g6.root.child("elementData")->child("[0]")->child("count")->value == "1");

  auto missing = list_request();
  missing.root_name = "ghost";
  CHECK_THROWS_AS(f.est.recover_object_graph(missing), RecoveryFailed);
}

TEST_CASE("oracle alias answers follow runtime identity") {
  Fixture f;
  AliasRequest a;
  a.trace = &f.partial->trace;
  a.query_step = StepId{13};
  a.known_root = f.read_of(StepId{13}, "sharedList");
  a.known_graph = f.est.recover_object_graph(list_request()).value;
  a.fields_of_interest = {parse_path("sharedList.elementData[0]")};

  a.step = StepId{8};
  auto v8 = f.est.infer_alias(a).value;
  CHECK(v8.pairs == std::map<std::string, std::string>{{"sharedList.elementData[0]", "aliasRef"}});
  a.step = StepId{3};
  CHECK(f.est.infer_alias(a).value.pairs.at("sharedList.elementData[0]") == "originalRef");
  a.step = StepId{6};
  CHECK(f.est.infer_alias(a).value.pairs.empty());
}

TEST_CASE("oracle def answers agree with expansion") {
  Fixture f;
  const auto field = parse_path("sharedList.elementData[0].value[1]");
  auto gt = oracle_dependency(*f.exec, *f.partial, {StepId{13}, field});
  for (std::uint64_t s = 1; s < 13; ++s) {
    DefRequest d;
    d.trace = &f.partial->trace;
    d.target_step = StepId{s};
    d.usage_step = StepId{13};
    d.queried_field = field;
    bool expected = false;
    for (StepId full : expansion(*f.exec, *f.partial, StepId{s}))
      if (full == *gt.full_def_step) expected = true;
    CHECK_MESSAGE(f.est.infer_is_def(d).value == expected, "step ", s);
  }
}

// Property: every affirmed alias names an instance of the step that shares the
// field's location at the query step, and every such instance is affirmed.
TEST_CASE("oracle alias verdicts match heap locations on generated cases") {
  std::size_t checked = 0, affirmed = 0;
  for (Level level : {Level::variable_aliasing, Level::interprocedural}) {
    for (std::uint64_t seed = 1; seed <= 15; ++seed) {
      auto c = generate_case(LevelSpec::standard(level), seed);
      auto prepared = prepare_case(c);
      OracleEstimator est(prepared.exec, prepared.partial);
      const Trace& t = prepared.partial->trace;
      auto snap = snapshot_before(*prepared.exec, prepared.partial->to_full(c.query.step_id));
      const auto& segs = c.query.path.segments();
      ReferencePath field(std::vector<PathSegment>(segs.begin(), segs.begin() + 1));
      auto resolved = mini::resolve_path(snap, field);
      REQUIRE(resolved);
      for (std::uint64_t s = 1; s < c.query.step_id.value; ++s) {
        AliasRequest a;
        a.trace = &t;
        a.step = StepId{s};
        a.query_step = c.query.step_id;
        a.fields_of_interest = {field};
        auto verdict = est.infer_alias(a).value;
        bool has_match = false;
        const Step& step = t.step(StepId{s});
        for (const auto* list : {&step.reads, &step.writes})
          for (VarId v : *list)
            if (t.variable(v).location.token == resolved->location) has_match = true;
        CHECK(has_match == !verdict.pairs.empty());
        if (has_match) ++affirmed;
        for (const auto& [_, name] : verdict.pairs) {
          bool found = false;
          for (const auto* list : {&step.reads, &step.writes})
            for (VarId v : *list)
              if (t.variable(v).name == name && t.variable(v).location.token == resolved->location) found = true;
          CHECK(found);
        }
        ++checked;
      }
    }
  }
  CHECK(checked > 100);
  CHECK(affirmed > 20);
}

TEST_CASE("class structures list declared fields with types") {
  Fixture f;
  auto cs = class_structures(*f.exec->linked);
  CHECK(cs.at("List") == "List:{array elementData;int size;}");
  CHECK(cs.at("StrBuf") == "StrBuf:{array value;int count;}");
  CHECK(cs.count("Map") == 1);
}

TEST_CASE("heap graphs stop at the depth cap and at null") {
  mini::Heap heap;
  auto outer = heap.allocate("Node", false);
  auto inner = heap.allocate("Node", false);
  heap.at(outer).fields = {{"v", 1LL}, {"next", inner}};
  heap.at(inner).fields = {{"v", 2LL}, {"next", mini::Value{}}};
  auto deep = graph_from_heap(heap, "n", outer);
  CHECK(deep.type_name == "Node");
  CHECK(deep.child("next")->child("v")->value == "2");
  CHECK(deep.child("next")->child("next")->type_name == "null");
  CHECK(deep.child("next")->child("next")->children.empty());
  auto shallow = graph_from_heap(heap, "n", outer, 1);
  CHECK(shallow.child("next")->children.empty());
  CHECK(count_nodes(deep) == 5);
}
