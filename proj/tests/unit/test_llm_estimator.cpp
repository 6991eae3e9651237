#include <filesystem>

#include "doctest.h"
#include "fake_transport.hpp"
#include "golden_fixtures.hpp"
#include "recov/llm_backend.hpp"

using namespace recov;
using namespace recov::fixtures;

namespace {

struct Harness {
  std::shared_ptr<stubs::ScriptedTransport> transport = std::make_shared<stubs::ScriptedTransport>();
  std::shared_ptr<CompletionClient> client;
  std::unique_ptr<LlmEstimator> est;

  // No cache, so every call reaches the transport.
  Harness() {
    CompletionConfig cfg;
    cfg.backoff = std::chrono::milliseconds(0);
    cfg.max_retries = 0;
    client = std::make_shared<CompletionClient>(cfg, nullptr, transport);
    est = std::make_unique<LlmEstimator>(client);
  }
};

struct Motivating {
  MiniProgram program = load_program({std::string(RECOV_SOURCE_DIR) + "/data/motivating/motivating.mini"});
  Execution exec = run_full(program, 7);
  PartialTrace partial = make_partial(exec, application_files(program));

  VarId read_of(std::uint64_t step, const std::string& name) const {
    for (VarId v : partial.trace.step(StepId{step}).reads)
      if (partial.trace.variable(v).name == name) return v;
    return {};
  }
};

const char* kListGraph = "```json\n{\"sharedList\": {\"size|int\": \"1\"}}\n```";

}  // namespace

TEST_CASE("recovery sends the rendered prompt and parses the reply") {
  Harness h;
  h.transport->script = {golden("recovery_response.txt")};
  auto req = recovery_request();
  auto est = h.est->recover_object_graph(req);
  REQUIRE(h.transport->calls() == 1);
  CHECK(h.transport->prompts[0] == golden("recovery_atomicref.txt"));
  CHECK(est.value.root_name == "atomicRef");
  CHECK(resolve_in_graph(focal(), est.value));
  REQUIRE(est.notes.size() == 1);
  CHECK(est.notes[0].rfind("cache_key:", 0) == 0);
}

TEST_CASE("an unparseable recovery reply is repaired once") {
  Harness h;
  h.transport->script = {"I cannot tell.", golden("recovery_response.txt")};
  auto est = h.est->recover_object_graph(recovery_request());
  CHECK(h.transport->calls() == 2);
  CHECK(h.transport->prompts[1].find("could not be parsed") != std::string::npos);
  CHECK(std::count(est.notes.begin(), est.notes.end(), "repair") == 1);

  Harness twice;
  twice.transport->script = {"nothing", "still nothing"};
  CHECK_THROWS_AS(twice.est->recover_object_graph(recovery_request()), RecoveryFailed);
  CHECK(twice.transport->calls() == 2);
}

TEST_CASE("a graph rooted at the wrong variable or missing the focal path is rejected") {
  Harness h;
  h.transport->script = {kListGraph, kListGraph};
  CHECK_THROWS_AS(h.est->recover_object_graph(recovery_request()), RecoveryFailed);

  Harness focal_missing;
  const char* shallow = "```json\n{\"atomicRef\": {\"pair|P\": {\"stamp|int\": \"1\"}}}\n```";
  focal_missing.transport->script = {shallow, golden("recovery_response.txt")};
  auto est = focal_missing.est->recover_object_graph(recovery_request());
  CHECK(resolve_in_graph(focal(), est.value));
}

TEST_CASE("unavailable backends surface as recovery failures") {
  Harness h;
  CHECK_THROWS_AS(h.est->recover_object_graph(recovery_request()), RecoveryFailed);
}

TEST_CASE("alias verdicts keep only requested fields") {
  Motivating m;
  Harness h;
  h.transport->script = {
      "```json\n{\"sharedList\": \"sharedList\", \"sharedList.elementData[0]\": \"aliasRef\", "
      "\"sharedList.size\": \"\"}\n```"};
  AliasRequest req;
  req.trace = &m.partial.trace;
  req.step = StepId{9};
  req.query_step = StepId{13};
  req.known_root = m.read_of(13, "sharedList");
  req.known_graph.root_name = "sharedList";
  req.known_graph.root = {"sharedList", "List", "[\"002\"]", {}};
  req.fields_of_interest = {parse_path("sharedList.elementData[0]"), parse_path("sharedList.size")};
  auto v = h.est->infer_alias(req).value;
  CHECK(v.pairs == std::map<std::string, std::string>{{"sharedList.elementData[0]", "aliasRef"}});

  const std::string& prompt = h.transport->prompts[0];
  CHECK(prompt.find("Given code:\n```size = sharedList.size();```") != std::string::npos);
  CHECK(prompt.find("this `sharedList` has the same memory address as `sharedList` in the line of code") !=
        std::string::npos);
  // Library objects are recorded without children, so no fields are listed.
  CHECK(prompt.find("`sharedList` has the following fields:\n") != std::string::npos);
  CHECK(prompt.find("We are interested in the fields of this instance: `sharedList.elementData[0]`,"
                    "`sharedList.size`,") != std::string::npos);
  CHECK(prompt.find("fun size()") != std::string::npos);
}

TEST_CASE("alias replies without JSON are repaired, then treated as empty") {
  Motivating m;
  Harness h;
  h.transport->script = {"no idea", "still no idea"};
  AliasRequest req;
  req.trace = &m.partial.trace;
  req.step = StepId{4};
  req.query_step = StepId{13};
  req.known_root = m.read_of(13, "sharedList");
  req.known_graph.root_name = "sharedList";
  req.known_graph.root = {"sharedList", "List", "[]", {}};
  req.fields_of_interest = {parse_path("sharedList.elementData[0]")};
  auto est = h.est->infer_alias(req);
  CHECK(est.value.pairs.empty());
  CHECK(h.transport->calls() == 2);
  CHECK(std::count(est.notes.begin(), est.notes.end(), "unparseable") == 1);
  // Plain steps get the placeholder instead of callee source.
  CHECK(h.transport->prompts[0].find("(source not available)") != std::string::npos);

  Harness down;
  CHECK_THROWS_AS(down.est->infer_alias(req), BackendUnavailable);
}

TEST_CASE("def verdicts parse tags and repair once") {
  Motivating m;
  DefRequest req;
  req.trace = &m.partial.trace;
  req.target_step = StepId{8};
  req.usage_step = StepId{13};
  req.queried_field = parse_path("sharedList.elementData[0].value[1]");
  req.known_graph.root_name = "sharedList";
  req.known_graph.root = {"sharedList", "List", "[\"002\"]", {}};

  Harness yes;
  yes.transport->script = {golden("def_response.txt")};
  CHECK(yes.est->infer_is_def(req).value);
  const std::string& prompt = yes.transport->prompts[0];
  CHECK(prompt.find("**Target Line:**\n`aliasRef.append(\"0\");`") != std::string::npos);
  CHECK(prompt.find("**Usage Line:**\n`c = sharedList.get(0).charAt(1);`") != std::string::npos);
  CHECK(prompt.find("Variable: \n`aliasRef`\nVariable Type: \n`StrBuf`") != std::string::npos);

  Harness no;
  no.transport->script = {"**Answer:** <F>"};
  CHECK_FALSE(no.est->infer_is_def(req).value);

  Harness repaired;
  repaired.transport->script = {"maybe", "<T>"};
  auto est = repaired.est->infer_is_def(req);
  CHECK(est.value);
  CHECK(std::count(est.notes.begin(), est.notes.end(), "repair") == 1);

  Harness hopeless;
  hopeless.transport->script = {"maybe", "perhaps"};
  CHECK_THROWS_AS(hopeless.est->infer_is_def(req), BackendUnavailable);
}

TEST_CASE("identical prompts replay from the cache across estimator instances") {
  auto dir = std::filesystem::temp_directory_path() / "recov_llm_replay";
  std::filesystem::remove_all(dir);
  auto cache = std::make_shared<CompletionCache>(dir);
  auto transport = std::make_shared<stubs::ScriptedTransport>();
  transport->script = {golden("recovery_response.txt")};
  LlmEstimator first(std::make_shared<CompletionClient>(CompletionConfig{}, cache, transport));
  auto a = first.recover_object_graph(recovery_request());

  CompletionConfig offline;
  offline.offline = true;
  auto replay_client = std::make_shared<CompletionClient>(offline, cache, nullptr);
  LlmEstimator second(replay_client);
  auto b = second.recover_object_graph(recovery_request());
  CHECK(a.value == b.value);
  CHECK(a.notes == b.notes);
  CHECK(replay_client->network_calls() == 0);
}
