#include <filesystem>
#include <fstream>
#include <thread>

#include "doctest.h"
#include "fake_transport.hpp"
#include "recov/llm_backend.hpp"

using namespace recov;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
  fs::path dir = fs::temp_directory_path() / ("recov_completion_" + name);
  fs::remove_all(dir);
  return dir;
}

CompletionConfig quick() {
  CompletionConfig cfg;
  cfg.backoff = std::chrono::milliseconds(0);
  return cfg;
}

}  // namespace

TEST_CASE("cache keys hash the model and prompt") {
  // Reference digests computed with an independent SHA-256 implementation.
  CHECK(CompletionCache::key_for("gpt-4o", "hello") ==
        "b4be809097c27e289080a8624bc41634fc4828979ae95d2c52e30bce0e1dc39b");
  CHECK(CompletionCache::key_for("", "") == "6e340b9cffb37a989ca544e6bb780a2c78901d3fb33738768511a30617afa01d");
  CHECK(CompletionCache::key_for("a", "bc") != CompletionCache::key_for("ab", "c"));
}

TEST_CASE("first call goes to the transport, the second is served from cache") {
  auto dir = fresh_dir("hit");
  auto cache = std::make_shared<CompletionCache>(dir);
  auto transport = std::make_shared<stubs::ScriptedTransport>();
  transport->script = {"first answer"};
  CompletionClient client(quick(), cache, transport);

  auto a = client.complete_cached("prompt");
  CHECK_FALSE(a.cache_hit);
  CHECK(a.response == "first answer");
  auto b = client.complete_cached("prompt");
  CHECK(b.cache_hit);
  CHECK(b.response == "first answer");
  CHECK(b.key == a.key);
  CHECK(transport->calls() == 1);
  CHECK(client.network_calls() == 1);

  CHECK(fs::exists(dir / a.key));
  CHECK(fs::exists(dir / (a.key + ".json")));
  auto entry = cache->lookup(a.key);
  REQUIRE(entry);
  CHECK(entry->created_at.size() == 20);
  // No temporary files are left behind.
  std::size_t files = 0;
  for (const auto& e : fs::directory_iterator(dir)) {
    CHECK(e.path().filename().string().find(".tmp.") == std::string::npos);
    ++files;
  }
  CHECK(files == 2);
}

TEST_CASE("a different model never hits another model's entry") {
  auto dir = fresh_dir("models");
  auto cache = std::make_shared<CompletionCache>(dir);
  auto transport = std::make_shared<stubs::ScriptedTransport>();
  transport->script = {"one", "two"};
  CompletionConfig other = quick();
  other.model_name = "other-model";
  CompletionClient(quick(), cache, transport).complete_cached("p");
  auto r = CompletionClient(other, cache, transport).complete_cached("p");
  CHECK(r.response == "two");
  CHECK(transport->calls() == 2);
}

TEST_CASE("offline mode replays hits and rejects misses") {
  auto dir = fresh_dir("offline");
  auto cache = std::make_shared<CompletionCache>(dir);
  auto transport = std::make_shared<stubs::ScriptedTransport>();
  transport->script = {"stored"};
  CompletionClient(quick(), cache, transport).complete_cached("known");

  CompletionConfig cfg = quick();
  cfg.offline = true;
  CompletionClient offline(cfg, cache, transport);
  CHECK(offline.complete_cached("known").response == "stored");
  CHECK_THROWS_AS(offline.complete_cached("unknown"), CacheMissInOfflineMode);
  CHECK(transport->calls() == 1);
  CHECK(offline.network_calls() == 0);

  CompletionClient no_transport(quick(), cache, nullptr);
  CHECK_THROWS_AS(no_transport.complete_cached("unknown"), CacheMissInOfflineMode);
}

TEST_CASE("transport failures are retried up to the limit") {
  auto cache = std::make_shared<CompletionCache>(fresh_dir("retry"));
  auto transport = std::make_shared<stubs::ScriptedTransport>();
  transport->script = {"!fail", "!fail", "recovered"};
  CompletionClient client(quick(), cache, transport);
  CHECK(client.complete_cached("p").response == "recovered");
  CHECK(transport->calls() == 3);

  transport->script = {"!fail", "!fail", "!fail", "!fail", "never"};
  CHECK_THROWS_AS(client.complete_cached("q"), TransportError);
  CHECK(transport->calls() == 7);  // 1 + 3 retries
  CHECK_FALSE(cache->lookup(CompletionCache::key_for("gpt-4o", "q")));
}

TEST_CASE("invalid configuration is rejected") {
  CompletionConfig cfg = quick();
  cfg.temperature = -1;
  CHECK_THROWS(CompletionClient(cfg, nullptr, nullptr));
  cfg = quick();
  cfg.max_retries = -2;
  CHECK_THROWS(CompletionClient(cfg, nullptr, nullptr));
}

TEST_CASE("concurrent callers share one cache directory safely") {
  auto dir = fresh_dir("concurrent");
  auto cache = std::make_shared<CompletionCache>(dir);
  auto transport = std::make_shared<stubs::ScriptedTransport>();
  transport->fallback = [](const std::string& p) { return "echo:" + p; };
  CompletionConfig cfg = quick();
  cfg.max_in_flight = 2;
  CompletionClient client(cfg, cache, transport);
  std::vector<std::thread> threads;
  std::vector<std::string> results(16);
  for (int i = 0; i < 16; ++i)
    threads.emplace_back([&, i] { results[i] = client.complete_cached("p" + std::to_string(i % 4)).response; });
  for (auto& t : threads) t.join();
  for (int i = 0; i < 16; ++i) CHECK(results[i] == "echo:p" + std::to_string(i % 4));
  for (int i = 0; i < 4; ++i) CHECK(cache->lookup(CompletionCache::key_for("gpt-4o", "p" + std::to_string(i))));
}

TEST_CASE("http transport reports unreachable endpoints as transport errors") {
  HttpChatTransport bad("no-scheme", "");
  CHECK_THROWS_AS(bad.complete("m", "p", 0, std::chrono::milliseconds(200)), TransportError);
  HttpChatTransport closed("http://127.0.0.1:1/v1/chat/completions", "");
  CHECK_THROWS_AS(closed.complete("m", "p", 0, std::chrono::milliseconds(200)), TransportError);
}
