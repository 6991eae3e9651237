#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "recov/estimator.hpp"

namespace recov {

RECOV_DEFINE_ERROR(SlotMissing);
RECOV_DEFINE_ERROR(NoJsonBlock);
RECOV_DEFINE_ERROR(MalformedGraph);
RECOV_DEFINE_ERROR(NoVerdict);
RECOV_DEFINE_ERROR(TransportError);
RECOV_DEFINE_ERROR(CacheMissInOfflineMode);

inline constexpr const char* kAllFieldsSentinel = "#all_fields#";

// ---- prompts ----

struct AliasPromptInput {
  std::string code;
  std::optional<std::string> callee_source;
  std::vector<std::pair<std::string, std::string>> variables;  // name, type
  struct FieldListing {
    std::string variable;
    std::vector<std::pair<std::string, std::string>> fields;  // field, type
  };
  std::vector<FieldListing> field_listings;
  std::string root_name;
  ObjectGraph known_graph;
  std::vector<std::string> root_aliases_in_code;
  std::vector<ReferencePath> fields_of_interest;
};

struct DefPromptInput {
  std::string target_code;
  std::optional<std::string> callee_source;
  struct Variable {
    std::string name;
    std::string type_name;
    std::string value;
  };
  std::vector<Variable> variables;
  std::string root_name;
  ObjectGraph known_graph;
  std::string usage_code;
  ReferencePath field;
};

std::string build_recovery_prompt(const RecoveryRequest& req);
std::string build_alias_prompt(const AliasPromptInput& in);
std::string build_def_prompt(const DefPromptInput& in);

// Example blocks in the layout of the recovery prompt's Example section.
std::string render_example_input(const std::string& value, const std::string& type_name,
                                 const std::vector<std::string>& class_structures,
                                 const std::string& focal_path);
std::string render_example_output(const ObjectGraph& graph);

// ---- response parsing ----

std::string strip_thoughts(const std::string& text);
ObjectGraph parse_graph_response(const std::string& text);
AliasVerdict parse_alias_response(const std::string& text);
bool parse_verdict_response(const std::string& text);

// ---- completion ----

struct CompletionConfig {
  std::string model_name = "gpt-4o";
  double temperature = 0.0;
  int max_retries = 3;
  std::chrono::milliseconds timeout{60000};
  std::chrono::milliseconds backoff{500};  // doubled after each failed attempt
  bool offline = false;                    // cache-only: a miss is an error
  int max_in_flight = 4;
};

class ChatTransport {
 public:
  virtual ~ChatTransport() = default;
  // Returns the assistant message text; throws TransportError.
  virtual std::string complete(const std::string& model, const std::string& prompt, double temperature,
                               std::chrono::milliseconds timeout) = 0;
};

// POSTs {model, messages, temperature} to an OpenAI-style chat endpoint.
class HttpChatTransport : public ChatTransport {
 public:
  HttpChatTransport(std::string endpoint, std::string api_key);
  // Reads RECOVSLICE_LLM_ENDPOINT and RECOVSLICE_LLM_KEY; nullptr if unset.
  static std::shared_ptr<HttpChatTransport> from_env();

  std::string complete(const std::string& model, const std::string& prompt, double temperature,
                       std::chrono::milliseconds timeout) override;

 private:
  std::string endpoint_;
  std::string api_key_;
};

struct CacheEntry {
  std::string key;
  std::string response;
  std::string created_at;
};

// Content-addressed store: <dir>/<sha256 hex> holds the response bytes and
// <dir>/<sha256 hex>.json the metadata.
class CompletionCache {
 public:
  explicit CompletionCache(std::filesystem::path dir);

  static std::string key_for(const std::string& model, const std::string& prompt);
  std::optional<CacheEntry> lookup(const std::string& key) const;
  void store(const std::string& key, const std::string& model, const std::string& prompt,
             const std::string& response);
  const std::filesystem::path& dir() const { return dir_; }

 private:
  std::filesystem::path dir_;
};

struct Completion {
  std::string response;
  std::string key;
  bool cache_hit = false;
};

class CompletionClient {
 public:
  CompletionClient(CompletionConfig cfg, std::shared_ptr<CompletionCache> cache,
                   std::shared_ptr<ChatTransport> transport);

  Completion complete_cached(const std::string& prompt);
  const CompletionConfig& config() const { return cfg_; }
  std::size_t network_calls() const { return network_calls_.load(); }

 private:
  CompletionConfig cfg_;
  std::shared_ptr<CompletionCache> cache_;
  std::shared_ptr<ChatTransport> transport_;
  std::atomic<std::size_t> network_calls_{0};
  std::mutex slots_mu_;
  std::condition_variable slots_cv_;
  int in_flight_ = 0;
};

// Estimator backed by a chat model and the fixed prompt templates.
class LlmEstimator : public ExecutionEstimator {
 public:
  explicit LlmEstimator(std::shared_ptr<CompletionClient> client);

  std::string name() const override { return "llm"; }
  Estimate<ObjectGraph> recover_object_graph(const RecoveryRequest& req) override;
  Estimate<AliasVerdict> infer_alias(const AliasRequest& req) override;
  Estimate<bool> infer_is_def(const DefRequest& req) override;

 private:
  Completion ask(const std::string& prompt, std::vector<std::string>& notes);

  std::shared_ptr<CompletionClient> client_;
};

std::string repair_prompt(const std::string& prompt, const std::string& error);

}  // namespace recov
