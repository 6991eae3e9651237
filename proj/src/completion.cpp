#include <openssl/evp.h>

#include <cstdlib>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <random>
#include <sstream>
#include <thread>

#include "httplib.h"
#include "json.hpp"
#include "recov/llm_backend.hpp"

namespace recov {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

namespace {

std::string sha256_hex(const std::string& data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1)
    throw Error("DigestError", "SHA-256 computation failed");
  std::ostringstream out;
  for (unsigned int i = 0; i < len; ++i) out << std::hex << std::setw(2) << std::setfill('0') << int(digest[i]);
  return out.str();
}

std::string utc_now() {
  std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

// Writes through a uniquely named temporary so readers never see partial files.
void write_atomically(const fs::path& target, const std::string& bytes) {
  static std::atomic<unsigned> counter{0};
  std::ostringstream tmp_name;
  tmp_name << target.filename().string() << ".tmp." << std::hash<std::thread::id>{}(std::this_thread::get_id())
           << "." << counter++;
  fs::path tmp = target.parent_path() / tmp_name.str();
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw Error("IoError", "cannot write cache file " + tmp.string());
    out << bytes;
  }
  fs::rename(tmp, target);
}

}  // namespace

CompletionCache::CompletionCache(fs::path dir) : dir_(std::move(dir)) { fs::create_directories(dir_); }

std::string CompletionCache::key_for(const std::string& model, const std::string& prompt) {
  std::string material = model;
  material.push_back('\0');
  material += prompt;
  return sha256_hex(material);
}

std::optional<CacheEntry> CompletionCache::lookup(const std::string& key) const {
  fs::path body = dir_ / key;
  if (!fs::exists(body)) return std::nullopt;
  CacheEntry entry{key, read_file(body), {}};
  fs::path meta = dir_ / (key + ".json");
  if (fs::exists(meta)) {
    auto j = ojson::parse(read_file(meta), nullptr, false);
    if (j.is_object() && j.contains("created_at") && j["created_at"].is_string())
      entry.created_at = j["created_at"].get<std::string>();
  }
  return entry;
}

void CompletionCache::store(const std::string& key, const std::string& model, const std::string& prompt,
                            const std::string& response) {
  ojson meta;
  meta["key"] = key;
  meta["model"] = model;
  meta["created_at"] = utc_now();
  meta["prompt_bytes"] = prompt.size();
  meta["response_bytes"] = response.size();
  write_atomically(dir_ / key, response);
  write_atomically(dir_ / (key + ".json"), meta.dump(2) + "\n");
}

CompletionClient::CompletionClient(CompletionConfig cfg, std::shared_ptr<CompletionCache> cache,
                                   std::shared_ptr<ChatTransport> transport)
    : cfg_(std::move(cfg)), cache_(std::move(cache)), transport_(std::move(transport)) {
  if (cfg_.temperature < 0) throw Error("InvalidConfig", "temperature must be >= 0");
  if (cfg_.max_retries < 0) throw Error("InvalidConfig", "max_retries must be >= 0");
  if (cfg_.max_in_flight < 1) cfg_.max_in_flight = 1;
}

Completion CompletionClient::complete_cached(const std::string& prompt) {
  const std::string key = CompletionCache::key_for(cfg_.model_name, prompt);
  if (cache_) {
    if (auto hit = cache_->lookup(key)) return {hit->response, key, true};
  }
  if (cfg_.offline || !transport_)
    throw CacheMissInOfflineMode("no cached completion for key " + key +
                                 (transport_ ? "" : " and no transport configured"));

  {
    std::unique_lock<std::mutex> lock(slots_mu_);
    slots_cv_.wait(lock, [&] { return in_flight_ < cfg_.max_in_flight; });
    ++in_flight_;
  }
  struct Release {
    CompletionClient& self;
    ~Release() {
      {
        std::lock_guard<std::mutex> lock(self.slots_mu_);
        --self.in_flight_;
      }
      self.slots_cv_.notify_one();
    }
  } release{*this};

  std::string last_error;
  auto delay = cfg_.backoff;
  for (int attempt = 0; attempt <= cfg_.max_retries; ++attempt) {
    if (attempt > 0 && delay.count() > 0) {
      std::this_thread::sleep_for(delay);
      delay *= 2;
    }
    try {
      ++network_calls_;
      std::string response = transport_->complete(cfg_.model_name, prompt, cfg_.temperature, cfg_.timeout);
      if (cache_) cache_->store(key, cfg_.model_name, prompt, response);
      return {std::move(response), key, false};
    } catch (const TransportError& e) {
      last_error = e.what();
    }
  }
  throw TransportError("completion failed after " + std::to_string(cfg_.max_retries + 1) +
                       " attempt(s): " + last_error);
}

HttpChatTransport::HttpChatTransport(std::string endpoint, std::string api_key)
    : endpoint_(std::move(endpoint)), api_key_(std::move(api_key)) {}

std::shared_ptr<HttpChatTransport> HttpChatTransport::from_env() {
  const char* endpoint = std::getenv("RECOVSLICE_LLM_ENDPOINT");
  const char* key = std::getenv("RECOVSLICE_LLM_KEY");
  if (!endpoint || !*endpoint) return nullptr;
  return std::make_shared<HttpChatTransport>(endpoint, key ? key : "");
}

std::string HttpChatTransport::complete(const std::string& model, const std::string& prompt, double temperature,
                                        std::chrono::milliseconds timeout) {
  // Split "scheme://host[:port]/path" into client base and request path.
  auto scheme_end = endpoint_.find("://");
  if (scheme_end == std::string::npos) throw TransportError("endpoint must include a scheme: " + endpoint_);
  auto path_start = endpoint_.find('/', scheme_end + 3);
  std::string base = endpoint_.substr(0, path_start);
  std::string path = path_start == std::string::npos ? "/" : endpoint_.substr(path_start);

  httplib::Client client(base);
  auto secs = std::chrono::duration_cast<std::chrono::seconds>(timeout);
  auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(timeout - secs);
  client.set_connection_timeout(secs.count(), usecs.count());
  client.set_read_timeout(secs.count(), usecs.count());
  if (!api_key_.empty()) client.set_bearer_token_auth(api_key_);

  ojson body;
  body["model"] = model;
  body["messages"] = ojson::array({ojson{{"role", "user"}, {"content", prompt}}});
  body["temperature"] = temperature;
  auto res = client.Post(path, body.dump(), "application/json");
  if (!res) throw TransportError("HTTP request failed: " + httplib::to_string(res.error()));
  if (res->status < 200 || res->status >= 300)
    throw TransportError("HTTP status " + std::to_string(res->status) + " from chat endpoint");
  auto reply = ojson::parse(res->body, nullptr, false);
  try {
    return reply.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const ojson::exception&) {
    throw TransportError("unexpected chat response shape");
  }
}

}  // namespace recov
