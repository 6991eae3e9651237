#include "recov/session.hpp"

#include <fstream>
#include <sstream>

#include "json.hpp"

namespace recov {

using json = nlohmann::ordered_json;

std::filesystem::path manifest_path_for(const std::filesystem::path& trace_path) {
  return std::filesystem::path(trace_path.string() + ".run.json");
}

void save_manifest(const RunManifest& m, const std::filesystem::path& path) {
  json j;
  j["entry"] = m.entry;
  j["seed"] = m.seed;
  j["files"] = m.files;
  j["instrumented"] = m.instrumented;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ManifestError("cannot write " + path.string());
  out << j.dump(2) << "\n";
}

RunManifest load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ManifestError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  try {
    auto j = json::parse(ss.str());
    RunManifest m;
    m.entry = j.at("entry").get<std::string>();
    m.seed = j.at("seed").get<std::uint64_t>();
    m.files = j.at("files").get<std::map<std::string, std::string>>();
    m.instrumented = j.at("instrumented").get<std::vector<std::string>>();
    return m;
  } catch (const json::exception& e) {
    throw ManifestError(path.string() + ": " + e.what());
  }
}

RecordedRun record(const RunManifest& m) {
  auto exec = std::make_shared<Execution>(run_full(m.program(), m.seed));
  auto partial = std::make_shared<PartialTrace>(make_partial(*exec, m.instrumented));
  return {exec, partial};
}

std::shared_ptr<Session> Session::open(const std::filesystem::path& trace_path) {
  Trace trace = load_trace(trace_path);
  std::optional<RunManifest> manifest;
  auto mpath = manifest_path_for(trace_path);
  if (std::filesystem::exists(mpath)) manifest = load_manifest(mpath);
  return std::make_shared<Session>(std::move(trace), std::move(manifest));
}

Session::Session(Trace trace, std::optional<RunManifest> manifest)
    : trace_(std::move(trace)), manifest_(std::move(manifest)) {}

const RecordedRun& Session::run() {
  if (!run_) {
    if (!manifest_) throw ManifestError("the oracle needs the run manifest that `trace run` writes next to the trace");
    RecordedRun r = record(*manifest_);
    if (!(r.partial->trace == trace_))
      throw ManifestError("re-running the manifest does not reproduce the loaded trace");
    run_ = std::move(r);
  }
  return *run_;
}

const std::map<std::string, std::string>& Session::class_structures() {
  std::lock_guard<std::mutex> lock(mu_);
  if (!structures_) {
    structures_.emplace();
    if (manifest_) *structures_ = recov::class_structures(mini::link_program(manifest_->files, manifest_->entry, true));
  }
  return *structures_;
}

std::shared_ptr<CompletionClient> Session::completion_client(const EstimatorSettings& s) {
  std::string key = s.cache_dir.string() + "|" + s.model + "|" + (s.offline ? "offline" : "online");
  auto it = clients_.find(key);
  if (it != clients_.end()) return it->second;
  CompletionConfig cfg;
  cfg.model_name = s.model;
  cfg.offline = s.offline;
  std::shared_ptr<ChatTransport> transport = s.transport;
  if (!transport && !s.offline) transport = HttpChatTransport::from_env();
  auto client = std::make_shared<CompletionClient>(cfg, std::make_shared<CompletionCache>(s.cache_dir), transport);
  clients_[key] = client;
  return client;
}

std::shared_ptr<ExecutionEstimator> Session::estimator(const EstimatorSettings& s) {
  std::lock_guard<std::mutex> lock(mu_);
  if (s.kind == "oracle") {
    auto it = estimators_.find("oracle");
    if (it != estimators_.end()) return it->second;
    const RecordedRun& r = run();
    auto est = std::make_shared<OracleEstimator>(r.exec, r.partial);
    estimators_["oracle"] = est;
    return est;
  }
  if (s.kind == "llm") return std::make_shared<LlmEstimator>(completion_client(s));
  throw Error("UnknownEstimator", "unknown estimator '" + s.kind + "' (expected oracle or llm)");
}

}  // namespace recov
