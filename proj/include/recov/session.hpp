#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "recov/estimator.hpp"
#include "recov/llm_backend.hpp"
#include "recov/micro_tracer.hpp"
#include "recov/slicer.hpp"

namespace recov {

RECOV_DEFINE_ERROR(ManifestError);

// Everything needed to re-run a recorded trace: sources, entry, seed and the
// instrumented file set. Stored next to the trace as `<trace>.run.json`.
struct RunManifest {
  std::string entry = "main";
  std::uint64_t seed = 0;
  std::map<std::string, std::string> files;
  std::vector<std::string> instrumented;

  MiniProgram program() const { return MiniProgram{files, entry}; }
};

std::filesystem::path manifest_path_for(const std::filesystem::path& trace_path);
void save_manifest(const RunManifest& m, const std::filesystem::path& path);
RunManifest load_manifest(const std::filesystem::path& path);

struct RecordedRun {
  std::shared_ptr<const Execution> exec;
  std::shared_ptr<const PartialTrace> partial;
};
RecordedRun record(const RunManifest& m);

struct EstimatorSettings {
  std::string kind = "oracle";  // oracle | llm
  std::filesystem::path cache_dir = ".recovslice-cache";
  bool offline = false;
  std::string model = "gpt-4o";
  std::shared_ptr<ChatTransport> transport;  // defaults to the environment endpoint
};

// A loaded trace plus lazily built estimators. Safe to share across threads.
class Session {
 public:
  static std::shared_ptr<Session> open(const std::filesystem::path& trace_path);
  Session(Trace trace, std::optional<RunManifest> manifest);

  const Trace& trace() const { return trace_; }
  const std::optional<RunManifest>& manifest() const { return manifest_; }
  // Class structures of the recorded program; empty without a manifest.
  const std::map<std::string, std::string>& class_structures();
  std::shared_ptr<ExecutionEstimator> estimator(const EstimatorSettings& settings);
  std::shared_ptr<CompletionClient> completion_client(const EstimatorSettings& settings);

 private:
  const RecordedRun& run();

  Trace trace_;
  std::optional<RunManifest> manifest_;
  std::mutex mu_;
  std::optional<RecordedRun> run_;
  std::optional<std::map<std::string, std::string>> structures_;
  std::map<std::string, std::shared_ptr<ExecutionEstimator>> estimators_;
  std::map<std::string, std::shared_ptr<CompletionClient>> clients_;
};

}  // namespace recov
