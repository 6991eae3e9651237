#pragma once

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "recov/micro_tracer.hpp"
#include "recov/object_graph.hpp"
#include "recov/slicer.hpp"

namespace recov {

RECOV_DEFINE_ERROR(GenerationRetryExhausted);
RECOV_DEFINE_ERROR(LengthMismatch);
RECOV_DEFINE_ERROR(CorpusError);

enum class Level { basic_operations, noisy_context, variable_aliasing, interprocedural, inter_file };

std::string to_string(Level level);
std::optional<Level> parse_level(const std::string& text);
const std::vector<Level>& all_levels();

struct LevelSpec {
  Level level = Level::basic_operations;
  int noise_min = 0;
  int noise_max = 0;
  int alias_depth = 0;
  int file_count = 1;

  static LevelSpec standard(Level level);
};

inline constexpr const char* kMainFile = "main.mini";

struct CorpusCase {
  LevelSpec spec;
  std::uint64_t seed = 0;
  MiniProgram program;
  SliceQuery query;  // step id in the partial trace over the application files
  GroundTruthAnswer expected;
};

// Deterministic per (spec, seed). Ground truth comes from oracle_dependency.
CorpusCase generate_case(const LevelSpec& spec, std::uint64_t seed);

// Full run plus the partial trace over the application files.
struct PreparedCase {
  std::shared_ptr<const Execution> exec;
  std::shared_ptr<const PartialTrace> partial;
};
PreparedCase prepare_case(const CorpusCase& c);

// corpus/<level>/<seed>/{program files, program.json, query.json, expected.json}
std::filesystem::path write_case(const CorpusCase& c, const std::filesystem::path& corpus_root);
CorpusCase read_case(const std::filesystem::path& case_dir);
std::vector<std::filesystem::path> list_cases(const std::filesystem::path& corpus_root);

struct ScoreCounts {
  std::size_t x = 0;  // correct
  std::size_t c = 0;  // emitted
  std::size_t k = 0;  // expected
  std::size_t d = 0;  // total
  bool operator==(const ScoreCounts&) const = default;
};

struct ScoreReport {
  ScoreCounts counts;
  double precision = 0;
  double recall = 0;
  double success_ratio = 0;

  static ScoreReport from_counts(const ScoreCounts& counts);
  std::string to_json() const;
};

// A query counts as correct when (def_step, case) match exactly; a "none"
// answer is correct iff the truth is also none. Emitted answers are those with
// a definition step plus correct "none" answers.
ScoreReport score_dependency(const std::vector<SliceResult>& predicted,
                             const std::vector<GroundTruthAnswer>& expected);

// Per pair, non-root nodes are compared by (path from root, value); counts are
// pooled over all pairs before the ratios are taken.
ScoreReport score_recovery(const std::vector<ObjectGraph>& predicted, const std::vector<ObjectGraph>& truth);

}  // namespace recov
