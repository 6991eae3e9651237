#include "recov/cli.hpp"

#include <CLI11.hpp>
#include <csignal>
#include <fstream>
#include <iostream>

#include "json.hpp"
#include "recov/api_server.hpp"
#include "recov/evalkit.hpp"
#include "recov/session.hpp"

namespace recov {

namespace {

constexpr int kUsage = 1;
constexpr int kRuntime = 2;

struct UsageError : Error {
  explicit UsageError(const std::string& m) : Error("UsageError", m) {}
};

void emit(const std::string& text, const std::string& target, std::ostream& out) {
  if (target.empty() || target == "-") {
    out << text << "\n";
    return;
  }
  std::ofstream f(target, std::ios::binary);
  if (!f) throw Error("IoError", "cannot write " + target);
  f << text << "\n";
}

struct EstimatorFlags {
  std::string kind = "oracle";
  std::string cache_dir = ".recovslice-cache";
  bool offline = false;
  std::string model = "gpt-4o";
  bool no_adaptive = false;
  bool adaptive = false;

  void add_to(CLI::App* cmd, bool with_adaptive) {
    cmd->add_option("--estimator", kind, "oracle or llm")->check(CLI::IsMember({"oracle", "llm"}));
    cmd->add_option("--cache-dir", cache_dir, "completion cache directory");
    cmd->add_flag("--offline", offline, "answer only from the completion cache");
    cmd->add_option("--model", model, "chat model name")->envname("RECOVSLICE_LLM_MODEL");
    if (with_adaptive) {
      auto* off = cmd->add_flag("--no-adaptive-context", no_adaptive, "use the static example in recovery prompts");
      cmd->add_flag("--adaptive-context", adaptive, "synthesize in-context examples (default)")->excludes(off);
    }
  }

  EstimatorSettings settings() const {
    EstimatorSettings s;
    s.kind = kind;
    s.cache_dir = cache_dir;
    s.offline = offline;
    s.model = model;
    return s;
  }
};

SliceQuery make_query(std::uint64_t step, const std::string& path) {
  try {
    return SliceQuery{StepId{step}, parse_path(path)};
  } catch (const PathSyntaxError& e) {
    throw UsageError(std::string("bad --path: ") + e.what());
  }
}

int trace_run(const std::vector<std::string>& program, bool full, std::vector<std::string> partial,
              std::uint64_t seed, const std::string& entry, const std::string& output, std::ostream& out,
              std::ostream& err) {
  std::vector<std::filesystem::path> paths(program.begin(), program.end());
  RunManifest m;
  MiniProgram prog = load_program(paths, entry);
  m.entry = prog.entry;
  m.seed = seed;
  m.files = prog.files;
  Execution exec = run_full(prog, seed);
  if (full) {
    for (const auto& f : exec.linked->files()) m.instrumented.push_back(f->id);
  } else if (!partial.empty()) {
    m.instrumented = partial;
  } else {
    m.instrumented = application_files(prog);
  }
  PartialTrace pt = make_partial(exec, m.instrumented);
  std::string text = serialize_trace(pt.trace);
  emit(text, output, out);
  if (!output.empty() && output != "-") save_manifest(m, manifest_path_for(output));
  if (!exec.output.empty()) err << exec.output;
  if (exec.fault) {
    err << "program fault" << (exec.fault->step ? " at step " + std::to_string(exec.fault->step->value) : std::string()) << ": " << exec.fault->message << "\n";
    return kRuntime;
  }
  return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Partial-trace dynamic data-dependency engine", "recovslice"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all");

  // trace run
  auto* trace_cmd = app.add_subcommand("trace", "record traces")->require_subcommand(1);
  auto* run_cmd = trace_cmd->add_subcommand("run", "execute a MiniLang program and write its trace");
  std::vector<std::string> program_files, partial_files;
  bool full = false;
  std::uint64_t seed = 0;
  std::string entry = "main", trace_out;
  run_cmd->add_option("program", program_files, "program files")->required()->check(CLI::ExistingFile);
  auto* full_opt = run_cmd->add_flag("--full", full, "instrument every file, library included");
  run_cmd->add_option("--partial", partial_files, "instrumented file ids (default: all program files)")
      ->delimiter(',')
      ->excludes(full_opt);
  run_cmd->add_option("--seed", seed, "seed for rand()");
  run_cmd->add_option("--entry", entry, "entry label");
  run_cmd->add_option("-o,--output", trace_out, "trace file, or - for stdout")->required();

  // slice
  auto* slice_cmd = app.add_subcommand("slice", "find the definition step of a variable at a step");
  std::string slice_trace, slice_path, slice_out = "-";
  std::uint64_t slice_step = 0;
  EstimatorFlags slice_est;
  slice_cmd->add_option("trace", slice_trace, "trace file")->required()->check(CLI::ExistingFile);
  slice_cmd->add_option("--step", slice_step, "query step id")->required();
  slice_cmd->add_option("--path", slice_path, "access path, e.g. list.elementData[0]")->required();
  slice_cmd->add_option("-o,--output", slice_out, "result file, or - for stdout");
  slice_est.add_to(slice_cmd, true);

  // recover
  auto* recover_cmd = app.add_subcommand("recover", "recover the object graph of a variable at a step");
  std::string rec_trace, rec_path, rec_out = "-";
  std::uint64_t rec_step = 0;
  EstimatorFlags rec_est;
  recover_cmd->add_option("trace", rec_trace, "trace file")->required()->check(CLI::ExistingFile);
  recover_cmd->add_option("--step", rec_step, "query step id")->required();
  recover_cmd->add_option("--path", rec_path, "access path")->required();
  recover_cmd->add_option("-o,--output", rec_out, "graph file, or - for stdout");
  rec_est.add_to(recover_cmd, true);

  // bench
  auto* bench_cmd = app.add_subcommand("bench", "synthetic corpus")->require_subcommand(1);
  auto* gen_cmd = bench_cmd->add_subcommand("gen", "generate corpus cases");
  std::string gen_level = "all", gen_out;
  int gen_count = 50;
  std::uint64_t gen_seed = 0;
  gen_cmd->add_option("--level", gen_level, "level name or all");
  gen_cmd->add_option("--count", gen_count, "cases per level")->check(CLI::PositiveNumber);
  gen_cmd->add_option("--seed", gen_seed, "first seed");
  gen_cmd->add_option("-o,--output", gen_out, "corpus directory")->required();
  auto* score_cmd = bench_cmd->add_subcommand("score", "slice every corpus case and score the answers");
  std::string score_corpus, score_out = "-";
  EstimatorFlags score_est;
  score_cmd->add_option("--corpus", score_corpus, "corpus directory")->required()->check(CLI::ExistingDirectory);
  score_cmd->add_option("-o,--output", score_out, "report file, or - for stdout");
  score_est.add_to(score_cmd, true);

  // serve
  auto* serve_cmd = app.add_subcommand("serve", "serve the exploration API for one trace");
  std::string serve_trace, serve_host = "127.0.0.1";
  int serve_port = 8080;
  EstimatorFlags serve_est;
  serve_cmd->add_option("trace", serve_trace, "trace file")->required()->check(CLI::ExistingFile);
  serve_cmd->add_option("--port", serve_port, "port (0 picks a free one)")->check(CLI::Range(0, 65535));
  serve_cmd->add_option("--host", serve_host, "bind address");
  serve_est.add_to(serve_cmd, true);

  std::vector<std::string> args;
  for (int i = argc - 1; i > 0; --i) args.emplace_back(argv[i]);
  try {
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << app.help();
      return 0;
    }
    err << "error: " << e.what() << "\n";
    return kUsage;
  }

  try {
    if (run_cmd->parsed())
      return trace_run(program_files, full, partial_files, seed, entry, trace_out, out, err);

    if (slice_cmd->parsed()) {
      SliceQuery q = make_query(slice_step, slice_path);
      auto session = Session::open(slice_trace);
      SliceOptions opts;
      opts.adaptive_context = !slice_est.no_adaptive;
      opts.class_structures = session->class_structures();
      auto est = session->estimator(slice_est.settings());
      emit(serialize_slice_result(slice(session->trace(), q, *est, opts)), slice_out, out);
      return 0;
    }

    if (recover_cmd->parsed()) {
      SliceQuery q = make_query(rec_step, rec_path);
      auto session = Session::open(rec_trace);
      SliceOptions opts;
      opts.adaptive_context = !rec_est.no_adaptive;
      opts.class_structures = session->class_structures();
      auto est = session->estimator(rec_est.settings());
      emit(graph_to_json(recover_query_root(session->trace(), q, *est, opts).value), rec_out, out);
      return 0;
    }

    if (gen_cmd->parsed()) {
      std::vector<Level> levels;
      if (gen_level == "all") {
        levels = all_levels();
      } else if (auto l = parse_level(gen_level)) {
        levels = {*l};
      } else {
        throw UsageError("unknown level '" + gen_level + "'");
      }
      std::size_t written = 0;
      for (Level l : levels)
        for (int i = 0; i < gen_count; ++i) {
          write_case(generate_case(LevelSpec::standard(l), gen_seed + static_cast<std::uint64_t>(i)), gen_out);
          ++written;
        }
      out << "wrote " << written << " cases to " << gen_out << "\n";
      return 0;
    }

    if (score_cmd->parsed()) {
      std::vector<SliceResult> predicted;
      std::vector<GroundTruthAnswer> expected;
      std::map<std::string, std::pair<std::vector<SliceResult>, std::vector<GroundTruthAnswer>>> by_level;
      std::shared_ptr<CompletionClient> client;
      for (const auto& dir : list_cases(score_corpus)) {
        CorpusCase c = read_case(dir);
        PreparedCase prep = prepare_case(c);
        SliceOptions opts;
        opts.adaptive_context = !score_est.no_adaptive;
        opts.class_structures = class_structures(*prep.exec->linked);
        std::shared_ptr<ExecutionEstimator> est;
        if (score_est.kind == "oracle") {
          est = std::make_shared<OracleEstimator>(prep.exec, prep.partial);
        } else {
          if (!client) {
            Session scratch(Trace{}, std::nullopt);
            client = scratch.completion_client(score_est.settings());
          }
          est = std::make_shared<LlmEstimator>(client);
        }
        SliceResult r = slice(prep.partial->trace, c.query, *est, opts);
        auto& bucket = by_level[to_string(c.spec.level)];
        bucket.first.push_back(r);
        bucket.second.push_back(c.expected);
        predicted.push_back(std::move(r));
        expected.push_back(c.expected);
      }
      nlohmann::ordered_json report;
      report["overall"] = nlohmann::ordered_json::parse(score_dependency(predicted, expected).to_json());
      for (const auto& [level, pair] : by_level)
        report["levels"][level] = nlohmann::ordered_json::parse(score_dependency(pair.first, pair.second).to_json());
      emit(report.dump(2), score_out, out);
      return 0;
    }

    if (serve_cmd->parsed()) {
      auto session = Session::open(serve_trace);
      auto service = std::make_shared<ApiService>(session, serve_est.settings(), !serve_est.no_adaptive);
      HttpServer server(service);
      int port = server.bind(serve_host, serve_port);
      out << "listening on http://" << serve_host << ":" << port << std::endl;
      server.run();
      return 0;
    }
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const InvalidQuery& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const Error& e) {
    err << "error [" << e.code() << "]: " << e.what() << "\n";
    return kRuntime;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kRuntime;
  }
  return kUsage;
}

}  // namespace recov
