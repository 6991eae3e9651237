#include "recov/evalkit.hpp"

#include <algorithm>
#include <fstream>
#include <random>
#include <sstream>

#include "json.hpp"

namespace recov {

namespace {

using json = nlohmann::ordered_json;

const std::vector<std::pair<Level, std::string>> kLevelNames = {
    {Level::basic_operations, "basic_operations"}, {Level::noisy_context, "noisy_context"},
    {Level::variable_aliasing, "variable_aliasing"}, {Level::interprocedural, "interprocedural"},
    {Level::inter_file, "inter_file"}};

constexpr int kMaxAttempts = 25;

class Draw {
 public:
  explicit Draw(std::uint64_t seed) : rng_(seed) {}
  std::uint64_t below(std::uint64_t n) { return n ? rng_() % n : 0; }
  int range(int lo, int hi) { return lo + static_cast<int>(below(static_cast<std::uint64_t>(hi - lo + 1))); }
  bool chance(int percent) { return below(100) < static_cast<std::uint64_t>(percent); }
  template <class T>
  const T& pick(const std::vector<T>& v) { return v[below(v.size())]; }
  std::string word(int length) {
    std::string s;
    for (int i = 0; i < length; ++i) s += static_cast<char>('a' + below(26));
    return s;
  }

 private:
  std::mt19937_64 rng_;
};

enum class Kind { list_int, strbuf, map, list_strbuf };

// The statement that performs the intended write: receiver + before + value + after.
struct Write {
  std::string receiver;
  std::string before;
  std::string value;
  std::string after;
  std::string text() const { return receiver + before + value + after + ";"; }
};

struct Draft {
  std::vector<std::string> decls_main, decls_helpers, decls_model;
  std::vector<std::string> stmts;  // main statements; one entry may span lines
  std::size_t noise_floor = 0;     // noise goes at or after this index
  std::size_t read_index = 0;
  std::string read_root;
  std::string query_path;  // empty for map kinds: located from the heap
  std::string map_key;     // literal key text for map reads
};

class Generator {
 public:
  Generator(const LevelSpec& spec, Draw& d) : spec_(spec), d_(d) {}

  Draft build() {
    Kind kind = static_cast<Kind>(d_.below(4));
    root_ = d_.pick(kind == Kind::map      ? std::vector<std::string>{"map", "index", "cache", "registry"}
                    : kind == Kind::strbuf ? std::vector<std::string>{"sb", "buf", "text", "log"}
                                           : std::vector<std::string>{"list", "items", "queue", "values", "shared"});
    switch (kind) {
      case Kind::list_int: list_int(); break;
      case Kind::strbuf: strbuf(); break;
      case Kind::map: map(); break;
      case Kind::list_strbuf: list_strbuf(); break;
    }
    add_noise();
    return std::move(draft_);
  }

 private:
  std::string fresh(const std::string& stem) { return stem + std::to_string(++counter_); }
  std::string int_lit() { return std::to_string(d_.range(1, 99)); }
  std::string str_lit(int len) { return "\"" + d_.word(len) + "\""; }

  void stmt(std::string s) { draft_.stmts.push_back(std::move(s)); }

  // Aliasing before the write: returns the name the write should go through.
  std::string alias_chain_before() {
    if (spec_.level != Level::variable_aliasing || spec_.alias_depth < 1 || !d_.chance(50)) return root_;
    std::string prev = root_;
    int depth = d_.range(1, spec_.alias_depth);
    for (int i = 0; i < depth; ++i) {
      std::string a = fresh("alias");
      stmt(a + " = " + prev + ";");
      prev = a;
    }
    return prev;
  }

  // Aliasing after the write: returns the name the read should go through.
  std::string alias_chain_after(const std::string& write_name) {
    if (spec_.level != Level::variable_aliasing || write_name != root_) return root_;
    std::string prev = root_;
    int depth = d_.range(1, std::max(1, spec_.alias_depth));
    for (int i = 0; i < depth; ++i) {
      std::string a = fresh("view");
      stmt(a + " = " + prev + ";");
      prev = a;
    }
    return prev;
  }

  void emit_write(const Write& w) {
    if (spec_.level == Level::interprocedural || spec_.level == Level::inter_file) {
      wrap_write(w);
      return;
    }
    stmt(w.text());
  }

  // Moves the write into a helper function or an application class method.
  void wrap_write(const Write& w) {
    bool chain = spec_.level == Level::inter_file && spec_.file_count >= 3;
    int variant = chain ? 2 : static_cast<int>(d_.below(3));
    auto& fun_decls = spec_.level == Level::inter_file ? draft_.decls_helpers : draft_.decls_main;
    auto& class_decls = spec_.level == Level::inter_file
                            ? (spec_.file_count >= 3 ? draft_.decls_model : draft_.decls_helpers)
                            : draft_.decls_main;
    if (variant == 0) {
      std::string f = fresh("store");
      fun_decls.push_back("fun " + f + "(target, x) {\n  target" + w.before + "x" + w.after + ";\n}\n");
      stmt(f + "(" + w.receiver + ", " + w.value + ");");
    } else if (variant == 1) {
      std::string outer = fresh("update"), inner = fresh("apply");
      fun_decls.push_back("fun " + inner + "(t, x) {\n  t" + w.before + "x" + w.after + ";\n}\n");
      fun_decls.push_back("fun " + outer + "(holder) {\n  v = " + w.value + ";\n  " + inner +
                          "(holder, v);\n}\n");
      stmt(outer + "(" + w.receiver + ");");
    } else {
      std::string cls = "Keeper" + std::to_string(++counter_);
      class_decls.push_back("class " + cls + " {\n  field store;\n\n  fun init(s) {\n    this.store = s;\n  }\n\n"
                            "  fun push(x) {\n    this.store" + w.before + "x" + w.after + ";\n  }\n}\n");
      std::string k = fresh("keeper");
      // The keeper is created right after setup so that it can be noise-separated.
      draft_.stmts.insert(draft_.stmts.begin() + static_cast<std::ptrdiff_t>(draft_.noise_floor),
                          k + " = new " + cls + "(" + w.receiver + ");");
      if (chain) {
        std::string f = fresh("deliver");
        draft_.decls_helpers.push_back("fun " + f + "(k, x) {\n  k.push(x);\n}\n");
        stmt(f + "(" + k + ", " + w.value + ");");
      } else {
        stmt(k + ".push(" + w.value + ");");
      }
    }
  }

  void finish_read(const std::string& reader, const std::string& call, const std::string& path) {
    draft_.read_index = draft_.stmts.size();
    draft_.read_root = reader;
    draft_.query_path = path;
    stmt(fresh("result") + " = " + reader + call + ";");
  }

  void list_int() {
    stmt(root_ + " = new List();");
    draft_.noise_floor = draft_.stmts.size();
    int size = d_.range(0, 3);
    for (int i = 0; i < size; ++i) stmt(root_ + ".add(" + int_lit() + ");");
    std::string writer = alias_chain_before();
    int target;
    Write w{writer, "", int_lit(), ")"};
    int op = static_cast<int>(d_.below(size > 0 ? 3 : 2));
    if (op == 0) {
      w.before = ".add(";
      target = size++;
    } else if (op == 1) {
      w.before = ".addFirst(";
      target = 0;
      ++size;
    } else {
      target = static_cast<int>(d_.below(static_cast<std::uint64_t>(size)));
      w.before = ".set(" + std::to_string(target) + ", ";
    }
    emit_write(w);
    for (int i = d_.range(0, 2); i > 0; --i) {
      if (d_.chance(50)) {
        stmt(root_ + ".add(" + int_lit() + ");");
        ++size;
      } else {
        stmt(fresh("probe") + " = " + root_ + ".get(" + std::to_string(d_.below(size)) + ");");
      }
    }
    std::string reader = alias_chain_after(writer);
    std::string idx = std::to_string(target);
    if (target == 0 && d_.chance(30))
      finish_read(reader, ".getFirst()", reader + ".elementData[0]");
    else
      finish_read(reader, ".get(" + idx + ")", reader + ".elementData[" + idx + "]");
  }

  void strbuf() {
    stmt(root_ + " = new StrBuf();");
    draft_.noise_floor = draft_.stmts.size();
    int length = 0;
    for (int i = d_.range(0, 2); i > 0; --i) {
      int n = d_.range(1, 3);
      stmt(root_ + ".append(" + str_lit(n) + ");");
      length += n;
    }
    std::string writer = alias_chain_before();
    int target;
    if (length > 0 && d_.chance(40)) {
      target = static_cast<int>(d_.below(static_cast<std::uint64_t>(length)));
      emit_write(Write{writer, ".setCharAt(" + std::to_string(target) + ", ", str_lit(1), ")"});
    } else {
      int n = d_.range(1, 3);
      target = length + static_cast<int>(d_.below(static_cast<std::uint64_t>(n)));
      emit_write(Write{writer, ".append(", str_lit(n), ")"});
      length += n;
    }
    for (int i = d_.range(0, 2); i > 0; --i) {
      if (d_.chance(50)) stmt(root_ + ".append(" + str_lit(d_.range(1, 2)) + ");");
      else stmt(fresh("n") + " = " + root_ + ".length();");
    }
    std::string reader = alias_chain_after(writer);
    std::string idx = std::to_string(target);
    finish_read(reader, ".charAt(" + idx + ")", reader + ".value[" + idx + "]");
  }

  void map() {
    static const std::vector<std::string> pool = {"alpha", "beta", "gamma", "delta", "k1", "k2", "k7", "id", "name", "zeta"};
    stmt(root_ + " = new Map();");
    draft_.noise_floor = draft_.stmts.size();
    std::vector<std::string> keys;
    auto fresh_key = [&] {
      for (;;) {
        std::string k = "\"" + d_.pick(pool) + "\"";
        if (std::find(keys.begin(), keys.end(), k) == keys.end()) return k;
      }
    };
    for (int i = d_.range(0, 3); i > 0; --i) {
      keys.push_back(fresh_key());
      stmt(root_ + ".put(" + keys.back() + ", " + int_lit() + ");");
    }
    std::string writer = alias_chain_before();
    std::string key = !keys.empty() && d_.chance(35) ? d_.pick(keys) : fresh_key();
    if (std::find(keys.begin(), keys.end(), key) == keys.end()) keys.push_back(key);
    emit_write(Write{writer, ".put(" + key + ", ", int_lit(), ")"});
    for (int i = d_.range(0, 2); i > 0; --i) {
      int op = static_cast<int>(d_.below(3));
      if (op == 0 && keys.size() < pool.size()) {
        keys.push_back(fresh_key());
        stmt(root_ + ".put(" + keys.back() + ", " + int_lit() + ");");
      } else if (op == 1) {
        stmt(fresh("seen") + " = " + root_ + ".containsKey(" + d_.pick(keys) + ");");
      } else {
        stmt(fresh("peek") + " = " + root_ + ".get(" + d_.pick(keys) + ");");
      }
    }
    std::string reader = alias_chain_after(writer);
    draft_.map_key = key;
    finish_read(reader, ".get(" + key + ")", "");
  }

  void list_strbuf() {
    stmt(root_ + " = new List();");
    int count = d_.range(1, 2);
    for (int i = 0; i < count; ++i) stmt(root_ + ".add(new StrBuf());");
    draft_.noise_floor = draft_.stmts.size();
    std::vector<int> lengths(static_cast<std::size_t>(count), 0);
    for (int i = d_.range(0, 2); i > 0; --i) {
      int j = static_cast<int>(d_.below(static_cast<std::uint64_t>(count)));
      int n = d_.range(1, 2);
      stmt(root_ + ".get(" + std::to_string(j) + ").append(" + str_lit(n) + ");");
      lengths[static_cast<std::size_t>(j)] += n;
    }
    int e = static_cast<int>(d_.below(static_cast<std::uint64_t>(count)));
    std::string es = std::to_string(e);
    int n = d_.range(1, 3);
    int target = lengths[static_cast<std::size_t>(e)] + static_cast<int>(d_.below(static_cast<std::uint64_t>(n)));
    std::string writer = root_;
    bool via_element = spec_.level == Level::variable_aliasing ? d_.chance(60) : d_.chance(25);
    if (via_element) {
      // The element handle comes back from a library call, then optionally
      // travels through plain copies.
      std::string r = fresh("elem");
      stmt(r + " = " + root_ + ".get(" + es + ");");
      if (spec_.level == Level::variable_aliasing)
        for (int i = d_.range(0, spec_.alias_depth - 1); i > 0; --i) {
          std::string a = fresh("alias");
          stmt(a + " = " + r + ";");
          r = a;
        }
      emit_write(Write{r, ".append(", str_lit(n), ")"});
    } else {
      writer = alias_chain_before();
      emit_write(Write{writer, ".get(" + es + ").append(", str_lit(n), ")"});
    }
    for (int i = d_.range(0, 2); i > 0; --i) {
      if (d_.chance(50)) stmt(fresh("count") + " = " + root_ + ".size();");
      else if (count > 1) stmt(root_ + ".get(" + std::to_string(1 - e) + ").append(" + str_lit(1) + ");");
    }
    std::string reader = alias_chain_after(writer);
    std::string idx = std::to_string(target);
    finish_read(reader, ".get(" + es + ").charAt(" + idx + ")", reader + ".elementData[" + es + "].value[" + idx + "]");
  }

  std::string noise_statement() {
    std::string n = fresh("n");
    std::string a = int_lit(), b = int_lit();
    switch (d_.below(9)) {
      case 0: return n + " = " + a + " * " + b + " + " + int_lit() + ";";
      case 1: return n + " = " + a + ";\nwhile (" + n + " < " + a + " + 3) {\n  " + n + " = " + n + " + 1;\n}";
      case 2: return "if (" + a + " > " + b + ") {\n  " + n + " = " + a + ";\n} else {\n  " + n + " = " + b + ";\n}";
      case 3: return n + " = new List();\n" + n + ".add(" + a + ");";
      case 4: return n + " = new StrBuf();\n" + n + ".append(" + str_lit(2) + ");";
      case 5: return "print(" + a + ");";
      case 6: return n + " = new Map();\n" + n + ".put(\"x\", " + a + ");";
      case 7: return n + " = rand(" + a + ");";
      default: return n + " = " + root_ + ".size();";
    }
  }

  void add_noise() {
    int count = d_.range(spec_.noise_min, spec_.noise_max);
    for (int i = 0; i < count; ++i) {
      std::size_t lo = draft_.noise_floor;
      std::size_t hi = draft_.read_index;  // insert before the read
      std::size_t at = lo + d_.below(hi - lo + 1);
      draft_.stmts.insert(draft_.stmts.begin() + static_cast<std::ptrdiff_t>(at), noise_statement());
      ++draft_.read_index;
    }
  }

  const LevelSpec& spec_;
  Draw& d_;
  Draft draft_;
  std::string root_;
  int counter_ = 0;
};

int count_lines(const std::string& text) { return static_cast<int>(std::count(text.begin(), text.end(), '\n')); }

std::string join_decls(const std::vector<std::string>& decls) {
  std::string out;
  for (const auto& d : decls) out += d + "\n";
  return out;
}

// Path from the map root to the value slot of `key`'s entry at the query step.
std::optional<std::string> locate_map_value(const mini::HeapSnapshot& snap, const std::string& root,
                                            const std::string& key) {
  auto it = snap.locals.find(root);
  if (it == snap.locals.end()) return std::nullopt;
  auto ref = std::get_if<mini::Ref>(&it->second);
  if (!ref) return std::nullopt;
  const auto* table = snap.heap.at(*ref).field("table");
  if (!table || !std::get_if<mini::Ref>(table)) return std::nullopt;
  const auto& arr = snap.heap.at(std::get<mini::Ref>(*table));
  for (std::size_t b = 0; b < arr.elements.size(); ++b) {
    std::string path = root + ".table[" + std::to_string(b) + "]";
    mini::Value cur = arr.elements[b];
    while (auto e = std::get_if<mini::Ref>(&cur)) {
      const auto& entry = snap.heap.at(*e);
      const auto* k = entry.field("key");
      if (k && std::holds_alternative<std::string>(*k) && "\"" + std::get<std::string>(*k) + "\"" == key)
        return path + ".value";
      path += ".next";
      cur = *entry.field("next");
    }
  }
  return std::nullopt;
}

std::uint64_t mix_seed(Level level, std::uint64_t seed) {
  return seed * 0x9e3779b97f4a7c15ULL + static_cast<std::uint64_t>(level) * 0xbf58476d1ce4e5b9ULL + 1;
}

json answer_json(const GroundTruthAnswer& a) {
  json j;
  j["def_step"] = a.def_step ? json(a.def_step->value) : json(nullptr);
  j["case"] = to_string(a.case_kind);
  j["full_def_step"] = a.full_def_step ? json(a.full_def_step->value) : json(nullptr);
  j["location"] = a.location;
  return j;
}

void write_text(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw CorpusError("cannot write " + p.string());
  out << text;
}

std::string read_text(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw CorpusError("cannot read " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

double ratio(std::size_t a, std::size_t b) { return b ? static_cast<double>(a) / static_cast<double>(b) : 0.0; }

void collect(const GraphNode& n, const std::string& prefix, std::vector<std::pair<std::string, std::string>>& out) {
  for (const auto& c : n.children) {
    std::string p = prefix + "/" + c.name;
    out.emplace_back(p, c.children.empty() ? c.value : "");
    collect(c, p, out);
  }
}

}  // namespace

std::string to_string(Level level) {
  for (const auto& [l, name] : kLevelNames)
    if (l == level) return name;
  return "unknown";
}

std::optional<Level> parse_level(const std::string& text) {
  for (const auto& [l, name] : kLevelNames)
    if (name == text) return l;
  return std::nullopt;
}

const std::vector<Level>& all_levels() {
  static const std::vector<Level> levels = [] {
    std::vector<Level> v;
    for (const auto& [l, name] : kLevelNames) v.push_back(l);
    return v;
  }();
  return levels;
}

LevelSpec LevelSpec::standard(Level level) {
  switch (level) {
    case Level::basic_operations: return {level, 0, 0, 0, 1};
    case Level::noisy_context: return {level, 3, 8, 0, 1};
    case Level::variable_aliasing: return {level, 0, 3, 2, 1};
    case Level::interprocedural: return {level, 0, 3, 0, 1};
    case Level::inter_file: return {level, 0, 3, 0, 3};
  }
  return {};
}

PreparedCase prepare_case(const CorpusCase& c) {
  auto exec = std::make_shared<Execution>(run_full(c.program, c.seed));
  if (exec->fault) throw CorpusError("case program faulted: " + exec->fault->message);
  auto partial = std::make_shared<PartialTrace>(make_partial(*exec, application_files(c.program)));
  return {exec, partial};
}

CorpusCase generate_case(const LevelSpec& spec, std::uint64_t seed) {
  if (spec.level == Level::basic_operations && (spec.noise_max != 0 || spec.file_count != 1))
    throw Error("InvalidSpec", "basic_operations has no noise and a single file");
  if (spec.level == Level::inter_file && spec.file_count < 2)
    throw Error("InvalidSpec", "inter_file needs at least two files");
  if (spec.noise_min < 0 || spec.noise_max < spec.noise_min) throw Error("InvalidSpec", "bad noise range");

  Draw d(mix_seed(spec.level, seed));
  std::string last_error;
  for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
    Draft draft = Generator(spec, d).build();
    std::string decls = join_decls(draft.decls_main);
    std::string main_text = decls;
    int read_line = 0;
    for (std::size_t i = 0; i < draft.stmts.size(); ++i) {
      if (i == draft.read_index) read_line = count_lines(main_text) + 1;
      main_text += draft.stmts[i] + "\n";
    }
    CorpusCase c;
    c.spec = spec;
    c.seed = seed;
    c.program.files[kMainFile] = main_text;
    if (!draft.decls_helpers.empty()) c.program.files["helpers.mini"] = join_decls(draft.decls_helpers);
    if (!draft.decls_model.empty()) c.program.files["model.mini"] = join_decls(draft.decls_model);
    try {
      PreparedCase prep = prepare_case(c);
      std::optional<StepId> q;
      for (const auto& s : prep.partial->trace.steps())
        if (s.instruction.file_id == kMainFile && s.instruction.line == read_line) q = s.step_id;
      if (!q) throw CorpusError("read step not found");
      std::string path = draft.query_path;
      if (path.empty()) {
        auto snap = snapshot_before(*prep.exec, prep.partial->to_full(*q));
        auto located = locate_map_value(snap, draft.read_root, draft.map_key);
        if (!located) throw CorpusError("map entry not found");
        path = *located;
      }
      c.query = SliceQuery{*q, parse_path(path)};
      c.expected = oracle_dependency(*prep.exec, *prep.partial, c.query);
      if (!c.expected.def_step) throw CorpusError("no definition for the query");
      return c;
    } catch (const Error& e) {
      last_error = e.what();
    }
  }
  throw GenerationRetryExhausted("level " + to_string(spec.level) + " seed " + std::to_string(seed) + ": " +
                                 last_error);
}

std::filesystem::path write_case(const CorpusCase& c, const std::filesystem::path& corpus_root) {
  auto dir = corpus_root / to_string(c.spec.level) / std::to_string(c.seed);
  std::filesystem::create_directories(dir);
  json prog;
  prog["entry"] = c.program.entry;
  prog["seed"] = c.seed;
  prog["files"] = json::array();
  for (const auto& [name, text] : c.program.files) {
    write_text(dir / name, text);
    prog["files"].push_back(name);
  }
  prog["level"] = to_string(c.spec.level);
  prog["spec"] = {{"noise_min", c.spec.noise_min},
                  {"noise_max", c.spec.noise_max},
                  {"alias_depth", c.spec.alias_depth},
                  {"file_count", c.spec.file_count}};
  write_text(dir / "program.json", prog.dump(2) + "\n");
  json q;
  q["step_id"] = c.query.step_id.value;
  q["path"] = render_path(c.query.path);
  write_text(dir / "query.json", q.dump(2) + "\n");
  write_text(dir / "expected.json", answer_json(c.expected).dump(2) + "\n");
  return dir;
}

CorpusCase read_case(const std::filesystem::path& dir) {
  try {
    CorpusCase c;
    auto prog = json::parse(read_text(dir / "program.json"));
    c.program.entry = prog.at("entry").get<std::string>();
    c.seed = prog.at("seed").get<std::uint64_t>();
    for (const auto& f : prog.at("files")) {
      auto name = f.get<std::string>();
      c.program.files[name] = read_text(dir / name);
    }
    auto level = parse_level(prog.at("level").get<std::string>());
    if (!level) throw CorpusError("unknown level in " + dir.string());
    const auto& s = prog.at("spec");
    c.spec = LevelSpec{*level, s.at("noise_min").get<int>(), s.at("noise_max").get<int>(),
                       s.at("alias_depth").get<int>(), s.at("file_count").get<int>()};
    auto q = json::parse(read_text(dir / "query.json"));
    c.query = SliceQuery{StepId{q.at("step_id").get<std::uint64_t>()}, parse_path(q.at("path").get<std::string>())};
    auto e = json::parse(read_text(dir / "expected.json"));
    if (!e.at("def_step").is_null()) c.expected.def_step = StepId{e.at("def_step").get<std::uint64_t>()};
    auto kind = parse_case_kind(e.at("case").get<std::string>());
    if (!kind) throw CorpusError("unknown case kind in " + dir.string());
    c.expected.case_kind = *kind;
    if (!e.at("full_def_step").is_null())
      c.expected.full_def_step = StepId{e.at("full_def_step").get<std::uint64_t>()};
    c.expected.location = e.at("location").get<std::string>();
    return c;
  } catch (const json::exception& ex) {
    throw CorpusError(dir.string() + ": " + ex.what());
  }
}

std::vector<std::filesystem::path> list_cases(const std::filesystem::path& corpus_root) {
  std::vector<std::filesystem::path> out;
  if (!std::filesystem::is_directory(corpus_root)) throw CorpusError("no corpus at " + corpus_root.string());
  for (const auto& entry : std::filesystem::recursive_directory_iterator(corpus_root))
    if (entry.is_regular_file() && entry.path().filename() == "query.json") out.push_back(entry.path().parent_path());
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    auto la = a.parent_path().filename().string(), lb = b.parent_path().filename().string();
    if (la != lb) return la < lb;
    auto sa = a.filename().string(), sb = b.filename().string();
    if (sa.size() != sb.size()) return sa.size() < sb.size();
    return sa < sb;
  });
  return out;
}

ScoreReport ScoreReport::from_counts(const ScoreCounts& counts) {
  ScoreReport r;
  r.counts = counts;
  r.precision = ratio(counts.x, counts.c);
  r.recall = ratio(counts.x, counts.k);
  r.success_ratio = ratio(counts.x, counts.d);
  return r;
}

std::string ScoreReport::to_json() const {
  json j;
  j["precision"] = precision;
  j["recall"] = recall;
  j["success_ratio"] = success_ratio;
  j["counts"] = {{"x", counts.x}, {"c", counts.c}, {"k", counts.k}, {"d", counts.d}};
  return j.dump(2);
}

ScoreReport score_dependency(const std::vector<SliceResult>& predicted,
                             const std::vector<GroundTruthAnswer>& expected) {
  if (predicted.size() != expected.size())
    throw LengthMismatch(std::to_string(predicted.size()) + " predictions for " + std::to_string(expected.size()) +
                         " expected answers");
  ScoreCounts n;
  n.d = n.k = expected.size();
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    const auto& p = predicted[i];
    const auto& e = expected[i];
    bool correct = p.def_step == e.def_step && p.case_kind == e.case_kind;
    if (p.def_step || correct) ++n.c;
    if (correct) ++n.x;
  }
  return ScoreReport::from_counts(n);
}

ScoreReport score_recovery(const std::vector<ObjectGraph>& predicted, const std::vector<ObjectGraph>& truth) {
  if (predicted.size() != truth.size())
    throw LengthMismatch(std::to_string(predicted.size()) + " recovered graphs for " + std::to_string(truth.size()) +
                         " truth graphs");
  ScoreCounts n;
  n.d = truth.size();
  std::size_t exact = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    std::vector<std::pair<std::string, std::string>> p, t;
    collect(predicted[i].root, "", p);
    collect(truth[i].root, "", t);
    n.c += p.size();
    n.k += t.size();
    std::sort(p.begin(), p.end());
    std::sort(t.begin(), t.end());
    std::vector<std::pair<std::string, std::string>> common;
    std::set_intersection(p.begin(), p.end(), t.begin(), t.end(), std::back_inserter(common));
    n.x += common.size();
    if (common.size() == t.size() && p.size() == t.size()) ++exact;
  }
  ScoreReport r = ScoreReport::from_counts(n);
  r.success_ratio = ratio(exact, n.d);
  return r;
}

}  // namespace recov
