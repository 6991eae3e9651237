#include "recov/interpreter.hpp"

#include <random>
#include <set>

namespace recov::mini {

namespace {

struct Fault {
  std::string code;
  std::string message;
};

struct Stop {};

std::string quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out + "\"";
}

constexpr int kRenderDepth = 6;

std::string render(const Heap& heap, const Value& v, bool nested, int depth,
                   std::set<std::uint64_t>& visiting) {
  if (std::holds_alternative<std::monostate>(v)) return "null";
  if (auto i = std::get_if<long long>(&v)) return std::to_string(*i);
  if (auto b = std::get_if<bool>(&v)) return *b ? "true" : "false";
  if (auto s = std::get_if<std::string>(&v)) return nested ? quote(*s) : *s;
  Ref r = std::get<Ref>(v);
  if (visiting.count(r.id)) return "(cycle)";
  if (depth > kRenderDepth) return "...";
  visiting.insert(r.id);
  const Object& o = heap.at(r);
  std::string out;
  auto elements_of = [&](const Value* arr_field, long long count) {
    std::vector<Value> items;
    if (!arr_field) return items;
    auto arr = std::get_if<Ref>(arr_field);
    if (!arr) return items;
    const Object& a = heap.at(*arr);
    for (long long i = 0; i < count && i < static_cast<long long>(a.elements.size()); ++i)
      items.push_back(a.elements[i]);
    return items;
  };
  auto int_field = [&](const char* name) {
    const Value* f = o.field(name);
    auto i = f ? std::get_if<long long>(f) : nullptr;
    return i ? *i : 0;
  };
  if (o.is_array) {
    out = "[";
    for (std::size_t i = 0; i < o.elements.size(); ++i) {
      if (i) out += ", ";
      out += render(heap, o.elements[i], true, depth + 1, visiting);
    }
    out += "]";
  } else if (o.type_name == "List") {
    out = "[";
    auto items = elements_of(o.field("elementData"), int_field("size"));
    for (std::size_t i = 0; i < items.size(); ++i) {
      if (i) out += ", ";
      out += render(heap, items[i], true, depth + 1, visiting);
    }
    out += "]";
  } else if (o.type_name == "StrBuf") {
    std::string text;
    for (const auto& c : elements_of(o.field("value"), int_field("count")))
      text += render(heap, c, false, depth + 1, visiting);
    out = nested ? quote(text) : text;
  } else if (o.type_name == "Map") {
    std::string body;
    const Value* table = o.field("table");
    if (auto t = table ? std::get_if<Ref>(table) : nullptr) {
      for (const auto& bucket : heap.at(*t).elements) {
        const Value* cur = &bucket;
        std::set<std::uint64_t> chain;
        while (auto e = std::get_if<Ref>(cur)) {
          if (!chain.insert(e->id).second) break;
          const Object& entry = heap.at(*e);
          const Value* k = entry.field("key");
          const Value* val = entry.field("value");
          body += render(heap, k ? *k : Value{}, true, depth + 1, visiting) + "=" +
                  render(heap, val ? *val : Value{}, true, depth + 1, visiting) + ", ";
          cur = entry.field("next");
          if (!cur) break;
        }
      }
    }
    out = "{" + body + "}";
  } else {
    out = "{";
    for (const auto& [name, fv] : o.fields) out += name + "=" + render(heap, fv, true, depth + 1, visiting) + ", ";
    out += "}";
  }
  visiting.erase(r.id);
  return out;
}

struct Frame {
  std::uint64_t id = 0;
  const FunDecl* fn = nullptr;
  std::map<std::string, Value> locals;
  std::optional<std::uint64_t> caller_step;
  std::uint64_t current_step = 0;
  bool returned = false;
  Value return_value;
  std::set<std::string> seen_reads;  // (name, location) keys read by current_step
};

class Interpreter {
 public:
  Interpreter(const Program& program, std::uint64_t seed, const RunOptions& opts,
              std::optional<std::uint64_t> stop_before)
      : program_(program), rng_(seed), opts_(opts), stop_before_(stop_before),
        record_(!stop_before) {}

  RunResult run() {
    RunResult result;
    try {
      if (const FunDecl* fn = program_.entry_function()) {
        invoke(*fn, std::nullopt, {});
      } else {
        Frame frame;
        frame.id = ++frame_counter_;
        frames_.push_back(&frame);
        for (const Stmt* s : program_.entry_body()) {
          exec(*s);
          if (frame.returned) break;
        }
        frames_.pop_back();
      }
    } catch (const Stop&) {
      result.snapshot = std::move(snapshot_);
    } catch (const Fault& f) {
      result.fault = RunFault{f.code, f.message,
                              step_counter_ ? std::optional<StepId>(StepId{step_counter_}) : std::nullopt};
    }
    Partition partition;
    for (const auto& f : program_.files()) partition.instrumented_files.push_back(f->id);
    result.trace = Trace(std::move(steps_), std::move(vars_), std::move(partition), Completeness::full);
    result.output = std::move(output_);
    return result;
  }

 private:
  [[noreturn]] void fault(const std::string& msg) { throw Fault{"RuntimeFault", msg}; }

  Frame& frame() { return *frames_.back(); }

  Step* current_step() {
    if (!record_ || frames_.empty() || frame().current_step == 0) return nullptr;
    return &steps_[frame().current_step - 1];
  }

  void begin_step(const std::string& file, int line) {
    std::uint64_t id = ++step_counter_;
    if (id > opts_.step_budget) {
      --step_counter_;
      throw Fault{"StepBudgetExceeded", "step budget of " + std::to_string(opts_.step_budget) + " exceeded"};
    }
    if (stop_before_ && *stop_before_ == id) {
      HeapSnapshot snap;
      snap.heap = heap_;
      snap.locals = frame().locals;
      snap.frame_id = frame().id;
      if (frame().fn) snap.function = frame().fn->qualified_name();
      snapshot_ = std::move(snap);
      throw Stop{};
    }
    frame().current_step = id;
    if (!record_) return;
    Step s;
    s.step_id = StepId{id};
    s.instruction.file_id = file;
    s.instruction.line = line;
    const SourceFile* src = program_.file(file);
    s.instruction.code_text = src ? trim(src->line(line)) : std::string();
    s.order = ++order_[{file, line}];
    if (frame().caller_step) s.caller_step = StepId{*frame().caller_step};
    steps_.push_back(std::move(s));
    frame().seen_reads.clear();
  }

  VarId record(const std::string& name, const Value& v, const std::string& cell, int depth) {
    VariableInstance inst;
    inst.var_id = VarId{++var_counter_};
    inst.name = name;
    inst.type_name = type_of(heap_, v);
    inst.content = render_value(heap_, v);
    inst.location = MemoryLocation{MemoryLocation::Kind::recorded, location_of(v, cell)};
    VarId id = inst.var_id;
    std::size_t slot = vars_.size();
    vars_.push_back(std::move(inst));
    if (depth > 0) {
      if (auto r = std::get_if<Ref>(&v)) {
        std::vector<ChildEdge> children;
        const Object& o = heap_.at(*r);
        std::string base = "h" + std::to_string(r->id);
        if (o.is_array) {
          for (std::size_t i = 0; i < o.elements.size(); ++i) {
            std::string idx = std::to_string(i);
            Value ev = heap_.at(*r).elements[i];
            children.push_back({"[" + idx + "]", record(name + "[" + idx + "]", ev, base + "[" + idx + "]", depth - 1)});
          }
        } else {
          auto fields = o.fields;
          for (const auto& [fname, fv] : fields)
            children.push_back({fname, record(name + "." + fname, fv, base + "." + fname, depth - 1)});
        }
        vars_[slot].children = std::move(children);
      }
    }
    return id;
  }

  void note_read(const std::string& name, const Value& v, const std::string& cell) {
    Step* s = current_step();
    if (!s) return;
    std::string key = name + "\x1f" + location_of(v, cell);
    if (!frame().seen_reads.insert(key).second) return;
    s->reads.push_back(record(name, v, cell, opts_.child_depth));
  }

  void note_write(const std::string& name, const Value& v, const std::string& cell) {
    Step* s = current_step();
    if (!s) return;
    s->writes.push_back(record(name, v, cell, opts_.child_depth));
  }

  std::string local_cell(const std::string& name) {
    return "f" + std::to_string(frame().id) + "." + name;
  }

  Object& object_of(const Value& v, const std::string& what) {
    auto r = std::get_if<Ref>(&v);
    if (!r) fault("null or non-object value in " + what);
    return heap_.at(*r);
  }

  long long as_int(const Value& v, const std::string& what) {
    auto i = std::get_if<long long>(&v);
    if (!i) fault("expected int in " + what + ", got " + type_of(heap_, v));
    return *i;
  }

  bool as_bool(const Value& v, const std::string& what) {
    auto b = std::get_if<bool>(&v);
    if (!b) fault("expected bool in " + what + ", got " + type_of(heap_, v));
    return *b;
  }

  // ---- statements ----

  void exec_block(const std::vector<StmtPtr>& body) {
    for (const auto& s : body) {
      exec(*s);
      if (frame().returned) return;
    }
  }

  void exec(const Stmt& s) {
    switch (s.kind) {
      case Stmt::Kind::block: exec_block(s.body); return;
      case Stmt::Kind::expr:
        begin_step(s.file, s.line);
        eval(*s.value);
        return;
      case Stmt::Kind::assign: exec_assign(s); return;
      case Stmt::Kind::if_: {
        begin_step(s.file, s.line);
        if (as_bool(eval(*s.value), "if condition"))
          exec_block(s.body);
        else if (s.has_else)
          exec_block(s.else_body);
        return;
      }
      case Stmt::Kind::while_:
        for (;;) {
          begin_step(s.file, s.line);
          if (!as_bool(eval(*s.value), "while condition")) return;
          exec_block(s.body);
          if (frame().returned) return;
        }
      case Stmt::Kind::ret: {
        begin_step(s.file, s.line);
        Value v = s.value ? eval(*s.value) : Value{};
        frame().returned = true;
        frame().return_value = std::move(v);
        return;
      }
    }
  }

  void exec_assign(const Stmt& s) {
    begin_step(s.file, s.line);
    const Expr& t = *s.target;
    switch (t.kind) {
      case Expr::Kind::var: {
        Value v = eval(*s.value);
        note_write(t.text, v, local_cell(t.text));
        frame().locals[t.text] = std::move(v);
        return;
      }
      case Expr::Kind::field: {
        Value base = eval(*t.lhs);
        Value v = eval(*s.value);
        Object& o = object_of(base, "field assignment to ." + t.text);
        Value* slot = o.field(t.text);
        if (!slot) fault("type " + o.type_name + " has no field " + t.text);
        *slot = v;
        note_write(expr_text(*t.lhs) + "." + t.text, v,
                   "h" + std::to_string(o.id) + "." + t.text);
        return;
      }
      case Expr::Kind::index: {
        Value base = eval(*t.lhs);
        long long i = as_int(eval(*t.rhs), "index");
        Value v = eval(*s.value);
        Object& o = object_of(base, "element assignment");
        if (!o.is_array) fault("indexing a non-array " + o.type_name);
        if (i < 0 || i >= static_cast<long long>(o.elements.size()))
          fault("index " + std::to_string(i) + " out of bounds");
        o.elements[i] = v;
        note_write(expr_text(*t.lhs) + "[" + std::to_string(i) + "]", v,
                   "h" + std::to_string(o.id) + "[" + std::to_string(i) + "]");
        return;
      }
      default: fault("invalid assignment target");
    }
  }

  // ---- expressions ----

  Value eval(const Expr& e) {
    switch (e.kind) {
      case Expr::Kind::int_lit: return e.int_value;
      case Expr::Kind::str_lit: return e.text;
      case Expr::Kind::bool_lit: return e.bool_value;
      case Expr::Kind::null_lit: return Value{};
      case Expr::Kind::var: {
        auto it = frame().locals.find(e.text);
        if (it == frame().locals.end()) fault("undefined variable " + e.text);
        Value v = it->second;
        note_read(e.text, v, local_cell(e.text));
        return v;
      }
      case Expr::Kind::self: {
        auto it = frame().locals.find("this");
        if (it == frame().locals.end()) fault("'this' outside a method");
        Value v = it->second;
        note_read("this", v, local_cell("this"));
        return v;
      }
      case Expr::Kind::field: {
        Value base = eval(*e.lhs);
        const Object& o = object_of(base, "field access ." + e.text);
        const Value* f = o.field(e.text);
        if (!f) fault("type " + o.type_name + " has no field " + e.text);
        Value v = *f;
        note_read(expr_text(*e.lhs) + "." + e.text, v, "h" + std::to_string(o.id) + "." + e.text);
        return v;
      }
      case Expr::Kind::index: {
        Value base = eval(*e.lhs);
        long long i = as_int(eval(*e.rhs), "index");
        const Object& o = object_of(base, "element access");
        if (!o.is_array) fault("indexing a non-array " + o.type_name);
        if (i < 0 || i >= static_cast<long long>(o.elements.size()))
          fault("index " + std::to_string(i) + " out of bounds");
        Value v = o.elements[i];
        note_read(expr_text(*e.lhs) + "[" + std::to_string(i) + "]", v,
                  "h" + std::to_string(o.id) + "[" + std::to_string(i) + "]");
        return v;
      }
      case Expr::Kind::call: return eval_call(e);
      case Expr::Kind::method: {
        Value recv = eval(*e.lhs);
        const Object& o = object_of(recv, "call of ." + e.text + "()");
        const ClassDecl* cls = o.is_array ? nullptr : program_.find_class(o.type_name);
        auto it = cls ? cls->methods.find(e.text) : decltype(cls->methods.end()){};
        if (!cls || it == cls->methods.end()) fault("type " + o.type_name + " has no method " + e.text);
        std::vector<Value> args;
        for (const auto& a : e.args) args.push_back(eval(*a));
        return invoke(*it->second, recv, std::move(args));
      }
      case Expr::Kind::new_obj: {
        const ClassDecl* cls = program_.find_class(e.text);
        if (!cls) fault("unknown class " + e.text);
        std::vector<Value> args;
        for (const auto& a : e.args) args.push_back(eval(*a));
        Ref r = heap_.allocate(cls->name, false);
        for (const auto& f : cls->fields) heap_.at(r).fields.emplace_back(f.name, Value{});
        auto init = cls->methods.find("init");
        if (init != cls->methods.end())
          invoke(*init->second, Value{r}, std::move(args));
        else if (!args.empty())
          fault("class " + cls->name + " has no init taking arguments");
        return r;
      }
      case Expr::Kind::unary: {
        Value v = eval(*e.lhs);
        if (e.text == "!") return !as_bool(v, "!");
        return -as_int(v, "unary -");
      }
      case Expr::Kind::binary: return eval_binary(e);
    }
    fault("unsupported expression");
  }

  Value eval_binary(const Expr& e) {
    const std::string& op = e.text;
    if (op == "&&") {
      if (!as_bool(eval(*e.lhs), "&&")) return false;
      return as_bool(eval(*e.rhs), "&&");
    }
    if (op == "||") {
      if (as_bool(eval(*e.lhs), "||")) return true;
      return as_bool(eval(*e.rhs), "||");
    }
    Value l = eval(*e.lhs);
    Value r = eval(*e.rhs);
    if (op == "==") return l == r;
    if (op == "!=") return !(l == r);
    if (op == "+" && (std::holds_alternative<std::string>(l) || std::holds_alternative<std::string>(r)))
      return render_value(heap_, l) + render_value(heap_, r);
    long long a = as_int(l, op);
    long long b = as_int(r, op);
    if (op == "+") return a + b;
    if (op == "-") return a - b;
    if (op == "*") return a * b;
    if (op == "/" || op == "%") {
      if (b == 0) fault("division by zero");
      return op == "/" ? a / b : a % b;
    }
    if (op == "<") return a < b;
    if (op == "<=") return a <= b;
    if (op == ">") return a > b;
    if (op == ">=") return a >= b;
    fault("unknown operator " + op);
  }

  static long long hash_of(const Value& v) {
    if (auto s = std::get_if<std::string>(&v)) {
      std::uint32_t h = 0;
      for (unsigned char c : *s) h = 31 * h + c;
      return static_cast<long long>(h & 0x7fffffffu);
    }
    if (auto i = std::get_if<long long>(&v)) return (*i < 0 ? -*i : *i) & 0x7fffffff;
    if (auto b = std::get_if<bool>(&v)) return *b ? 1231 : 1237;
    if (auto r = std::get_if<Ref>(&v)) return static_cast<long long>(r->id * 2654435761u & 0x7fffffff);
    return 0;
  }

  Value eval_call(const Expr& e) {
    std::vector<Value> args;
    for (const auto& a : e.args) args.push_back(eval(*a));
    const std::string& f = e.text;
    auto arity = [&](std::size_t n) {
      if (args.size() != n)
        fault(f + "() takes " + std::to_string(n) + " argument(s), got " + std::to_string(args.size()));
    };
    if (f == "array") {
      arity(1);
      long long n = as_int(args[0], "array()");
      if (n < 0 || n > 1'000'000) fault("bad array size " + std::to_string(n));
      Ref r = heap_.allocate("array", true);
      heap_.at(r).elements.assign(static_cast<std::size_t>(n), Value{});
      return r;
    }
    if (f == "len") {
      arity(1);
      const Object& o = object_of(args[0], "len()");
      if (!o.is_array) fault("len() of non-array");
      return static_cast<long long>(o.elements.size());
    }
    if (f == "strlen") {
      arity(1);
      auto s = std::get_if<std::string>(&args[0]);
      if (!s) fault("strlen() of non-string");
      return static_cast<long long>(s->size());
    }
    if (f == "charat") {
      arity(2);
      auto s = std::get_if<std::string>(&args[0]);
      if (!s) fault("charat() of non-string");
      long long i = as_int(args[1], "charat()");
      if (i < 0 || i >= static_cast<long long>(s->size())) fault("charat() index out of bounds");
      return std::string(1, (*s)[static_cast<std::size_t>(i)]);
    }
    if (f == "str") {
      arity(1);
      return render_value(heap_, args[0]);
    }
    if (f == "hash") {
      arity(1);
      return hash_of(args[0]);
    }
    if (f == "rand") {
      arity(1);
      long long n = as_int(args[0], "rand()");
      if (n <= 0) fault("rand() bound must be positive");
      if (Step* s = current_step()) s->instruction.is_call_site = true;
      return static_cast<long long>(rng_() % static_cast<std::uint64_t>(n));
    }
    if (f == "print") {
      arity(1);
      output_ += render_value(heap_, args[0]) + "\n";
      return Value{};
    }
    if (f == "fail") {
      arity(1);
      fault("fail: " + render_value(heap_, args[0]));
    }
    const FunDecl* fn = program_.find_function(f);
    if (!fn) fault("unknown function " + f);
    return invoke(*fn, std::nullopt, std::move(args));
  }

  Value invoke(const FunDecl& fn, std::optional<Value> self, std::vector<Value> args) {
    if (args.size() != fn.params.size())
      fault(fn.qualified_name() + " expects " + std::to_string(fn.params.size()) + " argument(s), got " +
            std::to_string(args.size()));
    if (frames_.size() > 2000) fault("call depth exceeded");
    Frame callee;
    callee.id = ++frame_counter_;
    callee.fn = &fn;
    if (!frames_.empty() && frame().current_step) callee.caller_step = frame().current_step;
    frames_.push_back(&callee);
    struct Pop {
      std::vector<Frame*>& frames;
      ~Pop() { frames.pop_back(); }
    } pop{frames_};
    begin_step(fn.file, fn.line);
    if (self) callee.locals["this"] = *self;
    for (std::size_t i = 0; i < args.size(); ++i) {
      note_write(fn.params[i], args[i], local_cell(fn.params[i]));
      callee.locals[fn.params[i]] = args[i];
    }
    exec_block(fn.body);
    return callee.return_value;
  }

  const Program& program_;
  std::mt19937_64 rng_;
  RunOptions opts_;
  std::optional<std::uint64_t> stop_before_;
  bool record_;
  Heap heap_;
  std::vector<Frame*> frames_;
  std::uint64_t frame_counter_ = 0;
  std::uint64_t step_counter_ = 0;
  std::uint64_t var_counter_ = 0;
  std::vector<Step> steps_;
  std::vector<VariableInstance> vars_;
  std::map<std::pair<std::string, int>, std::uint32_t> order_;
  std::string output_;
  std::optional<HeapSnapshot> snapshot_;
};

}  // namespace

const Value* Object::field(const std::string& name) const {
  for (const auto& [n, v] : fields)
    if (n == name) return &v;
  return nullptr;
}

Value* Object::field(const std::string& name) {
  for (auto& [n, v] : fields)
    if (n == name) return &v;
  return nullptr;
}

Ref Heap::allocate(std::string type_name, bool is_array) {
  Object o;
  o.id = objects_.size() + 1;
  o.type_name = std::move(type_name);
  o.is_array = is_array;
  objects_.push_back(std::move(o));
  return Ref{objects_.back().id};
}

std::string type_of(const Heap& heap, const Value& v) {
  if (std::holds_alternative<std::monostate>(v)) return "null";
  if (std::holds_alternative<long long>(v)) return "int";
  if (std::holds_alternative<bool>(v)) return "bool";
  if (std::holds_alternative<std::string>(v)) return "string";
  return heap.at(std::get<Ref>(v)).type_name;
}

std::string render_value(const Heap& heap, const Value& v, bool nested) {
  std::set<std::uint64_t> visiting;
  return render(heap, v, nested, 0, visiting);
}

std::string location_of(const Value& v, const std::string& cell_token) {
  if (auto r = std::get_if<Ref>(&v)) return "h" + std::to_string(r->id);
  return cell_token;
}

std::optional<ResolvedValue> resolve_path(const HeapSnapshot& snap, const ReferencePath& path) {
  auto it = snap.locals.find(path.root_name());
  if (it == snap.locals.end()) return std::nullopt;
  Value cur = it->second;
  std::string cell = "f" + std::to_string(snap.frame_id) + "." + path.root_name();
  for (std::size_t i = 1; i < path.size(); ++i) {
    const auto& seg = path.segments()[i];
    auto r = std::get_if<Ref>(&cur);
    if (!r) return std::nullopt;
    const Object& o = snap.heap.at(*r);
    if (seg.is_index()) {
      auto idx = seg.int_index();
      if (!o.is_array || !idx || *idx < 0 || *idx >= static_cast<long long>(o.elements.size()))
        return std::nullopt;
      cur = o.elements[*idx];
      cell = "h" + std::to_string(o.id) + "[" + std::to_string(*idx) + "]";
    } else {
      const Value* f = o.field(seg.name);
      if (!f) return std::nullopt;
      cur = *f;
      cell = "h" + std::to_string(o.id) + "." + seg.name;
    }
  }
  return ResolvedValue{cur, type_of(snap.heap, cur), location_of(cur, cell)};
}

RunResult interpret(const Program& program, std::uint64_t seed, const RunOptions& opts,
                    std::optional<std::uint64_t> stop_before) {
  return Interpreter(program, seed, opts, stop_before).run();
}

}  // namespace recov::mini
