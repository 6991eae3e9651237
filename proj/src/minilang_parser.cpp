#include <cctype>
#include <set>
#include <sstream>

#include "recov/minilang.hpp"

namespace recov::mini {

namespace {

struct Token {
  enum class Kind { ident, keyword, integer, string, punct, end };
  Kind kind;
  std::string text;
  int line;
  int col;
};

const std::set<std::string> kKeywords = {"class", "field", "fun",  "if",   "else", "while",
                                         "return", "new",  "true", "false", "null", "this"};

std::vector<Token> lex(const SourceFile& file) {
  std::vector<Token> out;
  const std::string& s = file.text;
  std::size_t i = 0;
  int line = 1;
  std::size_t line_start = 0;
  auto error = [&](const std::string& what) {
    throw MiniSyntaxError(file.id + ":" + std::to_string(line) + ":" +
                          std::to_string(i - line_start + 1) + ": " + what);
  };
  while (i < s.size()) {
    char c = s[i];
    if (c == '\n') {
      ++line;
      line_start = ++i;
      continue;
    }
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
      continue;
    }
    if (c == '/' && i + 1 < s.size() && s[i + 1] == '/') {
      while (i < s.size() && s[i] != '\n') ++i;
      continue;
    }
    int col = static_cast<int>(i - line_start + 1);
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t start = i;
      while (i < s.size() && (std::isalnum(static_cast<unsigned char>(s[i])) || s[i] == '_')) ++i;
      std::string word = s.substr(start, i - start);
      out.push_back({kKeywords.count(word) ? Token::Kind::keyword : Token::Kind::ident, word, line, col});
      continue;
    }
    if (std::isdigit(static_cast<unsigned char>(c))) {
      std::size_t start = i;
      while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) ++i;
      if (i - start > 18) error("integer literal too long");
      out.push_back({Token::Kind::integer, s.substr(start, i - start), line, col});
      continue;
    }
    if (c == '"') {
      std::string value;
      ++i;
      for (;;) {
        if (i >= s.size() || s[i] == '\n') error("unterminated string literal");
        char d = s[i++];
        if (d == '"') break;
        if (d == '\\') {
          if (i >= s.size()) error("unterminated escape");
          char e = s[i++];
          switch (e) {
            case 'n': value += '\n'; break;
            case 't': value += '\t'; break;
            case '"': value += '"'; break;
            case '\\': value += '\\'; break;
            default: error(std::string("unknown escape \\") + e);
          }
        } else {
          value += d;
        }
      }
      out.push_back({Token::Kind::string, value, line, col});
      continue;
    }
    static const char* two[] = {"==", "!=", "<=", ">=", "&&", "||"};
    bool matched = false;
    for (const char* op : two) {
      if (s.compare(i, 2, op) == 0) {
        out.push_back({Token::Kind::punct, op, line, col});
        i += 2;
        matched = true;
        break;
      }
    }
    if (matched) continue;
    if (std::string("(){}[];,.=<>+-*/%!:").find(c) != std::string::npos) {
      out.push_back({Token::Kind::punct, std::string(1, c), line, col});
      ++i;
      continue;
    }
    error(std::string("unexpected character '") + c + "'");
  }
  out.push_back({Token::Kind::end, "", line, static_cast<int>(i - line_start + 1)});
  return out;
}

class Parser {
 public:
  Parser(SourceFile& file, std::vector<Token> tokens) : file_(file), toks_(std::move(tokens)) {}

  void parse(std::vector<std::unique_ptr<ClassDecl>>& classes,
             std::vector<std::unique_ptr<FunDecl>>& functions) {
    while (peek().kind != Token::Kind::end) {
      if (is_kw("class")) {
        classes.push_back(parse_class());
      } else if (is_kw("fun")) {
        functions.push_back(parse_fun(""));
      } else {
        file_.top_level.push_back(parse_stmt());
      }
    }
  }

 private:
  const Token& peek(std::size_t ahead = 0) const {
    return toks_[std::min(pos_ + ahead, toks_.size() - 1)];
  }
  const Token& next() { return toks_[std::min(pos_++, toks_.size() - 1)]; }
  bool is_kw(const char* kw) const {
    return peek().kind == Token::Kind::keyword && peek().text == kw;
  }
  bool is_punct(const char* p) const {
    return peek().kind == Token::Kind::punct && peek().text == p;
  }
  bool accept(const char* p) {
    if (!is_punct(p)) return false;
    ++pos_;
    return true;
  }

  [[noreturn]] void fail(const std::string& expected) const {
    const Token& t = peek();
    std::string found = t.kind == Token::Kind::end ? "end of file" : "'" + t.text + "'";
    throw MiniSyntaxError(file_.id + ":" + std::to_string(t.line) + ":" + std::to_string(t.col) +
                          ": expected " + expected + ", found " + found);
  }

  void expect(const char* p) {
    if (!accept(p)) fail(std::string("'") + p + "'");
  }
  void expect_kw(const char* kw) {
    if (!is_kw(kw)) fail(std::string("'") + kw + "'");
    ++pos_;
  }
  std::string ident() {
    if (peek().kind != Token::Kind::ident) fail("identifier");
    return next().text;
  }

  std::unique_ptr<ClassDecl> parse_class() {
    auto cls = std::make_unique<ClassDecl>();
    cls->line = peek().line;
    cls->file = file_.id;
    expect_kw("class");
    cls->name = ident();
    expect("{");
    while (!accept("}")) {
      if (is_kw("field")) {
        ++pos_;
        do {
          FieldDecl f;
          f.name = ident();
          if (accept(":")) {
            f.type_name = ident();
            if (accept("[")) {
              expect("]");
              f.type_name += "[]";
            }
          }
          cls->fields.push_back(std::move(f));
        } while (accept(","));
        expect(";");
      } else if (is_kw("fun")) {
        auto fn = parse_fun(cls->name);
        if (cls->methods.count(fn->name)) fail("distinct method name");
        cls->methods.emplace(fn->name, std::move(fn));
      } else {
        fail("'field', 'fun' or '}'");
      }
    }
    return cls;
  }

  std::unique_ptr<FunDecl> parse_fun(const std::string& owner) {
    auto fn = std::make_unique<FunDecl>();
    fn->line = peek().line;
    fn->file = file_.id;
    fn->owner = owner;
    expect_kw("fun");
    fn->name = ident();
    expect("(");
    if (!accept(")")) {
      do fn->params.push_back(ident());
      while (accept(","));
      expect(")");
    }
    fn->body = parse_block();
    fn->end_line = toks_[pos_ - 1].line;
    return fn;
  }

  std::vector<StmtPtr> parse_block() {
    expect("{");
    std::vector<StmtPtr> out;
    while (!accept("}")) {
      if (peek().kind == Token::Kind::end) fail("'}'");
      out.push_back(parse_stmt());
    }
    return out;
  }

  std::vector<StmtPtr> parse_body() {
    if (is_punct("{")) return parse_block();
    std::vector<StmtPtr> out;
    out.push_back(parse_stmt());
    return out;
  }

  StmtPtr make(Stmt::Kind kind, int line) {
    auto s = std::make_unique<Stmt>();
    s->kind = kind;
    s->line = line;
    s->file = file_.id;
    return s;
  }

  StmtPtr parse_stmt() {
    int line = peek().line;
    if (is_kw("if")) {
      ++pos_;
      auto s = make(Stmt::Kind::if_, line);
      expect("(");
      s->value = parse_expr();
      expect(")");
      s->body = parse_body();
      if (is_kw("else")) {
        ++pos_;
        s->has_else = true;
        s->else_body = parse_body();
      }
      return s;
    }
    if (is_kw("while")) {
      ++pos_;
      auto s = make(Stmt::Kind::while_, line);
      expect("(");
      s->value = parse_expr();
      expect(")");
      s->body = parse_body();
      return s;
    }
    if (is_kw("return")) {
      ++pos_;
      auto s = make(Stmt::Kind::ret, line);
      if (!is_punct(";")) s->value = parse_expr();
      expect(";");
      return s;
    }
    if (is_punct("{")) {
      auto s = make(Stmt::Kind::block, line);
      s->body = parse_block();
      return s;
    }
    ExprPtr e = parse_expr();
    if (accept("=")) {
      if (e->kind != Expr::Kind::var && e->kind != Expr::Kind::field && e->kind != Expr::Kind::index)
        throw MiniSyntaxError(file_.id + ":" + std::to_string(line) + ": invalid assignment target");
      auto s = make(Stmt::Kind::assign, line);
      s->target = std::move(e);
      s->value = parse_expr();
      expect(";");
      return s;
    }
    auto s = make(Stmt::Kind::expr, line);
    s->value = std::move(e);
    expect(";");
    return s;
  }

  ExprPtr node(Expr::Kind kind, int line) {
    auto e = std::make_unique<Expr>();
    e->kind = kind;
    e->line = line;
    return e;
  }

  ExprPtr binary(std::string op, ExprPtr l, ExprPtr r) {
    auto e = node(Expr::Kind::binary, l->line);
    e->text = std::move(op);
    e->lhs = std::move(l);
    e->rhs = std::move(r);
    return e;
  }

  ExprPtr parse_expr() { return parse_level(0); }

  ExprPtr parse_level(int level) {
    static const std::vector<std::vector<std::string>> ops = {
        {"||"}, {"&&"}, {"==", "!="}, {"<", "<=", ">", ">="}, {"+", "-"}, {"*", "/", "%"}};
    if (level == static_cast<int>(ops.size())) return parse_unary();
    ExprPtr left = parse_level(level + 1);
    for (;;) {
      bool matched = false;
      for (const auto& op : ops[level]) {
        if (is_punct(op.c_str())) {
          ++pos_;
          left = binary(op, std::move(left), parse_level(level + 1));
          matched = true;
          break;
        }
      }
      if (!matched) return left;
    }
  }

  ExprPtr parse_unary() {
    if (is_punct("!") || is_punct("-")) {
      auto e = node(Expr::Kind::unary, peek().line);
      e->text = next().text;
      e->lhs = parse_unary();
      return e;
    }
    return parse_postfix(parse_primary());
  }

  std::vector<ExprPtr> parse_args() {
    std::vector<ExprPtr> args;
    expect("(");
    if (!accept(")")) {
      do args.push_back(parse_expr());
      while (accept(","));
      expect(")");
    }
    return args;
  }

  ExprPtr parse_primary() {
    const Token& t = peek();
    int line = t.line;
    switch (t.kind) {
      case Token::Kind::integer: {
        auto e = node(Expr::Kind::int_lit, line);
        e->text = next().text;
        e->int_value = std::stoll(e->text);
        return e;
      }
      case Token::Kind::string: {
        auto e = node(Expr::Kind::str_lit, line);
        e->text = next().text;
        return e;
      }
      case Token::Kind::ident: {
        std::string name = next().text;
        if (is_punct("(")) {
          auto e = node(Expr::Kind::call, line);
          e->text = name;
          e->args = parse_args();
          return e;
        }
        auto e = node(Expr::Kind::var, line);
        e->text = name;
        return e;
      }
      case Token::Kind::keyword: {
        if (t.text == "true" || t.text == "false") {
          auto e = node(Expr::Kind::bool_lit, line);
          e->bool_value = next().text == "true";
          return e;
        }
        if (t.text == "null") {
          ++pos_;
          return node(Expr::Kind::null_lit, line);
        }
        if (t.text == "this") {
          ++pos_;
          return node(Expr::Kind::self, line);
        }
        if (t.text == "new") {
          ++pos_;
          auto e = node(Expr::Kind::new_obj, line);
          e->text = ident();
          e->args = parse_args();
          return e;
        }
        break;
      }
      case Token::Kind::punct:
        if (t.text == "(") {
          ++pos_;
          ExprPtr e = parse_expr();
          expect(")");
          return e;
        }
        break;
      case Token::Kind::end: break;
    }
    fail("expression");
  }

  ExprPtr parse_postfix(ExprPtr e) {
    for (;;) {
      int line = peek().line;
      if (accept(".")) {
        std::string name = ident();
        if (is_punct("(")) {
          auto m = node(Expr::Kind::method, line);
          m->text = name;
          m->lhs = std::move(e);
          m->args = parse_args();
          e = std::move(m);
        } else {
          auto f = node(Expr::Kind::field, line);
          f->text = name;
          f->lhs = std::move(e);
          e = std::move(f);
        }
      } else if (accept("[")) {
        auto ix = node(Expr::Kind::index, line);
        ix->lhs = std::move(e);
        ix->rhs = parse_expr();
        expect("]");
        e = std::move(ix);
      } else {
        return e;
      }
    }
  }

  SourceFile& file_;
  std::vector<Token> toks_;
  std::size_t pos_ = 0;
};

std::vector<std::string> split_lines(const std::string& text) {
  std::vector<std::string> lines;
  std::string cur;
  for (char c : text) {
    if (c == '\n') {
      if (!cur.empty() && cur.back() == '\r') cur.pop_back();
      lines.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  lines.push_back(cur);
  return lines;
}

}  // namespace

const std::string& SourceFile::line(int n) const {
  static const std::string empty;
  if (n < 1 || n > static_cast<int>(lines.size())) return empty;
  return lines[n - 1];
}

void parse_file(SourceFile& file, std::vector<std::unique_ptr<ClassDecl>>& classes,
                std::vector<std::unique_ptr<FunDecl>>& functions) {
  file.lines = split_lines(file.text);
  Parser(file, lex(file)).parse(classes, functions);
}

const SourceFile* Program::file(const std::string& id) const {
  for (const auto& f : files_)
    if (f->id == id) return f.get();
  return nullptr;
}

const ClassDecl* Program::find_class(const std::string& name) const {
  auto it = classes_.find(name);
  return it == classes_.end() ? nullptr : it->second.get();
}

const FunDecl* Program::find_function(const std::string& name) const {
  auto it = functions_.find(name);
  return it == functions_.end() ? nullptr : it->second.get();
}

const FunDecl* Program::function_at(const std::string& file, int line) const {
  for (const auto& [name, fn] : functions_)
    if (fn->file == file && fn->line == line) return fn.get();
  for (const auto& [name, cls] : classes_)
    for (const auto& [mname, fn] : cls->methods)
      if (fn->file == file && fn->line == line) return fn.get();
  return nullptr;
}

std::string Program::function_source(const FunDecl& fn) const {
  const SourceFile* f = file(fn.file);
  if (!f) return {};
  std::string out;
  for (int l = fn.line; l <= fn.end_line; ++l) {
    if (l > fn.line) out += '\n';
    out += f->line(l);
  }
  return out;
}

Program link_program(const std::map<std::string, std::string>& files, const std::string& entry,
                     bool with_stdlib) {
  Program prog;
  std::vector<std::unique_ptr<ClassDecl>> classes;
  std::vector<std::unique_ptr<FunDecl>> functions;
  auto add = [&](const std::string& id, const std::string& text) {
    auto f = std::make_unique<SourceFile>();
    f->id = id;
    f->text = text;
    parse_file(*f, classes, functions);
    prog.files_.push_back(std::move(f));
  };
  for (const auto& [id, text] : files) {
    if (is_stdlib_file(id)) throw MiniSyntaxError("file id '" + id + "' is reserved for the library");
    add(id, text);
  }
  if (with_stdlib)
    for (const auto& [id, text] : stdlib_files()) add(id, text);

  for (auto& c : classes) {
    if (prog.classes_.count(c->name)) throw MiniSyntaxError("duplicate class " + c->name);
    std::string name = c->name;
    prog.classes_.emplace(name, std::move(c));
  }
  for (auto& fn : functions) {
    if (prog.functions_.count(fn->name)) throw MiniSyntaxError("duplicate function " + fn->name);
    std::string name = fn->name;
    prog.functions_.emplace(name, std::move(fn));
  }

  const SourceFile* main_file = nullptr;
  for (const auto& f : prog.files_) {
    if (f->top_level.empty()) continue;
    if (is_stdlib_file(f->id)) throw MiniSyntaxError(f->id + ": library files cannot hold statements");
    if (main_file)
      throw MiniSyntaxError("top-level statements in both " + main_file->id + " and " + f->id);
    main_file = f.get();
  }
  if (const FunDecl* fn = prog.find_function(entry)) {
    if (entry == "main" && main_file)
      throw MiniSyntaxError("both fun main and top-level statements present");
    if (!fn->params.empty()) throw MiniSyntaxError("entry function must take no parameters");
    prog.entry_fn_ = fn;
  } else if (entry == "main" && main_file) {
    for (const auto& s : main_file->top_level) prog.entry_body_.push_back(s.get());
  } else {
    throw MiniSyntaxError("entry function '" + entry + "' not found");
  }
  return prog;
}

std::string expr_text(const Expr& e) {
  auto join_args = [](const std::vector<ExprPtr>& args) {
    std::string out;
    for (std::size_t i = 0; i < args.size(); ++i) {
      if (i) out += ", ";
      out += expr_text(*args[i]);
    }
    return out;
  };
  switch (e.kind) {
    case Expr::Kind::int_lit: return e.text;
    case Expr::Kind::str_lit: {
      std::string out = "\"";
      for (char c : e.text) {
        if (c == '"' || c == '\\') out += '\\';
        if (c == '\n') {
          out += "\\n";
          continue;
        }
        if (c == '\t') {
          out += "\\t";
          continue;
        }
        out += c;
      }
      return out + "\"";
    }
    case Expr::Kind::bool_lit: return e.bool_value ? "true" : "false";
    case Expr::Kind::null_lit: return "null";
    case Expr::Kind::var: return e.text;
    case Expr::Kind::self: return "this";
    case Expr::Kind::field: return expr_text(*e.lhs) + "." + e.text;
    case Expr::Kind::index: return expr_text(*e.lhs) + "[" + expr_text(*e.rhs) + "]";
    case Expr::Kind::call: return e.text + "(" + join_args(e.args) + ")";
    case Expr::Kind::method: return expr_text(*e.lhs) + "." + e.text + "(" + join_args(e.args) + ")";
    case Expr::Kind::new_obj: return "new " + e.text + "(" + join_args(e.args) + ")";
    case Expr::Kind::unary: return e.text + expr_text(*e.lhs);
    case Expr::Kind::binary: return expr_text(*e.lhs) + " " + e.text + " " + expr_text(*e.rhs);
  }
  return {};
}

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  std::size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace recov::mini
