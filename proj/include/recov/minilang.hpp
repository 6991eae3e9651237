#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "recov/error.hpp"

namespace recov::mini {

RECOV_DEFINE_ERROR(MiniSyntaxError);

struct Expr;
using ExprPtr = std::unique_ptr<Expr>;

struct Expr {
  enum class Kind { int_lit, str_lit, bool_lit, null_lit, var, self, field, index, call, method, new_obj, unary, binary };

  Kind kind;
  int line = 0;
  long long int_value = 0;
  bool bool_value = false;
  std::string text;  // literal text, identifier, field/method/function/type name, or operator
  ExprPtr lhs;       // object / operand / left side / index base
  ExprPtr rhs;       // index expression / right side
  std::vector<ExprPtr> args;
};

struct Stmt;
using StmtPtr = std::unique_ptr<Stmt>;

struct Stmt {
  enum class Kind { assign, expr, if_, while_, ret, block };

  Kind kind;
  std::string file;
  int line = 0;
  ExprPtr target;  // assign
  ExprPtr value;   // assign rhs, expression, condition, return value
  std::vector<StmtPtr> body;       // block, then-branch, loop body
  std::vector<StmtPtr> else_body;  // if
  bool has_else = false;
};

struct FieldDecl {
  std::string name;
  std::string type_name;  // optional annotation; empty if absent
};

struct FunDecl {
  std::string name;
  std::string owner;  // class name for methods
  std::vector<std::string> params;
  std::vector<StmtPtr> body;
  std::string file;
  int line = 0;      // header line
  int end_line = 0;  // closing brace line

  std::string qualified_name() const { return owner.empty() ? name : owner + "." + name; }
};

struct ClassDecl {
  std::string name;
  std::string file;
  int line = 0;
  std::vector<FieldDecl> fields;
  std::map<std::string, std::unique_ptr<FunDecl>> methods;
};

struct SourceFile {
  std::string id;
  std::string text;
  std::vector<std::string> lines;  // 1-based access through line()
  std::vector<StmtPtr> top_level;

  const std::string& line(int n) const;
};

// Parsed, linked program: every file of the MiniProgram plus the library files.
class Program {
 public:
  const SourceFile* file(const std::string& id) const;
  const ClassDecl* find_class(const std::string& name) const;
  const FunDecl* find_function(const std::string& name) const;
  const FunDecl* function_at(const std::string& file, int line) const;
  // Source text of a function declaration, header through closing brace.
  std::string function_source(const FunDecl& fn) const;

  const std::vector<const Stmt*>& entry_body() const { return entry_body_; }
  const FunDecl* entry_function() const { return entry_fn_; }
  const std::vector<std::unique_ptr<SourceFile>>& files() const { return files_; }
  const std::map<std::string, std::unique_ptr<ClassDecl>>& classes() const { return classes_; }
  const std::map<std::string, std::unique_ptr<FunDecl>>& functions() const { return functions_; }

 private:
  friend Program link_program(const std::map<std::string, std::string>&, const std::string&, bool);

  std::vector<std::unique_ptr<SourceFile>> files_;
  std::map<std::string, std::unique_ptr<ClassDecl>> classes_;
  std::map<std::string, std::unique_ptr<FunDecl>> functions_;
  std::vector<const Stmt*> entry_body_;
  const FunDecl* entry_fn_ = nullptr;
};

// Parses one file. Declarations and top-level statements are appended to the
// output vectors.
void parse_file(SourceFile& file, std::vector<std::unique_ptr<ClassDecl>>& classes,
                std::vector<std::unique_ptr<FunDecl>>& functions);

// Library files are added unless `with_stdlib` is false. `entry` names a
// function, or "main" for the top-level statements of the program files.
Program link_program(const std::map<std::string, std::string>& files, const std::string& entry,
                     bool with_stdlib = true);

// Library sources keyed by file id ("std/list.mini", ...).
const std::map<std::string, std::string>& stdlib_files();
bool is_stdlib_file(const std::string& file_id);

std::string expr_text(const Expr& e);
std::string trim(const std::string& s);

}  // namespace recov::mini
