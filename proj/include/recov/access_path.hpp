#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "recov/error.hpp"
#include "recov/object_graph.hpp"

namespace recov {

class PathSyntaxError : public Error {
 public:
  PathSyntaxError(std::size_t offset, std::vector<std::string> expected, const std::string& found);

  std::size_t offset() const noexcept { return offset_; }
  const std::vector<std::string>& expected() const noexcept { return expected_; }

 private:
  std::size_t offset_;
  std::vector<std::string> expected_;
};

RECOV_DEFINE_ERROR(RootMismatch);

struct PathSegment {
  enum class Kind { root, field, index };

  Kind kind = Kind::root;
  std::string name;        // root or field name; empty for index
  std::string index_expr;  // canonical literal: 12 or "key"; empty unless index

  bool is_index() const { return kind == Kind::index; }
  bool is_string_key() const { return is_index() && !index_expr.empty() && index_expr[0] == '"'; }
  std::optional<long long> int_index() const;
  std::string string_key() const;  // unescaped string key
  // Label of the child edge this segment follows: field name or "[i]".
  std::string edge_label() const;

  bool operator==(const PathSegment&) const = default;
};

class ReferencePath {
 public:
  ReferencePath() = default;
  explicit ReferencePath(std::vector<PathSegment> segments);

  static ReferencePath root(std::string name);
  ReferencePath field(std::string name) const;
  ReferencePath index(long long i) const;
  ReferencePath key(const std::string& k) const;

  const std::vector<PathSegment>& segments() const { return segments_; }
  std::size_t size() const { return segments_.size(); }
  const std::string& root_name() const { return segments_.front().name; }
  const PathSegment& leaf() const { return segments_.back(); }
  ReferencePath prefix(std::size_t length) const;

  bool operator==(const ReferencePath&) const = default;
  bool operator<(const ReferencePath& other) const;

 private:
  std::vector<PathSegment> segments_;
};

ReferencePath parse_path(const std::string& text);
std::string render_path(const ReferencePath& path);
std::string quote_key(const std::string& key);

// Proper prefixes, root first: "a.b[0].c" -> a, a.b, a.b[0].
std::vector<ReferencePath> prefixes(const ReferencePath& path);

const GraphNode* resolve_in_graph(const ReferencePath& path, const ObjectGraph& graph);

bool is_identifier(const std::string& text);

}  // namespace recov
