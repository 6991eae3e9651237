#include "recov/access_path.hpp"

#include <cctype>

namespace recov {

namespace {

std::string describe_expected(const std::vector<std::string>& expected) {
  std::string out;
  for (std::size_t i = 0; i < expected.size(); ++i) {
    if (i) out += ", ";
    out += expected[i];
  }
  return out;
}

bool ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool ident_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '$';
}

class PathParser {
 public:
  explicit PathParser(const std::string& text) : text_(text) {}

  ReferencePath parse() {
    if (text_.empty()) fail({"identifier"});
    std::vector<PathSegment> segs;
    skip_space();
    segs.push_back({PathSegment::Kind::root, identifier(), {}});
    for (;;) {
      skip_space();
      if (pos_ == text_.size()) break;
      char c = text_[pos_];
      if (c == '.') {
        ++pos_;
        skip_space();
        segs.push_back({PathSegment::Kind::field, identifier(), {}});
      } else if (c == '[') {
        ++pos_;
        skip_space();
        std::string expr = index_literal();
        skip_space();
        if (pos_ >= text_.size() || text_[pos_] != ']') fail({"']'"});
        ++pos_;
        segs.push_back({PathSegment::Kind::index, {}, std::move(expr)});
      } else {
        fail({"'.'", "'['", "end of input"});
      }
    }
    return ReferencePath(std::move(segs));
  }

 private:
  [[noreturn]] void fail(std::vector<std::string> expected) const {
    std::string found = pos_ < text_.size() ? std::string("'") + text_[pos_] + "'" : "end of input";
    throw PathSyntaxError(pos_, std::move(expected), found);
  }

  void skip_space() {
    while (pos_ < text_.size() && (text_[pos_] == ' ' || text_[pos_] == '\t')) ++pos_;
  }

  std::string identifier() {
    if (pos_ >= text_.size() || !ident_start(text_[pos_])) fail({"identifier"});
    std::size_t start = pos_;
    while (pos_ < text_.size() && ident_char(text_[pos_])) ++pos_;
    return text_.substr(start, pos_ - start);
  }

  std::string index_literal() {
    if (pos_ >= text_.size()) fail({"integer", "string"});
    char c = text_[pos_];
    if (c == '"') return string_literal();
    bool negative = false;
    if (c == '-') {
      negative = true;
      ++pos_;
    }
    if (pos_ >= text_.size() || !std::isdigit(static_cast<unsigned char>(text_[pos_])))
      fail(negative ? std::vector<std::string>{"digit"} : std::vector<std::string>{"integer", "string"});
    std::size_t start = pos_;
    while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    std::string digits = text_.substr(start, pos_ - start);
    if (digits.size() > 18) {
      pos_ = start;
      fail({"integer of at most 18 digits"});
    }
    std::size_t nz = digits.find_first_not_of('0');
    digits = nz == std::string::npos ? "0" : digits.substr(nz);
    if (negative && digits != "0") digits = "-" + digits;
    return digits;
  }

  std::string string_literal() {
    ++pos_;  // opening quote
    std::string value;
    for (;;) {
      if (pos_ >= text_.size()) fail({"'\"'"});
      char c = text_[pos_++];
      if (c == '"') break;
      if (c == '\\') {
        if (pos_ >= text_.size()) fail({"escape character"});
        char e = text_[pos_];
        if (e != '"' && e != '\\') fail({"'\\\"'", "'\\\\'"});
        ++pos_;
        value += e;
      } else {
        value += c;
      }
    }
    return quote_key(value);
  }

  const std::string& text_;
  std::size_t pos_ = 0;
};

}  // namespace

PathSyntaxError::PathSyntaxError(std::size_t offset, std::vector<std::string> expected,
                                 const std::string& found)
    : Error("PathSyntaxError", "offset " + std::to_string(offset) + ": expected " +
                                   describe_expected(expected) + ", found " + found),
      offset_(offset),
      expected_(std::move(expected)) {}

std::optional<long long> PathSegment::int_index() const {
  if (!is_index() || is_string_key()) return std::nullopt;
  return std::stoll(index_expr);
}

std::string PathSegment::string_key() const {
  if (!is_string_key()) return {};
  std::string out;
  for (std::size_t i = 1; i + 1 < index_expr.size(); ++i) {
    if (index_expr[i] == '\\') ++i;
    out += index_expr[i];
  }
  return out;
}

std::string PathSegment::edge_label() const {
  return is_index() ? "[" + index_expr + "]" : name;
}

ReferencePath::ReferencePath(std::vector<PathSegment> segments) : segments_(std::move(segments)) {}

ReferencePath ReferencePath::root(std::string name) {
  return ReferencePath({PathSegment{PathSegment::Kind::root, std::move(name), {}}});
}

ReferencePath ReferencePath::field(std::string name) const {
  auto segs = segments_;
  segs.push_back({PathSegment::Kind::field, std::move(name), {}});
  return ReferencePath(std::move(segs));
}

ReferencePath ReferencePath::index(long long i) const {
  auto segs = segments_;
  segs.push_back({PathSegment::Kind::index, {}, std::to_string(i)});
  return ReferencePath(std::move(segs));
}

ReferencePath ReferencePath::key(const std::string& k) const {
  auto segs = segments_;
  segs.push_back({PathSegment::Kind::index, {}, quote_key(k)});
  return ReferencePath(std::move(segs));
}

ReferencePath ReferencePath::prefix(std::size_t length) const {
  return ReferencePath(std::vector<PathSegment>(segments_.begin(), segments_.begin() + length));
}

bool ReferencePath::operator<(const ReferencePath& other) const {
  return render_path(*this) < render_path(other);
}

std::string quote_key(const std::string& key) {
  std::string out = "\"";
  for (char c : key) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out + "\"";
}

ReferencePath parse_path(const std::string& text) { return PathParser(text).parse(); }

std::string render_path(const ReferencePath& path) {
  std::string out;
  for (const auto& seg : path.segments()) {
    switch (seg.kind) {
      case PathSegment::Kind::root: out += seg.name; break;
      case PathSegment::Kind::field: out += "." + seg.name; break;
      case PathSegment::Kind::index: out += "[" + seg.index_expr + "]"; break;
    }
  }
  return out;
}

std::vector<ReferencePath> prefixes(const ReferencePath& path) {
  std::vector<ReferencePath> out;
  for (std::size_t len = 1; len < path.size(); ++len) out.push_back(path.prefix(len));
  return out;
}

const GraphNode* resolve_in_graph(const ReferencePath& path, const ObjectGraph& graph) {
  if (graph.root_name != path.root_name())
    throw RootMismatch("path root '" + path.root_name() + "' does not match graph root '" +
                       graph.root_name + "'");
  const GraphNode* node = &graph.root;
  for (std::size_t i = 1; i < path.size() && node; ++i) {
    const auto& seg = path.segments()[i];
    if (!seg.is_index()) {
      node = node->child(seg.name);
      continue;
    }
    const GraphNode* next = node->child(seg.edge_label());
    if (!next) next = node->child(seg.index_expr);
    if (!next && seg.is_string_key()) next = node->child(seg.string_key());
    node = next;
  }
  return node;
}

bool is_identifier(const std::string& text) {
  if (text.empty() || !ident_start(text[0])) return false;
  for (char c : text)
    if (!ident_char(c)) return false;
  return true;
}

}  // namespace recov
