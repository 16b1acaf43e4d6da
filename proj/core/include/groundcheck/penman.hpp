#pragma once

#include <cstddef>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace groundcheck::penman {

/// Parse failure with the byte offset of the offending character.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& message, std::size_t offset)
      : std::runtime_error(message + " at offset " + std::to_string(offset)),
        offset_(offset) {}

  std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_;
};

/// Reference to a variable bound elsewhere in the same sentence graph.
struct VarRef {
  std::string name;
  bool operator==(const VarRef&) const = default;
};

/// Constant edge target: quoted string, number, '-', or bare symbol.
/// `quoted` records whether the surface form carried quotes so that
/// serialization can reproduce it. Inline `~` token alignments attach here
/// because literals have no variable to key a sidecar map by.
struct AttributeLiteral {
  std::string text;
  bool quoted = false;
  std::vector<int> token_alignments;
  bool operator==(const AttributeLiteral&) const = default;
};

using EdgeTarget = std::variant<VarRef, AttributeLiteral>;

struct Edge {
  std::string source;
  std::string role;  // includes the leading ':'
  EdgeTarget target;
  bool operator==(const Edge&) const = default;
};

/// One sentence's AMR graph: variable bindings, role edges, a root, and
/// optional token alignments (variable name -> token indices into the
/// sentence text).
struct AmrSentenceGraph {
  std::vector<std::pair<std::string, std::string>> variables;  // (name, concept)
  std::vector<Edge> edges;
  std::string root;
  std::map<std::string, std::vector<int>> token_alignments;
  std::string sentence_text;

  bool has_variable(std::string_view name) const;
  const std::string& concept_of(std::string_view name) const;

  /// Throws std::invalid_argument when an invariant is broken: root not
  /// bound, duplicate binding, edge source/target unbound, a role without
  /// the leading ':', or a variable unreachable from the root.
  void validate() const;
};

/// Parses a single well-formed Penman s-expression.
///
/// Bare alphanumeric targets are resolved against the variables bound in the
/// expression; unbound ones that look like AMR variables (a single lowercase
/// letter plus optional digits) are rejected as dangling references, anything
/// else becomes an attribute literal. Inline `~e.N` / `~N,M` alignment markup
/// is accepted and folded into token_alignments (for variables) or the
/// literal (for constants); a sidecar alignment map takes precedence per
/// variable.
AmrSentenceGraph parse(
    std::string_view text, std::string sentence_text = "",
    const std::map<std::string, std::vector<int>>* sidecar_alignments = nullptr);

/// Canonical serialization: each variable is expanded at its first visit in
/// a depth-first walk from the root (edge order preserved), later mentions
/// are bare references. Emits no `~` markup; alignments live in the graph.
/// parse(serialize(g)) is graph-isomorphic to g.
std::string serialize(const AmrSentenceGraph& g);

}  // namespace groundcheck::penman
