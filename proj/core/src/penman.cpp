#include "groundcheck/penman.hpp"

#include <algorithm>
#include <cctype>
#include <set>
#include <sstream>

namespace groundcheck::penman {

namespace {

bool is_token_char(char c) {
  return !std::isspace(static_cast<unsigned char>(c)) && c != '(' && c != ')' &&
         c != '/' && c != '"' && c != '~';
}

// Conventional AMR variable shape: one lowercase letter, optional digits
// (b, w, g2, s12). Used only to flag unbound bare tokens as dangling
// references instead of silently treating them as constants.
bool looks_like_variable(std::string_view token) {
  if (token.empty()) return false;
  if (!(token[0] >= 'a' && token[0] <= 'z')) return false;
  for (std::size_t i = 1; i < token.size(); ++i) {
    if (!(token[i] >= '0' && token[i] <= '9')) return false;
  }
  return true;
}

struct PendingAtom {
  std::size_t edge_index;
  std::string token;
  std::vector<int> alignments;
  std::size_t offset;
};

class Parser {
 public:
  Parser(std::string_view text, std::string sentence_text,
         const std::map<std::string, std::vector<int>>* sidecar)
      : text_(text), sidecar_(sidecar) {
    graph_.sentence_text = std::move(sentence_text);
  }

  AmrSentenceGraph run() {
    skip_ws();
    if (eof() || peek() != '(') fail("expected '('");
    graph_.root = parse_node();
    skip_ws();
    if (!eof()) fail("trailing input after graph");
    resolve_atoms();
    apply_sidecar();
    return std::move(graph_);
  }

 private:
  bool eof() const { return pos_ >= text_.size(); }
  char peek() const { return text_[pos_]; }

  [[noreturn]] void fail(const std::string& message) const {
    throw ParseError(message, pos_);
  }

  void skip_ws() {
    while (!eof() && std::isspace(static_cast<unsigned char>(peek()))) ++pos_;
  }

  void expect(char c, const char* what) {
    if (eof() || peek() != c) fail(std::string("expected ") + what);
    ++pos_;
  }

  std::string read_token(const char* what) {
    const std::size_t start = pos_;
    while (!eof() && is_token_char(peek())) ++pos_;
    if (pos_ == start) fail(std::string("expected ") + what);
    return std::string(text_.substr(start, pos_ - start));
  }

  // `~e.1,2` or `~1,2` after a concept, literal, or quoted string.
  std::vector<int> read_alignment_suffix() {
    std::vector<int> indices;
    if (eof() || peek() != '~') return indices;
    ++pos_;
    if (!eof() && (peek() == 'e' || peek() == 'E')) {
      ++pos_;
      expect('.', "'.' in alignment marker");
    }
    for (;;) {
      const std::size_t start = pos_;
      while (!eof() && std::isdigit(static_cast<unsigned char>(peek()))) ++pos_;
      if (pos_ == start) fail("expected token index in alignment marker");
      indices.push_back(std::stoi(std::string(text_.substr(start, pos_ - start))));
      if (eof() || peek() != ',') break;
      ++pos_;
    }
    return indices;
  }

  std::string parse_quoted() {
    expect('"', "'\"'");
    std::string value;
    while (!eof() && peek() != '"') {
      char c = peek();
      if (c == '\\' && pos_ + 1 < text_.size()) {
        ++pos_;
        c = peek();
      }
      value.push_back(c);
      ++pos_;
    }
    if (eof()) fail("unterminated string literal");
    ++pos_;  // closing quote
    return value;
  }

  // Returns the variable name of the parsed node.
  std::string parse_node() {
    expect('(', "'('");
    skip_ws();
    const std::size_t var_offset = pos_;
    const std::string var = read_token("variable name");
    if (bound_.count(var)) {
      throw ParseError("duplicate binding of variable '" + var + "'", var_offset);
    }
    skip_ws();
    expect('/', "'/' after variable");
    skip_ws();
    const std::string concept_label = read_token("concept label");
    auto concept_alignment = read_alignment_suffix();

    bound_.insert(var);
    graph_.variables.emplace_back(var, concept_label);
    if (!concept_alignment.empty()) {
      auto& dest = graph_.token_alignments[var];
      dest.insert(dest.end(), concept_alignment.begin(), concept_alignment.end());
    }

    skip_ws();
    while (!eof() && peek() == ':') {
      parse_relation(var);
      skip_ws();
    }
    if (eof()) fail("unbalanced parenthesis: expected ')'");
    expect(')', "')'");
    return var;
  }

  void parse_relation(const std::string& source) {
    const std::string role = read_token("role label");
    skip_ws();
    if (eof()) fail("expected relation target");
    if (peek() == '(') {
      const std::string child = parse_node();
      graph_.edges.push_back({source, role, VarRef{child}});
    } else if (peek() == '"') {
      AttributeLiteral lit;
      lit.text = parse_quoted();
      lit.quoted = true;
      lit.token_alignments = read_alignment_suffix();
      graph_.edges.push_back({source, role, std::move(lit)});
    } else if (peek() == ')') {
      fail("expected relation target");
    } else {
      const std::size_t offset = pos_;
      const std::string token = read_token("relation target");
      auto alignment = read_alignment_suffix();
      // Variable reference or constant? Decided once all bindings are known.
      graph_.edges.push_back({source, role, AttributeLiteral{token, false, {}}});
      pending_.push_back({graph_.edges.size() - 1, token, std::move(alignment), offset});
    }
  }

  void resolve_atoms() {
    for (auto& atom : pending_) {
      Edge& edge = graph_.edges[atom.edge_index];
      if (bound_.count(atom.token)) {
        edge.target = VarRef{atom.token};
        if (!atom.alignments.empty()) {
          auto& dest = graph_.token_alignments[atom.token];
          dest.insert(dest.end(), atom.alignments.begin(), atom.alignments.end());
        }
      } else if (looks_like_variable(atom.token)) {
        throw ParseError("dangling variable reference '" + atom.token + "'",
                         atom.offset);
      } else {
        std::get<AttributeLiteral>(edge.target).token_alignments =
            std::move(atom.alignments);
      }
    }
  }

  void apply_sidecar() {
    if (!sidecar_) return;
    for (const auto& [var, indices] : *sidecar_) {
      if (!bound_.count(var)) {
        throw ParseError("sidecar alignment references unknown variable '" + var + "'",
                         text_.size());
      }
      graph_.token_alignments[var] = indices;  // sidecar wins over inline markup
    }
  }

  std::string_view text_;
  const std::map<std::string, std::vector<int>>* sidecar_;
  std::size_t pos_ = 0;
  AmrSentenceGraph graph_;
  std::set<std::string> bound_;
  std::vector<PendingAtom> pending_;
};

bool needs_quotes(const std::string& text) {
  if (text.empty()) return true;
  return std::any_of(text.begin(), text.end(), [](char c) {
    return std::isspace(static_cast<unsigned char>(c)) || c == '(' || c == ')' ||
           c == '/' || c == '"' || c == '~' || c == ':';
  });
}

class Serializer {
 public:
  explicit Serializer(const AmrSentenceGraph& g) : graph_(g) {
    for (std::size_t i = 0; i < g.edges.size(); ++i) {
      by_source_[g.edges[i].source].push_back(i);
    }
  }

  std::string run() {
    emit_node(graph_.root);
    return std::move(out_);
  }

 private:
  void emit_node(const std::string& var) {
    expanded_.insert(var);
    out_ += '(';
    out_ += var;
    out_ += " / ";
    out_ += graph_.concept_of(var);
    auto it = by_source_.find(var);
    if (it != by_source_.end()) {
      for (const std::size_t edge_index : it->second) {
        const Edge& edge = graph_.edges[edge_index];
        out_ += ' ';
        out_ += edge.role;
        out_ += ' ';
        emit_target(edge.target);
      }
    }
    out_ += ')';
  }

  void emit_target(const EdgeTarget& target) {
    if (const auto* ref = std::get_if<VarRef>(&target)) {
      if (expanded_.count(ref->name)) {
        out_ += ref->name;
      } else {
        emit_node(ref->name);
      }
      return;
    }
    const auto& lit = std::get<AttributeLiteral>(target);
    if (lit.quoted || needs_quotes(lit.text)) {
      out_ += '"';
      for (const char c : lit.text) {
        if (c == '"' || c == '\\') out_ += '\\';
        out_ += c;
      }
      out_ += '"';
    } else {
      out_ += lit.text;
    }
  }

  const AmrSentenceGraph& graph_;
  std::map<std::string, std::vector<std::size_t>> by_source_;
  std::set<std::string> expanded_;
  std::string out_;
};

}  // namespace

bool AmrSentenceGraph::has_variable(std::string_view name) const {
  return std::any_of(variables.begin(), variables.end(),
                     [&](const auto& v) { return v.first == name; });
}

const std::string& AmrSentenceGraph::concept_of(std::string_view name) const {
  for (const auto& [var, concept_label] : variables) {
    if (var == name) return concept_label;
  }
  throw std::invalid_argument("unknown variable '" + std::string(name) + "'");
}

void AmrSentenceGraph::validate() const {
  if (variables.empty()) throw std::invalid_argument("graph has no variables");
  std::set<std::string> seen;
  for (const auto& [var, concept_label] : variables) {
    if (!seen.insert(var).second) {
      throw std::invalid_argument("duplicate variable binding '" + var + "'");
    }
    if (concept_label.empty()) {
      throw std::invalid_argument("empty concept for variable '" + var + "'");
    }
  }
  if (!seen.count(root)) throw std::invalid_argument("root '" + root + "' is not bound");
  for (const auto& edge : edges) {
    if (edge.role.empty() || edge.role[0] != ':') {
      throw std::invalid_argument("role '" + edge.role + "' must begin with ':'");
    }
    if (!seen.count(edge.source)) {
      throw std::invalid_argument("edge source '" + edge.source + "' is not bound");
    }
    if (const auto* ref = std::get_if<VarRef>(&edge.target)) {
      if (!seen.count(ref->name)) {
        throw std::invalid_argument("dangling variable reference '" + ref->name + "'");
      }
    }
  }
  for (const auto& [var, indices] : token_alignments) {
    (void)indices;
    if (!seen.count(var)) {
      throw std::invalid_argument("token alignment for unknown variable '" + var + "'");
    }
  }
  // Reachability from root; required for serialization to be total.
  std::map<std::string, std::vector<const Edge*>> by_source;
  for (const auto& edge : edges) by_source[edge.source].push_back(&edge);
  std::set<std::string> reached{root};
  std::vector<std::string> stack{root};
  while (!stack.empty()) {
    const std::string var = std::move(stack.back());
    stack.pop_back();
    auto it = by_source.find(var);
    if (it == by_source.end()) continue;
    for (const Edge* edge : it->second) {
      if (const auto* ref = std::get_if<VarRef>(&edge->target)) {
        if (reached.insert(ref->name).second) stack.push_back(ref->name);
      }
    }
  }
  for (const auto& [var, concept_label] : variables) {
    (void)concept_label;
    if (!reached.count(var)) {
      throw std::invalid_argument("variable '" + var + "' is unreachable from the root");
    }
  }
}

AmrSentenceGraph parse(std::string_view text, std::string sentence_text,
                       const std::map<std::string, std::vector<int>>* sidecar_alignments) {
  Parser parser(text, std::move(sentence_text), sidecar_alignments);
  AmrSentenceGraph g = parser.run();
  g.validate();
  return g;
}

std::string serialize(const AmrSentenceGraph& g) {
  g.validate();
  return Serializer(g).run();
}

}  // namespace groundcheck::penman
