#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace dres {

enum class NodeClass { Fluent, Edited, Intj, Prn };

struct Token {
  std::string surface;
  std::size_t index = 0;
  bool is_punct = false;

  bool operator==(const Token&) const = default;
};

// Rooted constituency tree node. A node carries a terminal token XOR
// a non-empty child list. Spans are half-open terminal index ranges.
struct ParseTree {
  std::string label;
  std::vector<ParseTree> children;
  std::optional<std::string> token;
  std::size_t span_begin = 0;
  std::size_t span_end = 0;

  bool is_terminal() const { return token.has_value(); }
  std::size_t span_width() const { return span_end - span_begin; }

  bool operator==(const ParseTree&) const = default;
};

struct ParseError : std::runtime_error {
  std::size_t line;
  std::size_t column;
  ParseError(const std::string& what, std::size_t line_, std::size_t column_)
      : std::runtime_error(what + " at " + std::to_string(line_) + ":" +
                           std::to_string(column_)),
        line(line_),
        column(column_) {}
};

// Base label = text before the first `-` or `=` function-tag suffix.
// Labels that themselves start with `-` (PTB escapes like -NONE-, -LRB-)
// are returned unchanged.
std::string_view base_label(std::string_view label);

NodeClass classify_node(std::string_view label);

bool is_punct_label(std::string_view preterminal_label);

// Parses one or more Penn-Treebank-style S-expressions. An extra outer
// `( ... )` wrapper per tree (the .mrg file convention) is unwrapped.
// Blank lines and `#`/`*x*` comment lines between trees are skipped.
std::vector<ParseTree> parse_trees(std::string_view source);

std::vector<Token> yield_tokens(const ParseTree& tree);

// Canonical single-line S-expression; parse_trees(render(t)) == {t}.
std::string render(const ParseTree& tree);

}  // namespace dres
