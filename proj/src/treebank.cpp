#include "dres/treebank.hpp"

#include <array>
#include <cctype>

namespace dres {

namespace {

const std::array<std::string_view, 7> kPunctLabels = {
    ".", ",", ":", "''", "``", "-LRB-", "-RRB-"};

struct Cursor {
  std::string_view src;
  std::size_t pos = 0;
  std::size_t line = 1;
  std::size_t col = 1;

  bool eof() const { return pos >= src.size(); }
  char peek() const { return src[pos]; }

  void advance() {
    if (src[pos] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
    ++pos;
  }

  void skip_ws() {
    while (!eof() && std::isspace(static_cast<unsigned char>(peek()))) {
      advance();
    }
  }

  // Comment lines start with `#` or `;` outside any expression.
  void skip_blank_and_comments() {
    skip_ws();
    while (!eof() && (peek() == '#' || peek() == ';')) {
      while (!eof() && peek() != '\n') advance();
      skip_ws();
    }
  }

  std::string read_atom() {
    std::string out;
    while (!eof() && peek() != '(' && peek() != ')' &&
           !std::isspace(static_cast<unsigned char>(peek()))) {
      out.push_back(peek());
      advance();
    }
    return out;
  }
};

void assign_spans(ParseTree& node, std::size_t& next) {
  if (node.is_terminal()) {
    node.span_begin = next;
    node.span_end = ++next;
    return;
  }
  node.span_begin = next;
  for (auto& child : node.children) assign_spans(child, next);
  node.span_end = next;
}

ParseTree parse_node(Cursor& cur) {
  const std::size_t open_line = cur.line;
  const std::size_t open_col = cur.col;
  cur.advance();  // consume '('
  cur.skip_ws();

  ParseTree node;
  if (!cur.eof() && cur.peek() != '(' && cur.peek() != ')') {
    node.label = cur.read_atom();
  }

  std::vector<std::string> atoms;
  while (true) {
    cur.skip_ws();
    if (cur.eof()) {
      throw ParseError("UnbalancedParens: missing ')'", open_line, open_col);
    }
    if (cur.peek() == ')') {
      cur.advance();
      break;
    }
    if (cur.peek() == '(') {
      node.children.push_back(parse_node(cur));
    } else {
      atoms.push_back(cur.read_atom());
    }
  }

  if (!atoms.empty() && !node.children.empty()) {
    throw ParseError("TerminalWithChildren: node mixes terminal tokens and subtrees",
                     open_line, open_col);
  }
  if (atoms.size() > 1) {
    throw ParseError("TerminalWithChildren: multiple terminals under one preterminal",
                     open_line, open_col);
  }
  if (atoms.size() == 1) {
    node.token = std::move(atoms.front());
  } else if (node.children.empty() && node.label.empty()) {
    throw ParseError("EmptyTree: '()' has no label, token, or children",
                     open_line, open_col);
  } else if (node.children.empty()) {
    throw ParseError("EmptyTree: node '" + node.label + "' has no yield",
                     open_line, open_col);
  }
  return node;
}

void yield_rec(const ParseTree& node, std::string_view preterminal,
               std::vector<Token>& out) {
  if (node.is_terminal()) {
    // The preterminal label is the node's own label when present,
    // otherwise the nearest labeled ancestor's.
    std::string_view pt = node.label.empty() ? preterminal : node.label;
    out.push_back(Token{*node.token, out.size(), is_punct_label(pt)});
    return;
  }
  for (const auto& child : node.children) yield_rec(child, node.label, out);
}

void render_rec(const ParseTree& node, std::string& out) {
  out.push_back('(');
  out += node.label;
  if (node.is_terminal()) {
    out.push_back(' ');
    out += *node.token;
  } else {
    for (const auto& child : node.children) {
      out.push_back(' ');
      render_rec(child, out);
    }
  }
  out.push_back(')');
}

}  // namespace

std::string_view base_label(std::string_view label) {
  if (label.empty() || label.front() == '-') return label;
  const auto cut = label.find_first_of("-=");
  return label.substr(0, cut);
}

NodeClass classify_node(std::string_view label) {
  const auto base = base_label(label);
  if (base == "EDITED") return NodeClass::Edited;
  if (base == "INTJ") return NodeClass::Intj;
  if (base == "PRN") return NodeClass::Prn;
  return NodeClass::Fluent;
}

bool is_punct_label(std::string_view preterminal_label) {
  for (auto p : kPunctLabels) {
    if (preterminal_label == p) return true;
  }
  return false;
}

std::vector<ParseTree> parse_trees(std::string_view source) {
  Cursor cur{source};
  std::vector<ParseTree> trees;
  while (true) {
    cur.skip_blank_and_comments();
    if (cur.eof()) break;
    if (cur.peek() != '(') {
      throw ParseError("UnbalancedParens: expected '('", cur.line, cur.col);
    }
    ParseTree node = parse_node(cur);
    if (node.label.empty() && !node.children.empty()) {
      // .mrg outer wrapper: splice its children out as top-level trees.
      for (auto& child : node.children) trees.push_back(std::move(child));
    } else {
      trees.push_back(std::move(node));
    }
  }
  for (auto& tree : trees) {
    std::size_t next = 0;
    assign_spans(tree, next);
  }
  return trees;
}

std::vector<Token> yield_tokens(const ParseTree& tree) {
  std::vector<Token> out;
  yield_rec(tree, tree.label, out);
  return out;
}

std::string render(const ParseTree& tree) {
  std::string out;
  render_rec(tree, out);
  return out;
}

}  // namespace dres
