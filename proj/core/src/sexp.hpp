#pragma once

// Internal s-expression reader shared by the .eqc and .cat parsers.

#include <cctype>
#include <string>
#include <string_view>
#include <vector>

#include "eq/lang.hpp"

namespace eq::sexp {

struct Sexp {
  bool is_atom = false;
  std::string atom;
  std::vector<Sexp> items;
  int line = 0, col = 0;
};

struct Lexer {
  std::string_view text;
  std::size_t pos = 0;
  int line = 1, col = 1;

  void advance() {
    if (pos < text.size() && text[pos] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
    ++pos;
  }

  bool at_bool_literal() const {
    if (pos + 1 >= text.size() || (text[pos + 1] != 't' && text[pos + 1] != 'f')) return false;
    if (pos + 2 >= text.size()) return true;
    char after = text[pos + 2];
    return std::isspace(static_cast<unsigned char>(after)) || after == '(' || after == ')';
  }

  void skip_ws() {
    for (;;) {
      while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos]))) advance();
      if (pos < text.size() && text[pos] == '#') {
        // '#t' / '#f' literals are atoms, not comments
        if (at_bool_literal()) break;
        while (pos < text.size() && text[pos] != '\n') advance();
        continue;
      }
      break;
    }
  }

  bool done() {
    skip_ws();
    return pos >= text.size();
  }

  Sexp next() {
    skip_ws();
    if (pos >= text.size()) throw ParseError("unexpected end of input", line, col);
    int l = line, c = col;
    char ch = text[pos];
    if (ch == '(') {
      advance();
      Sexp list;
      list.line = l;
      list.col = c;
      for (;;) {
        skip_ws();
        if (pos >= text.size()) throw ParseError("unbalanced '('", l, c);
        if (text[pos] == ')') {
          advance();
          return list;
        }
        list.items.push_back(next());
      }
    }
    if (ch == ')') throw ParseError("unbalanced ')'", l, c);
    Sexp atom;
    atom.is_atom = true;
    atom.line = l;
    atom.col = c;
    if (ch == '"') {
      advance();
      while (pos < text.size() && text[pos] != '"') {
        atom.atom += text[pos];
        advance();
      }
      if (pos >= text.size()) throw ParseError("unterminated string", l, c);
      advance();
      return atom;
    }
    while (pos < text.size() && !std::isspace(static_cast<unsigned char>(text[pos])) &&
           text[pos] != '(' && text[pos] != ')' && text[pos] != '"') {
      atom.atom += text[pos];
      advance();
    }
    return atom;
  }
};

}  // namespace eq::sexp
