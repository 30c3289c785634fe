#include "vizier/lexer.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <optional>

#include "vizier/error.hpp"

namespace vizier {

namespace {

bool ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }
bool digit(char c) { return c >= '0' && c <= '9'; }

constexpr std::array kReserved = {
    "AND",    "OR",      "NOT",     "TRUE",   "FALSE",  "NULL",  "IF",      "CASE",
    "WHEN",   "THEN",    "ELSE",    "END",    "BETWEEN", "IN",   "CAST",    "AS",
    "ROWID",  "VALUE",   "SUM",     "AVG",    "MIN",    "MAX",   "COUNT",   "UPDATE",
    "WHERE",  "ADD",     "COLUMN",  "REMOVE", "INSERT", "ROW",   "DELETE",  "REORDER",
    "COLUMNS", "ROWS",   "SORT",    "LOAD",   "AT",     "ASC",   "DESC",    "MOVE",
    "TO",     "PAGE",    "OPTIONS", "SELECT", "FROM",   "UNION", "ALL",     "ORDER",
    "BY",     "NULLS",   "LAST",    "FIRST",  "OVER",   "UNBOUNDED", "PRECEDING",
    "CURRENT", "HEADER", "INFER",
};

class Lexer {
 public:
  explicit Lexer(std::string_view text) : text_(text) {}

  std::vector<Token> run() {
    std::vector<Token> out;
    for (;;) {
      skip_space();
      Token t;
      t.offset = pos_;
      t.line = line_;
      t.column = pos_ - line_start_ + 1;
      if (pos_ >= text_.size()) {
        t.kind = TokenKind::End;
        out.push_back(t);
        return out;
      }
      char c = text_[pos_];
      if (c == '-' && peek(1) == '-') {
        if (auto tag = group_comment()) {
          t.kind = TokenKind::GroupTag;
          t.text = *tag;
          out.push_back(t);
        }
        continue;
      }
      if (c == '\'') {
        t.kind = TokenKind::String;
        t.text = quoted('\'', t);
      } else if (c == '"') {
        t.kind = TokenKind::QuotedIdent;
        t.text = quoted('"', t);
      } else if (digit(c) || (c == '.' && digit(peek(1)))) {
        number(t);
      } else if (c == '@') {
        ++pos_;
        std::size_t start = pos_;
        while (pos_ < text_.size() && digit(text_[pos_])) ++pos_;
        if (start == pos_) fail(t, "expected digits after '@'");
        t.kind = TokenKind::ExplicitRef;
        t.text = std::string(text_.substr(start, pos_ - start));
      } else if (c == '#') {
        if (text_.substr(pos_, 5) != "#REF!") fail(t, "unexpected '#'");
        pos_ += 5;
        t.kind = TokenKind::DanglingRef;
        t.text = "#REF!";
      } else if (c == '$' || ident_start(c)) {
        if (!cell_ref(t)) {
          if (c == '$') fail(t, "malformed cell reference");
          std::size_t start = pos_;
          while (pos_ < text_.size() && ident_char(text_[pos_])) ++pos_;
          t.kind = TokenKind::Identifier;
          t.text = std::string(text_.substr(start, pos_ - start));
        }
      } else {
        symbol(t);
      }
      out.push_back(std::move(t));
    }
  }

 private:
  char peek(std::size_t ahead) const {
    return pos_ + ahead < text_.size() ? text_[pos_ + ahead] : '\0';
  }

  void skip_space() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) {
      if (text_[pos_] == '\n') {
        ++line_;
        line_start_ = pos_ + 1;
      }
      ++pos_;
    }
  }

  std::optional<std::string> group_comment() {
    std::size_t end = text_.find('\n', pos_);
    if (end == std::string_view::npos) end = text_.size();
    std::string_view body = text_.substr(pos_ + 2, end - pos_ - 2);
    pos_ = end;
    auto first = body.find_first_not_of(" \t");
    if (first == std::string_view::npos) return std::nullopt;
    body = body.substr(first);
    if (body.substr(0, 6) != "@group") return std::nullopt;
    body = body.substr(6);
    auto s = body.find_first_not_of(" \t");
    if (s == std::string_view::npos) return std::nullopt;
    body = body.substr(s);
    auto e = body.find_first_not_of("0123456789");
    std::string digits(body.substr(0, e));
    if (digits.empty()) return std::nullopt;
    return digits;
  }

  std::string quoted(char q, const Token& t) {
    ++pos_;
    std::string out;
    for (;;) {
      if (pos_ >= text_.size()) fail(t, "unterminated quoted text");
      char c = text_[pos_++];
      if (c == '\n') {
        ++line_;
        line_start_ = pos_;
      }
      if (c == q) {
        if (pos_ < text_.size() && text_[pos_] == q) {
          out.push_back(q);
          ++pos_;
          continue;
        }
        return out;
      }
      out.push_back(c);
    }
  }

  void number(Token& t) {
    std::size_t start = pos_;
    bool is_float = false;
    while (pos_ < text_.size() && digit(text_[pos_])) ++pos_;
    if (peek(0) == '.' && digit(peek(1))) {
      is_float = true;
      ++pos_;
      while (pos_ < text_.size() && digit(text_[pos_])) ++pos_;
    }
    if ((peek(0) == 'e' || peek(0) == 'E') &&
        (digit(peek(1)) || ((peek(1) == '-' || peek(1) == '+') && digit(peek(2))))) {
      is_float = true;
      pos_ += 2;
      while (pos_ < text_.size() && digit(text_[pos_])) ++pos_;
    }
    if (pos_ < text_.size() && ident_char(text_[pos_])) fail(t, "malformed number");
    t.kind = is_float ? TokenKind::Float : TokenKind::Integer;
    t.text = std::string(text_.substr(start, pos_ - start));
  }

  // \$?[A-Za-z]{1,3}\$?[0-9]+ not followed by an identifier character.
  bool cell_ref(Token& t) {
    std::size_t p = pos_;
    if (p < text_.size() && text_[p] == '$') ++p;
    std::size_t letters = p;
    while (p < text_.size() && std::isalpha(static_cast<unsigned char>(text_[p]))) ++p;
    std::size_t nletters = p - letters;
    if (nletters == 0 || nletters > 3) return false;
    if (p < text_.size() && text_[p] == '$') ++p;
    std::size_t digits = p;
    while (p < text_.size() && digit(text_[p])) ++p;
    if (p == digits) return false;
    if (p < text_.size() && ident_char(text_[p])) return false;
    t.kind = TokenKind::CellRef;
    t.text = std::string(text_.substr(pos_, p - pos_));
    pos_ = p;
    return true;
  }

  void symbol(Token& t) {
    static constexpr std::array two = {"<=", ">=", "<>", "!=", "||"};
    for (const char* s : two) {
      if (text_.substr(pos_, 2) == s) {
        t.kind = TokenKind::Symbol;
        t.text = s;
        pos_ += 2;
        return;
      }
    }
    static constexpr std::string_view one = "+-*/=<>(),;[]:";
    if (one.find(text_[pos_]) == std::string_view::npos) {
      fail(t, std::string("unexpected character '") + text_[pos_] + "'");
    }
    t.kind = TokenKind::Symbol;
    t.text = std::string(1, text_[pos_++]);
  }

  [[noreturn]] void fail(const Token& t, const std::string& msg) {
    throw Error(ErrorCode::Syntax, "line " + std::to_string(t.line) + ", column " +
                                       std::to_string(t.column) + ": " + msg);
  }

  std::string_view text_;
  std::size_t pos_ = 0;
  std::size_t line_ = 1;
  std::size_t line_start_ = 0;
};

bool looks_like_cell_ref(std::string_view name) {
  auto toks = Lexer(name).run();
  return toks.size() == 2 && toks[0].kind == TokenKind::CellRef;
}

}  // namespace

std::vector<Token> tokenize(std::string_view text) { return Lexer(text).run(); }

bool iequals(std::string_view a, std::string_view b) {
  return a.size() == b.size() &&
         std::equal(a.begin(), a.end(), b.begin(), [](char x, char y) {
           return std::toupper(static_cast<unsigned char>(x)) ==
                  std::toupper(static_cast<unsigned char>(y));
         });
}

bool is_reserved_word(std::string_view word) {
  return std::any_of(kReserved.begin(), kReserved.end(),
                     [&](const char* kw) { return iequals(word, kw); });
}

bool is_bare_identifier(std::string_view name) {
  if (name.empty() || !ident_start(name[0])) return false;
  if (!std::all_of(name.begin(), name.end(), ident_char)) return false;
  if (is_reserved_word(name)) return false;
  return !looks_like_cell_ref(name);
}

std::string quote_identifier(std::string_view name) {
  if (is_bare_identifier(name)) return std::string(name);
  std::string out = "\"";
  for (char c : name) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string quote_string(std::string_view text) {
  std::string out = "'";
  for (char c : text) {
    if (c == '\'') out += '\'';
    out += c;
  }
  return out + "'";
}

const Token& TokenStream::peek(std::size_t ahead) const {
  std::size_t i = std::min(pos_ + ahead, tokens_.size() - 1);
  return tokens_[i];
}

const Token& TokenStream::next() {
  const Token& t = tokens_[pos_];
  if (pos_ + 1 < tokens_.size()) ++pos_;
  return t;
}

bool TokenStream::is_keyword(std::string_view kw, std::size_t ahead) const {
  const Token& t = peek(ahead);
  return t.kind == TokenKind::Identifier && iequals(t.text, kw);
}

bool TokenStream::is_symbol(std::string_view sym, std::size_t ahead) const {
  const Token& t = peek(ahead);
  return t.kind == TokenKind::Symbol && t.text == sym;
}

bool TokenStream::accept_keyword(std::string_view kw) {
  if (!is_keyword(kw)) return false;
  next();
  return true;
}

bool TokenStream::accept_symbol(std::string_view sym) {
  if (!is_symbol(sym)) return false;
  next();
  return true;
}

void TokenStream::expect_keyword(std::string_view kw) {
  if (!accept_keyword(kw)) fail("expected " + std::string(kw));
}

void TokenStream::expect_symbol(std::string_view sym) {
  if (!accept_symbol(sym)) fail("expected '" + std::string(sym) + "'");
}

void TokenStream::fail(const std::string& message) const { fail_at(peek(), message); }

void TokenStream::fail_at(const Token& token, const std::string& message) const {
  std::string found = token.kind == TokenKind::End ? "end of input" : "'" + token.text + "'";
  throw Error(ErrorCode::Syntax, "line " + std::to_string(token.line) + ", column " +
                                     std::to_string(token.column) + ": " + message +
                                     ", found " + found);
}

}  // namespace vizier
