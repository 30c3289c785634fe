#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace vizier {

enum class TokenKind {
  End,
  Identifier,   // bare word, keyword or column name
  QuotedIdent,  // "double quoted"
  String,       // 'single quoted'
  Integer,
  Float,
  CellRef,      // B2, $B$2, b$2
  ExplicitRef,  // @17
  DanglingRef,  // #REF!
  GroupTag,     // -- @group 7
  Symbol,       // operators and punctuation
};

struct Token {
  TokenKind kind = TokenKind::End;
  std::string text;  // decoded text (quotes stripped, escapes resolved)
  std::size_t offset = 0;
  std::size_t line = 1;
  std::size_t column = 1;
};

/// Shared tokenizer for formulas, VizUAL scripts and the emitted SQL dialect.
/// Plain `--` comments are dropped; `-- @group N` comments become GroupTag.
std::vector<Token> tokenize(std::string_view text);

/// Words that cannot be used as bare column names.
bool is_reserved_word(std::string_view word);

/// True when `name` can be written without double quotes.
bool is_bare_identifier(std::string_view name);

/// Double-quotes a name when it is not a bare identifier.
std::string quote_identifier(std::string_view name);

std::string quote_string(std::string_view text);

bool iequals(std::string_view a, std::string_view b);

/// Cursor over a token vector with keyword helpers; used by every parser.
class TokenStream {
 public:
  explicit TokenStream(std::vector<Token> tokens) : tokens_(std::move(tokens)) {}

  const Token& peek(std::size_t ahead = 0) const;
  const Token& next();
  bool at_end() const { return peek().kind == TokenKind::End; }

  bool is_keyword(std::string_view kw, std::size_t ahead = 0) const;
  bool is_symbol(std::string_view sym, std::size_t ahead = 0) const;
  bool accept_keyword(std::string_view kw);
  bool accept_symbol(std::string_view sym);
  void expect_keyword(std::string_view kw);
  void expect_symbol(std::string_view sym);

  [[noreturn]] void fail(const std::string& message) const;
  [[noreturn]] void fail_at(const Token& token, const std::string& message) const;

 private:
  std::vector<Token> tokens_;
  std::size_t pos_ = 0;
};

}  // namespace vizier
