#include "vizier/value.hpp"

#include <charconv>
#include <cmath>
#include <cstring>

#include "vizier/error.hpp"
#include "vizier/lexer.hpp"

namespace vizier {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::Syntax: return "SYNTAX";
    case ErrorCode::MissingHost: return "MISSING_HOST";
    case ErrorCode::UnknownStatement: return "UNKNOWN_STATEMENT";
    case ErrorCode::DuplicateColumn: return "DUPLICATE_COLUMN";
    case ErrorCode::UnknownColumn: return "UNKNOWN_COLUMN";
    case ErrorCode::UnknownRowId: return "UNKNOWN_ROWID";
    case ErrorCode::UnknownPage: return "UNKNOWN_PAGE";
    case ErrorCode::UnresolvedRef: return "UNRESOLVED_REF";
    case ErrorCode::Io: return "IO";
    case ErrorCode::EmptyTarget: return "EMPTY_TARGET";
    case ErrorCode::InvalidArgument: return "INVALID_ARGUMENT";
    case ErrorCode::PositionalNotCompilable: return "POSITIONAL_NOT_COMPILABLE";
    case ErrorCode::UnsupportedPattern: return "UNSUPPORTED_PATTERN";
    case ErrorCode::NoCandidate: return "NO_CANDIDATE";
    case ErrorCode::DuplicateBranchName: return "DUPLICATE_BRANCH_NAME";
    case ErrorCode::UnknownBranch: return "UNKNOWN_BRANCH";
    case ErrorCode::ReplayMismatch: return "REPLAY_MISMATCH";
    case ErrorCode::StaleSuggestion: return "STALE_SUGGESTION";
  }
  return "UNKNOWN";
}

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::RefDangling: return "REF_DANGLING";
    case ErrorKind::Cycle: return "CYCLE";
    case ErrorKind::Type: return "TYPE";
    case ErrorKind::DivZero: return "DIV_ZERO";
  }
  return "?";
}

std::optional<ErrorKind> error_kind_from_string(std::string_view text) {
  for (auto k : {ErrorKind::RefDangling, ErrorKind::Cycle, ErrorKind::Type, ErrorKind::DivZero}) {
    if (to_string(k) == text) return k;
  }
  return std::nullopt;
}

std::string format_double(double d) {
  if (std::isnan(d)) return "NaN";
  if (std::isinf(d)) return d > 0 ? "Infinity" : "-Infinity";
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, d);
  std::string out(buf, end);
  if (out.find_first_of(".eEn") == std::string::npos) out += ".0";
  return out;
}

std::string display(const Value& v) {
  switch (v.type()) {
    case ValueType::Null: return "";
    case ValueType::Int: return std::to_string(v.as_int());
    case ValueType::Float: return format_double(v.as_float());
    case ValueType::String: return v.as_string();
    case ValueType::Bool: return v.as_bool() ? "TRUE" : "FALSE";
    case ValueType::Error:
      switch (v.error_kind()) {
        case ErrorKind::RefDangling: return "#REF!";
        case ErrorKind::Cycle: return "#CYCLE!";
        case ErrorKind::Type: return "#VALUE!";
        case ErrorKind::DivZero: return "#DIV/0!";
      }
  }
  return "";
}

std::string literal_text(const Value& v) {
  switch (v.type()) {
    case ValueType::Null: return "NULL";
    case ValueType::String: return quote_string(v.as_string());
    case ValueType::Error:
      // Not expressible as a literal; an error value only arises from evaluation.
      return "NULL";
    default: return display(v);
  }
}

std::string typed_text(const Value& v) {
  switch (v.type()) {
    case ValueType::Null: return "n:";
    case ValueType::Int: return "i:" + display(v);
    case ValueType::Float: return "f:" + display(v);
    case ValueType::String: return "s:" + v.as_string();
    case ValueType::Bool: return "b:" + display(v);
    case ValueType::Error: return "e:" + std::string(to_string(v.error_kind()));
  }
  return "";
}

namespace {

int type_rank(const Value& v) {
  switch (v.type()) {
    case ValueType::Int:
    case ValueType::Float: return 0;
    case ValueType::String: return 1;
    case ValueType::Bool: return 2;
    case ValueType::Error: return 3;
    case ValueType::Null: return 4;
  }
  return 5;
}

template <class T>
int cmp3(const T& a, const T& b) {
  return a < b ? -1 : (b < a ? 1 : 0);
}

}  // namespace

int collate(const Value& a, const Value& b) {
  int ra = type_rank(a), rb = type_rank(b);
  if (ra != rb) return ra < rb ? -1 : 1;
  switch (a.type()) {
    case ValueType::Int:
    case ValueType::Float:
      if (a.is_int() && b.is_int()) return cmp3(a.as_int(), b.as_int());
      return cmp3(a.as_number(), b.as_number());
    case ValueType::String: return cmp3(a.as_string(), b.as_string());
    case ValueType::Bool: return cmp3(a.as_bool(), b.as_bool());
    case ValueType::Error:
      return cmp3(static_cast<int>(a.error_kind()), static_cast<int>(b.error_kind()));
    case ValueType::Null: return 0;
  }
  return 0;
}

std::optional<bool> loose_equal(const Value& a, const Value& b) {
  if (a.is_null() || b.is_null()) return std::nullopt;
  if (a.is_number() && b.is_number()) {
    if (a.is_int() && b.is_int()) return a.as_int() == b.as_int();
    return a.as_number() == b.as_number();
  }
  return a == b;
}

Value infer_literal(std::string_view text) {
  if (text.empty()) return Value();
  if (iequals(text, "TRUE")) return Value(true);
  if (iequals(text, "FALSE")) return Value(false);
  const char* first = text.data();
  const char* last = first + text.size();
  bool integer_syntax = true;
  std::size_t start = (text[0] == '-' || text[0] == '+') ? 1 : 0;
  if (start == text.size()) integer_syntax = false;
  for (std::size_t i = start; i < text.size(); ++i) {
    if (text[i] < '0' || text[i] > '9') integer_syntax = false;
  }
  if (integer_syntax) {
    std::int64_t iv = 0;
    if (text[0] == '+') ++first;
    auto [p, ec] = std::from_chars(first, last, iv);
    if (ec == std::errc() && p == last) return Value(iv);
  }
  // Plain decimal or exponent syntax only; no hex, no inf/nan words.
  bool numeric_chars = true, has_digit = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    char c = text[i];
    if (c >= '0' && c <= '9') has_digit = true;
    else if (!(c == '.' || c == 'e' || c == 'E' || c == '-' || c == '+')) numeric_chars = false;
  }
  if (numeric_chars && has_digit) {
    double dv = 0;
    const char* f = text.data();
    if (*f == '+') ++f;
    auto [p, ec] = std::from_chars(f, last, dv);
    if (ec == std::errc() && p == last) return Value(dv);
  }
  return Value(std::string(text));
}

}  // namespace vizier
