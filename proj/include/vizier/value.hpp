#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>

namespace vizier {

enum class ErrorKind { RefDangling, Cycle, Type, DivZero };

std::string_view to_string(ErrorKind kind);
std::optional<ErrorKind> error_kind_from_string(std::string_view text);

struct Null {
  friend bool operator==(Null, Null) = default;
};

struct ErrorValue {
  ErrorKind kind;
  friend bool operator==(ErrorValue, ErrorValue) = default;
};

enum class ValueType { Null, Int, Float, String, Bool, Error };

/// Tagged primitive stored in cells. Errors are ordinary values so that a
/// sheet with broken references stays representable.
class Value {
 public:
  Value() = default;
  Value(Null) {}
  Value(std::int64_t v) : data_(v) {}
  Value(int v) : data_(std::int64_t{v}) {}
  Value(double v) : data_(v) {}
  Value(std::string v) : data_(std::move(v)) {}
  Value(const char* v) : data_(std::string(v)) {}
  Value(bool v) : data_(v) {}
  Value(ErrorValue v) : data_(v) {}

  static Value error(ErrorKind kind) { return Value(ErrorValue{kind}); }

  ValueType type() const { return static_cast<ValueType>(data_.index()); }
  bool is_null() const { return type() == ValueType::Null; }
  bool is_int() const { return type() == ValueType::Int; }
  bool is_float() const { return type() == ValueType::Float; }
  bool is_number() const { return is_int() || is_float(); }
  bool is_string() const { return type() == ValueType::String; }
  bool is_bool() const { return type() == ValueType::Bool; }
  bool is_error() const { return type() == ValueType::Error; }

  std::int64_t as_int() const { return std::get<std::int64_t>(data_); }
  double as_float() const { return std::get<double>(data_); }
  double as_number() const { return is_int() ? static_cast<double>(as_int()) : as_float(); }
  const std::string& as_string() const { return std::get<std::string>(data_); }
  bool as_bool() const { return std::get<bool>(data_); }
  ErrorKind error_kind() const { return std::get<ErrorValue>(data_).kind; }

  bool is_true() const { return is_bool() && as_bool(); }

  /// Same type and same payload. Floats compare bitwise-equal by value.
  friend bool operator==(const Value&, const Value&) = default;

 private:
  std::variant<Null, std::int64_t, double, std::string, bool, ErrorValue> data_;
};

/// Human-facing text: 10, 9.5, Alice, TRUE, #DIV/0!
std::string display(const Value& v);

/// Literal text in formula syntax that parses back to the same value.
std::string literal_text(const Value& v);

/// Canonical typed encoding used for hashing and diffing, e.g. "i:10".
std::string typed_text(const Value& v);

/// Shortest round-trippable rendering of a double, always containing '.' or 'e'.
std::string format_double(double d);

/// Three-way collation used by SORT and ORDER BY: numbers < strings < booleans
/// < errors < null. Numbers compare numerically across int/float.
int collate(const Value& a, const Value& b);

/// SQL-style equality for the `=` operator (numeric across int/float).
/// Returns nullopt when either side is null.
std::optional<bool> loose_equal(const Value& a, const Value& b);

/// Entry-style inference: int when the text is an integer literal that fits,
/// float for other numerics, TRUE/FALSE booleans, empty → null, else string.
Value infer_literal(std::string_view text);

}  // namespace vizier
