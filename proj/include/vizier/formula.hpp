#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "vizier/ids.hpp"
#include "vizier/value.hpp"

namespace vizier {

/// Grid position, 0-based. Row 0 is displayed as "1", column 0 as "A".
struct Position {
  std::int64_t col = 0;
  std::int64_t row = 0;

  friend auto operator<=>(const Position&, const Position&) = default;
  Position operator+(const Position& o) const { return {col + o.col, row + o.row}; }
  Position operator-(const Position& o) const { return {col - o.col, row - o.row}; }
};

std::string column_letters(std::int64_t index);
std::optional<std::int64_t> column_index_from_letters(std::string_view letters);
std::string a1_text(Position p);

/// One axis of a coordinate reference. An absolute axis stores the grid
/// index; a relative axis stores the offset from the host cell.
struct Axis {
  bool absolute = false;
  std::int64_t value = 0;
  friend bool operator==(const Axis&, const Axis&) = default;
};

struct CellRef {
  Axis col;
  Axis row;
  friend bool operator==(const CellRef&, const CellRef&) = default;

  Position target(Position host) const {
    return {col.absolute ? col.value : host.col + col.value,
            row.absolute ? row.value : host.row + row.value};
  }
};

enum class UnaryOp { Neg, Not };
enum class BinaryOp { Add, Sub, Mul, Div, Concat, Eq, Ne, Lt, Le, Gt, Ge, And, Or };
enum class AggregateFn { Sum, Avg, Min, Max, Count };
enum class CastType { Int, Float, String, Bool };

std::string_view to_string(BinaryOp op);
std::string_view to_string(AggregateFn fn);
std::string_view to_string(CastType type);

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

namespace node {
struct Literal { Value value; };
struct Ref { CellRef ref; };
struct Explicit { CellId id; };
struct Dangling {};
struct Column { std::string name; };  // named column, host row
struct RowIdOf {};                    // ROWID of the host row
struct SelfValue {};                  // VALUE: the host cell's current content
struct Range { CellRef from; CellRef to; };
struct Unary { UnaryOp op; ExprPtr operand; };
struct Binary { BinaryOp op; ExprPtr lhs; ExprPtr rhs; };
struct If { ExprPtr cond; ExprPtr then; ExprPtr otherwise; };
struct Between { ExprPtr subject; ExprPtr low; ExprPtr high; };
struct InList { ExprPtr subject; std::vector<ExprPtr> items; };
struct Aggregate { AggregateFn fn; std::vector<ExprPtr> args; };  // args may be Range
struct Cast { ExprPtr operand; CastType type; };
}  // namespace node

/// Immutable formula node. Trees share structure through ExprPtr.
struct Expr {
  using Node = std::variant<node::Literal, node::Ref, node::Explicit, node::Dangling,
                            node::Column, node::RowIdOf, node::SelfValue, node::Range,
                            node::Unary, node::Binary, node::If, node::Between,
                            node::InList, node::Aggregate, node::Cast>;
  Node node;

  template <class T>
  const T* as() const { return std::get_if<T>(&node); }
};

template <class T>
ExprPtr make(T n) {
  return std::make_shared<const Expr>(Expr{Expr::Node(std::move(n))});
}

ExprPtr lit(Value v);
ExprPtr col(std::string name);
ExprPtr ref(CellRef r);
ExprPtr binary(BinaryOp op, ExprPtr lhs, ExprPtr rhs);

bool structurally_equal(const Expr& a, const Expr& b);

/// A formula: a shared immutable expression tree. Null trees are not allowed;
/// an empty cell holds the literal null.
class Formula {
 public:
  Formula() : root_(lit(Value())) {}
  explicit Formula(ExprPtr root) : root_(std::move(root)) {}
  static Formula literal(Value v) { return Formula(lit(std::move(v))); }

  const Expr& root() const { return *root_; }
  const ExprPtr& ptr() const { return root_; }

  bool is_literal() const { return root_->as<node::Literal>() != nullptr; }
  bool has_references() const;
  bool has_cell_references() const;  // Ref/Range/Explicit/Dangling

  friend bool operator==(const Formula& a, const Formula& b) {
    return structurally_equal(*a.root_, *b.root_);
  }

 private:
  ExprPtr root_;
};

/// Rebuilds a tree bottom-up; `fn` may return a replacement for a node or
/// nullptr to keep the (rebuilt) node.
using ExprRewrite = std::function<ExprPtr(const ExprPtr&)>;
ExprPtr transform(const ExprPtr& e, const ExprRewrite& fn);

void visit_nodes(const Expr& e, const std::function<void(const Expr&)>& fn);

/// Adds `delta` to every relative axis. Used to re-host script formulas.
Formula shift_relative(const Formula& f, Position delta);

/// Copy-paste adaptation. Relative references are offsets already, so the
/// tree is returned as-is; placing it at host+offset shifts their targets.
Formula adapt(const Formula& f, Position offset);

/// Replaces every VALUE node with `prior`.
Formula substitute_self(const Formula& f, const Formula& prior);

std::size_t node_count(const Formula& f);

// ---------------------------------------------------------------------------
// Surface syntax

/// Parses cell-entry text. Text beginning with '=' is an expression; anything
/// else is an entry literal (see infer_literal). Relative references require
/// a host and are stored as offsets from it.
Formula parse_formula(std::string_view text, std::optional<Position> host);

/// Parses a bare expression (no leading '='); relative references are
/// interpreted against `host`.
Formula parse_expression(std::string_view text, std::optional<Position> host);

class TokenStream;
/// Parses one expression from a shared token stream (used by the script and
/// SQL parsers). Stops at the first token that cannot continue an expression.
Formula parse_expression(TokenStream& tokens, std::optional<Position> host);

class CoordinateSystem;

enum class RenderMode {
  /// Explicit references print as `@<id>`; no coordinates needed.
  Canonical,
  /// Explicit references print at their current coordinates (formula bar).
  Display,
};

/// Expression text without the leading '='.
std::string render_expression(const Formula& f, Position host,
                              const CoordinateSystem* coords = nullptr,
                              RenderMode mode = RenderMode::Canonical);

/// Cell-entry text: literals print as entered ("10", "Alice"), everything
/// else as "=expr". Inverse of parse_formula.
std::string render_formula(const Formula& f, Position host,
                           const CoordinateSystem* coords = nullptr,
                           RenderMode mode = RenderMode::Canonical);

/// Host-independent rendering: relative axes as R[dr]C[dc] offsets. Two cells
/// have the same relative normal form iff their formulas are identical trees.
std::string relative_normal_form(const Formula& f);

}  // namespace vizier
