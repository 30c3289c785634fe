#pragma once

#include <vector>

#include "vizier/formula.hpp"
#include "vizier/value.hpp"

namespace vizier {

/// Supplies the values behind references. Every lookup that cannot be
/// satisfied returns REF_DANGLING; evaluation itself never throws.
class ReferenceResolver {
 public:
  virtual ~ReferenceResolver() = default;

  virtual Value cell(Position target) const;
  virtual Value explicit_cell(CellId id) const;
  virtual Value column(std::string_view name) const;
  virtual Value row_id() const;
  virtual Value self_value() const;
  /// Values of the rectangle spanned by two targets, row-major.
  virtual std::vector<Value> range(Position from, Position to) const;
  virtual Position host() const { return {}; }
};

/// Pure evaluation of `f` against `resolver`.
Value evaluate(const Formula& f, const ReferenceResolver& resolver);
Value evaluate_expr(const Expr& e, const ReferenceResolver& resolver);

// Operator semantics, exposed for the SQL interpreter and tests.
Value apply_unary(UnaryOp op, const Value& v);
Value apply_binary(BinaryOp op, const Value& a, const Value& b);
Value apply_cast(const Value& v, CastType type);
Value apply_aggregate(AggregateFn fn, const std::vector<Value>& values);

}  // namespace vizier
