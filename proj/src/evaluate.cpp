#include "vizier/evaluate.hpp"

#include <cmath>
#include <limits>

#include "vizier/lexer.hpp"

namespace vizier {

Value ReferenceResolver::cell(Position) const { return Value::error(ErrorKind::RefDangling); }
Value ReferenceResolver::explicit_cell(CellId) const {
  return Value::error(ErrorKind::RefDangling);
}
Value ReferenceResolver::column(std::string_view) const {
  return Value::error(ErrorKind::RefDangling);
}
Value ReferenceResolver::row_id() const { return Value::error(ErrorKind::RefDangling); }
Value ReferenceResolver::self_value() const { return Value::error(ErrorKind::Cycle); }
std::vector<Value> ReferenceResolver::range(Position, Position) const {
  return {Value::error(ErrorKind::RefDangling)};
}

namespace {

const Value kType = Value::error(ErrorKind::Type);

Value arithmetic(BinaryOp op, const Value& a, const Value& b) {
  if (a.is_null() || b.is_null()) return Value();
  if (!a.is_number() || !b.is_number()) return kType;
  if (op == BinaryOp::Div) {
    if (b.as_number() == 0.0) return Value::error(ErrorKind::DivZero);
    return Value(a.as_number() / b.as_number());
  }
  if (a.is_int() && b.is_int()) {
    std::int64_t out = 0;
    bool overflow = false;
    switch (op) {
      case BinaryOp::Add: overflow = __builtin_add_overflow(a.as_int(), b.as_int(), &out); break;
      case BinaryOp::Sub: overflow = __builtin_sub_overflow(a.as_int(), b.as_int(), &out); break;
      case BinaryOp::Mul: overflow = __builtin_mul_overflow(a.as_int(), b.as_int(), &out); break;
      default: break;
    }
    if (!overflow) return Value(out);
  }
  double x = a.as_number(), y = b.as_number();
  switch (op) {
    case BinaryOp::Add: return Value(x + y);
    case BinaryOp::Sub: return Value(x - y);
    case BinaryOp::Mul: return Value(x * y);
    default: return kType;
  }
}

Value ordering(BinaryOp op, const Value& a, const Value& b) {
  if (a.is_null() || b.is_null()) return Value();
  bool comparable = (a.is_number() && b.is_number()) || a.type() == b.type();
  if (!comparable) return kType;
  int c = collate(a, b);
  switch (op) {
    case BinaryOp::Lt: return Value(c < 0);
    case BinaryOp::Le: return Value(c <= 0);
    case BinaryOp::Gt: return Value(c > 0);
    case BinaryOp::Ge: return Value(c >= 0);
    default: return kType;
  }
}

Value logical(BinaryOp op, const Value& a, const Value& b) {
  if ((!a.is_null() && !a.is_bool()) || (!b.is_null() && !b.is_bool())) return kType;
  bool is_and = op == BinaryOp::And;
  // Dominant value: FALSE for AND, TRUE for OR.
  if ((a.is_bool() && a.as_bool() != is_and) || (b.is_bool() && b.as_bool() != is_and)) {
    return Value(!is_and);
  }
  if (a.is_null() || b.is_null()) return Value();
  return Value(is_and);
}

}  // namespace

Value apply_unary(UnaryOp op, const Value& v) {
  if (v.is_error() || v.is_null()) return v;
  if (op == UnaryOp::Not) return v.is_bool() ? Value(!v.as_bool()) : kType;
  if (v.is_int()) {
    if (v.as_int() == std::numeric_limits<std::int64_t>::min()) return Value(-v.as_number());
    return Value(-v.as_int());
  }
  if (v.is_float()) return Value(-v.as_float());
  return kType;
}

Value apply_binary(BinaryOp op, const Value& a, const Value& b) {
  if (a.is_error()) return a;
  if (b.is_error()) return b;
  switch (op) {
    case BinaryOp::Add:
    case BinaryOp::Sub:
    case BinaryOp::Mul:
    case BinaryOp::Div: return arithmetic(op, a, b);
    case BinaryOp::Concat:
      if (a.is_null() || b.is_null()) return Value();
      return Value(display(a) + display(b));
    case BinaryOp::Eq:
    case BinaryOp::Ne: {
      auto eq = loose_equal(a, b);
      if (!eq) return Value();
      return Value(op == BinaryOp::Eq ? *eq : !*eq);
    }
    case BinaryOp::Lt:
    case BinaryOp::Le:
    case BinaryOp::Gt:
    case BinaryOp::Ge: return ordering(op, a, b);
    case BinaryOp::And:
    case BinaryOp::Or: return logical(op, a, b);
  }
  return kType;
}

Value apply_cast(const Value& v, CastType type) {
  if (v.is_error() || v.is_null()) return v;
  switch (type) {
    case CastType::String: return Value(display(v));
    case CastType::Bool:
      if (v.is_bool()) return v;
      if (v.is_number()) return Value(v.as_number() != 0.0);
      if (iequals(v.as_string(), "TRUE")) return Value(true);
      if (iequals(v.as_string(), "FALSE")) return Value(false);
      return kType;
    case CastType::Int: {
      Value n = v;
      if (v.is_string()) n = infer_literal(v.as_string());
      if (n.is_bool()) return Value(std::int64_t{n.as_bool() ? 1 : 0});
      if (n.is_int()) return n;
      if (n.is_float()) {
        double d = std::trunc(n.as_float());
        if (!std::isfinite(d) || std::abs(d) >= 9.2e18) return kType;
        return Value(static_cast<std::int64_t>(d));
      }
      return kType;
    }
    case CastType::Float: {
      Value n = v;
      if (v.is_string()) n = infer_literal(v.as_string());
      if (n.is_bool()) return Value(n.as_bool() ? 1.0 : 0.0);
      if (n.is_number()) return Value(n.as_number());
      return kType;
    }
  }
  return kType;
}

Value apply_aggregate(AggregateFn fn, const std::vector<Value>& values) {
  for (const Value& v : values) {
    if (v.is_error()) return v;
  }
  if (fn == AggregateFn::Count) {
    std::int64_t n = 0;
    for (const Value& v : values) n += v.is_null() ? 0 : 1;
    return Value(n);
  }
  std::vector<const Value*> nums;
  for (const Value& v : values) {
    if (v.is_null()) continue;
    if (!v.is_number()) return kType;
    nums.push_back(&v);
  }
  switch (fn) {
    case AggregateFn::Sum: {
      Value acc(std::int64_t{0});
      for (const Value* v : nums) acc = arithmetic(BinaryOp::Add, acc, *v);
      return acc;
    }
    case AggregateFn::Avg: {
      if (nums.empty()) return Value::error(ErrorKind::DivZero);
      double s = 0;
      for (const Value* v : nums) s += v->as_number();
      return Value(s / static_cast<double>(nums.size()));
    }
    case AggregateFn::Min:
    case AggregateFn::Max: {
      if (nums.empty()) return Value();
      const Value* best = nums.front();
      for (const Value* v : nums) {
        int c = collate(*v, *best);
        if ((fn == AggregateFn::Min && c < 0) || (fn == AggregateFn::Max && c > 0)) best = v;
      }
      return *best;
    }
    default: return kType;
  }
}

Value evaluate_expr(const Expr& e, const ReferenceResolver& r) {
  if (auto* l = e.as<node::Literal>()) return l->value;
  if (auto* x = e.as<node::Ref>()) return r.cell(x->ref.target(r.host()));
  if (auto* x = e.as<node::Explicit>()) return r.explicit_cell(x->id);
  if (e.as<node::Dangling>()) return Value::error(ErrorKind::RefDangling);
  if (auto* c = e.as<node::Column>()) return r.column(c->name);
  if (e.as<node::RowIdOf>()) return r.row_id();
  if (e.as<node::SelfValue>()) return r.self_value();
  if (e.as<node::Range>()) return kType;
  if (auto* u = e.as<node::Unary>()) return apply_unary(u->op, evaluate_expr(*u->operand, r));
  if (auto* b = e.as<node::Binary>()) {
    Value lhs = evaluate_expr(*b->lhs, r);
    return apply_binary(b->op, lhs, evaluate_expr(*b->rhs, r));
  }
  if (auto* f = e.as<node::If>()) {
    Value c = evaluate_expr(*f->cond, r);
    if (c.is_error()) return c;
    if (!c.is_null() && !c.is_bool()) return kType;
    return evaluate_expr(c.is_true() ? *f->then : *f->otherwise, r);
  }
  if (auto* bt = e.as<node::Between>()) {
    Value s = evaluate_expr(*bt->subject, r);
    Value lo = evaluate_expr(*bt->low, r);
    Value hi = evaluate_expr(*bt->high, r);
    Value ge = apply_binary(BinaryOp::Ge, s, lo);
    Value le = apply_binary(BinaryOp::Le, s, hi);
    return apply_binary(BinaryOp::And, ge, le);
  }
  if (auto* in = e.as<node::InList>()) {
    Value s = evaluate_expr(*in->subject, r);
    if (s.is_error()) return s;
    Value result(false);
    for (const auto& item : in->items) {
      Value eq = apply_binary(BinaryOp::Eq, s, evaluate_expr(*item, r));
      if (eq.is_error()) return eq;
      if (eq.is_true()) return Value(true);
      if (eq.is_null()) result = Value();
    }
    return result;
  }
  if (auto* a = e.as<node::Aggregate>()) {
    std::vector<Value> values;
    for (const auto& arg : a->args) {
      if (auto* rg = arg->as<node::Range>()) {
        auto part = r.range(rg->from.target(r.host()), rg->to.target(r.host()));
        values.insert(values.end(), part.begin(), part.end());
      } else {
        values.push_back(evaluate_expr(*arg, r));
      }
    }
    return apply_aggregate(a->fn, values);
  }
  if (auto* c = e.as<node::Cast>()) return apply_cast(evaluate_expr(*c->operand, r), c->type);
  return kType;
}

Value evaluate(const Formula& f, const ReferenceResolver& resolver) {
  return evaluate_expr(f.root(), resolver);
}

}  // namespace vizier
