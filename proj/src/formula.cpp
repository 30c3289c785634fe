#include "vizier/formula.hpp"

#include <cctype>

namespace vizier {

std::string column_letters(std::int64_t index) {
  std::string out;
  std::int64_t n = index + 1;
  while (n > 0) {
    std::int64_t rem = (n - 1) % 26;
    out.insert(out.begin(), static_cast<char>('A' + rem));
    n = (n - 1) / 26;
  }
  return out;
}

std::optional<std::int64_t> column_index_from_letters(std::string_view letters) {
  if (letters.empty() || letters.size() > 3) return std::nullopt;
  std::int64_t n = 0;
  for (char c : letters) {
    if (!std::isalpha(static_cast<unsigned char>(c))) return std::nullopt;
    n = n * 26 + (std::toupper(static_cast<unsigned char>(c)) - 'A' + 1);
  }
  return n - 1;
}

std::string a1_text(Position p) { return column_letters(p.col) + std::to_string(p.row + 1); }

std::string_view to_string(BinaryOp op) {
  switch (op) {
    case BinaryOp::Add: return "+";
    case BinaryOp::Sub: return "-";
    case BinaryOp::Mul: return "*";
    case BinaryOp::Div: return "/";
    case BinaryOp::Concat: return "||";
    case BinaryOp::Eq: return "=";
    case BinaryOp::Ne: return "<>";
    case BinaryOp::Lt: return "<";
    case BinaryOp::Le: return "<=";
    case BinaryOp::Gt: return ">";
    case BinaryOp::Ge: return ">=";
    case BinaryOp::And: return "AND";
    case BinaryOp::Or: return "OR";
  }
  return "?";
}

std::string_view to_string(AggregateFn fn) {
  switch (fn) {
    case AggregateFn::Sum: return "SUM";
    case AggregateFn::Avg: return "AVG";
    case AggregateFn::Min: return "MIN";
    case AggregateFn::Max: return "MAX";
    case AggregateFn::Count: return "COUNT";
  }
  return "?";
}

std::string_view to_string(CastType type) {
  switch (type) {
    case CastType::Int: return "INT";
    case CastType::Float: return "FLOAT";
    case CastType::String: return "STRING";
    case CastType::Bool: return "BOOL";
  }
  return "?";
}

ExprPtr lit(Value v) { return make(node::Literal{std::move(v)}); }
ExprPtr col(std::string name) { return make(node::Column{std::move(name)}); }
ExprPtr ref(CellRef r) { return make(node::Ref{r}); }
ExprPtr binary(BinaryOp op, ExprPtr lhs, ExprPtr rhs) {
  return make(node::Binary{op, std::move(lhs), std::move(rhs)});
}

namespace {

bool eq(const ExprPtr& a, const ExprPtr& b) {
  if (a == b) return true;
  if (!a || !b) return false;
  return structurally_equal(*a, *b);
}

bool eq(const std::vector<ExprPtr>& a, const std::vector<ExprPtr>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!eq(a[i], b[i])) return false;
  }
  return true;
}

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

}  // namespace

bool structurally_equal(const Expr& a, const Expr& b) {
  if (a.node.index() != b.node.index()) return false;
  return std::visit(
      overloaded{
          [&](const node::Literal& x) { return x.value == b.as<node::Literal>()->value; },
          [&](const node::Ref& x) { return x.ref == b.as<node::Ref>()->ref; },
          [&](const node::Explicit& x) { return x.id == b.as<node::Explicit>()->id; },
          [&](const node::Dangling&) { return true; },
          [&](const node::Column& x) { return x.name == b.as<node::Column>()->name; },
          [&](const node::RowIdOf&) { return true; },
          [&](const node::SelfValue&) { return true; },
          [&](const node::Range& x) {
            auto* y = b.as<node::Range>();
            return x.from == y->from && x.to == y->to;
          },
          [&](const node::Unary& x) {
            auto* y = b.as<node::Unary>();
            return x.op == y->op && eq(x.operand, y->operand);
          },
          [&](const node::Binary& x) {
            auto* y = b.as<node::Binary>();
            return x.op == y->op && eq(x.lhs, y->lhs) && eq(x.rhs, y->rhs);
          },
          [&](const node::If& x) {
            auto* y = b.as<node::If>();
            return eq(x.cond, y->cond) && eq(x.then, y->then) && eq(x.otherwise, y->otherwise);
          },
          [&](const node::Between& x) {
            auto* y = b.as<node::Between>();
            return eq(x.subject, y->subject) && eq(x.low, y->low) && eq(x.high, y->high);
          },
          [&](const node::InList& x) {
            auto* y = b.as<node::InList>();
            return eq(x.subject, y->subject) && eq(x.items, y->items);
          },
          [&](const node::Aggregate& x) {
            auto* y = b.as<node::Aggregate>();
            return x.fn == y->fn && eq(x.args, y->args);
          },
          [&](const node::Cast& x) {
            auto* y = b.as<node::Cast>();
            return x.type == y->type && eq(x.operand, y->operand);
          },
      },
      a.node);
}

ExprPtr transform(const ExprPtr& e, const ExprRewrite& fn) {
  if (ExprPtr replaced = fn(e)) return replaced;
  auto t = [&](const ExprPtr& c) { return transform(c, fn); };
  auto tv = [&](const std::vector<ExprPtr>& v) {
    std::vector<ExprPtr> out;
    out.reserve(v.size());
    for (const auto& c : v) out.push_back(t(c));
    return out;
  };
  return std::visit(
      overloaded{
          [&](const node::Unary& x) { return make(node::Unary{x.op, t(x.operand)}); },
          [&](const node::Binary& x) { return make(node::Binary{x.op, t(x.lhs), t(x.rhs)}); },
          [&](const node::If& x) {
            return make(node::If{t(x.cond), t(x.then), t(x.otherwise)});
          },
          [&](const node::Between& x) {
            return make(node::Between{t(x.subject), t(x.low), t(x.high)});
          },
          [&](const node::InList& x) { return make(node::InList{t(x.subject), tv(x.items)}); },
          [&](const node::Aggregate& x) { return make(node::Aggregate{x.fn, tv(x.args)}); },
          [&](const node::Cast& x) { return make(node::Cast{t(x.operand), x.type}); },
          [&](const auto&) { return e; },
      },
      e->node);
}

void visit_nodes(const Expr& e, const std::function<void(const Expr&)>& fn) {
  fn(e);
  auto v = [&](const ExprPtr& c) { visit_nodes(*c, fn); };
  std::visit(overloaded{
                 [&](const node::Unary& x) { v(x.operand); },
                 [&](const node::Binary& x) {
                   v(x.lhs);
                   v(x.rhs);
                 },
                 [&](const node::If& x) {
                   v(x.cond);
                   v(x.then);
                   v(x.otherwise);
                 },
                 [&](const node::Between& x) {
                   v(x.subject);
                   v(x.low);
                   v(x.high);
                 },
                 [&](const node::InList& x) {
                   v(x.subject);
                   for (const auto& i : x.items) v(i);
                 },
                 [&](const node::Aggregate& x) {
                   for (const auto& a : x.args) v(a);
                 },
                 [&](const node::Cast& x) { v(x.operand); },
                 [&](const auto&) {},
             },
             e.node);
}

bool Formula::has_references() const {
  bool found = false;
  visit_nodes(*root_, [&](const Expr& e) {
    if (!e.as<node::Literal>() && !e.as<node::Unary>() && !e.as<node::Binary>() &&
        !e.as<node::If>() && !e.as<node::Between>() && !e.as<node::InList>() &&
        !e.as<node::Aggregate>() && !e.as<node::Cast>()) {
      found = true;
    }
  });
  return found;
}

bool Formula::has_cell_references() const {
  bool found = false;
  visit_nodes(*root_, [&](const Expr& e) {
    if (e.as<node::Ref>() || e.as<node::Range>() || e.as<node::Explicit>() ||
        e.as<node::Dangling>()) {
      found = true;
    }
  });
  return found;
}

namespace {

CellRef shift(CellRef r, Position d) {
  if (!r.col.absolute) r.col.value += d.col;
  if (!r.row.absolute) r.row.value += d.row;
  return r;
}

}  // namespace

Formula shift_relative(const Formula& f, Position delta) {
  if (delta == Position{}) return f;
  return Formula(transform(f.ptr(), [&](const ExprPtr& e) -> ExprPtr {
    if (auto* r = e->as<node::Ref>()) return ref(shift(r->ref, delta));
    if (auto* r = e->as<node::Range>()) {
      return make(node::Range{shift(r->from, delta), shift(r->to, delta)});
    }
    return nullptr;
  }));
}

Formula adapt(const Formula& f, Position) { return f; }

Formula substitute_self(const Formula& f, const Formula& prior) {
  return Formula(transform(f.ptr(), [&](const ExprPtr& e) -> ExprPtr {
    if (e->as<node::SelfValue>()) return prior.ptr();
    return nullptr;
  }));
}

std::size_t node_count(const Formula& f) {
  std::size_t n = 0;
  visit_nodes(f.root(), [&](const Expr&) { ++n; });
  return n;
}

}  // namespace vizier
