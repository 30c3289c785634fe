#include <cmath>

#include "vizier/error.hpp"
#include "vizier/formula.hpp"
#include "vizier/lexer.hpp"
#include "vizier/sheet.hpp"

namespace vizier {

namespace {

enum Prec : int { kOr = 1, kAnd, kNot, kCmp, kConcat, kAdd, kMul, kNeg, kPrimary };

int binary_prec(BinaryOp op) {
  switch (op) {
    case BinaryOp::Or: return kOr;
    case BinaryOp::And: return kAnd;
    case BinaryOp::Concat: return kConcat;
    case BinaryOp::Add:
    case BinaryOp::Sub: return kAdd;
    case BinaryOp::Mul:
    case BinaryOp::Div: return kMul;
    default: return kCmp;
  }
}

int prec(const Expr& e) {
  if (auto* b = e.as<node::Binary>()) return binary_prec(b->op);
  if (auto* u = e.as<node::Unary>()) return u->op == UnaryOp::Not ? kNot : kNeg;
  if (e.as<node::Between>() || e.as<node::InList>()) return kCmp;
  if (auto* l = e.as<node::Literal>()) {
    // A negative number literal behaves like a unary minus when it is the
    // right operand of '-' or '*'; treat it as such for parenthesization.
    if ((l->value.is_int() && l->value.as_int() < 0) ||
        (l->value.is_float() && std::signbit(l->value.as_float()))) {
      return kNeg;
    }
  }
  return kPrimary;
}

enum class Style { A1, Offsets };

class Renderer {
 public:
  Renderer(Position host, const CoordinateSystem* coords, RenderMode mode, Style style,
           bool compact = false)
      : host_(host), coords_(coords), mode_(mode), style_(style), compact_(compact) {}

  std::string render(const Expr& e) {
    std::string out;
    emit(e, out);
    return out;
  }

 private:
  void child(const Expr& e, int min_prec, std::string& out) {
    if (prec(e) < min_prec) {
      out += '(';
      emit(e, out);
      out += ')';
    } else {
      emit(e, out);
    }
  }

  void cell_ref(const CellRef& r, std::string& out) {
    if (style_ == Style::Offsets) {
      auto axis = [&](char tag, const Axis& a) {
        out += tag;
        out += a.absolute ? std::to_string(a.value + 1) : "[" + std::to_string(a.value) + "]";
      };
      axis('R', r.row);
      axis('C', r.col);
      return;
    }
    Position t = r.target(host_);
    if (t.col < 0 || t.row < 0) {
      out += "#REF!";
      return;
    }
    if (r.col.absolute) out += '$';
    out += column_letters(t.col);
    if (r.row.absolute) out += '$';
    out += std::to_string(t.row + 1);
  }

  void emit(const Expr& e, std::string& out) {
    if (auto* l = e.as<node::Literal>()) {
      out += literal_text(l->value);
    } else if (auto* r = e.as<node::Ref>()) {
      cell_ref(r->ref, out);
    } else if (auto* x = e.as<node::Explicit>()) {
      if (mode_ == RenderMode::Display && style_ == Style::A1) {
        std::optional<Position> p = coords_ ? coords_->position_of(x->id) : std::nullopt;
        if (!p) {
          throw Error(ErrorCode::UnresolvedRef,
                      "cell @" + std::to_string(x->id.value) + " has no position");
        }
        out += a1_text(*p);
      } else {
        out += "@" + std::to_string(x->id.value);
      }
    } else if (e.as<node::Dangling>()) {
      out += "#REF!";
    } else if (auto* c = e.as<node::Column>()) {
      out += quote_identifier(c->name);
    } else if (e.as<node::RowIdOf>()) {
      out += "ROWID";
    } else if (e.as<node::SelfValue>()) {
      out += "VALUE";
    } else if (auto* rg = e.as<node::Range>()) {
      cell_ref(rg->from, out);
      out += ':';
      cell_ref(rg->to, out);
    } else if (auto* u = e.as<node::Unary>()) {
      if (u->op == UnaryOp::Not) {
        out += "NOT ";
        child(*u->operand, kNot, out);
      } else {
        out += '-';
        // Keep -(5) distinct from the literal -5 and avoid "--" comments.
        if (u->operand->as<node::Literal>() || prec(*u->operand) <= kNeg) {
          out += '(';
          emit(*u->operand, out);
          out += ')';
        } else {
          emit(*u->operand, out);
        }
      }
    } else if (auto* b = e.as<node::Binary>()) {
      int p = binary_prec(b->op);
      // Cell entries print arithmetic tight, as spreadsheets do: =B2+C1.
      bool tight = compact_ && (p == kAdd || p == kMul);
      std::string rhs;
      child(*b->rhs, p + 1, rhs);
      // "--" would start a comment
      if (tight && b->op == BinaryOp::Sub && rhs.front() == '-') tight = false;
      child(*b->lhs, p, out);
      if (!tight) out += ' ';
      out += to_string(b->op);
      if (!tight) out += ' ';
      out += rhs;
    } else if (auto* f = e.as<node::If>()) {
      out += "IF(";
      emit(*f->cond, out);
      out += ", ";
      emit(*f->then, out);
      out += ", ";
      emit(*f->otherwise, out);
      out += ')';
    } else if (auto* bt = e.as<node::Between>()) {
      child(*bt->subject, kCmp, out);
      out += " BETWEEN ";
      child(*bt->low, kConcat, out);
      out += " AND ";
      child(*bt->high, kConcat, out);
    } else if (auto* in = e.as<node::InList>()) {
      child(*in->subject, kCmp, out);
      out += " IN (";
      for (std::size_t i = 0; i < in->items.size(); ++i) {
        if (i) out += ", ";
        emit(*in->items[i], out);
      }
      out += ')';
    } else if (auto* a = e.as<node::Aggregate>()) {
      out += to_string(a->fn);
      out += '(';
      for (std::size_t i = 0; i < a->args.size(); ++i) {
        if (i) out += ", ";
        emit(*a->args[i], out);
      }
      out += ')';
    } else if (auto* c = e.as<node::Cast>()) {
      out += "CAST(";
      emit(*c->operand, out);
      out += " AS ";
      out += to_string(c->type);
      out += ')';
    }
  }

  Position host_;
  const CoordinateSystem* coords_;
  RenderMode mode_;
  Style style_;
  bool compact_;
};

}  // namespace

std::string render_expression(const Formula& f, Position host, const CoordinateSystem* coords,
                              RenderMode mode) {
  return Renderer(host, coords, mode, Style::A1).render(f.root());
}

std::string render_formula(const Formula& f, Position host, const CoordinateSystem* coords,
                           RenderMode mode) {
  if (auto* l = f.root().as<node::Literal>()) {
    const Value& v = l->value;
    if (v.is_null()) return "";
    if (v.is_string()) {
      const std::string& s = v.as_string();
      if (!s.empty() && s.front() != '=' && infer_literal(s) == v) return s;
      return "=" + quote_string(s);
    }
    if (!v.is_error()) return display(v);
  }
  return "=" + Renderer(host, coords, mode, Style::A1, true).render(f.root());
}

std::string relative_normal_form(const Formula& f) {
  return Renderer({}, nullptr, RenderMode::Canonical, Style::Offsets).render(f.root());
}

}  // namespace vizier
