#include <charconv>

#include "vizier/error.hpp"
#include "vizier/formula.hpp"
#include "vizier/lexer.hpp"

namespace vizier {

namespace {

class ExpressionParser {
 public:
  ExpressionParser(TokenStream& ts, std::optional<Position> host) : ts_(ts), host_(host) {}

  ExprPtr expression() { return parse_or(); }

 private:
  ExprPtr parse_or() {
    ExprPtr lhs = parse_and();
    while (ts_.accept_keyword("OR")) lhs = binary(BinaryOp::Or, lhs, parse_and());
    return lhs;
  }

  ExprPtr parse_and() {
    ExprPtr lhs = parse_not();
    while (ts_.accept_keyword("AND")) lhs = binary(BinaryOp::And, lhs, parse_not());
    return lhs;
  }

  ExprPtr parse_not() {
    if (ts_.accept_keyword("NOT")) return make(node::Unary{UnaryOp::Not, parse_not()});
    return parse_comparison();
  }

  std::optional<BinaryOp> comparison_op() const {
    const Token& t = ts_.peek();
    if (t.kind != TokenKind::Symbol) return std::nullopt;
    if (t.text == "=") return BinaryOp::Eq;
    if (t.text == "<>" || t.text == "!=") return BinaryOp::Ne;
    if (t.text == "<") return BinaryOp::Lt;
    if (t.text == "<=") return BinaryOp::Le;
    if (t.text == ">") return BinaryOp::Gt;
    if (t.text == ">=") return BinaryOp::Ge;
    return std::nullopt;
  }

  ExprPtr parse_comparison() {
    ExprPtr lhs = parse_concat();
    for (;;) {
      if (auto op = comparison_op()) {
        ts_.next();
        lhs = binary(*op, lhs, parse_concat());
      } else if (ts_.accept_keyword("BETWEEN")) {
        ExprPtr low = parse_concat();
        ts_.expect_keyword("AND");
        ExprPtr high = parse_concat();
        lhs = make(node::Between{lhs, low, high});
      } else if (ts_.is_keyword("IN") && ts_.is_symbol("(", 1)) {
        ts_.next();
        ts_.next();
        std::vector<ExprPtr> items;
        if (!ts_.is_symbol(")")) {
          do {
            items.push_back(expression());
          } while (ts_.accept_symbol(","));
        }
        ts_.expect_symbol(")");
        lhs = make(node::InList{lhs, std::move(items)});
      } else {
        return lhs;
      }
    }
  }

  ExprPtr parse_concat() {
    ExprPtr lhs = parse_additive();
    while (ts_.accept_symbol("||")) lhs = binary(BinaryOp::Concat, lhs, parse_additive());
    return lhs;
  }

  ExprPtr parse_additive() {
    ExprPtr lhs = parse_multiplicative();
    for (;;) {
      if (ts_.accept_symbol("+")) {
        lhs = binary(BinaryOp::Add, lhs, parse_multiplicative());
      } else if (ts_.accept_symbol("-")) {
        lhs = binary(BinaryOp::Sub, lhs, parse_multiplicative());
      } else {
        return lhs;
      }
    }
  }

  ExprPtr parse_multiplicative() {
    ExprPtr lhs = parse_unary();
    for (;;) {
      if (ts_.accept_symbol("*")) {
        lhs = binary(BinaryOp::Mul, lhs, parse_unary());
      } else if (ts_.accept_symbol("/")) {
        lhs = binary(BinaryOp::Div, lhs, parse_unary());
      } else {
        return lhs;
      }
    }
  }

  ExprPtr parse_unary() {
    if (ts_.is_symbol("-")) {
      TokenKind k = ts_.peek(1).kind;
      if (k == TokenKind::Integer || k == TokenKind::Float) {
        ts_.next();
        return make(node::Literal{number(ts_.next(), true)});
      }
      ts_.next();
      return make(node::Unary{UnaryOp::Neg, parse_unary()});
    }
    return parse_primary();
  }

  Value number(const Token& t, bool negative) {
    std::string text = (negative ? "-" : "") + t.text;
    if (t.kind == TokenKind::Integer) {
      std::int64_t v = 0;
      auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
      if (ec != std::errc() || p != text.data() + text.size()) {
        ts_.fail_at(t, "integer literal out of range");
      }
      return Value(v);
    }
    double d = 0;
    auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), d);
    if (ec != std::errc()) ts_.fail_at(t, "malformed number");
    return Value(d);
  }

  CellRef cell_ref(const Token& t) {
    std::string_view s = t.text;
    CellRef r;
    std::size_t i = 0;
    if (s[i] == '$') {
      r.col.absolute = true;
      ++i;
    }
    std::size_t letters = i;
    while (i < s.size() && std::isalpha(static_cast<unsigned char>(s[i]))) ++i;
    std::int64_t c = *column_index_from_letters(s.substr(letters, i - letters));
    if (s[i] == '$') {
      r.row.absolute = true;
      ++i;
    }
    std::int64_t row = 0;
    std::from_chars(s.data() + i, s.data() + s.size(), row);
    if (row < 1) ts_.fail_at(t, "row numbers start at 1");
    row -= 1;
    if ((!r.col.absolute || !r.row.absolute) && !host_) {
      throw Error(ErrorCode::MissingHost,
                  "relative reference " + t.text + " needs a host cell");
    }
    r.col.value = r.col.absolute ? c : c - host_->col;
    r.row.value = r.row.absolute ? row : row - host_->row;
    return r;
  }

  ExprPtr parse_primary() {
    const Token& t = ts_.peek();
    switch (t.kind) {
      case TokenKind::Integer:
      case TokenKind::Float: return make(node::Literal{number(ts_.next(), false)});
      case TokenKind::String: return lit(Value(ts_.next().text));
      case TokenKind::QuotedIdent: return col(ts_.next().text);
      case TokenKind::CellRef: {
        const Token& tok = ts_.next();
        if (ts_.is_symbol(":")) ts_.fail("ranges are only allowed inside aggregates");
        return ref(cell_ref(tok));
      }
      case TokenKind::ExplicitRef: {
        std::uint64_t id = 0;
        const Token& tok = ts_.next();
        std::from_chars(tok.text.data(), tok.text.data() + tok.text.size(), id);
        return make(node::Explicit{CellId{id}});
      }
      case TokenKind::DanglingRef: ts_.next(); return make(node::Dangling{});
      case TokenKind::Symbol:
        if (ts_.accept_symbol("(")) {
          ExprPtr inner = expression();
          ts_.expect_symbol(")");
          return inner;
        }
        break;
      case TokenKind::Identifier: return identifier();
      default: break;
    }
    ts_.fail("expected an expression");
  }

  ExprPtr identifier() {
    const Token& t = ts_.peek();
    bool call = ts_.is_symbol("(", 1);
    if (ts_.accept_keyword("TRUE")) return lit(Value(true));
    if (ts_.accept_keyword("FALSE")) return lit(Value(false));
    if (ts_.accept_keyword("NULL")) return lit(Value());
    if (ts_.accept_keyword("ROWID")) return make(node::RowIdOf{});
    if (ts_.accept_keyword("VALUE")) return make(node::SelfValue{});
    if (ts_.accept_keyword("CASE")) return case_expression();
    if (call) {
      if (ts_.accept_keyword("IF")) {
        ts_.expect_symbol("(");
        ExprPtr c = expression();
        ts_.expect_symbol(",");
        ExprPtr a = expression();
        ts_.expect_symbol(",");
        ExprPtr b = expression();
        ts_.expect_symbol(")");
        return make(node::If{c, a, b});
      }
      if (ts_.accept_keyword("CAST")) {
        ts_.expect_symbol("(");
        ExprPtr e = expression();
        ts_.expect_keyword("AS");
        CastType type = cast_type();
        ts_.expect_symbol(")");
        return make(node::Cast{e, type});
      }
      for (auto fn : {AggregateFn::Sum, AggregateFn::Avg, AggregateFn::Min, AggregateFn::Max,
                      AggregateFn::Count}) {
        if (ts_.accept_keyword(to_string(fn))) return aggregate(fn);
      }
    }
    if (is_reserved_word(t.text)) ts_.fail("unexpected keyword");
    return col(ts_.next().text);
  }

  CastType cast_type() {
    for (auto type : {CastType::Int, CastType::Float, CastType::String, CastType::Bool}) {
      if (ts_.accept_keyword(to_string(type))) return type;
    }
    if (ts_.accept_keyword("INTEGER")) return CastType::Int;
    if (ts_.accept_keyword("DOUBLE") || ts_.accept_keyword("REAL")) return CastType::Float;
    if (ts_.accept_keyword("TEXT") || ts_.accept_keyword("VARCHAR")) return CastType::String;
    if (ts_.accept_keyword("BOOLEAN")) return CastType::Bool;
    ts_.fail("expected a cast type (INT, FLOAT, STRING, BOOL)");
  }

  ExprPtr aggregate(AggregateFn fn) {
    ts_.expect_symbol("(");
    std::vector<ExprPtr> args;
    if (!ts_.is_symbol(")")) {
      do {
        if (ts_.peek().kind == TokenKind::CellRef && ts_.is_symbol(":", 1)) {
          CellRef from = cell_ref(ts_.next());
          ts_.next();
          if (ts_.peek().kind != TokenKind::CellRef) ts_.fail("expected range end");
          CellRef to = cell_ref(ts_.next());
          args.push_back(make(node::Range{from, to}));
        } else {
          args.push_back(expression());
        }
      } while (ts_.accept_symbol(","));
    }
    ts_.expect_symbol(")");
    return make(node::Aggregate{fn, std::move(args)});
  }

  ExprPtr case_expression() {
    std::vector<std::pair<ExprPtr, ExprPtr>> arms;
    while (ts_.accept_keyword("WHEN")) {
      ExprPtr c = expression();
      ts_.expect_keyword("THEN");
      arms.emplace_back(c, expression());
    }
    if (arms.empty()) ts_.fail("expected WHEN");
    ExprPtr otherwise = lit(Value());
    if (ts_.accept_keyword("ELSE")) otherwise = expression();
    ts_.expect_keyword("END");
    for (auto it = arms.rbegin(); it != arms.rend(); ++it) {
      otherwise = make(node::If{it->first, it->second, otherwise});
    }
    return otherwise;
  }

  TokenStream& ts_;
  std::optional<Position> host_;
};

}  // namespace

Formula parse_expression(TokenStream& tokens, std::optional<Position> host) {
  return Formula(ExpressionParser(tokens, host).expression());
}

Formula parse_expression(std::string_view text, std::optional<Position> host) {
  TokenStream ts(tokenize(text));
  Formula f = parse_expression(ts, host);
  if (!ts.at_end()) ts.fail("unexpected trailing input");
  return f;
}

Formula parse_formula(std::string_view text, std::optional<Position> host) {
  if (!text.empty() && text.front() == '=') return parse_expression(text.substr(1), host);
  return Formula::literal(infer_literal(text));
}

}  // namespace vizier
