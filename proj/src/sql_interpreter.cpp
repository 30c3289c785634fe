#include <algorithm>
#include <optional>

#include "vizier/error.hpp"
#include "vizier/evaluate.hpp"
#include "vizier/lexer.hpp"
#include "vizier/sql.hpp"

namespace vizier {

namespace {

const std::string kRowId = "ROWID";

struct Item {
  enum class Kind { Star, Count, Expr, Window } kind = Kind::Expr;
  ExprPtr expr;
  ExprPtr window_order;
  std::string alias;
};

struct Query;

struct Select {
  std::vector<Item> items;
  std::string load;                // FROM LOAD('path')
  std::shared_ptr<Query> subquery;  // FROM (query)
  ExprPtr where;
};

struct OrderTerm {
  ExprPtr expr;
  bool descending = false;
  bool nulls_first = false;
};

struct Query {
  std::vector<Select> selects;  // UNION ALL
  std::vector<OrderTerm> order;
};

class Parser {
 public:
  explicit Parser(std::string_view sql) : ts_(tokenize(sql)) {}

  Query parse() {
    Query q = query();
    if (!ts_.at_end()) ts_.fail("unexpected trailing input");
    return q;
  }

 private:
  ExprPtr expression() { return parse_expression(ts_, std::nullopt).ptr(); }

  Query query() {
    Query q;
    q.selects.push_back(select());
    while (ts_.accept_keyword("UNION")) {
      ts_.expect_keyword("ALL");
      q.selects.push_back(select());
    }
    if (ts_.accept_keyword("ORDER")) {
      ts_.expect_keyword("BY");
      do {
        OrderTerm t;
        t.expr = expression();
        if (ts_.accept_keyword("DESC")) {
          t.descending = true;
        } else {
          ts_.accept_keyword("ASC");
        }
        if (ts_.accept_keyword("NULLS")) {
          if (ts_.accept_keyword("FIRST")) {
            t.nulls_first = true;
          } else {
            ts_.expect_keyword("LAST");
          }
        }
        q.order.push_back(std::move(t));
      } while (ts_.accept_symbol(","));
    }
    return q;
  }

  Select select() {
    Select s;
    ts_.expect_keyword("SELECT");
    do {
      s.items.push_back(item());
    } while (ts_.accept_symbol(","));
    if (ts_.accept_keyword("FROM")) {
      if (ts_.accept_keyword("LOAD")) {
        ts_.expect_symbol("(");
        if (ts_.peek().kind != TokenKind::String) ts_.fail("expected a quoted path");
        s.load = ts_.next().text;
        ts_.expect_symbol(")");
      } else {
        ts_.expect_symbol("(");
        s.subquery = std::make_shared<Query>(query());
        ts_.expect_symbol(")");
      }
    }
    if (ts_.accept_keyword("WHERE")) s.where = expression();
    return s;
  }

  Item item() {
    Item it;
    if (ts_.accept_symbol("*")) {
      it.kind = Item::Kind::Star;
      return it;
    }
    if (ts_.is_keyword("COUNT") && ts_.is_symbol("(", 1) && ts_.is_symbol("*", 2)) {
      ts_.next();
      ts_.next();
      ts_.next();
      ts_.expect_symbol(")");
      it.kind = Item::Kind::Count;
      it.alias = "COUNT(*)";
    } else {
      it.expr = expression();
      if (ts_.accept_keyword("OVER")) {
        auto* agg = it.expr->as<node::Aggregate>();
        if (!agg || agg->fn != AggregateFn::Sum || agg->args.size() != 1) {
          ts_.fail("only SUM(expr) supports OVER");
        }
        it.kind = Item::Kind::Window;
        it.expr = agg->args[0];
        ts_.expect_symbol("(");
        ts_.expect_keyword("ORDER");
        ts_.expect_keyword("BY");
        it.window_order = expression();
        ts_.expect_keyword("ROWS");
        ts_.expect_keyword("BETWEEN");
        ts_.expect_keyword("UNBOUNDED");
        ts_.expect_keyword("PRECEDING");
        ts_.expect_keyword("AND");
        ts_.expect_keyword("CURRENT");
        ts_.expect_keyword("ROW");
        ts_.expect_symbol(")");
      }
      if (auto* c = it.expr->as<node::Column>(); c && it.kind == Item::Kind::Expr) {
        it.alias = c->name;
      } else if (it.expr->as<node::RowIdOf>() && it.kind == Item::Kind::Expr) {
        it.alias = kRowId;
      }
    }
    if (ts_.accept_keyword("AS")) {
      const Token& t = ts_.next();
      if (t.kind != TokenKind::Identifier && t.kind != TokenKind::QuotedIdent) {
        ts_.fail_at(t, "expected a column alias");
      }
      it.alias = t.text;
    }
    if (it.alias.empty()) it.alias = "_c";
    return it;
  }

  TokenStream ts_;
};

class RowResolver : public ReferenceResolver {
 public:
  RowResolver(const std::vector<std::string>& columns, const std::vector<Value>& row,
              const RowResolver* outer = nullptr)
      : columns_(columns), row_(row), outer_(outer) {}

  std::optional<Value> find(std::string_view name) const {
    for (std::size_t i = 0; i < columns_.size(); ++i) {
      if (columns_[i] == name) return row_[i];
    }
    for (std::size_t i = 0; i < columns_.size(); ++i) {
      if (iequals(columns_[i], name)) return row_[i];
    }
    return outer_ ? outer_->find(name) : std::nullopt;
  }

  Value column(std::string_view name) const override {
    if (auto v = find(name)) return *v;
    throw Error(ErrorCode::UnknownColumn, "unknown column '" + std::string(name) + "' in query");
  }

  Value row_id() const override { return column(kRowId); }

 private:
  const std::vector<std::string>& columns_;
  const std::vector<Value>& row_;
  const RowResolver* outer_;
};

Value eval(const ExprPtr& e, const Relation& r, std::size_t row) {
  return evaluate_expr(*e, RowResolver(r.columns, r.rows[row]));
}

class Interpreter {
 public:
  explicit Interpreter(const TableProvider& tables) : tables_(tables) {}

  Relation run(const Query& q) {
    Relation out;
    // A lone SELECT may order by columns of its input it does not project.
    std::vector<std::vector<Value>> keys;
    bool early = q.selects.size() == 1 && !q.order.empty();
    for (std::size_t i = 0; i < q.selects.size(); ++i) {
      Relation part = select(q.selects[i], early ? &q.order : nullptr, &keys);
      if (i == 0) {
        out = std::move(part);
        continue;
      }
      if (part.columns.size() != out.columns.size()) {
        throw Error(ErrorCode::InvalidArgument, "UNION ALL branches differ in width");
      }
      for (auto& row : part.rows) out.rows.push_back(std::move(row));
    }
    if (!q.order.empty()) {
      if (!early || keys.size() != out.rows.size()) {
        keys.assign(out.rows.size(), {});
        for (std::size_t r = 0; r < out.rows.size(); ++r) {
          for (const OrderTerm& t : q.order) keys[r].push_back(eval(t.expr, out, r));
        }
      }
      sort(out, keys, q.order);
    }
    return out;
  }

 private:
  Relation from(const Select& s) {
    if (s.subquery) return run(*s.subquery);
    if (!s.load.empty()) return tables_(s.load);
    Relation unit;
    unit.rows.emplace_back();
    return unit;
  }

  Relation select(const Select& s, const std::vector<OrderTerm>* order = nullptr,
                  std::vector<std::vector<Value>>* keys = nullptr) {
    Relation in = from(s);
    std::vector<std::size_t> rows;
    for (std::size_t r = 0; r < in.rows.size(); ++r) {
      if (!s.where || eval(s.where, in, r).is_true()) rows.push_back(r);
    }
    bool count_only = std::any_of(s.items.begin(), s.items.end(),
                                  [](const Item& i) { return i.kind == Item::Kind::Count; });
    Relation out;
    if (count_only) {
      if (s.items.size() != 1) throw Error(ErrorCode::InvalidArgument, "COUNT(*) must stand alone");
      out.columns.push_back(s.items[0].alias);
      out.rows.push_back({Value(static_cast<std::int64_t>(rows.size()))});
      return out;
    }
    auto rowid = std::find(in.columns.begin(), in.columns.end(), kRowId);
    bool carry = false;
    std::vector<std::vector<Value>> columns_out;
    for (const Item& it : s.items) {
      if (it.kind == Item::Kind::Star) {
        for (std::size_t c = 0; c < in.columns.size(); ++c) {
          if (in.columns[c] == kRowId) {
            carry = true;
            continue;
          }
          out.columns.push_back(in.columns[c]);
          std::vector<Value> v;
          for (std::size_t r : rows) v.push_back(in.rows[r][c]);
          columns_out.push_back(std::move(v));
        }
      } else if (it.kind == Item::Kind::Window) {
        out.columns.push_back(it.alias);
        columns_out.push_back(window(it, in, rows));
      } else {
        out.columns.push_back(it.alias);
        std::vector<Value> v;
        for (std::size_t r : rows) v.push_back(eval(it.expr, in, r));
        columns_out.push_back(std::move(v));
      }
    }
    if (carry && rowid != in.columns.end()) {
      std::size_t c = static_cast<std::size_t>(rowid - in.columns.begin());
      out.columns.push_back(kRowId);
      std::vector<Value> v;
      for (std::size_t r : rows) v.push_back(in.rows[r][c]);
      columns_out.push_back(std::move(v));
    }
    out.rows.assign(rows.size(), {});
    for (std::size_t r = 0; r < rows.size(); ++r) {
      for (auto& col : columns_out) out.rows[r].push_back(std::move(col[r]));
    }
    if (order) {
      keys->assign(rows.size(), {});
      for (std::size_t r = 0; r < rows.size(); ++r) {
        RowResolver input(in.columns, in.rows[rows[r]]);
        RowResolver both(out.columns, out.rows[r], &input);
        for (const OrderTerm& t : *order) (*keys)[r].push_back(evaluate_expr(*t.expr, both));
      }
    }
    return out;
  }

  static std::vector<Value> window(const Item& it, const Relation& in,
                                   const std::vector<std::size_t>& rows) {
    std::vector<std::size_t> order(rows.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::vector<Value> keys;
    for (std::size_t r : rows) keys.push_back(eval(it.window_order, in, r));
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return collate(keys[a], keys[b]) < 0; });
    std::vector<Value> out(rows.size());
    std::vector<Value> seen;
    for (std::size_t i : order) {
      seen.push_back(eval(it.expr, in, rows[i]));
      out[i] = apply_aggregate(AggregateFn::Sum, seen);
    }
    return out;
  }

  static void sort(Relation& r, const std::vector<std::vector<Value>>& keys,
                   const std::vector<OrderTerm>& terms) {
    std::vector<std::size_t> order(r.rows.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      for (std::size_t k = 0; k < terms.size(); ++k) {
        const Value& x = keys[a][k];
        const Value& y = keys[b][k];
        if (x.is_null() || y.is_null()) {
          if (x.is_null() && y.is_null()) continue;
          return x.is_null() == terms[k].nulls_first;
        }
        int c = collate(x, y);
        if (c != 0) return terms[k].descending ? c > 0 : c < 0;
      }
      return false;
    });
    std::vector<std::vector<Value>> rows;
    rows.reserve(order.size());
    for (std::size_t i : order) rows.push_back(std::move(r.rows[i]));
    r.rows = std::move(rows);
  }

  const TableProvider& tables_;
};

}  // namespace

Relation run_sql(std::string_view sql, const TableProvider& tables) {
  Query q = Parser(sql).parse();
  Relation out = Interpreter(tables).run(q);
  auto it = std::find(out.columns.begin(), out.columns.end(), kRowId);
  if (it != out.columns.end()) {
    std::size_t c = static_cast<std::size_t>(it - out.columns.begin());
    out.columns.erase(it);
    for (auto& row : out.rows) row.erase(row.begin() + static_cast<std::ptrdiff_t>(c));
  }
  return out;
}

Relation to_relation(const SheetState& state) {
  Relation out;
  out.columns = state.column_names();
  const auto& cs = state.coords();
  for (std::int64_t r = 0; r < cs.row_count(); ++r) {
    std::vector<Value> row;
    for (std::int64_t c = 0; c < cs.column_count(); ++c) {
      row.push_back(state.cell_at_checked({c, r}).value);
    }
    out.rows.push_back(std::move(row));
  }
  return out;
}

TableProvider csv_table_provider(const SourceResolver& resolve) {
  return [resolve](const std::string& path) {
    Statement s;
    s.body = stmt::Load{path};
    SheetState st = resolve(s);
    Relation r = to_relation(st);
    r.columns.push_back(kRowId);
    const auto& rows = st.coords().rows();
    for (std::size_t i = 0; i < r.rows.size(); ++i) {
      r.rows[i].push_back(Value(static_cast<std::int64_t>(rows[i].value)));
    }
    return r;
  };
}

TableProvider csv_file_provider(const std::string& base_dir) {
  return csv_table_provider(file_source_resolver(base_dir));
}

}  // namespace vizier
