#include "vizier/gesture.hpp"

#include <algorithm>

#include "vizier/error.hpp"

namespace vizier {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

class Translator {
 public:
  Translator(const SheetState& state, std::uint64_t group) : st_(state), group_(group) {}

  std::vector<Statement> operator()(const gesture::EditCell& g) {
    check(Rect{g.at, g.at});
    emit(single(g.at, parse_formula(g.text, g.at)));
    return std::move(out_);
  }

  std::vector<Statement> operator()(const gesture::Typecast& g) {
    check(g.region);
    stmt::UpdateRegion u;
    u.region = identity(g.region);
    u.formula = Formula(make(node::Cast{make(node::SelfValue{}), g.type}));
    emit(std::move(u));
    return std::move(out_);
  }

  std::vector<Statement> operator()(const gesture::CopyPaste& g) {
    paste(g.source, g.target);
    return std::move(out_);
  }

  std::vector<Statement> operator()(const gesture::Fill& g) {
    check(g.source);
    check(g.target);
    if (g.source.width() == 1 && g.source.height() == 1) {
      // One formula over the whole target: a single region update.
      const Cell& src = st_.cell_at_checked(g.source.first);
      stmt::UpdateRegion u;
      u.region = identity(g.target);
      u.formula = stored(src.formula, g.target.first);
      emit(std::move(u));
    } else {
      paste(g.source, g.target);
    }
    return std::move(out_);
  }

  std::vector<Statement> operator()(const gesture::CutPaste& g) {
    check(g.source);
    check(Rect{g.target, g.target + Position{g.source.width() - 1, g.source.height() - 1}});
    stmt::MoveCells m;
    for (std::int64_t c = g.source.first.col; c <= g.source.last.col; ++c) {
      m.columns.push_back(column_name(c));
    }
    for (std::int64_t r = g.source.first.row; r <= g.source.last.row; ++r) {
      m.rows.push_back(rowid(r));
    }
    m.to_column = column_name(g.target.col);
    m.to_row = rowid(g.target.row);
    emit(std::move(m));
    return std::move(out_);
  }

  std::vector<Statement> operator()(const gesture::DragRows& g) {
    if (g.rows.empty()) throw Error(ErrorCode::EmptyTarget, "no rows to drag");
    auto all = st_.coords().rows();
    std::vector<std::uint64_t> before;
    for (RowId r : all) before.push_back(r.value);
    for (std::uint64_t r : g.rows) {
      if (!st_.coords().row_index(RowId{r})) {
        throw Error(ErrorCode::UnknownRowId, "unknown rowid " + std::to_string(r));
      }
    }
    auto after = moved(before, g.rows, g.destination);
    stmt::ReorderRows r;
    for (std::size_t i = 0; i < before.size(); ++i) {
      if (before[i] != after[i]) r.rows.push_back(after[i]);
    }
    if (!r.rows.empty()) emit(std::move(r));
    return std::move(out_);
  }

  std::vector<Statement> operator()(const gesture::DragColumns& g) {
    if (g.columns.empty()) throw Error(ErrorCode::EmptyTarget, "no columns to drag");
    std::vector<std::string> before = st_.column_names();
    for (const auto& c : g.columns) {
      if (std::find(before.begin(), before.end(), c) == before.end()) {
        throw Error(ErrorCode::UnknownColumn, "unknown column '" + c + "'");
      }
    }
    auto after = moved(before, g.columns, g.destination);
    stmt::ReorderColumns r;
    for (std::size_t i = 0; i < before.size(); ++i) {
      if (before[i] != after[i]) r.columns.push_back(after[i]);
    }
    if (!r.columns.empty()) emit(std::move(r));
    return std::move(out_);
  }

  std::vector<Statement> operator()(const gesture::InsertRow& g) {
    stmt::InsertRow ins;
    ins.at = std::clamp<std::int64_t>(g.index + (g.after ? 1 : 0), 0, st_.coords().row_count()) + 1;
    emit(std::move(ins));
    return std::move(out_);
  }

  std::vector<Statement> operator()(const gesture::InsertColumn& g) {
    stmt::AddColumn a;
    a.name = g.name;
    if (a.name.empty()) {
      auto names = st_.column_names();
      for (int k = 1;; ++k) {
        a.name = "column" + std::to_string(k);
        if (std::find(names.begin(), names.end(), a.name) == names.end()) break;
      }
    }
    a.at = std::clamp<std::int64_t>(g.index + (g.after ? 1 : 0), 0,
                                    st_.coords().column_count()) + 1;
    emit(std::move(a));
    return std::move(out_);
  }

  std::vector<Statement> operator()(const gesture::DeleteRows& g) {
    check(g.region);
    std::vector<ExprPtr> ids;
    for (std::int64_t r = g.region.first.row; r <= g.region.last.row; ++r) {
      ids.push_back(lit(Value(static_cast<std::int64_t>(rowid(r)))));
    }
    ExprPtr rid = make(node::RowIdOf{});
    ExprPtr cond = ids.size() == 1 ? binary(BinaryOp::Eq, rid, ids[0])
                                   : make(node::InList{rid, std::move(ids)});
    emit(stmt::Delete{Formula(cond)});
    return std::move(out_);
  }

  std::vector<Statement> operator()(const gesture::Sort& g) {
    if (g.keys.empty()) throw Error(ErrorCode::EmptyTarget, "no sort keys");
    emit(stmt::SortRows{g.keys});
    return std::move(out_);
  }

  std::vector<Statement> operator()(const gesture::Filter& g) {
    Formula pred = parse_expression(g.predicate, Position{0, 0});
    emit(stmt::Delete{Formula(make(node::Unary{UnaryOp::Not, pred.ptr()}))});
    return std::move(out_);
  }

 private:
  void check(const Rect& r) const {
    if (r.width() <= 0 || r.height() <= 0) {
      throw Error(ErrorCode::EmptyTarget, "the selection is empty");
    }
    if (!st_.coords().in_bounds(r.first) || !st_.coords().in_bounds(r.last)) {
      throw Error(ErrorCode::InvalidArgument,
                  "selection " + a1_text(r.first) + ":" + a1_text(r.last) +
                      " is outside the sheet");
    }
  }

  std::string column_name(std::int64_t c) const {
    return st_.coords().columns()[static_cast<std::size_t>(c)].name;
  }

  std::uint64_t rowid(std::int64_t r) const {
    return st_.coords().rows()[static_cast<std::size_t>(r)].value;
  }

  // Script formulas are stored as if hosted at A1.
  static Formula stored(const Formula& f, Position host) { return shift_relative(f, host); }

  stmt::Update single(Position at, const Formula& f) const {
    stmt::Update u;
    u.column = column_name(at.col);
    u.formula = stored(f, at);
    u.where = Formula(binary(BinaryOp::Eq, make(node::RowIdOf{}),
                             lit(Value(static_cast<std::int64_t>(rowid(at.row))))));
    return u;
  }

  RegionTarget identity(const Rect& r) const {
    RegionTarget t;
    t.columns.emplace();
    t.rows.emplace();
    for (std::int64_t c = r.first.col; c <= r.last.col; ++c) t.columns->push_back(column_name(c));
    for (std::int64_t row = r.first.row; row <= r.last.row; ++row) t.rows->push_back(rowid(row));
    return t;
  }

  void paste(const Rect& source, const Rect& target) {
    check(source);
    check(target);
    for (std::int64_t r = 0; r < target.height(); ++r) {
      for (std::int64_t c = 0; c < target.width(); ++c) {
        Position src = source.first + Position{c % source.width(), r % source.height()};
        Position dst = target.first + Position{c, r};
        const Cell& cell = st_.cell_at_checked(src);
        emit(single(dst, adapt(cell.formula, dst - src)));
      }
    }
  }

  template <class T>
  static std::vector<T> moved(const std::vector<T>& order, const std::vector<T>& items,
                              std::int64_t destination) {
    std::vector<T> rest;
    std::int64_t dest = destination;
    for (std::size_t i = 0; i < order.size(); ++i) {
      bool dragged = std::find(items.begin(), items.end(), order[i]) != items.end();
      if (dragged) {
        if (static_cast<std::int64_t>(i) < destination) --dest;
      } else {
        rest.push_back(order[i]);
      }
    }
    std::vector<T> dragged_in_order;
    for (const T& x : order) {
      if (std::find(items.begin(), items.end(), x) != items.end()) dragged_in_order.push_back(x);
    }
    dest = std::clamp<std::int64_t>(dest, 0, static_cast<std::int64_t>(rest.size()));
    rest.insert(rest.begin() + dest, dragged_in_order.begin(), dragged_in_order.end());
    return rest;
  }

  void emit(Statement::Body body) {
    Statement s;
    s.body = std::move(body);
    s.group = group_;
    out_.push_back(std::move(s));
  }

  const SheetState& st_;
  std::uint64_t group_;
  std::vector<Statement> out_;
};

}  // namespace

std::vector<Statement> gesture_to_statements(const Gesture& g, const SheetState& state,
                                             std::uint64_t group) {
  Translator t(state, group);
  return std::visit(t, g);
}

}  // namespace vizier
