#include <algorithm>
#include <map>
#include <set>

#include <json.hpp>

#include "vizier/error.hpp"
#include "vizier/lexer.hpp"
#include "vizier/sql.hpp"

namespace vizier {

namespace {

// Column-node markers used in the symbolic per-branch trees.
const std::string kSource = "\x01S";  // column of the LOAD source
const std::string kLive = "\x01L";    // current formula of a script column
const std::string kCount = "\x01N";   // row count of the source (__n)
const std::string kWindow = "\x01W";  // running-sum column of the subquery

bool has_prefix(const std::string& s, const std::string& p) { return s.rfind(p, 0) == 0; }

// ---------------------------------------------------------------------------
// SQL rendering

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
    if ((l->value.is_int() && l->value.as_int() < 0) ||
        (l->value.is_float() && std::signbit(l->value.as_float()))) {
      return kNeg;
    }
  }
  return kPrimary;
}

class SqlRenderer {
 public:
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

  void emit(const Expr& e, std::string& out) {
    if (auto* l = e.as<node::Literal>()) {
      if (l->value.is_error()) {
        throw Error(ErrorCode::UnsupportedPattern,
                    "error value " + display(l->value) + " has no SQL form");
      }
      out += l->value.is_null() ? "NULL" : literal_text(l->value);
    } else if (auto* c = e.as<node::Column>()) {
      if (has_prefix(c->name, kSource)) {
        out += quote_identifier(c->name.substr(kSource.size()));
      } else if (c->name == kCount) {
        out += "__n";
      } else if (has_prefix(c->name, kWindow)) {
        // SUM skips nulls; a spreadsheet running sum turns null at the first one.
        std::string id = c->name.substr(kWindow.size());
        out += "CASE WHEN __z" + id + " = 0 THEN __w" + id + " ELSE NULL END";
      } else if (has_prefix(c->name, kLive)) {
        throw Error(ErrorCode::InvalidArgument, "unresolved column in SQL rendering");
      } else {
        out += quote_identifier(c->name);
      }
    } else if (e.as<node::RowIdOf>()) {
      out += "ROWID";
    } else if (auto* u = e.as<node::Unary>()) {
      if (u->op == UnaryOp::Not) {
        out += "NOT ";
        child(*u->operand, kNot, out);
      } else {
        out += '-';
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
      child(*b->lhs, p, out);
      out += ' ';
      out += to_string(b->op);
      out += ' ';
      child(*b->rhs, p + 1, out);
    } else if (e.as<node::If>()) {
      out += "CASE";
      const Expr* cur = &e;
      while (auto* f = cur->as<node::If>()) {
        out += " WHEN ";
        emit(*f->cond, out);
        out += " THEN ";
        emit(*f->then, out);
        cur = f->otherwise.get();
      }
      out += " ELSE ";
      emit(*cur, out);
      out += " END";
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
    } else if (auto* c = e.as<node::Cast>()) {
      out += "CAST(";
      emit(*c->operand, out);
      out += " AS ";
      out += to_string(c->type);
      out += ')';
    } else if (e.as<node::Aggregate>()) {
      throw Error(ErrorCode::PositionalNotCompilable, "aggregates are not row-local");
    } else if (e.as<node::SelfValue>()) {
      throw Error(ErrorCode::InvalidArgument, "VALUE outside an update");
    } else {
      throw Error(ErrorCode::PositionalNotCompilable,
                  "cell references are not row-local; use compile_positional");
    }
  }
};

std::string sql_text(const ExprPtr& e) { return SqlRenderer().render(*e); }

// ---------------------------------------------------------------------------
// Symbolic compilation

struct ColumnSlot {
  int key;
  std::string name;
};

struct Branch {
  bool base = true;
  std::int64_t insert_ordinal = 0;  // k for the k-th inserted row
  std::map<int, ExprPtr> trees;
  std::vector<ExprPtr> keep;  // every condition must hold for the row to stay
  std::vector<ExprPtr> keys;  // extra leading order keys (snapshots)
  bool dead = false;
};

struct OrderKey {
  bool descending = false;
};

struct Window {
  int id;
  ExprPtr summand;  // resolved, per base row
  ExprPtr raw;      // accumulated term with live references
  ExprPtr term;     // raw as resolved when the window was created
};

class Compiler {
 public:
  Compiler(const Script& script, const SourceSchemas& schemas, bool positional)
      : script_(script), positional_(positional) {
    auto* load = script.source.as<stmt::Load>();
    if (!load) {
      throw Error(ErrorCode::InvalidArgument, "only LOAD sources can be compiled to SQL");
    }
    if (!load->header || !load->infer_types) {
      throw Error(ErrorCode::InvalidArgument, "LOAD OPTIONS have no SQL form");
    }
    source_ = load->path;
    auto it = schemas.find(source_);
    if (it == schemas.end()) {
      throw Error(ErrorCode::Io, "no schema for source '" + source_ + "'");
    }
    Branch base;
    for (const std::string& name : it->second) {
      int key = next_key_++;
      columns_.push_back({key, name});
      base.trees[key] = col(kSource + name);
    }
    branches_.push_back(std::move(base));
    for (const Statement& s : script.statements) {
      if (s.as<stmt::SortRows>() || s.as<stmt::ReorderRows>()) ordered_ = true;
      if (auto* ins = s.as<stmt::InsertRow>(); ins && ins->at) insert_at_ = true;
    }
    if (ordered_ && insert_at_) {
      throw Error(ErrorCode::PositionalNotCompilable,
                  "INSERT ROW ... AT combined with row ordering has no set-based form");
    }
  }

  SqlQuery run() {
    for (const Statement& s : script_.statements) {
      current_ = &s;
      if (!windows_.empty() && row_structural(s)) {
        throw Error(ErrorCode::PositionalNotCompilable,
                    "statement " + std::to_string(s.index) +
                        ": row edits after a running accumulation");
      }
      std::visit([&](const auto& body) { apply(body); }, s.body);
    }
    return assemble();
  }

 private:
  static bool row_structural(const Statement& s) {
    return s.as<stmt::InsertRow>() || s.as<stmt::Delete>() || s.as<stmt::ReorderRows>() ||
           s.as<stmt::SortRows>() || s.as<stmt::MoveCells>();
  }

  [[noreturn]] void positional_error(const Formula&) const {
    throw Error(ErrorCode::PositionalNotCompilable,
                "statement " + std::to_string(current_->index) + " (" +
                    render_statement(*current_) +
                    ") uses cell references; use compile_positional");
  }

  [[noreturn]] void unsupported(const std::string& why) const {
    throw Error(ErrorCode::UnsupportedPattern,
                "statement " + std::to_string(current_->index) + ": " + why);
  }

  std::int64_t column_position(const std::string& name) const {
    for (std::size_t i = 0; i < columns_.size(); ++i) {
      if (columns_[i].name == name) return static_cast<std::int64_t>(i);
    }
    for (std::size_t i = 0; i < columns_.size(); ++i) {
      if (iequals(columns_[i].name, name)) return static_cast<std::int64_t>(i);
    }
    throw Error(ErrorCode::UnknownColumn, "unknown column '" + name + "'");
  }

  int column_key(const std::string& name) const {
    return columns_[static_cast<std::size_t>(column_position(name))].key;
  }

  bool rows_natural() const { return !row_structure_changed_; }

  // Formula (hosted at `host`, a target cell) -> symbolic tree with live
  // references. `self` replaces VALUE.
  ExprPtr symbolic(const Formula& f, Position host, const ExprPtr& self) {
    return transform(f.ptr(), [&](const ExprPtr& e) -> ExprPtr {
      if (auto* c = e->as<node::Column>()) return col(kLive + std::to_string(column_key(c->name)));
      if (e->as<node::SelfValue>()) {
        if (!self) unsupported("VALUE is only meaningful in an update");
        return self;
      }
      if (auto* r = e->as<node::Ref>()) {
        if (!positional_) positional_error(f);
        Position t = r->ref.target(host);
        if (r->ref.row.absolute || t.row != host.row) positional_error(f);
        if (t.col < 0 || t.col >= static_cast<std::int64_t>(columns_.size())) {
          unsupported("reference outside the sheet");
        }
        return col(kLive + std::to_string(columns_[static_cast<std::size_t>(t.col)].key));
      }
      if (e->as<node::Range>() || e->as<node::Explicit>() || e->as<node::Dangling>()) {
        positional_error(f);
      }
      if (e->as<node::Aggregate>()) {
        throw Error(ErrorCode::PositionalNotCompilable,
                    "statement " + std::to_string(current_->index) +
                        ": aggregates are not row-local");
      }
      return nullptr;
    });
  }

  // Substitutes live references with the branch's trees, recursively.
  ExprPtr resolve(const Branch& b, const ExprPtr& e, std::set<int>& visiting) const {
    return transform(e, [&](const ExprPtr& n) -> ExprPtr {
      if (auto* c = n->as<node::Column>(); c && has_prefix(c->name, kLive)) {
        int key = std::stoi(c->name.substr(kLive.size()));
        auto it = b.trees.find(key);
        if (it == b.trees.end()) return lit(Value::error(ErrorKind::RefDangling));
        if (!visiting.insert(key).second) unsupported("column formulas form a cycle");
        ExprPtr out = resolve(b, it->second, visiting);
        visiting.erase(key);
        return out;
      }
      if (!b.base && n->as<node::RowIdOf>()) {
        return binary(BinaryOp::Add, col(kCount), lit(Value(b.insert_ordinal)));
      }
      return nullptr;
    });
  }

  ExprPtr snapshot(const Branch& b, const ExprPtr& e) const {
    std::set<int> visiting;
    return resolve(b, e, visiting);
  }

  static bool constant(const ExprPtr& e) {
    bool c = true;
    visit_nodes(*e, [&](const Expr& n) {
      if (n.as<node::Column>() || n.as<node::RowIdOf>()) c = false;
    });
    return c;
  }

  static Value fold(const ExprPtr& e) { return evaluate_expr(*e, ReferenceResolver()); }

  // Condition evaluated per row at statement time.
  ExprPtr condition(const Formula& f, std::int64_t host_col) {
    Formula hosted = shift_relative(f, Position{-host_col, 0});
    return symbolic(hosted, Position{host_col, 0}, nullptr);
  }

  void update_column(int key, const ExprPtr& formula_tree, const ExprPtr& cond_tree) {
    for (Branch& b : branches_) {
      if (b.dead) continue;
      ExprPtr prior = b.trees[key];
      ExprPtr f = substitute(formula_tree, prior);
      if (!cond_tree) {
        b.trees[key] = f;
        continue;
      }
      ExprPtr c = snapshot(b, cond_tree);
      if (constant(c)) {
        if (fold(c).is_true()) b.trees[key] = f;
        continue;
      }
      b.trees[key] = make(node::If{c, f, prior});
    }
  }

  // VALUE placeholders inside the symbolic tree stand for the prior formula.
  static ExprPtr substitute(const ExprPtr& tree, const ExprPtr& prior) {
    return transform(tree, [&](const ExprPtr& e) -> ExprPtr {
      if (e->as<node::SelfValue>()) return prior;
      return nullptr;
    });
  }

  void apply(const stmt::Load&) { unsupported("LOAD inside a script"); }
  void apply(const stmt::LoadPage&) { unsupported("LOAD PAGE inside a script"); }

  // Row of `ROWID = n` in natural order.
  static std::optional<std::int64_t> single_rowid(const Formula& w) {
    auto* b = w.root().as<node::Binary>();
    if (!b || b->op != BinaryOp::Eq) return std::nullopt;
    const Expr* l = b->lhs.get();
    const Expr* r = b->rhs.get();
    if (!l->as<node::RowIdOf>()) std::swap(l, r);
    auto* n = r->as<node::Literal>();
    if (!l->as<node::RowIdOf>() || !n || !n->value.is_int()) return std::nullopt;
    return n->value.as_int() - 1;
  }

  void apply(const stmt::Update& u) {
    std::int64_t c = column_position(u.column);
    int key = columns_[static_cast<std::size_t>(c)].key;
    // Formulas are hosted on the first target row, which a WHERE makes
    // data-dependent unless it names a single row.
    Position anchor{c, 0};
    if (u.where && u.formula.has_cell_references()) {
      auto row = single_rowid(*u.where);
      if (!positional_ || !row || !rows_natural()) positional_error(u.formula);
      anchor.row = *row;
    }
    Formula hosted = shift_relative(u.formula, Position{-anchor.col, -anchor.row});
    if (has_row_offsets(hosted)) {
      if (!positional_) positional_error(u.formula);
      unsupported("cross-row references in a column update");
    }
    ExprPtr f = symbolic(hosted, anchor, make(node::SelfValue{}));
    ExprPtr cond = u.where ? condition(*u.where, c) : nullptr;
    update_column(key, f, cond);
  }

  static bool has_row_offsets(const Formula& f) {
    bool found = false;
    visit_nodes(f.root(), [&](const Expr& e) {
      if (auto* r = e.as<node::Ref>()) found = found || r->ref.row.absolute || r->ref.row.value != 0;
      if (e.as<node::Range>()) found = true;
    });
    return found;
  }

  void apply(const stmt::UpdateRegion& u) {
    const RegionTarget& rt = u.region;
    std::vector<std::int64_t> cols;
    ExprPtr rows_cond;
    std::optional<std::pair<std::int64_t, std::int64_t>> row_range;  // rowids
    Position anchor{0, 0};
    if (rt.positional) {
      for (std::int64_t c = rt.first_col; c <= rt.last_col; ++c) {
        if (c >= static_cast<std::int64_t>(columns_.size())) {
          throw Error(ErrorCode::UnknownColumn, "column " + column_letters(c) + " is outside the sheet");
        }
        cols.push_back(c);
      }
      if (rt.first_row) {
        if (!rows_natural()) {
          throw Error(ErrorCode::PositionalNotCompilable,
                      "statement " + std::to_string(current_->index) +
                          ": positional rows after row edits have no set-based form");
        }
        std::int64_t lo = *rt.first_row + 1, hi = *rt.last_row + 1;
        row_range = std::pair{lo, hi};
        rows_cond = lo == hi ? binary(BinaryOp::Eq, make(node::RowIdOf{}), lit(Value(lo)))
                             : make(node::Between{make(node::RowIdOf{}), lit(Value(lo)),
                                                  lit(Value(hi))});
      }
      anchor = Position{rt.first_col, rt.first_row.value_or(0)};
    } else {
      if (rt.columns) {
        for (const auto& name : *rt.columns) cols.push_back(column_position(name));
        std::sort(cols.begin(), cols.end());
      } else {
        for (std::size_t c = 0; c < columns_.size(); ++c) cols.push_back(static_cast<std::int64_t>(c));
      }
      if (rt.rows) {
        std::vector<ExprPtr> ids;
        for (std::uint64_t r : *rt.rows) ids.push_back(lit(Value(static_cast<std::int64_t>(r))));
        rows_cond = ids.size() == 1 ? binary(BinaryOp::Eq, make(node::RowIdOf{}), ids[0])
                                    : make(node::InList{make(node::RowIdOf{}), std::move(ids)});
      }
    }
    if (cols.empty()) return;
    // First target cell hosts the shared formula.
    Position first{cols.front(), row_range ? row_range->first - 1 : 0};
    if (!rt.positional && rt.rows && !rt.rows->empty()) {
      auto lowest = *std::min_element(rt.rows->begin(), rt.rows->end());
      first.row = static_cast<std::int64_t>(lowest) - 1;
      if (u.formula.has_cell_references() && !rows_natural()) positional_error(u.formula);
    }
    Formula hosted = shift_relative(u.formula, Position{-first.col, -first.row});
    if (rt.predicate) {
      Formula p = shift_relative(*rt.predicate, Position{-anchor.col, -anchor.row});
      if (has_row_offsets(p)) positional_error(*rt.predicate);
    }
    if (has_row_offsets(hosted)) {
      if (!positional_) positional_error(u.formula);
      running(u, cols, row_range, first);
      return;
    }
    for (std::int64_t c : cols) {
      int key = columns_[static_cast<std::size_t>(c)].key;
      Position host{c, first.row};
      ExprPtr f = symbolic(hosted, host, make(node::SelfValue{}));
      ExprPtr cond = rows_cond;
      if (rt.predicate) {
        Formula p = shift_relative(*rt.predicate, Position{-anchor.col, -anchor.row});
        ExprPtr pt = symbolic(p, host, col(kLive + std::to_string(key)));
        cond = cond ? binary(BinaryOp::And, cond, pt) : pt;
      }
      update_column(key, f, cond);
    }
  }

  // X[i] = g[i] + X[i-1] over rows lo..hi becomes a running sum seeded with
  // the prior value of row lo-1.
  void running(const stmt::UpdateRegion& u, const std::vector<std::int64_t>& cols,
               const std::optional<std::pair<std::int64_t, std::int64_t>>& rows, Position first) {
    if (cols.size() != 1 || !rows || u.region.predicate) {
      unsupported("running accumulations need a single-column row range without a predicate");
    }
    std::int64_t c = cols.front();
    auto [lo, hi] = *rows;
    if (lo < 2) unsupported("a running accumulation needs a head row above its range");
    Formula hosted = shift_relative(u.formula, Position{-first.col, -first.row});
    auto* b = hosted.root().as<node::Binary>();
    if (!b || b->op != BinaryOp::Add) unsupported("only X = expr + X[-1] accumulations compile");
    auto previous = [&](const ExprPtr& e) {
      auto* r = e->as<node::Ref>();
      return r && !r->ref.row.absolute && !r->ref.col.absolute && r->ref.row.value == -1 &&
             r->ref.col.value == 0;
    };
    ExprPtr g;
    if (previous(b->rhs)) {
      g = b->lhs;
    } else if (previous(b->lhs)) {
      g = b->rhs;
    } else {
      unsupported("only X = expr + X[-1] accumulations compile");
    }
    Formula gf(g);
    if (has_row_offsets(gf)) unsupported("the accumulated term must be row-local");
    int key = columns_[static_cast<std::size_t>(c)].key;
    Branch& base = branches_.front();
    ExprPtr prior = base.trees[key];
    ExprPtr raw_term = symbolic(gf, Position{c, first.row}, prior);
    ExprPtr term = snapshot(base, raw_term);
    ExprPtr seed = snapshot(base, prior);
    bool nested = false;
    auto check = [&](const Expr& n) {
      if (auto* cn = n.as<node::Column>(); cn && has_prefix(cn->name, kWindow)) nested = true;
    };
    visit_nodes(*term, check);
    visit_nodes(*seed, check);
    if (nested) unsupported("nested running accumulations");
    ExprPtr rid = make(node::RowIdOf{});
    ExprPtr summand = make(node::If{
        binary(BinaryOp::Lt, rid, lit(Value(lo - 1))), lit(Value(std::int64_t{0})),
        make(node::If{binary(BinaryOp::Eq, rid, lit(Value(lo - 1))), seed, term})});
    int id = static_cast<int>(windows_.size()) + 1;
    windows_.push_back(Window{id, summand, raw_term, term});
    ExprPtr in_range = make(node::Between{rid, lit(Value(lo)), lit(Value(hi))});
    base.trees[key] = make(node::If{in_range, col(kWindow + std::to_string(id)), prior});
  }

  void apply(const stmt::AddColumn& a) {
    for (const auto& c : columns_) {
      if (c.name == a.name) throw Error(ErrorCode::DuplicateColumn, "column exists: " + a.name);
    }
    int key = next_key_++;
    std::int64_t n = static_cast<std::int64_t>(columns_.size());
    std::int64_t index = a.at ? std::clamp<std::int64_t>(*a.at - 1, 0, n) : n;
    columns_.insert(columns_.begin() + index, ColumnSlot{key, a.name});
    for (Branch& b : branches_) b.trees[key] = lit(Value());
    if (a.derived) {
      if (has_row_offsets(*a.derived)) {
        if (!positional_) positional_error(*a.derived);
        unsupported("cross-row references in a derived column");
      }
      ExprPtr f = symbolic(shift_relative(*a.derived, Position{-index, 0}), Position{index, 0},
                           make(node::SelfValue{}));
      update_column(key, f, nullptr);
    }
  }

  void apply(const stmt::RemoveColumn& r) {
    std::int64_t i = column_position(r.name);
    int key = columns_[static_cast<std::size_t>(i)].key;
    columns_.erase(columns_.begin() + i);
    std::string marker = kLive + std::to_string(key);
    for (Branch& b : branches_) {
      b.trees.erase(key);
      for (const auto& [k, t] : b.trees) {
        bool uses = false;
        visit_nodes(*t, [&](const Expr& n) {
          if (auto* c = n.as<node::Column>(); c && c->name == marker) uses = true;
        });
        if (uses) unsupported("a remaining column formula reads the removed column");
      }
    }
  }

  void apply(const stmt::InsertRow& ins) {
    row_structure_changed_ = true;
    Branch b;
    b.base = false;
    b.insert_ordinal = ++inserts_;
    for (const auto& c : columns_) b.trees[c.key] = lit(Value());
    for (const auto& [name, f] : ins.assignments) {
      std::int64_t c = column_position(name);
      if (has_row_offsets(f)) positional_error(f);
      b.trees[columns_[static_cast<std::size_t>(c)].key] =
          symbolic(shift_relative(f, Position{-c, 0}), Position{c, 0}, nullptr);
    }
    if (!sort_keys_.empty()) {
      // Appended after an ordering: goes last regardless of key values.
      for (Branch& other : branches_) other.keys.insert(other.keys.begin(), lit(Value(std::int64_t{0})));
      b.keys.push_back(lit(Value(std::int64_t{1})));
      for (std::size_t i = 1; i < sort_keys_.size() + 1; ++i) {
        b.keys.push_back(lit(Value(std::int64_t{0})));
      }
      sort_keys_.insert(sort_keys_.begin(), OrderKey{false});
    }
    branches_.push_back(std::move(b));
  }

  void apply(const stmt::Delete& d) {
    row_structure_changed_ = true;
    ExprPtr cond = condition(d.where, 0);
    for (Branch& b : branches_) {
      if (b.dead) continue;
      ExprPtr c = snapshot(b, cond);
      if (constant(c)) {
        if (fold(c).is_true()) b.dead = true;
        continue;
      }
      b.keep.push_back(c);
    }
  }

  void apply(const stmt::ReorderColumns& r) {
    std::vector<std::int64_t> listed;
    for (const auto& name : r.columns) listed.push_back(column_position(name));
    std::vector<std::int64_t> slots = listed;
    std::sort(slots.begin(), slots.end());
    if (std::adjacent_find(slots.begin(), slots.end()) != slots.end()) {
      throw Error(ErrorCode::InvalidArgument, "column listed twice");
    }
    auto before = columns_;
    for (std::size_t i = 0; i < slots.size(); ++i) {
      columns_[static_cast<std::size_t>(slots[i])] = before[static_cast<std::size_t>(listed[i])];
    }
  }

  void apply(const stmt::ReorderRows& r) {
    if (!sort_keys_.empty() || inserts_ > 0) {
      throw Error(ErrorCode::PositionalNotCompilable,
                  "statement " + std::to_string(current_->index) +
                      ": REORDER ROWS is only compilable while row order is a function of "
                      "ROWID (before any SORT ROWS or INSERT ROW)");
    }
    row_structure_changed_ = true;
    // Current key of each listed row; the listed rows take over the keys
    // they jointly occupy, in the given order.
    std::vector<std::int64_t> current;
    for (std::uint64_t id : r.rows) {
      auto it = natural_.find(static_cast<std::int64_t>(id));
      current.push_back(it == natural_.end() ? static_cast<std::int64_t>(id) : it->second);
    }
    std::vector<std::int64_t> slots = current;
    std::sort(slots.begin(), slots.end());
    for (std::size_t i = 0; i < r.rows.size(); ++i) {
      natural_[static_cast<std::int64_t>(r.rows[i])] = slots[i];
    }
  }

  void apply(const stmt::SortRows& s) {
    row_structure_changed_ = true;
    std::vector<int> keys;
    for (const SortKey& k : s.keys) keys.push_back(column_key(k.column));
    for (Branch& b : branches_) {
      std::vector<ExprPtr> snap;
      for (int key : keys) snap.push_back(snapshot(b, col(kLive + std::to_string(key))));
      b.keys.insert(b.keys.begin(), snap.begin(), snap.end());
    }
    std::vector<OrderKey> ok;
    for (const SortKey& k : s.keys) ok.push_back(OrderKey{k.descending});
    sort_keys_.insert(sort_keys_.begin(), ok.begin(), ok.end());
  }

  void apply(const stmt::MoveCells&) {
    throw Error(ErrorCode::PositionalNotCompilable,
                "statement " + std::to_string(current_->index) + ": MOVE is positional");
  }

  // --- assembly ---------------------------------------------------------------

  ExprPtr natural_key(const Branch& b) const {
    if (!b.base) return binary(BinaryOp::Add, col(kCount), lit(Value(b.insert_ordinal)));
    ExprPtr rid = make(node::RowIdOf{});
    if (natural_.empty()) return rid;
    ExprPtr out = rid;
    for (auto it = natural_.rbegin(); it != natural_.rend(); ++it) {
      if (it->first == it->second) continue;
      out = make(node::If{binary(BinaryOp::Eq, rid, lit(Value(it->first))),
                          lit(Value(it->second)), out});
    }
    return out;
  }

  static bool uses(const ExprPtr& e, const std::string& name) {
    bool found = false;
    visit_nodes(*e, [&](const Expr& n) {
      if (auto* c = n.as<node::Column>(); c && c->name == name) found = true;
    });
    return found;
  }

  std::string source_sql() const { return "LOAD(" + quote_string(source_) + ")"; }

  std::string branch_sql(const Branch& b, bool with_keys) {
    std::vector<std::string> items;
    bool needs_count = false;
    auto add = [&](const ExprPtr& e, const std::string& alias) {
      if (!b.base && uses(e, kCount)) needs_count = true;
      std::string text = sql_text(e);
      auto* c = e->as<node::Column>();
      bool same = c && has_prefix(c->name, kSource) && c->name.substr(kSource.size()) == alias;
      items.push_back(same ? text : text + " AS " + quote_identifier(alias));
    };
    std::set<int> visiting;
    for (const ColumnSlot& c : columns_) add(resolve(b, b.trees.at(c.key), visiting), c.name);
    if (with_keys) {
      std::vector<ExprPtr> keys = b.keys;
      keys.push_back(natural_key(b));
      for (std::size_t i = 0; i < keys.size(); ++i) add(keys[i], "__k" + std::to_string(i + 1));
    }
    std::string out = "SELECT ";
    for (std::size_t i = 0; i < items.size(); ++i) {
      if (i) out += ", ";
      out += items[i];
    }
    if (b.base) {
      if (windows_.empty()) {
        out += " FROM " + source_sql();
      } else {
        out += " FROM (SELECT *";
        const std::string frame =
            ") OVER (ORDER BY ROWID ROWS BETWEEN UNBOUNDED PRECEDING AND CURRENT ROW) AS __";
        for (const Window& w : windows_) {
          std::string term = sql_text(w.summand);
          out += ", SUM(" + term + frame + "w" + std::to_string(w.id);
          out += ", SUM(CASE WHEN " + term + " = " + term + " THEN 0 ELSE 1 END" + frame + "z" +
                 std::to_string(w.id);
        }
        out += " FROM " + source_sql() + ")";
      }
    } else {
      for (const ExprPtr& k : b.keep) needs_count = needs_count || uses(k, kCount);
      if (needs_count) out += " FROM (SELECT COUNT(*) AS __n FROM " + source_sql() + ")";
    }
    if (!b.keep.empty()) {
      out += " WHERE ";
      for (std::size_t i = 0; i < b.keep.size(); ++i) {
        if (i) out += " AND ";
        out += "CASE WHEN " + sql_text(b.keep[i]) + " THEN FALSE ELSE TRUE END";
      }
    }
    return out;
  }

  SqlQuery assemble() {
    for (const Window& w : windows_) {
      // Live cells would follow later edits of the columns they read.
      if (!structurally_equal(*snapshot(branches_.front(), w.raw), *w.term)) {
        throw Error(ErrorCode::UnsupportedPattern,
                    "a column read by a running accumulation is updated later");
      }
    }
    SqlQuery q;
    q.sources = {source_};
    for (const auto& c : columns_) q.columns.push_back(c.name);
    std::vector<const Branch*> live;
    for (const Branch& b : branches_) {
      if (!b.dead) live.push_back(&b);
    }
    if (script_.statements.empty()) {
      q.text = "SELECT * FROM " + source_sql();
      return q;
    }
    std::vector<std::string> parts;
    for (const Branch* b : live) parts.push_back(branch_sql(*b, ordered_));
    if (parts.empty()) {
      // Everything deleted: an empty base selection keeps the schema.
      Branch empty = branches_.front();
      empty.keep = {lit(Value(true))};
      parts.push_back(branch_sql(empty, ordered_));
    }
    std::string body;
    for (std::size_t i = 0; i < parts.size(); ++i) {
      if (i) body += "\nUNION ALL\n";
      body += parts[i];
    }
    if (!ordered_) {
      q.text = body;
      return q;
    }
    std::string outer = "SELECT ";
    for (std::size_t i = 0; i < columns_.size(); ++i) {
      if (i) outer += ", ";
      outer += quote_identifier(columns_[i].name);
    }
    outer += " FROM (\n" + body + "\n) ORDER BY ";
    std::size_t nkeys = sort_keys_.size() + 1;
    for (std::size_t i = 0; i < nkeys; ++i) {
      if (i) outer += ", ";
      outer += "__k" + std::to_string(i + 1);
      if (i < sort_keys_.size() && sort_keys_[i].descending) outer += " DESC";
      outer += " NULLS LAST";
    }
    q.text = outer;
    return q;
  }

  const Script& script_;
  bool positional_;
  std::string source_;
  std::vector<ColumnSlot> columns_;
  std::vector<Branch> branches_;
  std::vector<OrderKey> sort_keys_;
  std::map<std::int64_t, std::int64_t> natural_;  // rowid -> order key overrides
  std::vector<Window> windows_;
  int next_key_ = 1;
  std::int64_t inserts_ = 0;
  bool ordered_ = false;
  bool insert_at_ = false;
  bool row_structure_changed_ = false;
  const Statement* current_ = nullptr;
};

}  // namespace

SourceSchemas read_source_schemas(const Script& script, const std::string& base_dir) {
  SourceSchemas out;
  if (auto* l = script.source.as<stmt::Load>()) {
    SheetState s = file_source_resolver(base_dir)(script.source);
    out[l->path] = s.column_names();
  }
  return out;
}

SqlQuery compile_script(const Script& script, const SourceSchemas& schemas) {
  return Compiler(script, schemas, false).run();
}

SqlQuery compile_positional(const Script& script, const SourceSchemas& schemas) {
  return Compiler(script, schemas, true).run();
}

std::string compile_formula(const Formula& f) {
  if (f.has_cell_references()) {
    throw Error(ErrorCode::PositionalNotCompilable,
                "formula '" + render_expression(f, Position{0, 0}) +
                    "' uses cell references; use compile_positional");
  }
  return sql_text(f.ptr());
}

std::string manifest_json(const SqlQuery& q) {
  nlohmann::json j;
  j["sources"] = q.sources;
  j["columns"] = q.columns;
  j["dialect"] = "vizier-sql";
  return j.dump(2);
}

}  // namespace vizier
