#include "vizier/rewriter.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "vizier/error.hpp"

namespace vizier {

std::string_view to_string(RewriteKind k) {
  switch (k) {
    case RewriteKind::Reroll: return "REROLL";
    case RewriteKind::Fuse: return "FUSE";
    case RewriteKind::Generalize: return "GENERALIZE";
  }
  return "?";
}

std::string_view to_string(Verdict v) {
  switch (v) {
    case Verdict::Equal: return "EQUAL";
    case Verdict::Different: return "DIFFERENT";
    case Verdict::Incomparable: return "INCOMPARABLE";
  }
  return "?";
}

Script apply_suggestion(const Script& script, const RewriteSuggestion& s) {
  if (s.replaced.empty()) return script;
  std::set<std::size_t> drop(s.replaced.begin(), s.replaced.end());
  if (*drop.rbegin() >= script.statements.size()) {
    throw Error(ErrorCode::StaleSuggestion, "suggestion refers past the end of the script");
  }
  Script out;
  out.source = script.source;
  for (std::size_t i = 0; i < script.statements.size(); ++i) {
    if (i == *drop.begin()) {
      for (const Statement& r : s.replacement) out.statements.push_back(r);
    }
    if (!drop.count(i)) out.statements.push_back(script.statements[i]);
  }
  renumber(out);
  return out;
}

std::string suggestion_diff(const Script& script, const RewriteSuggestion& s,
                            const std::string& label) {
  std::string out = "--- a/" + label + "\n+++ b/" + label + "\n";
  std::vector<std::size_t> idx = s.replaced;
  std::sort(idx.begin(), idx.end());
  long shift = 0;  // new line number minus old line number
  for (std::size_t k = 0; k < idx.size();) {
    std::size_t end = k + 1;
    while (end < idx.size() && idx[end] == idx[end - 1] + 1) ++end;
    long old_start = static_cast<long>(idx[k]) + 2;
    long removed = static_cast<long>(end - k);
    long added = k == 0 ? static_cast<long>(s.replacement.size()) : 0;
    long new_start = old_start + shift - (added == 0 ? 1 : 0);
    out += "@@ -" + std::to_string(old_start) + "," + std::to_string(removed) + " +" +
           std::to_string(new_start) + "," + std::to_string(added) + " @@\n";
    for (std::size_t i = k; i < end; ++i) {
      out += "-" + render_statement(script.statements[idx[i]]) + "\n";
    }
    if (k == 0) {
      for (const Statement& r : s.replacement) out += "+" + render_statement(r) + "\n";
    }
    shift += added - removed;
    k = end;
  }
  return out;
}

std::pair<std::size_t, std::size_t> readability_cost(const Script& script) {
  std::size_t nodes = 0;
  for (const Statement& s : script.statements) nodes += node_count(s);
  return {script.statements.size(), nodes};
}

EquivalenceResult equivalence_check(const Script& original, const Script& rewritten,
                                    const SourceResolver& resolve) {
  SheetState a, b;
  try {
    a = replay(original, resolve).state;
  } catch (const std::exception& e) {
    return {Verdict::Incomparable, std::string("original: ") + e.what()};
  }
  try {
    b = replay(rewritten, resolve).state;
  } catch (const std::exception& e) {
    return {Verdict::Incomparable, std::string("rewritten: ") + e.what()};
  }
  if (a.column_names() != b.column_names()) return {Verdict::Different, "column headers differ"};
  const auto& ca = a.coords();
  const auto& cb = b.coords();
  if (ca.row_count() != cb.row_count()) {
    return {Verdict::Different, "row counts differ: " + std::to_string(ca.row_count()) + " vs " +
                                    std::to_string(cb.row_count())};
  }
  for (std::int64_t r = 0; r < ca.row_count(); ++r) {
    for (std::int64_t c = 0; c < ca.column_count(); ++c) {
      const Value& x = a.cell_at_checked({c, r}).value;
      const Value& y = b.cell_at_checked({c, r}).value;
      if (typed_text(x) != typed_text(y)) {
        return {Verdict::Different, a1_text({c, r}) + ": " + typed_text(x) + " vs " + typed_text(y)};
      }
    }
  }
  return {Verdict::Equal, ""};
}

namespace {

struct Hole {
  ExprPtr subject;  // Column or RowIdOf
  Value value;
};

// `X = literal` or `literal = X` with X a column or ROWID.
std::optional<Hole> equality_hole(const Formula& f) {
  auto* b = f.root().as<node::Binary>();
  if (!b || b->op != BinaryOp::Eq) return std::nullopt;
  ExprPtr subject = b->lhs, other = b->rhs;
  if (subject->as<node::Literal>()) std::swap(subject, other);
  auto* l = other->as<node::Literal>();
  if (!l || l->value.is_null() || l->value.is_error()) return std::nullopt;
  if (!subject->as<node::Column>() && !subject->as<node::RowIdOf>()) return std::nullopt;
  return Hole{subject, l->value};
}

bool is_rowid(const Hole& h) { return h.subject->as<node::RowIdOf>() != nullptr; }

bool mentions_value(const Formula& f) {
  bool found = false;
  visit_nodes(f.root(), [&](const Expr& e) { found = found || e.as<node::SelfValue>(); });
  return found;
}

// States before each statement; empty when the script does not replay.
std::vector<SheetState> prefix_states(const Script& script, const SourceResolver& resolve) {
  std::vector<SheetState> out;
  try {
    SheetState st = resolve(script.source);
    for (const Statement& s : script.statements) {
      out.push_back(st);
      st = apply(st, s).state;
    }
  } catch (const std::exception&) {
    return {};
  }
  return out;
}

struct Member {
  std::size_t index;
  Value value;
  Formula hosted;  // formula relative to its own target (ROWID families)
  std::int64_t row = 0;
};

struct Family {
  std::string key;
  bool is_delete = false;
  std::string column;
  ExprPtr subject;
  std::vector<Member> members;
};

ExprPtr family_condition(const ExprPtr& subject, std::vector<Value> values) {
  std::sort(values.begin(), values.end(),
            [](const Value& a, const Value& b) { return collate(a, b) < 0; });
  values.erase(std::unique(values.begin(), values.end(),
                           [](const Value& a, const Value& b) { return collate(a, b) == 0; }),
               values.end());
  if (values.size() == 1) return binary(BinaryOp::Eq, subject, lit(values[0]));
  bool consecutive = subject->as<node::RowIdOf>() != nullptr;
  for (std::size_t i = 0; consecutive && i < values.size(); ++i) {
    consecutive = values[i].is_int() && values[i].as_int() == values[0].as_int() +
                                                                 static_cast<std::int64_t>(i);
  }
  if (consecutive) {
    return make(node::Between{subject, lit(values.front()), lit(values.back())});
  }
  std::vector<ExprPtr> items;
  for (const Value& v : values) items.push_back(lit(v));
  return make(node::InList{subject, std::move(items)});
}

class Reroller {
 public:
  Reroller(const Script& script, const SourceResolver& resolve)
      : script_(script), resolve_(resolve), states_(prefix_states(script, resolve)) {}

  std::vector<RewriteSuggestion> run() {
    if (states_.empty()) return {};
    std::map<std::string, Family> families;
    std::vector<std::string> order;
    for (std::size_t i = 0; i < script_.statements.size(); ++i) {
      auto f = classify(i);
      if (!f) continue;
      auto [it, fresh] = families.try_emplace(f->key, *f);
      if (fresh) {
        order.push_back(f->key);
      } else {
        it->second.members.push_back(f->members.front());
      }
    }
    std::vector<RewriteSuggestion> out;
    for (const auto& key : order) {
      const Family& fam = families.at(key);
      if (fam.members.size() < 2) continue;
      if (auto s = verified(fam, fam.members)) {
        out.push_back(*s);
        continue;
      }
      // Fall back to runs of adjacent statements.
      std::vector<Member> run;
      auto flush = [&] {
        if (run.size() >= 2) {
          if (auto s = verified(fam, run)) out.push_back(*s);
        }
        run.clear();
      };
      for (const Member& m : fam.members) {
        if (!run.empty() && m.index != run.back().index + 1) flush();
        run.push_back(m);
      }
      flush();
    }
    std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
      if (a.prioritized != b.prioritized) return a.prioritized;
      return a.replaced.size() > b.replaced.size();
    });
    return out;
  }

 private:
  std::optional<Family> classify(std::size_t i) const {
    const Statement& s = script_.statements[i];
    Family f;
    if (auto* u = s.as<stmt::Update>()) {
      if (!u->where) return std::nullopt;
      auto hole = equality_hole(*u->where);
      if (!hole) return std::nullopt;
      Member m{i, hole->value, u->formula, 0};
      std::string shape;
      if (u->formula.has_cell_references()) {
        if (!is_rowid(*hole) || !hole->value.is_int()) return std::nullopt;
        const SheetState& st = states_[i];
        auto row = st.coords().row_index(RowId{static_cast<std::uint64_t>(hole->value.as_int())});
        auto col = st.coords().column_index(u->column);
        if (!row || !col) return std::nullopt;
        m.row = *row;
        m.hosted = shift_relative(u->formula, Position{-*col, -*row});
        shape = relative_normal_form(m.hosted);
      } else {
        shape = relative_normal_form(u->formula);
      }
      f.column = u->column;
      f.subject = hole->subject;
      f.key = "U\x1f" + u->column + "\x1f" + render_expression(Formula(hole->subject), {}) +
              "\x1f" + shape;
      f.members.push_back(std::move(m));
      return f;
    }
    if (auto* d = s.as<stmt::Delete>()) {
      auto hole = equality_hole(d->where);
      if (!hole) return std::nullopt;
      f.is_delete = true;
      f.subject = hole->subject;
      f.key = "D\x1f" + render_expression(Formula(hole->subject), {});
      f.members.push_back(Member{i, hole->value, Formula(), 0});
      return f;
    }
    return std::nullopt;
  }

  std::optional<RewriteSuggestion> verified(const Family& fam, const std::vector<Member>& ms) const {
    RewriteSuggestion s;
    s.kind = RewriteKind::Reroll;
    std::vector<Value> values;
    std::uint64_t group = script_.statements[ms.front().index].group;
    bool same_group = group != 0;
    for (const Member& m : ms) {
      s.replaced.push_back(m.index);
      values.push_back(m.value);
      same_group = same_group && script_.statements[m.index].group == group;
    }
    Statement st;
    st.group = same_group ? group : 0;
    ExprPtr cond = family_condition(fam.subject, values);
    if (fam.is_delete) {
      st.body = stmt::Delete{Formula(cond)};
    } else {
      const stmt::Update& first = *script_.statements[ms.front().index].as<stmt::Update>();
      Formula f = first.formula;
      if (f.has_cell_references()) {
        // Host on the topmost target as positioned where the statement lands.
        const SheetState& at = states_[ms.front().index];
        auto col = at.coords().column_index(fam.column);
        std::optional<std::int64_t> top;
        for (const Member& m : ms) {
          auto r = at.coords().row_index(RowId{static_cast<std::uint64_t>(m.value.as_int())});
          if (!r || !col) return std::nullopt;
          top = top ? std::min(*top, *r) : *r;
        }
        f = shift_relative(ms.front().hosted, Position{*col, *top});
      }
      st.body = stmt::Update{fam.column, f, Formula(cond)};
    }
    s.replacement.push_back(std::move(st));
    s.prioritized = same_group;
    Script rewritten = apply_suggestion(script_, s);
    if (equivalence_check(script_, rewritten, resolve_).verdict != Verdict::Equal) {
      return std::nullopt;
    }
    s.verified = true;
    return s;
  }

  const Script& script_;
  const SourceResolver& resolve_;
  std::vector<SheetState> states_;
};

// --- fuse ---------------------------------------------------------------------

bool fusable(const stmt::Update& u) {
  return !u.formula.has_cell_references() && (!u.where || !u.where->has_cell_references());
}

// Formula of `u` applied on top of `prior`.
Formula layer(const stmt::Update& u, const Formula& prior) {
  Formula next = substitute_self(u.formula, prior);
  if (!u.where) return next;
  return Formula(make(node::If{u.where->ptr(), next.ptr(), prior.ptr()}));
}

std::optional<RewriteSuggestion> check(const Script& script, const SourceResolver& resolve,
                                       RewriteSuggestion s) {
  s.kind = RewriteKind::Fuse;
  Script rewritten = apply_suggestion(script, s);
  if (equivalence_check(script, rewritten, resolve).verdict != Verdict::Equal) return std::nullopt;
  s.verified = true;
  return s;
}

// --- generalize ------------------------------------------------------------------

struct Atom {
  std::int64_t col;
  ExprPtr expr;
  std::size_t distinct;
};

struct Singleton {
  std::size_t index;
  std::uint64_t rowid;
  std::int64_t row;
  Formula formula;
};

Value cell_value(const SheetState& st, std::int64_t c, std::int64_t r) {
  return st.cell_at_checked({c, r}).value;
}

std::optional<double> number(const Value& v) {
  if (v.is_int()) return static_cast<double>(v.as_int());
  if (v.is_float()) return v.as_float();
  return std::nullopt;
}

Value tidy(double d) {
  double r = std::round(d * 1e9) / 1e9;
  if (std::fabs(r - d) < 1e-12) d = r;
  if (std::fabs(d) < 9e15 && d == std::floor(d)) return Value(static_cast<std::int64_t>(d));
  return Value(d);
}

constexpr std::size_t kMaxDistinct = 64;

}  // namespace

std::vector<RewriteSuggestion> reroll(const Script& script, const SourceResolver& resolve) {
  return Reroller(script, resolve).run();
}

std::vector<RewriteSuggestion> readability_suggestions(const Script& script,
                                                       const SourceResolver& resolve) {
  std::vector<RewriteSuggestion> all = reroll(script, resolve);
  for (auto& f : fuse(script, resolve)) all.push_back(std::move(f));
  std::vector<std::pair<std::size_t, std::size_t>> cost;
  std::vector<std::vector<std::size_t>> sets;
  for (const auto& s : all) {
    cost.push_back(readability_cost(apply_suggestion(script, s)));
    sets.push_back(s.replaced);
    std::sort(sets.back().begin(), sets.back().end());
  }
  std::vector<RewriteSuggestion> out;
  for (std::size_t i = 0; i < all.size(); ++i) {
    bool dominated = false;
    for (std::size_t j = 0; j < all.size() && !dominated; ++j) {
      dominated = j != i && sets[j] == sets[i] && cost[j] < cost[i];
    }
    if (!dominated) out.push_back(std::move(all[i]));
  }
  return out;
}

std::vector<RewriteSuggestion> fuse(const Script& script, const SourceResolver& resolve) {
  std::vector<RewriteSuggestion> out;
  const auto& ss = script.statements;
  std::size_t i = 0;
  while (i < ss.size()) {
    RewriteSuggestion s;
    std::string column;
    Formula acc;
    bool derived = false;
    stmt::AddColumn add;
    std::size_t j = i;
    if (auto* a = ss[i].as<stmt::AddColumn>(); a && !a->derived && i + 1 < ss.size()) {
      auto* u = ss[i + 1].as<stmt::Update>();
      if (u && u->column == a->name && !u->where && fusable(*u)) {
        derived = true;
        add = *a;
        column = a->name;
        acc = layer(*u, Formula());
        s.replaced = {i, i + 1};
        j = i + 2;
      }
    } else if (auto* u = ss[i].as<stmt::Update>(); u && fusable(*u)) {
      column = u->column;
      acc = u->where ? layer(*u, Formula(make(node::SelfValue{}))) : u->formula;
      s.replaced = {i};
      j = i + 1;
    }
    if (column.empty()) {
      ++i;
      continue;
    }
    while (j < ss.size()) {
      auto* u = ss[j].as<stmt::Update>();
      if (!u || u->column != column || !fusable(*u)) break;
      acc = layer(*u, acc);
      s.replaced.push_back(j);
      ++j;
    }
    if (s.replaced.size() >= 2) {
      Statement st;
      st.group = ss[i].group;
      for (std::size_t k : s.replaced) {
        if (ss[k].group != st.group) st.group = 0;
      }
      if (derived) {
        add.derived = acc;
        st.body = add;
      } else {
        st.body = stmt::Update{column, acc, std::nullopt};
      }
      s.replacement.push_back(std::move(st));
      s.prioritized = st.group != 0;
      if (auto ok = check(script, resolve, s)) out.push_back(std::move(*ok));
    }
    i = std::max(j, i + 1);
  }
  return out;
}

std::vector<RewriteSuggestion> generalize(const Script& script, const SheetState& state) {
  const auto& cs = state.coords();
  std::map<std::string, std::vector<Singleton>> by_column;
  for (std::size_t i = 0; i < script.statements.size(); ++i) {
    auto* u = script.statements[i].as<stmt::Update>();
    if (!u || !u->where || u->formula.has_cell_references()) continue;
    auto hole = equality_hole(*u->where);
    if (!hole || !is_rowid(*hole) || !hole->value.is_int()) continue;
    auto rowid = static_cast<std::uint64_t>(hole->value.as_int());
    auto row = cs.row_index(RowId{rowid});
    if (!row) continue;
    by_column[u->column].push_back(Singleton{i, rowid, *row, u->formula});
  }
  std::vector<RewriteSuggestion> out;
  bool attempted = false;
  for (const auto& [column, singles] : by_column) {
    std::set<std::int64_t> targets;
    for (const Singleton& s : singles) targets.insert(s.row);
    if (targets.size() < 2) continue;
    auto target_col = cs.column_index(column);
    if (!target_col) continue;

    // Last write wins per row.
    std::map<std::int64_t, Formula> rhs;
    for (const Singleton& s : singles) rhs[s.row] = s.formula;
    bool all_literal = true, all_same = true;
    for (const auto& [r, f] : rhs) {
      all_literal = all_literal && f.is_literal() && !mentions_value(f);
      all_same = all_same && f == rhs.begin()->second;
    }
    if (!all_literal && !all_same) continue;
    attempted = true;

    std::vector<Atom> atoms;
    for (std::int64_t c = 0; c < cs.column_count(); ++c) {
      if (c == *target_col) continue;
      std::vector<Value> vals;
      for (std::int64_t r : targets) vals.push_back(cell_value(state, c, r));
      if (std::any_of(vals.begin(), vals.end(),
                      [](const Value& v) { return v.is_null() || v.is_error(); })) {
        continue;
      }
      std::sort(vals.begin(), vals.end(),
                [](const Value& a, const Value& b) { return collate(a, b) < 0; });
      vals.erase(std::unique(vals.begin(), vals.end(),
                             [](const Value& a, const Value& b) { return collate(a, b) == 0; }),
                 vals.end());
      if (vals.size() > kMaxDistinct) continue;
      ExprPtr subject = col(cs.columns()[static_cast<std::size_t>(c)].name);
      if (vals.size() == 1) {
        atoms.push_back({c, binary(BinaryOp::Eq, subject, lit(vals[0])), 1});
      } else if (number(vals.front()) && number(vals.back())) {
        atoms.push_back(
            {c, make(node::Between{subject, lit(vals.front()), lit(vals.back())}), vals.size()});
      }
    }

    auto matches = [&](const ExprPtr& pred) {
      std::set<std::int64_t> rows;
      Formula f(pred);
      for (std::int64_t r = 0; r < cs.row_count(); ++r) {
        if (evaluate(f, state, Position{0, r}).is_true()) rows.insert(r);
      }
      return rows;
    };
    struct Candidate {
      ExprPtr pred;
      std::size_t conjuncts;
      std::size_t distinct;
      std::int64_t col;
    };
    std::vector<Candidate> found;
    for (std::size_t a = 0; a < atoms.size(); ++a) {
      if (matches(atoms[a].expr) == targets) {
        found.push_back({atoms[a].expr, 1, atoms[a].distinct, atoms[a].col});
      }
    }
    if (found.empty()) {
      for (std::size_t a = 0; a < atoms.size(); ++a) {
        for (std::size_t b = a + 1; b < atoms.size(); ++b) {
          ExprPtr p = binary(BinaryOp::And, atoms[a].expr, atoms[b].expr);
          if (matches(p) == targets) {
            found.push_back({p, 2, atoms[a].distinct + atoms[b].distinct, atoms[a].col});
          }
        }
      }
    }
    std::stable_sort(found.begin(), found.end(), [](const Candidate& x, const Candidate& y) {
      if (x.conjuncts != y.conjuncts) return x.conjuncts < y.conjuncts;
      if (x.distinct != y.distinct) return x.distinct < y.distinct;
      return x.col < y.col;
    });

    // Right-hand sides: the shared formula, or an exact affine fit.
    std::vector<Formula> bodies;
    if (all_same) {
      bodies.push_back(rhs.begin()->second);
    } else {
      for (std::int64_t c = 0; c < cs.column_count(); ++c) {
        if (c == *target_col) continue;
        std::vector<std::pair<double, double>> pts;
        bool numeric = true;
        for (const auto& [r, f] : rhs) {
          auto x = number(cell_value(state, c, r));
          auto y = number(f.root().as<node::Literal>()->value);
          if (!x || !y) {
            numeric = false;
            break;
          }
          pts.emplace_back(*x, *y);
        }
        if (!numeric) continue;
        auto other = std::find_if(pts.begin(), pts.end(),
                                  [&](const auto& p) { return p.first != pts[0].first; });
        if (other == pts.end()) continue;
        double a = (other->second - pts[0].second) / (other->first - pts[0].first);
        double b = pts[0].second - a * pts[0].first;
        bool exact = std::all_of(pts.begin(), pts.end(), [&](const auto& p) {
          return std::fabs(a * p.first + b - p.second) <= 1e-9 * std::max(1.0, std::fabs(p.second));
        });
        if (!exact) continue;
        Value av = tidy(a), bv = tidy(b);
        ExprPtr x = col(cs.columns()[static_cast<std::size_t>(c)].name);
        ExprPtr e = av.is_int() && av.as_int() == 1 ? x : binary(BinaryOp::Mul, lit(av), x);
        if (!(bv.is_int() && bv.as_int() == 0)) {
          auto bn = number(bv);
          e = *bn < 0 ? binary(BinaryOp::Sub, e, lit(tidy(-*bn))) : binary(BinaryOp::Add, e, lit(bv));
        }
        bodies.push_back(Formula(e));
      }
    }

    for (const Candidate& cand : found) {
      for (const Formula& body : bodies) {
        RewriteSuggestion s;
        s.kind = RewriteKind::Generalize;
        for (const Singleton& sg : singles) s.replaced.push_back(sg.index);
        std::sort(s.replaced.begin(), s.replaced.end());
        s.predicate = render_expression(Formula(cand.pred), {});
        for (std::int64_t r : targets) {
          s.rows_matched.push_back(cs.rows()[static_cast<std::size_t>(r)].value);
        }
        Statement st;
        st.body = stmt::Update{column, body, Formula(cand.pred)};
        s.replacement.push_back(std::move(st));
        out.push_back(std::move(s));
      }
    }
  }
  if (attempted && out.empty()) {
    throw Error(ErrorCode::NoCandidate, "no predicate separates the edited rows from the rest");
  }
  return out;
}

}  // namespace vizier
