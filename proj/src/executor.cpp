#include "vizier/executor.hpp"

#include <algorithm>
#include <filesystem>
#include <set>
#include <unordered_set>

#include "vizier/dependency.hpp"
#include "vizier/error.hpp"

namespace vizier {

std::string_view to_string(Diagnostic::Severity s) {
  switch (s) {
    case Diagnostic::Severity::Info: return "info";
    case Diagnostic::Severity::Warning: return "warning";
    case Diagnostic::Severity::Error: return "error";
  }
  return "?";
}

SourceResolver file_source_resolver(std::string base_dir) {
  return [base = std::move(base_dir)](const Statement& s) -> SheetState {
    if (auto* l = s.as<stmt::Load>()) {
      std::filesystem::path p(l->path);
      if (p.is_relative()) p = std::filesystem::path(base) / p;
      return load_csv(p.string(), CsvOptions{l->header, l->infer_types});
    }
    if (auto* l = s.as<stmt::LoadPage>()) {
      throw Error(ErrorCode::UnknownPage, "no notebook to resolve page '" + l->page + "'");
    }
    throw Error(ErrorCode::Syntax, "script source must be LOAD");
  };
}

namespace {

using Severity = Diagnostic::Severity;

class Executor {
 public:
  Executor(const SheetState& state, const Statement& s, const StabilityPolicy& policy)
      : in_(state), s_(s), policy_(policy) {}

  Applied run() {
    SheetState out = std::visit([&](const auto& body) { return apply(body); }, s_.body);
    return Applied{std::move(out), std::move(diags_)};
  }

 private:
  void note(Severity sev, std::string msg) {
    diags_.push_back(Diagnostic{s_.index, sev, std::move(msg)});
  }

  std::int64_t column(const SheetState& st, const std::string& name) const {
    auto idx = st.coords().column_index(name);
    if (!idx) throw Error(ErrorCode::UnknownColumn, "unknown column '" + name + "'");
    return *idx;
  }

  std::int64_t row_of(const SheetState& st, std::uint64_t rowid) const {
    auto idx = st.coords().row_index(RowId{rowid});
    if (!idx) throw Error(ErrorCode::UnknownRowId, "unknown rowid " + std::to_string(rowid));
    return *idx;
  }

  static Formula rehost(const Formula& f, Position anchor) {
    return shift_relative(f, Position{-anchor.col, -anchor.row});
  }

  // Evaluates a row condition (hosted in `col`) for every row; errors are
  // reported and treated as not matching.
  std::vector<std::int64_t> matching_rows(const SheetState& st, const Formula& cond,
                                          std::int64_t col) {
    Formula c = rehost(cond, Position{col, 0});
    std::vector<std::int64_t> out;
    std::size_t errors = 0;
    for (std::int64_t r = 0; r < st.coords().row_count(); ++r) {
      Value v = evaluate(c, st, Position{col, r});
      if (v.is_true()) {
        out.push_back(r);
      } else if (v.is_error() || (!v.is_null() && !v.is_bool())) {
        ++errors;
      }
    }
    if (errors) {
      note(Severity::Warning, std::to_string(errors) +
                                  " row(s) excluded because the condition did not evaluate to "
                                  "a boolean");
    }
    return out;
  }

  // Writes `f` into every target; relative references are hosted on the
  // first target and shared (fill-down).
  SheetState write(SheetState st, const std::vector<Position>& targets, const Formula& f) {
    if (targets.empty()) return st;
    Formula hosted = rehost(f, targets.front());
    bool self = false;
    visit_nodes(hosted.root(), [&](const Expr& e) { self = self || e.as<node::SelfValue>(); });
    std::set<CellId> dirty;
    for (Position p : targets) {
      const Cell& c = st.cell_at_checked(p);
      Formula nf = self ? substitute_self(hosted, c.formula) : hosted;
      Value v = nf.is_literal() ? nf.root().as<node::Literal>()->value : c.value;
      st.set_cell(c.id, nf, v);
      dirty.insert(c.id);
    }
    return recompute(st, dirty);
  }

  SheetState structural(const SheetState& next, Action action) {
    return apply_transform(in_, next, policy_.mode(action));
  }

  // --- statements -----------------------------------------------------------

  SheetState apply(const stmt::Load&) {
    throw Error(ErrorCode::InvalidArgument, "LOAD can only start a script");
  }
  SheetState apply(const stmt::LoadPage&) {
    throw Error(ErrorCode::InvalidArgument, "LOAD PAGE can only start a script");
  }

  SheetState apply(const stmt::Update& u) {
    std::int64_t col = column(in_, u.column);
    std::vector<Position> targets;
    if (u.where) {
      for (std::int64_t r : matching_rows(in_, *u.where, col)) targets.push_back({col, r});
    } else {
      for (std::int64_t r = 0; r < in_.coords().row_count(); ++r) targets.push_back({col, r});
    }
    if (targets.empty()) note(Severity::Info, "no rows matched");
    return write(in_, targets, u.formula);
  }

  SheetState apply(const stmt::UpdateRegion& u) {
    const RegionTarget& rt = u.region;
    const CoordinateSystem& cs = in_.coords();
    Region region;
    Position anchor{0, 0};
    if (rt.positional) {
      if (rt.last_col >= cs.column_count()) {
        throw Error(ErrorCode::UnknownColumn,
                    "column " + column_letters(rt.last_col) + " is outside the sheet");
      }
      region.columns.emplace();
      for (std::int64_t c = rt.first_col; c <= rt.last_col; ++c) {
        region.columns->push_back(cs.columns()[static_cast<std::size_t>(c)].id);
      }
      if (rt.first_row) {
        if (*rt.last_row >= cs.row_count()) {
          throw Error(ErrorCode::UnknownRowId,
                      "row " + std::to_string(*rt.last_row + 1) + " is outside the sheet");
        }
        region.rows.emplace();
        for (std::int64_t r = *rt.first_row; r <= *rt.last_row; ++r) {
          region.rows->push_back(cs.rows()[static_cast<std::size_t>(r)]);
        }
      }
      anchor = Position{rt.first_col, rt.first_row.value_or(0)};
    } else {
      if (rt.columns) {
        region.columns.emplace();
        for (const auto& name : *rt.columns) {
          region.columns->push_back(cs.columns()[static_cast<std::size_t>(column(in_, name))].id);
        }
      }
      if (rt.rows) {
        region.rows.emplace();
        for (std::uint64_t r : *rt.rows) {
          row_of(in_, r);
          region.rows->push_back(RowId{r});
        }
      }
    }
    if (rt.predicate) region.predicate = rehost(*rt.predicate, anchor);
    std::vector<RegionDiagnostic> rd;
    std::vector<Position> targets;
    for (CellId id : region_resolve(in_, region, &rd)) targets.push_back(*cs.position_of(id));
    if (!rd.empty()) {
      note(Severity::Warning, std::to_string(rd.size()) +
                                  " cell(s) excluded because the predicate evaluated to an error");
    }
    if (targets.empty()) note(Severity::Info, "region is empty");
    return write(in_, targets, u.formula);
  }

  SheetState apply(const stmt::AddColumn& a) {
    SheetState next = in_;
    std::int64_t n = next.coords().column_count();
    std::int64_t index = a.at ? std::clamp<std::int64_t>(*a.at - 1, 0, n) : n;
    next.add_column(index, a.name);
    SheetState out = structural(next, Action::InsertColumn);
    if (!a.derived) return out;
    std::vector<Position> targets;
    for (std::int64_t r = 0; r < out.coords().row_count(); ++r) targets.push_back({index, r});
    return write(std::move(out), targets, *a.derived);
  }

  SheetState apply(const stmt::RemoveColumn& r) {
    SheetState next = in_;
    next.remove_column(column(in_, r.name));
    return structural(next, Action::Delete);
  }

  SheetState apply(const stmt::InsertRow& ins) {
    for (const auto& [name, f] : ins.assignments) column(in_, name);
    SheetState next = in_;
    std::int64_t n = next.coords().row_count();
    std::int64_t index = ins.at ? std::clamp<std::int64_t>(*ins.at - 1, 0, n) : n;
    next.add_row(index);
    SheetState out = structural(next, Action::InsertRow);
    std::set<CellId> dirty;
    for (const auto& [name, f] : ins.assignments) {
      Position p{column(out, name), index};
      const Cell& c = out.cell_at_checked(p);
      Formula hosted = rehost(f, p);
      Value v = hosted.is_literal() ? hosted.root().as<node::Literal>()->value : Value();
      out.set_cell(c.id, hosted, v);
      dirty.insert(c.id);
    }
    return recompute(out, dirty);
  }

  SheetState apply(const stmt::Delete& d) {
    std::vector<std::int64_t> doomed = matching_rows(in_, d.where, 0);
    if (doomed.empty()) {
      note(Severity::Info, "no rows matched");
      return in_;
    }
    SheetState next = in_;
    std::unordered_set<std::int64_t> drop(doomed.begin(), doomed.end());
    std::vector<RowId> keep;
    const auto cols = in_.coords().columns();
    const auto rows = in_.coords().rows();
    for (std::int64_t r = 0; r < in_.coords().row_count(); ++r) {
      RowId id = rows[static_cast<std::size_t>(r)];
      if (!drop.count(r)) {
        keep.push_back(id);
        continue;
      }
      for (const Column& c : cols) {
        next.erase_cell(*in_.coords().cell_for(c.id, id));
        next.mutable_coords().unbind(c.id, id);
      }
    }
    next.mutable_coords().set_row_order(std::move(keep));
    return structural(next, Action::Delete);
  }

  // Listed items keep the positions they jointly occupy, in the given order.
  template <class T>
  static std::vector<T> permute(std::vector<T> order, const std::vector<std::int64_t>& listed,
                                const std::vector<T>& values) {
    std::vector<std::int64_t> slots = listed;
    std::sort(slots.begin(), slots.end());
    for (std::size_t i = 0; i < slots.size(); ++i) {
      order[static_cast<std::size_t>(slots[i])] = values[i];
    }
    return order;
  }

  SheetState apply(const stmt::ReorderColumns& r) {
    std::vector<std::int64_t> listed;
    std::vector<Column> values;
    std::set<std::int64_t> seen;
    for (const auto& name : r.columns) {
      std::int64_t i = column(in_, name);
      if (!seen.insert(i).second) {
        throw Error(ErrorCode::InvalidArgument, "column listed twice: " + name);
      }
      listed.push_back(i);
      values.push_back(in_.coords().columns()[static_cast<std::size_t>(i)]);
    }
    auto all = in_.coords().columns();
    SheetState next = in_;
    next.mutable_coords().set_column_order(
        permute(std::vector<Column>(all.begin(), all.end()), listed, values));
    return structural(next, Action::Reorder);
  }

  SheetState apply(const stmt::ReorderRows& r) {
    std::vector<std::int64_t> listed;
    std::vector<RowId> values;
    std::set<std::int64_t> seen;
    for (std::uint64_t id : r.rows) {
      std::int64_t i = row_of(in_, id);
      if (!seen.insert(i).second) {
        throw Error(ErrorCode::InvalidArgument, "rowid listed twice: " + std::to_string(id));
      }
      listed.push_back(i);
      values.push_back(RowId{id});
    }
    auto all = in_.coords().rows();
    SheetState next = in_;
    next.mutable_coords().set_row_order(
        permute(std::vector<RowId>(all.begin(), all.end()), listed, values));
    return structural(next, Action::Reorder);
  }

  SheetState apply(const stmt::SortRows& s) {
    std::vector<std::pair<std::int64_t, bool>> keys;
    for (const SortKey& k : s.keys) keys.emplace_back(column(in_, k.column), k.descending);
    const CoordinateSystem& cs = in_.coords();
    std::vector<std::int64_t> order(static_cast<std::size_t>(cs.row_count()));
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<std::int64_t>(i);
    std::stable_sort(order.begin(), order.end(), [&](std::int64_t a, std::int64_t b) {
      for (auto [col, desc] : keys) {
        const Value& va = in_.cell_at_checked({col, a}).value;
        const Value& vb = in_.cell_at_checked({col, b}).value;
        if (va.is_null() != vb.is_null()) return vb.is_null();
        int c = collate(va, vb);
        if (c != 0) return desc ? c > 0 : c < 0;
      }
      return false;
    });
    std::vector<RowId> rows;
    for (std::int64_t r : order) rows.push_back(cs.rows()[static_cast<std::size_t>(r)]);
    SheetState next = in_;
    next.mutable_coords().set_row_order(std::move(rows));
    return structural(next, Action::Sort);
  }

  SheetState apply(const stmt::MoveCells& m) {
    const CoordinateSystem& cs = in_.coords();
    std::vector<std::int64_t> cols, rows;
    for (const auto& name : m.columns) cols.push_back(column(in_, name));
    for (std::uint64_t id : m.rows) rows.push_back(row_of(in_, id));
    std::sort(cols.begin(), cols.end());
    std::sort(rows.begin(), rows.end());
    cols.erase(std::unique(cols.begin(), cols.end()), cols.end());
    rows.erase(std::unique(rows.begin(), rows.end()), rows.end());
    Position dest{column(in_, m.to_column), row_of(in_, m.to_row)};
    if (cols.empty() || rows.empty()) return in_;
    if (dest.col + static_cast<std::int64_t>(cols.size()) > cs.column_count() ||
        dest.row + static_cast<std::int64_t>(rows.size()) > cs.row_count()) {
      throw Error(ErrorCode::InvalidArgument, "paste target extends past the sheet");
    }
    struct Move {
      CellId cell;
      Position to;
    };
    std::vector<Move> moves;
    std::set<Position> sources, targets;
    for (std::size_t j = 0; j < rows.size(); ++j) {
      for (std::size_t i = 0; i < cols.size(); ++i) {
        Position from{cols[i], rows[j]};
        Position to{dest.col + static_cast<std::int64_t>(i),
                    dest.row + static_cast<std::int64_t>(j)};
        moves.push_back(Move{*cs.at(from), to});
        sources.insert(from);
        targets.insert(to);
      }
    }
    SheetState next = in_;
    auto key = [&](Position p) {
      return std::pair{cs.columns()[static_cast<std::size_t>(p.col)].id,
                       cs.rows()[static_cast<std::size_t>(p.row)]};
    };
    // Overwritten cells that are not themselves moving are deleted.
    for (Position t : targets) {
      if (!sources.count(t)) next.erase_cell(*cs.at(t));
    }
    for (Position p : sources) {
      auto [c, r] = key(p);
      next.mutable_coords().unbind(c, r);
    }
    for (Position p : targets) {
      auto [c, r] = key(p);
      next.mutable_coords().unbind(c, r);
    }
    for (const Move& mv : moves) {
      auto [c, r] = key(mv.to);
      next.mutable_coords().bind(c, r, mv.cell);
    }
    for (Position p : sources) {
      if (targets.count(p)) continue;
      auto [c, r] = key(p);
      next.mutable_coords().bind(c, r, next.create_cell());
    }
    return structural(next, Action::CutPaste);
  }

  const SheetState& in_;
  const Statement& s_;
  const StabilityPolicy& policy_;
  std::vector<Diagnostic> diags_;
};

}  // namespace

Applied apply(const SheetState& state, const Statement& s, const StabilityPolicy& policy) {
  return Executor(state, s, policy).run();
}

Applied replay(const Script& script, const SourceResolver& resolve,
               const StabilityPolicy& policy) {
  Applied out{resolve(script.source), {}};
  for (const Statement& s : script.statements) {
    Applied step;
    try {
      step = apply(out.state, s, policy);
    } catch (const Error& e) {
      throw Error(e.code(), "statement " + std::to_string(s.index) + " (" +
                                std::string(s.keyword()) + "): " + e.what());
    }
    out.state = std::move(step.state);
    out.diagnostics.insert(out.diagnostics.end(), step.diagnostics.begin(),
                           step.diagnostics.end());
  }
  return out;
}

}  // namespace vizier
