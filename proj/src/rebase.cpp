#include "vizier/rebase.hpp"

#include <algorithm>

#include "vizier/dependency.hpp"

namespace vizier {

std::string_view to_string(StabilityMode mode) {
  return mode == StabilityMode::ValueStable ? "value-stable" : "formula-stable";
}

namespace {

class Rebaser {
 public:
  Rebaser(Position host, const CoordinateTransform& t) : old_host_(host), t_(t) {
    if (auto id = t.before.at(host)) {
      host_id_ = *id;
      if (auto p = t.after.position_of(*id)) new_host_ = *p;
    }
  }

  bool host_survives() const { return new_host_.has_value(); }

  ExprPtr run(const ExprPtr& root) {
    ExprRewrite fn = [&](const ExprPtr& e) -> ExprPtr { return node(e, fn); };
    return transform(root, fn);
  }

 private:
  static ExprPtr dangling() { return make(node::Dangling{}); }

  std::optional<Position> moved(Position old_target) const {
    auto id = t_.before.at(old_target);
    if (!id) return std::nullopt;
    return t_.after.position_of(*id);
  }

  CellRef express(const CellRef& style, Position target) const {
    CellRef r = style;
    r.col.value = style.col.absolute ? target.col : target.col - new_host_->col;
    r.row.value = style.row.absolute ? target.row : target.row - new_host_->row;
    return r;
  }

  ExprPtr node(const ExprPtr& e, const ExprRewrite& self) {
    if (auto* r = e->as<node::Ref>()) {
      auto p = moved(r->ref.target(old_host_));
      return p ? ref(express(r->ref, *p)) : dangling();
    }
    if (auto* c = e->as<node::Column>()) return column(*c, e);
    if (e->as<node::RowIdOf>()) {
      RowId before = t_.before.rows()[static_cast<std::size_t>(old_host_.row)];
      RowId after = t_.after.rows()[static_cast<std::size_t>(new_host_->row)];
      if (before == after) return e;
      return lit(Value(static_cast<std::int64_t>(before.value)));
    }
    if (auto* a = e->as<node::Aggregate>()) {
      std::vector<ExprPtr> args;
      for (const auto& arg : a->args) {
        if (auto* rg = arg->as<node::Range>()) {
          range(*rg, args);
        } else {
          args.push_back(transform(arg, self));
        }
      }
      return make(node::Aggregate{a->fn, std::move(args)});
    }
    return nullptr;
  }

  ExprPtr column(const node::Column& c, const ExprPtr& e) {
    auto idx = t_.before.column_index(c.name);
    if (!idx) return dangling();
    auto target = t_.before.at(Position{*idx, old_host_.row});
    if (!target) return dangling();
    auto p = t_.after.position_of(*target);
    if (!p) return dangling();
    auto now = t_.after.column_index(c.name);
    if (now && *now == p->col && p->row == new_host_->row) return e;
    return ref(express(CellRef{}, *p));
  }

  void range(const node::Range& rg, std::vector<ExprPtr>& out) {
    Position a = rg.from.target(old_host_), b = rg.to.target(old_host_);
    Position lo{std::min(a.col, b.col), std::min(a.row, b.row)};
    Position hi{std::max(a.col, b.col), std::max(a.row, b.row)};
    if (!t_.before.in_bounds(lo) || !t_.before.in_bounds(hi)) {
      out.push_back(dangling());
      return;
    }
    // Members row-major with their new positions.
    std::vector<std::optional<Position>> members;
    for (std::int64_t r = lo.row; r <= hi.row; ++r) {
      for (std::int64_t c = lo.col; c <= hi.col; ++c) members.push_back(moved(Position{c, r}));
    }
    auto na = moved(a), nb = moved(b);
    bool intact = na && nb &&
                  std::all_of(members.begin(), members.end(), [](auto& m) { return m; });
    if (intact) {
      Position nlo{std::min(na->col, nb->col), std::min(na->row, nb->row)};
      Position nhi{std::max(na->col, nb->col), std::max(na->row, nb->row)};
      std::size_t area = static_cast<std::size_t>((nhi.col - nlo.col + 1) * (nhi.row - nlo.row + 1));
      bool same = area == members.size();
      std::size_t i = 0;
      for (std::int64_t r = nlo.row; same && r <= nhi.row; ++r) {
        for (std::int64_t c = nlo.col; same && c <= nhi.col; ++c) {
          // Same shape and same row-major member order.
          same = *members[i++] == Position{c, r};
        }
      }
      if (same) {
        out.push_back(make(node::Range{express(rg.from, *na), express(rg.to, *nb)}));
        return;
      }
    }
    for (const auto& m : members) {
      out.push_back(m ? ref(express(CellRef{}, *m)) : dangling());
    }
  }

  Position old_host_;
  const CoordinateTransform& t_;
  CellId host_id_;
  std::optional<Position> new_host_;
};

}  // namespace

Formula rebase(const Formula& f, Position host, const CoordinateTransform& transform,
               StabilityMode mode) {
  if (mode == StabilityMode::FormulaStable || f.is_literal()) return f;
  Rebaser r(host, transform);
  if (!r.host_survives()) return f;
  return Formula(r.run(f.ptr()));
}

SheetState apply_transform(const SheetState& state, const SheetState& next, StabilityMode mode) {
  if (mode == StabilityMode::FormulaStable) return recompute_all(next);
  CoordinateTransform t{state.coords(), next.coords()};
  SheetState out = next;
  std::set<CellId> dirty;
  for (const auto& [id, cell] : next.cells()) {
    if (cell.formula.is_literal()) continue;
    const Cell* old = state.cell(id);
    auto old_pos = state.coords().position_of(id);
    if (!old || !old_pos) {
      dirty.insert(id);
      continue;
    }
    Dependencies before = dependencies(old->formula, state, *old_pos);
    Formula rebased = rebase(old->formula, *old_pos, t, mode);
    out.set_formula(id, rebased);
    bool lost = std::any_of(before.cells.begin(), before.cells.end(), [&](CellId d) {
      return !next.cell(d) || !next.coords().position_of(d);
    });
    if (lost) dirty.insert(id);
  }
  return recompute(out, dirty);
}

}  // namespace vizier
