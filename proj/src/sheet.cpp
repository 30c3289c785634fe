#include "vizier/sheet.hpp"

#include <algorithm>

#include "vizier/dependency.hpp"
#include "vizier/error.hpp"
#include "vizier/lexer.hpp"

namespace vizier {

// ---------------------------------------------------------------------------
// CoordinateSystem

std::optional<CellId> CoordinateSystem::at(Position p) const {
  if (!in_bounds(p)) return std::nullopt;
  return cell_for(columns_[static_cast<std::size_t>(p.col)].id,
                  rows_[static_cast<std::size_t>(p.row)]);
}

std::optional<Position> CoordinateSystem::position_of(CellId id) const {
  auto it = where_.find(id);
  if (it == where_.end()) return std::nullopt;
  auto c = col_index_.find(it->second.col);
  auto r = row_index_.find(it->second.row);
  if (c == col_index_.end() || r == row_index_.end()) return std::nullopt;
  return Position{c->second, r->second};
}

std::optional<CellId> CoordinateSystem::cell_for(ColId c, RowId r) const {
  auto it = grid_.find(Key{c, r});
  if (it == grid_.end()) return std::nullopt;
  return it->second;
}

std::optional<std::int64_t> CoordinateSystem::column_index(ColId id) const {
  auto it = col_index_.find(id);
  if (it == col_index_.end()) return std::nullopt;
  return it->second;
}

std::optional<std::int64_t> CoordinateSystem::column_index(std::string_view name) const {
  for (std::size_t i = 0; i < columns_.size(); ++i) {
    if (columns_[i].name == name) return static_cast<std::int64_t>(i);
  }
  std::optional<std::int64_t> found;
  for (std::size_t i = 0; i < columns_.size(); ++i) {
    if (iequals(columns_[i].name, name)) {
      if (found) return std::nullopt;
      found = static_cast<std::int64_t>(i);
    }
  }
  return found;
}

std::optional<std::int64_t> CoordinateSystem::row_index(RowId id) const {
  auto it = row_index_.find(id);
  if (it == row_index_.end()) return std::nullopt;
  return it->second;
}

void CoordinateSystem::insert_column(std::int64_t index, Column column) {
  index = std::clamp<std::int64_t>(index, 0, column_count());
  columns_.insert(columns_.begin() + index, std::move(column));
  reindex();
}

void CoordinateSystem::erase_column(std::int64_t index) {
  ColId id = columns_.at(static_cast<std::size_t>(index)).id;
  for (RowId r : rows_) unbind(id, r);
  columns_.erase(columns_.begin() + index);
  reindex();
}

void CoordinateSystem::insert_row(std::int64_t index, RowId row) {
  index = std::clamp<std::int64_t>(index, 0, row_count());
  rows_.insert(rows_.begin() + index, row);
  reindex();
}

void CoordinateSystem::erase_row(std::int64_t index) {
  RowId id = rows_.at(static_cast<std::size_t>(index));
  for (const Column& c : columns_) unbind(c.id, id);
  rows_.erase(rows_.begin() + index);
  reindex();
}

void CoordinateSystem::set_column_order(std::vector<Column> columns) {
  columns_ = std::move(columns);
  reindex();
}

void CoordinateSystem::set_row_order(std::vector<RowId> rows) {
  rows_ = std::move(rows);
  reindex();
}

void CoordinateSystem::bind(ColId c, RowId r, CellId cell) {
  unbind(c, r);
  auto old = where_.find(cell);
  if (old != where_.end()) grid_.erase(old->second);
  grid_[Key{c, r}] = cell;
  where_[cell] = Key{c, r};
}

void CoordinateSystem::unbind(ColId c, RowId r) {
  auto it = grid_.find(Key{c, r});
  if (it == grid_.end()) return;
  where_.erase(it->second);
  grid_.erase(it);
}

void CoordinateSystem::reindex() {
  col_index_.clear();
  row_index_.clear();
  for (std::size_t i = 0; i < columns_.size(); ++i) {
    col_index_[columns_[i].id] = static_cast<std::int64_t>(i);
  }
  for (std::size_t i = 0; i < rows_.size(); ++i) {
    row_index_[rows_[i]] = static_cast<std::int64_t>(i);
  }
}

// ---------------------------------------------------------------------------
// SheetState

const Cell* SheetState::cell(CellId id) const {
  auto it = cells_.find(id);
  return it == cells_.end() ? nullptr : &it->second;
}

const Cell* SheetState::cell_at(Position p) const {
  auto id = coords_.at(p);
  return id ? cell(*id) : nullptr;
}

const Cell& SheetState::cell_at_checked(Position p) const {
  const Cell* c = cell_at(p);
  if (!c) throw Error(ErrorCode::InvalidArgument, "no cell at " + a1_text(p));
  return *c;
}

std::vector<std::string> SheetState::column_names() const {
  std::vector<std::string> out;
  for (const Column& c : coords_.columns()) out.push_back(c.name);
  return out;
}

ColId SheetState::add_column(std::int64_t index, std::string name) {
  for (const Column& c : coords_.columns()) {
    if (c.name == name) throw Error(ErrorCode::DuplicateColumn, "column exists: " + name);
  }
  ColId id = ids_.col();
  coords_.insert_column(index, Column{id, std::move(name)});
  for (RowId r : coords_.rows()) coords_.bind(id, r, create_cell());
  return id;
}

void SheetState::remove_column(std::int64_t index) {
  ColId id = coords_.columns()[static_cast<std::size_t>(index)].id;
  for (RowId r : coords_.rows()) {
    if (auto c = coords_.cell_for(id, r)) cells_.erase(*c);
  }
  coords_.erase_column(index);
}

RowId SheetState::add_row(std::int64_t index) { return add_row_with_id(index, ids_.row()); }

RowId SheetState::add_row_with_id(std::int64_t index, RowId id) {
  if (ids_.next_row <= id.value) ids_.next_row = id.value + 1;
  coords_.insert_row(index, id);
  for (const Column& c : coords_.columns()) coords_.bind(c.id, id, create_cell());
  return id;
}

void SheetState::remove_row(std::int64_t index) {
  RowId id = coords_.rows()[static_cast<std::size_t>(index)];
  for (const Column& c : coords_.columns()) {
    if (auto cell = coords_.cell_for(c.id, id)) cells_.erase(*cell);
  }
  coords_.erase_row(index);
}

void SheetState::set_formula(CellId id, Formula f) { cells_.at(id).formula = std::move(f); }
void SheetState::set_value(CellId id, Value v) { cells_.at(id).value = std::move(v); }
void SheetState::set_cell(CellId id, Formula f, Value v) {
  Cell& c = cells_.at(id);
  c.formula = std::move(f);
  c.value = std::move(v);
}

CellId SheetState::create_cell() {
  CellId id = ids_.cell();
  cells_.emplace(id, Cell{id, Formula(), Value()});
  return id;
}

void SheetState::erase_cell(CellId id) { cells_.erase(id); }

SheetState new_sheet(const std::vector<std::string>& columns) {
  SheetState s;
  for (const std::string& name : columns) s.add_column(s.coords().column_count(), name);
  return s;
}

// ---------------------------------------------------------------------------
// Resolution

Value SheetResolver::cell(Position target) const {
  const Cell* c = state_.cell_at(target);
  return c ? c->value : Value::error(ErrorKind::RefDangling);
}

Value SheetResolver::explicit_cell(CellId id) const {
  const Cell* c = state_.cell(id);
  if (!c || !state_.coords().position_of(id)) return Value::error(ErrorKind::RefDangling);
  return c->value;
}

Value SheetResolver::column(std::string_view name) const {
  auto idx = state_.coords().column_index(name);
  if (!idx) return Value::error(ErrorKind::RefDangling);
  return cell(Position{*idx, host_.row});
}

Value SheetResolver::row_id() const {
  if (host_.row < 0 || host_.row >= state_.coords().row_count()) {
    return Value::error(ErrorKind::RefDangling);
  }
  return Value(static_cast<std::int64_t>(
      state_.coords().rows()[static_cast<std::size_t>(host_.row)].value));
}

Value SheetResolver::self_value() const { return cell(host_); }

std::vector<Value> SheetResolver::range(Position from, Position to) const {
  Position lo{std::min(from.col, to.col), std::min(from.row, to.row)};
  Position hi{std::max(from.col, to.col), std::max(from.row, to.row)};
  if (!state_.coords().in_bounds(lo) || !state_.coords().in_bounds(hi)) {
    return {Value::error(ErrorKind::RefDangling)};
  }
  std::vector<Value> out;
  for (std::int64_t r = lo.row; r <= hi.row; ++r) {
    for (std::int64_t c = lo.col; c <= hi.col; ++c) out.push_back(cell(Position{c, r}));
  }
  return out;
}

Value evaluate(const Formula& f, const SheetState& state, Position host) {
  return evaluate(f, SheetResolver(state, host));
}

std::vector<CellId> region_resolve(const SheetState& state, const Region& region,
                                   std::vector<RegionDiagnostic>* diagnostics) {
  const CoordinateSystem& cs = state.coords();
  std::vector<std::int64_t> cols;
  if (region.columns) {
    for (ColId c : *region.columns) {
      if (auto i = cs.column_index(c)) cols.push_back(*i);
    }
    std::sort(cols.begin(), cols.end());
  } else {
    for (std::int64_t i = 0; i < cs.column_count(); ++i) cols.push_back(i);
  }
  std::vector<std::int64_t> rows;
  if (region.rows) {
    for (RowId r : *region.rows) {
      if (auto i = cs.row_index(r)) rows.push_back(*i);
    }
    std::sort(rows.begin(), rows.end());
  } else {
    for (std::int64_t i = 0; i < cs.row_count(); ++i) rows.push_back(i);
  }
  std::vector<CellId> out;
  for (std::int64_t r : rows) {
    for (std::int64_t c : cols) {
      Position p{c, r};
      Value v = evaluate(region.predicate, state, p);
      if (v.is_true()) {
        out.push_back(*cs.at(p));
      } else if (v.is_error() && diagnostics) {
        diagnostics->push_back(RegionDiagnostic{*cs.at(p), v});
      }
    }
  }
  return out;
}

std::vector<Violation> validate_state(const SheetState& state) {
  // Expected values come from a from-scratch evaluation, so one stale cell is
  // reported once rather than again at every cell reading it.
  SheetState fresh = recompute_all(state);
  std::vector<Violation> out;
  for (const auto& [id, cell] : state.cells()) {
    if (!state.coords().position_of(id)) continue;
    const Value& expected = fresh.cell(id)->value;
    if (!(expected == cell.value)) out.push_back(Violation{id, expected, cell.value});
  }
  return out;
}

}  // namespace vizier
