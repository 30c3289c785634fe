#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "vizier/evaluate.hpp"
#include "vizier/formula.hpp"
#include "vizier/ids.hpp"
#include "vizier/value.hpp"

namespace vizier {

struct Cell {
  CellId id;
  Formula formula;
  Value value;
};

struct Column {
  ColId id;
  std::string name;
};

/// Maps grid positions to cell ids. Columns and rows are ordered id lists and
/// cells are keyed by (ColId, RowId), so the mapping is one-to-one by
/// construction and reordering never touches cell identity.
class CoordinateSystem {
 public:
  std::span<const Column> columns() const { return columns_; }
  std::span<const RowId> rows() const { return rows_; }
  std::int64_t column_count() const { return static_cast<std::int64_t>(columns_.size()); }
  std::int64_t row_count() const { return static_cast<std::int64_t>(rows_.size()); }

  bool in_bounds(Position p) const {
    return p.col >= 0 && p.row >= 0 && p.col < column_count() && p.row < row_count();
  }

  std::optional<CellId> at(Position p) const;
  std::optional<Position> position_of(CellId id) const;
  std::optional<CellId> cell_for(ColId c, RowId r) const;

  std::optional<std::int64_t> column_index(ColId id) const;
  std::optional<std::int64_t> column_index(std::string_view name) const;
  std::optional<std::int64_t> row_index(RowId id) const;

  // Structural edits. Callers keep the cell table in sync (see SheetState).
  void insert_column(std::int64_t index, Column column);
  void erase_column(std::int64_t index);
  void insert_row(std::int64_t index, RowId row);
  void erase_row(std::int64_t index);
  void set_column_order(std::vector<Column> columns);
  void set_row_order(std::vector<RowId> rows);
  void bind(ColId c, RowId r, CellId cell);
  void unbind(ColId c, RowId r);

 private:
  struct Key {
    ColId col;
    RowId row;
    friend bool operator==(const Key&, const Key&) = default;
  };
  struct KeyHash {
    std::size_t operator()(const Key& k) const noexcept {
      return std::hash<std::uint64_t>{}(k.col.value * 1000003u ^ k.row.value);
    }
  };

  void reindex();

  std::vector<Column> columns_;
  std::vector<RowId> rows_;
  std::unordered_map<Key, CellId, KeyHash> grid_;
  std::unordered_map<CellId, Key> where_;
  std::unordered_map<ColId, std::int64_t> col_index_;
  std::unordered_map<RowId, std::int64_t> row_index_;
};

/// A sheet snapshot ⟨cells, coordinates⟩. Treated as a value: operations copy
/// and return a new state.
class SheetState {
 public:
  const CoordinateSystem& coords() const { return coords_; }
  const std::map<CellId, Cell>& cells() const { return cells_; }
  const IdAllocator& allocator() const { return ids_; }

  const Cell* cell(CellId id) const;
  const Cell* cell_at(Position p) const;
  const Cell& cell_at_checked(Position p) const;

  std::vector<std::string> column_names() const;

  // Mutators used by the executor on its private copy.
  ColId add_column(std::int64_t index, std::string name);
  void remove_column(std::int64_t index);
  RowId add_row(std::int64_t index);
  RowId add_row_with_id(std::int64_t index, RowId id);
  void remove_row(std::int64_t index);
  void set_formula(CellId id, Formula f);
  void set_value(CellId id, Value v);
  void set_cell(CellId id, Formula f, Value v);
  CoordinateSystem& mutable_coords() { return coords_; }
  IdAllocator& mutable_allocator() { return ids_; }
  /// Creates an unplaced literal-null cell.
  CellId create_cell();
  void erase_cell(CellId id);

 private:
  std::map<CellId, Cell> cells_;
  CoordinateSystem coords_;
  IdAllocator ids_;
};

/// Empty sheet with the given columns and no rows.
SheetState new_sheet(const std::vector<std::string>& columns);

/// Resolves references against a sheet's stored values: references read
/// values and never re-evaluate the referenced formulas.
class SheetResolver : public ReferenceResolver {
 public:
  SheetResolver(const SheetState& state, Position host) : state_(state), host_(host) {}

  Value cell(Position target) const override;
  Value explicit_cell(CellId id) const override;
  Value column(std::string_view name) const override;
  Value row_id() const override;
  Value self_value() const override;
  std::vector<Value> range(Position from, Position to) const override;
  Position host() const override { return host_; }

 private:
  const SheetState& state_;
  Position host_;
};

/// Evaluates `f` as if it were the formula of the cell at `host`.
Value evaluate(const Formula& f, const SheetState& state, Position host);

/// ⟨columns, rows, predicate⟩. An unset set means "all".
struct Region {
  std::optional<std::vector<ColId>> columns;
  std::optional<std::vector<RowId>> rows;
  Formula predicate = Formula::literal(Value(true));
};

struct RegionDiagnostic {
  CellId cell;
  Value predicate_value;
};

/// Cells in columns x rows whose predicate is TRUE, in row-major position
/// order. A predicate that errors excludes the cell and is reported.
std::vector<CellId> region_resolve(const SheetState& state, const Region& region,
                                   std::vector<RegionDiagnostic>* diagnostics = nullptr);

struct Violation {
  CellId cell;
  Value expected;
  Value stored;
};

/// Cells whose stored value differs from a from-scratch evaluation of the
/// whole sheet. Cells on a dependency cycle expect CYCLE.
std::vector<Violation> validate_state(const SheetState& state);

}  // namespace vizier
