#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "vizier/formula.hpp"

namespace vizier {

// Statement formulas are stored as if hosted at A1: a reference written B2 is
// kept as offset (1, 1). When a statement is applied, the offsets are re-hosted
// on the first target cell and shared by every target, like fill-down.

struct SortKey {
  std::string column;
  bool descending = false;
  friend bool operator==(const SortKey&, const SortKey&) = default;
};

/// Target of a region UPDATE. Either identity-based (column names and rowids,
/// replay-stable) or a positional rectangle resolved when the statement runs.
struct RegionTarget {
  // Identity form: COLUMNS (...) | COLUMNS *, ROWS (...) | ROWS *
  std::optional<std::vector<std::string>> columns;
  std::optional<std::vector<std::uint64_t>> rows;
  // Positional form: A1:B4 or A:B (rows unbounded).
  bool positional = false;
  std::int64_t first_col = 0, last_col = 0;
  std::optional<std::int64_t> first_row, last_row;
  std::optional<Formula> predicate;
  friend bool operator==(const RegionTarget&, const RegionTarget&) = default;
};

namespace stmt {
struct Load {
  std::string path;
  bool header = true;
  bool infer_types = true;
  friend bool operator==(const Load&, const Load&) = default;
};
struct LoadPage {
  std::string page;
  friend bool operator==(const LoadPage&, const LoadPage&) = default;
};
struct Update {
  std::string column;
  Formula formula;
  std::optional<Formula> where;
  friend bool operator==(const Update&, const Update&) = default;
};
struct UpdateRegion {
  RegionTarget region;
  Formula formula;
  friend bool operator==(const UpdateRegion&, const UpdateRegion&) = default;
};
struct AddColumn {
  std::string name;
  std::optional<std::int64_t> at;  // 1-based position
  std::optional<Formula> derived;  // ADD COLUMN x AS f
  friend bool operator==(const AddColumn&, const AddColumn&) = default;
};
struct RemoveColumn {
  std::string name;
  friend bool operator==(const RemoveColumn&, const RemoveColumn&) = default;
};
struct InsertRow {
  std::vector<std::pair<std::string, Formula>> assignments;
  std::optional<std::int64_t> at;  // 1-based position
  friend bool operator==(const InsertRow&, const InsertRow&) = default;
};
struct Delete {
  Formula where;
  friend bool operator==(const Delete&, const Delete&) = default;
};
struct ReorderColumns {
  std::vector<std::string> columns;
  friend bool operator==(const ReorderColumns&, const ReorderColumns&) = default;
};
struct ReorderRows {
  std::vector<std::uint64_t> rows;
  friend bool operator==(const ReorderRows&, const ReorderRows&) = default;
};
struct SortRows {
  std::vector<SortKey> keys;
  friend bool operator==(const SortRows&, const SortRows&) = default;
};
/// Cut/paste: moves the rectangle COLUMNS x ROWS so that its top-left cell
/// lands on (column, row).
struct MoveCells {
  std::vector<std::string> columns;
  std::vector<std::uint64_t> rows;
  std::string to_column;
  std::uint64_t to_row = 0;
  friend bool operator==(const MoveCells&, const MoveCells&) = default;
};
}  // namespace stmt

struct Statement {
  using Body = std::variant<stmt::Load, stmt::LoadPage, stmt::Update, stmt::UpdateRegion,
                            stmt::AddColumn, stmt::RemoveColumn, stmt::InsertRow,
                            stmt::Delete, stmt::ReorderColumns, stmt::ReorderRows,
                            stmt::SortRows, stmt::MoveCells>;
  Body body;
  std::size_t index = 0;    // position in its script
  std::uint64_t group = 0;  // gesture group; 0 when typed by hand

  template <class T>
  const T* as() const { return std::get_if<T>(&body); }

  bool is_source() const { return as<stmt::Load>() || as<stmt::LoadPage>(); }
  /// True for forms beyond the base grammar (AT, regions, derived columns,
  /// MOVE, LOAD PAGE, load options).
  bool is_extension() const;
  std::string_view keyword() const;
};

bool operator==(const Statement& a, const Statement& b);

/// A page program: a source statement followed by edits.
struct Script {
  Statement source;
  std::vector<Statement> statements;

  friend bool operator==(const Script&, const Script&) = default;
};

Script parse_script(std::string_view text);
/// Parses statements without a leading source (e.g. a mutation payload).
std::vector<Statement> parse_statements(std::string_view text);

/// One statement per line, `;`-terminated, gesture groups as trailing
/// `-- @group N` comments.
std::string render_script(const Script& script);
std::string render_statement(const Statement& s);

/// Re-numbers `index` fields to match positions.
void renumber(Script& script);

std::size_t node_count(const Statement& s);

}  // namespace vizier
