#pragma once

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "vizier/sheet.hpp"
#include "vizier/vizual.hpp"

namespace vizier {

/// Inclusive rectangle of grid positions.
struct Rect {
  Position first;
  Position last;

  std::int64_t width() const { return last.col - first.col + 1; }
  std::int64_t height() const { return last.row - first.row + 1; }
};

namespace gesture {
struct EditCell { Position at; std::string text; };
struct Typecast { Rect region; CastType type; };
struct CopyPaste { Rect source; Rect target; };
struct Fill { Rect source; Rect target; };
struct CutPaste { Rect source; Position target; };
struct DragRows { std::vector<std::uint64_t> rows; std::int64_t destination = 0; };
struct DragColumns { std::vector<std::string> columns; std::int64_t destination = 0; };
struct InsertRow { bool after = false; std::int64_t index = 0; };
struct InsertColumn { bool after = false; std::int64_t index = 0; std::string name; };
struct DeleteRows { Rect region; };
struct Sort { std::vector<SortKey> keys; };
struct Filter { std::string predicate; };  // rows where this holds are kept
}  // namespace gesture

/// A UI action. Positions are 0-based grid coordinates of the sheet the
/// gesture was made on; destinations are 0-based insertion indexes.
using Gesture = std::variant<gesture::EditCell, gesture::Typecast, gesture::CopyPaste,
                             gesture::Fill, gesture::CutPaste, gesture::DragRows,
                             gesture::DragColumns, gesture::InsertRow,
                             gesture::InsertColumn, gesture::DeleteRows, gesture::Sort,
                             gesture::Filter>;

/// Statements that realize `g` on `state`, all tagged with `group`.
/// Throws EMPTY_TARGET when the gesture selects nothing.
std::vector<Statement> gesture_to_statements(const Gesture& g, const SheetState& state,
                                             std::uint64_t group);

}  // namespace vizier
