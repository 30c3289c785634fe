#pragma once

#include <set>
#include <vector>

#include "vizier/sheet.hpp"

namespace vizier {

struct Dependencies {
  std::set<CellId> cells;
  /// Set when some reference points off-grid, at a missing id, or at a
  /// dangling marker. Such references contribute no cell.
  bool has_dangling = false;
};

/// Cells whose value can influence `f` evaluated at `host`. Ranges expand to
/// their members; named columns resolve to the host row's cell.
Dependencies dependencies(const Formula& f, const SheetState& state, Position host);

/// Re-evaluates `dirty` and everything that transitively depends on it in
/// topological order. Cells on a cycle receive CYCLE.
SheetState recompute(const SheetState& state, const std::set<CellId>& dirty);

/// recompute() over every cell.
SheetState recompute_all(const SheetState& state);

/// Cells that lie on some dependency cycle (including self-references).
std::set<CellId> cyclic_cells(const SheetState& state);

/// Every elementary cycle of the dependency graph, each starting at its
/// smallest id.
std::vector<std::vector<CellId>> detect_cycles(const SheetState& state);

}  // namespace vizier
