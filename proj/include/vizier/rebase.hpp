#pragma once

#include "vizier/sheet.hpp"

namespace vizier {

enum class StabilityMode {
  ValueStable,    // references follow their targets; values are kept
  FormulaStable,  // formulas are kept; values are recomputed
};

std::string_view to_string(StabilityMode mode);

/// A change of coordinates: the same cells (by id) laid out under `before`
/// and `after`. Cells absent from `after` were deleted.
struct CoordinateTransform {
  const CoordinateSystem& before;
  const CoordinateSystem& after;
};

/// Rewrites `f`, hosted at `host` under the old coordinates, for the cell's
/// new position. Value-stable: every reference is resolved to its target id
/// and re-expressed in its original style (relative, absolute, named column)
/// so it denotes the same cell afterwards; references to deleted cells become
/// dangling markers, and ranges whose members no longer form the same
/// rectangle become explicit member lists. Formula-stable: `f` unchanged.
Formula rebase(const Formula& f, Position host, const CoordinateTransform& transform,
               StabilityMode mode);

/// Shared kernel of the structural statements. `next` is `state` with its
/// coordinate system (and cell table) already edited. Value-stable rebases
/// every surviving formula and recomputes only cells that now reference
/// deleted cells; formula-stable keeps formulas and recomputes everything.
SheetState apply_transform(const SheetState& state, const SheetState& next,
                           StabilityMode mode);

}  // namespace vizier
