#pragma once

#include <compare>
#include <cstdint>
#include <functional>

namespace vizier {

/// Opaque, never-reused identifier. The tag type keeps cell, row and column
/// ids from being mixed up.
template <class Tag>
struct Id {
  std::uint64_t value = 0;

  constexpr bool valid() const { return value != 0; }
  friend constexpr auto operator<=>(Id, Id) = default;
};

struct CellTag {};
struct RowTag {};
struct ColTag {};

using CellId = Id<CellTag>;
using RowId = Id<RowTag>;
using ColId = Id<ColTag>;

/// Monotone allocator; ids start at 1 so that loaded rows number 1..n.
struct IdAllocator {
  std::uint64_t next_cell = 1;
  std::uint64_t next_row = 1;
  std::uint64_t next_col = 1;

  CellId cell() { return CellId{next_cell++}; }
  RowId row() { return RowId{next_row++}; }
  ColId col() { return ColId{next_col++}; }
};

}  // namespace vizier

template <class Tag>
struct std::hash<vizier::Id<Tag>> {
  std::size_t operator()(vizier::Id<Tag> id) const noexcept {
    return std::hash<std::uint64_t>{}(id.value);
  }
};
