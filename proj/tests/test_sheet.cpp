#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "test_support.hpp"
#include "vizier/error.hpp"
#include "vizier/rebase.hpp"

using namespace vizier;
using vt::at;
using vt::cell;

TEST(Sheet, NewSheet) {
  SheetState s = new_sheet({"name", "price"});
  EXPECT_EQ(s.coords().column_count(), 2);
  EXPECT_EQ(s.coords().row_count(), 0);
  EXPECT_TRUE(validate_state(s).empty());
  EXPECT_EQ(new_sheet({}).coords().column_count(), 0);
  try {
    new_sheet({"a", "a"});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DuplicateColumn);
  }
}

TEST(Sheet, RunningSumValues) {
  SheetState s = vt::running_sum();
  std::vector<std::string> want{"=B1", "=B2+C1", "=B3+C2", "=B4+C3"};
  std::vector<Value> vals{Value(10), Value(14), Value(22), Value(31)};
  for (int r = 0; r < 4; ++r) {
    std::string a1 = "C" + std::to_string(r + 1);
    EXPECT_EQ(vt::shown(s, a1), want[r]);
    EXPECT_EQ(cell(s, a1).value, vals[r]);
  }
  EXPECT_TRUE(validate_state(s).empty());
  EXPECT_EQ(evaluate(parse_formula("=B4+C3", at("C4")), s, at("C4")), Value(31));
}

TEST(Sheet, RegionResolve) {
  SheetState s = vt::running_sum();
  Region r;
  r.columns = std::vector<ColId>{s.coords().columns()[1].id};
  r.predicate = parse_expression("VALUE > 8", std::nullopt);
  auto ids = region_resolve(s, r);
  ASSERT_EQ(ids.size(), 2u);
  EXPECT_EQ(ids[0], cell(s, "B1").id);
  EXPECT_EQ(ids[1], cell(s, "B4").id);

  EXPECT_EQ(region_resolve(s, Region{}).size(), 12u);
}

TEST(Sheet, RegionResolveMatchesBruteForce) {
  std::mt19937 rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    SheetState s = new_sheet({"A", "B", "C", "D", "E"});
    for (int r = 0; r < 5; ++r) s.add_row(r);
    for (int r = 0; r < 5; ++r) {
      for (int c = 0; c < 5; ++c) {
        s.set_cell(*s.coords().at({c, r}), Formula::literal(Value(int(rng() % 20))),
                   Value(int(rng() % 20)));
      }
    }
    s = recompute_all(s);
    int k = static_cast<int>(rng() % 20);
    Region region;
    region.predicate = parse_expression("VALUE >= " + std::to_string(k), std::nullopt);
    std::vector<CellId> want;
    for (int r = 0; r < 5; ++r) {
      for (int c = 0; c < 5; ++c) {
        const Cell& x = s.cell_at_checked({c, r});
        if (x.value.as_int() >= k) want.push_back(x.id);
      }
    }
    EXPECT_EQ(region_resolve(s, region), want);
  }
}

TEST(Sheet, RegionPredicateErrorIsDiagnosed) {
  SheetState s = vt::running_sum();
  Region r;
  r.predicate = parse_expression("VALUE * 2 > 8", std::nullopt);
  std::vector<RegionDiagnostic> diags;
  auto ids = region_resolve(s, r, &diags);
  EXPECT_EQ(diags.size(), 4u);  // the name column
  EXPECT_EQ(ids.size(), 7u);  // B: 20, 16, 18; C: all four
}

TEST(Sheet, ValidateStateFindsStaleValue) {
  SheetState s = vt::running_sum();
  s.set_value(cell(s, "C2").id, Value(0));
  auto v = validate_state(s);
  ASSERT_EQ(v.size(), 1u);
  EXPECT_EQ(v[0].cell, cell(s, "C2").id);
  EXPECT_EQ(v[0].expected, Value(14));
  EXPECT_EQ(v[0].stored, Value(0));
}

TEST(Sheet, ValidateStateReportsSelfReference) {
  SheetState c = new_sheet({"A", "B", "C"});
  c.add_row(0);
  c.set_formula(cell(c, "C1").id, parse_formula("=C1", at("C1")));
  auto v = validate_state(c);
  ASSERT_EQ(v.size(), 1u);
  EXPECT_EQ(v[0].expected, Value::error(ErrorKind::Cycle));
}

TEST(Dependency, Direct) {
  SheetState s = vt::running_sum();
  auto d = dependencies(parse_formula("=B2+C1", at("C2")), s, at("C2"));
  EXPECT_EQ(d.cells, (std::set<CellId>{cell(s, "B2").id, cell(s, "C1").id}));
  EXPECT_FALSE(d.has_dangling);
  EXPECT_TRUE(dependencies(parse_formula("=7", at("C2")), s, at("C2")).cells.empty());
  auto sum = dependencies(parse_formula("=SUM(B1:B4)", at("A1")), s, at("A1"));
  std::set<CellId> b;
  for (int r = 0; r < 4; ++r) b.insert(s.cell_at_checked({1, r}).id);
  EXPECT_EQ(sum.cells, b);
  EXPECT_TRUE(dependencies(parse_formula("=Z99", at("A1")), s, at("A1")).has_dangling);
}

TEST(Dependency, RecomputePropagates) {
  SheetState s = vt::running_sum();
  s.set_cell(cell(s, "B2").id, Formula::literal(Value(5)), Value(5));
  s = recompute(s, {cell(s, "B2").id});
  EXPECT_EQ(cell(s, "C2").value, Value(15));
  EXPECT_EQ(cell(s, "C3").value, Value(23));
  EXPECT_EQ(cell(s, "C4").value, Value(32));
  EXPECT_TRUE(validate_state(s).empty());

  SheetState f = vt::running_sum();
  SheetState same = recompute(f, {});
  EXPECT_EQ(vt::values_by_id(same), vt::values_by_id(f));
}

TEST(Dependency, LongChain) {
  SheetState s = new_sheet({"A"});
  for (int r = 0; r < 50; ++r) s.add_row(r);
  s.set_cell(cell(s, "A1").id, Formula::literal(Value(0)), Value(0));
  for (int r = 1; r < 50; ++r) s.set_formula(s.cell_at_checked({0, r}).id, parse_formula("=A" + std::to_string(r) + "+1", Position{0, r}));
  s = recompute_all(s);
  s.set_cell(cell(s, "A1").id, Formula::literal(Value(100)), Value(100));
  s = recompute(s, {cell(s, "A1").id});
  for (int r = 0; r < 50; ++r) EXPECT_EQ(s.cell_at_checked({0, r}).value, Value(100 + r));
}

TEST(Dependency, Cycles) {
  EXPECT_TRUE(detect_cycles(vt::running_sum()).empty());
  SheetState s = new_sheet({"A", "B"});
  s.add_row(0);
  s.set_formula(cell(s, "A1").id, parse_formula("=B1", at("A1")));
  s.set_formula(cell(s, "B1").id, parse_formula("=A1", at("B1")));
  s = recompute_all(s);
  auto cycles = detect_cycles(s);
  ASSERT_EQ(cycles.size(), 1u);
  EXPECT_EQ(std::set<CellId>(cycles[0].begin(), cycles[0].end()),
            (std::set<CellId>{cell(s, "A1").id, cell(s, "B1").id}));
  EXPECT_EQ(cell(s, "A1").value, Value::error(ErrorKind::Cycle));
  EXPECT_EQ(cell(s, "B1").value, Value::error(ErrorKind::Cycle));
}

TEST(Dependency, CyclicCellsMatchSccOracle) {
  std::mt19937 rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    int n = 1 + static_cast<int>(rng() % 6);
    SheetState s = new_sheet({"A"});
    for (int r = 0; r < n; ++r) s.add_row(r);
    for (int r = 0; r < n; ++r) {
      std::string text = "=1";
      for (int k = 0; k < 2; ++k) {
        if (rng() % 2) text += "+$A$" + std::to_string(1 + rng() % n);
      }
      s.set_formula(s.cell_at_checked({0, r}).id, parse_formula(text, Position{0, r}));
    }
    s = recompute_all(s);
    vt::Oracle oracle(s);
    EXPECT_EQ(cyclic_cells(s), oracle.cyclic());
    for (int r = 0; r < n; ++r) {
      EXPECT_EQ(s.cell_at_checked({0, r}).value, oracle.value_of({0, r}));
    }
  }
}

TEST(Rebase, IdentityTransform) {
  SheetState s = vt::running_sum();
  Formula f = cell(s, "C3").formula;
  for (auto mode : {StabilityMode::ValueStable, StabilityMode::FormulaStable}) {
    EXPECT_EQ(rebase(f, at("C3"), {s.coords(), s.coords()}, mode), f);
    SheetState t = apply_transform(s, s, mode);
    EXPECT_EQ(vt::values_by_id(t), vt::values_by_id(s));
  }
}

TEST(Rebase, SwapValueStable) {
  SheetState s = vt::running_sum();
  SheetState next = s;
  auto rows = s.coords().rows();
  next.mutable_coords().set_row_order({rows[0], rows[2], rows[1], rows[3]});
  Formula carol = cell(s, "C3").formula;
  Formula moved = rebase(carol, at("C3"), {s.coords(), next.coords()}, StabilityMode::ValueStable);
  EXPECT_EQ(render_formula(moved, at("C2")), "=B2+C3");
  EXPECT_EQ(rebase(carol, at("C3"), {s.coords(), next.coords()}, StabilityMode::FormulaStable),
            carol);
}

TEST(Rebase, PermutationProperty) {
  std::mt19937 rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    SheetState s = vt::random_sheet(rng);
    std::vector<RowId> rows(s.coords().rows().begin(), s.coords().rows().end());
    std::shuffle(rows.begin(), rows.end(), rng);
    SheetState next = s;
    next.mutable_coords().set_row_order(rows);

    SheetState v = apply_transform(s, next, StabilityMode::ValueStable);
    EXPECT_EQ(vt::values_by_id(v), vt::values_by_id(s));

    SheetState f = apply_transform(s, next, StabilityMode::FormulaStable);
    vt::Oracle oracle(f);
    for (const auto& [id, c] : f.cells()) {
      EXPECT_EQ(relative_normal_form(c.formula), relative_normal_form(s.cell(id)->formula));
      EXPECT_EQ(c.value, oracle.value_of(*f.coords().position_of(id)));
    }
  }
}
