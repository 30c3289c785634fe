#include <gtest/gtest.h>

#include "test_support.hpp"
#include "vizier/error.hpp"
#include "vizier/gesture.hpp"

using namespace vizier;
using vt::at;
using vt::cell;

namespace {

SheetState apply_all(SheetState s, const std::vector<Statement>& stmts) {
  for (const auto& st : stmts) s = apply(s, st).state;
  return s;
}

SheetState lineitem() { return vt::run("LOAD 'lineitem.csv'; ADD COLUMN total;").state; }

}  // namespace

TEST(Gesture, EditCellIsSingletonUpdate) {
  SheetState s = lineitem();
  auto out = gesture_to_statements(gesture::EditCell{{4, 1}, "1020"}, s, 3);
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(render_statement(out[0]), "UPDATE total = 1020 WHERE ROWID = 2; -- @group 3");
  EXPECT_EQ(apply_all(s, out).cell_at_checked({4, 1}).value, Value(1020));
}

TEST(Gesture, EditCellWithFormula) {
  SheetState s = vt::running_sum();
  auto out = gesture_to_statements(gesture::EditCell{at("C3"), "=B3*2"}, s, 1);
  SheetState t = apply_all(s, out);
  EXPECT_EQ(vt::shown(t, "C3"), "=B3*2");
  EXPECT_EQ(cell(t, "C3").value, Value(16));
  EXPECT_EQ(cell(t, "C4").value, Value(25));
}

TEST(Gesture, PasteOneCellOverThree) {
  SheetState s = vt::running_sum();
  auto out = gesture_to_statements(gesture::CopyPaste{{at("C2"), at("C2")}, {at("C2"), at("C4")}}, s, 9);
  ASSERT_EQ(out.size(), 3u);
  std::vector<std::string> want{"B2 + C1", "B3 + C2", "B4 + C3"};
  for (std::size_t i = 0; i < 3; ++i) {
    auto* u = out[i].as<stmt::Update>();
    ASSERT_TRUE(u);
    EXPECT_EQ(render_expression(u->formula, {}), want[i]);
    EXPECT_EQ(out[i].group, 9u);
  }
  SheetState t = apply_all(s, out);
  EXPECT_EQ(vt::shown(t, "C4"), "=B4+C3");
  EXPECT_EQ(vt::values_by_id(t), vt::values_by_id(s));
}

TEST(Gesture, PasteTilesToScale) {
  SheetState s = vt::run("LOAD 'twelve.csv'; ADD COLUMN C;").state;
  SheetState src = apply_all(s, gesture_to_statements(gesture::EditCell{at("C1"), "=A1*2"}, s, 1));
  src = apply_all(src, gesture_to_statements(gesture::EditCell{at("C2"), "=B2+1"}, src, 2));
  Rect source{at("C1"), at("C2")};
  Rect target{at("C5"), at("C10")};
  SheetState t = apply_all(src, gesture_to_statements(gesture::CopyPaste{source, target}, src, 3));
  for (std::int64_t r = 0; r < 6; ++r) {
    Position dst{2, 4 + r};
    Position from{2, r % 2};
    Formula want = adapt(src.cell_at_checked(from).formula, dst - from);
    EXPECT_EQ(t.cell_at_checked(dst).formula, want) << r;
    EXPECT_EQ(t.cell_at_checked(dst).value, evaluate(want, t, dst));
  }
}

TEST(Gesture, FillIsOneRegionUpdate) {
  SheetState s = vt::run("LOAD 'twelve.csv'; ADD COLUMN C; UPDATE [C1:C1] = B1;").state;
  auto out = gesture_to_statements(gesture::Fill{{at("C1"), at("C1")}, {at("C2"), at("C12")}}, s, 1);
  ASSERT_EQ(out.size(), 1u);
  ASSERT_TRUE(out[0].as<stmt::UpdateRegion>());
  SheetState t = apply_all(s, out);
  for (int r = 0; r < 12; ++r) EXPECT_EQ(t.cell_at_checked({2, r}).value, Value(10 * (r + 1)));
}

TEST(Gesture, DragRowThreeAboveTwo) {
  SheetState s = vt::running_sum();
  auto out = gesture_to_statements(gesture::DragRows{{3}, 1}, s, 1);
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(render_statement(out[0]), "REORDER ROWS (3, 2); -- @group 1");
  SheetState t = apply_all(s, out);
  EXPECT_EQ(vt::shown(t, "C2"), "=B2+C3");
}

TEST(Gesture, DragColumns) {
  SheetState s = vt::running_sum();
  auto out = gesture_to_statements(gesture::DragColumns{{"C"}, 0}, s, 1);
  SheetState t = apply_all(s, out);
  EXPECT_EQ(t.column_names(), (std::vector<std::string>{"C", "name", "B"}));
}

TEST(Gesture, StructuralGestures) {
  SheetState s = vt::running_sum();
  SheetState t = apply_all(s, gesture_to_statements(gesture::InsertRow{true, 0}, s, 1));
  EXPECT_EQ(t.coords().row_count(), 5);
  EXPECT_EQ(t.cell_at_checked({0, 1}).value, Value());
  t = apply_all(t, gesture_to_statements(gesture::InsertColumn{false, 0, "note"}, t, 2));
  EXPECT_EQ(t.column_names().front(), "note");
  t = apply_all(t, gesture_to_statements(gesture::DeleteRows{{at("A1"), at("A2")}}, t, 3));
  EXPECT_EQ(t.coords().row_count(), 3);
  EXPECT_EQ(t.cell_at_checked({1, 0}).value, Value("Bob"));
}

TEST(Gesture, SortFilterTypecast) {
  SheetState s = vt::running_sum();
  SheetState t = apply_all(s, gesture_to_statements(gesture::Sort{{{"B", true}}}, s, 1));
  EXPECT_EQ(t.cell_at_checked({2, 1}).value, Value(19));
  t = apply_all(s, gesture_to_statements(gesture::Filter{"B > 8"}, s, 2));
  EXPECT_EQ(t.coords().row_count(), 2);
  t = apply_all(s, gesture_to_statements(gesture::Typecast{{at("B1"), at("B4")}, CastType::String}, s, 3));
  EXPECT_EQ(t.cell_at_checked({1, 0}).value, Value("10"));
}

TEST(Gesture, CutPaste) {
  SheetState s = vt::run(std::string(vt::kRunningSum) + "ADD COLUMN D;").state;
  auto out = gesture_to_statements(gesture::CutPaste{{at("C1"), at("C2")}, at("D3")}, s, 1);
  ASSERT_EQ(out.size(), 1u);
  EXPECT_TRUE(out[0].as<stmt::MoveCells>());
  SheetState t = apply_all(s, out);
  EXPECT_EQ(cell(t, "D3").id, cell(s, "C1").id);
}

TEST(Gesture, EmptySelection) {
  SheetState s = vt::running_sum();
  try {
    gesture_to_statements(gesture::CopyPaste{{at("C2"), at("C1")}, {at("C2"), at("C4")}}, s, 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::EmptyTarget);
  }
}
