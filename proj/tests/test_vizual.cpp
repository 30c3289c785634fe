#include <gtest/gtest.h>

#include "fuzz.hpp"
#include "test_support.hpp"
#include "vizier/error.hpp"

using namespace vizier;

namespace {

const char* kLineitem =
    "LOAD 'lineitem.csv';\n"
    "ADD COLUMN total;\n"
    "UPDATE total = price * (1 - discount);\n"
    "UPDATE total = 1020 WHERE ID = 90;\n"
    "INSERT ROW (name = 'table', price = 10, discount = 0.05, total = 9.5);\n";

std::string squash(std::string s) {
  std::string out;
  for (char c : s) {
    if (!std::isspace(static_cast<unsigned char>(c))) out += c;
  }
  return out;
}

}  // namespace

TEST(Vizual, ParsesLineitemScript) {
  Script s = parse_script(kLineitem);
  ASSERT_TRUE(s.source.as<stmt::Load>());
  EXPECT_EQ(s.source.as<stmt::Load>()->path, "lineitem.csv");
  ASSERT_EQ(s.statements.size(), 4u);
  EXPECT_TRUE(s.statements[0].as<stmt::AddColumn>());
  auto* u = s.statements[2].as<stmt::Update>();
  ASSERT_TRUE(u);
  EXPECT_EQ(u->column, "total");
  ASSERT_TRUE(u->where);
  EXPECT_EQ(render_expression(*u->where, {}), "ID = 90");
  auto* ins = s.statements[3].as<stmt::InsertRow>();
  ASSERT_TRUE(ins);
  EXPECT_EQ(ins->assignments.size(), 4u);
  for (std::size_t i = 0; i < 4; ++i) EXPECT_EQ(s.statements[i].index, i + 1);
}

TEST(Vizual, RendersLineitemScript) {
  EXPECT_EQ(squash(render_script(parse_script(kLineitem))), squash(kLineitem));
}

TEST(Vizual, LoadOnly) {
  Script s = parse_script("LOAD 'x.csv';");
  EXPECT_TRUE(s.statements.empty());
  EXPECT_EQ(squash(render_script(s)), "LOAD'x.csv';");
}

TEST(Vizual, Errors) {
  auto code = [](const char* text) {
    try {
      parse_script(text);
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::InvalidArgument;
  };
  EXPECT_EQ(code("ADD COLUMN x;"), ErrorCode::Syntax);
  EXPECT_EQ(code("LOAD 'a.csv'; FROB x;"), ErrorCode::UnknownStatement);
  EXPECT_EQ(code("LOAD 'a.csv'; UPDATE x = ;"), ErrorCode::Syntax);
  EXPECT_EQ(code("LOAD 'a.csv'; LOAD 'b.csv';"), ErrorCode::Syntax);
}

TEST(Vizual, GroupCommentsRoundTrip) {
  Script s = parse_script("LOAD 'a.csv';\nUPDATE A = 3 WHERE ROWID = 1; -- @group 4\n-- a note\nUPDATE A = 3;");
  ASSERT_EQ(s.statements.size(), 2u);
  EXPECT_EQ(s.statements[0].group, 4u);
  EXPECT_EQ(s.statements[1].group, 0u);
  EXPECT_EQ(parse_script(render_script(s)), s);
}

TEST(Vizual, ExtensionForms) {
  Script s = parse_script(
      "LOAD 'a.csv' OPTIONS (HEADER = FALSE);\n"
      "ADD COLUMN t AT 2 AS price * 2;\n"
      "UPDATE [C2:C4] = B2 + C1;\n"
      "UPDATE [COLUMNS (a, b) ROWS (1, 2) WHERE VALUE > 3] = 0;\n"
      "MOVE [COLUMNS (a) ROWS (2)] TO b, 3;\n"
      "REORDER ROWS (3, 2);\n"
      "SORT ROWS B DESC, a;\n");
  EXPECT_TRUE(s.source.is_extension());
  EXPECT_EQ(s.statements.size(), 6u);
  for (const auto& st : s.statements) {
    if (!st.as<stmt::ReorderRows>() && !st.as<stmt::SortRows>()) {
      EXPECT_TRUE(st.is_extension()) << render_statement(st);
    }
  }
  EXPECT_EQ(parse_script(render_script(s)), s);
}

TEST(Vizual, FormulaFuzzRoundTrip) {
  std::mt19937 rng(2024);
  vt::FormulaFuzzer fuzz(rng, 5);
  Position host{5, 5};
  for (int i = 0; i < 1000; ++i) {
    Formula f = fuzz.formula();
    std::string text = render_formula(f, host);
    Formula back;
    try {
      back = parse_formula(text, host);
    } catch (const Error& e) {
      FAIL() << text << ": " << e.what();
    }
    ASSERT_EQ(back, f) << text;
    ASSERT_EQ(render_formula(back, host), text);
  }
}

TEST(Vizual, ScriptFuzzRoundTrip) {
  std::mt19937 rng(99);
  for (int i = 0; i < 200; ++i) {
    Script s = vt::random_script(rng);
    std::string text = render_script(s);
    Script back;
    try {
      back = parse_script(text);
    } catch (const Error& e) {
      FAIL() << text << ": " << e.what();
    }
    ASSERT_EQ(back, s) << text;
    ASSERT_EQ(render_script(back), text);
  }
}

TEST(Vizual, NodeCount) {
  Script s = parse_script(kLineitem);
  EXPECT_GT(node_count(s.statements[1]), node_count(s.statements[0]));
}
