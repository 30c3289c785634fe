#include <gtest/gtest.h>

#include <random>
#include <regex>

#include "test_support.hpp"
#include "vizier/error.hpp"
#include "vizier/sql.hpp"

using namespace vizier;

namespace {

std::string squash(const std::string& s) {
  return std::regex_replace(s, std::regex("\\s+"), " ");
}

Relation executor_rel(const Script& s) { return to_relation(replay(s, vt::fixtures()).state); }

Relation sql_rel(const SqlQuery& q) { return run_sql(q.text, csv_file_provider(vt::fixture_dir())); }

SqlQuery compile(const Script& s, bool positional = false) {
  auto schemas = read_source_schemas(s, vt::fixture_dir());
  return positional ? compile_positional(s, schemas) : compile_script(s, schemas);
}

void expect_same(const Relation& a, const Relation& b, const std::string& context) {
  ASSERT_EQ(a.columns, b.columns) << context;
  ASSERT_EQ(a.rows.size(), b.rows.size()) << context;
  for (std::size_t r = 0; r < a.rows.size(); ++r) {
    for (std::size_t c = 0; c < a.columns.size(); ++c) {
      ASSERT_EQ(typed_text(a.rows[r][c]), typed_text(b.rows[r][c]))
          << context << "\nrow " << r << " column " << a.columns[c];
    }
  }
}

ErrorCode compile_error(const std::string& text, bool positional = false) {
  try {
    compile(parse_script(text), positional);
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::InvalidArgument;
}

/// Row-local scripts over lineitem.csv built from statements the compiler
/// accepts.
std::string random_row_local(std::mt19937& rng) {
  auto pick = [&](int a, int b) { return std::uniform_int_distribution<int>(a, b)(rng); };
  std::vector<std::string> numeric{"ID", "price", "discount"};
  std::vector<std::string> all{"ID", "name", "price", "discount"};
  // Formulas only read columns earlier in `numeric`, so they never form a cycle.
  auto term = [&](int limit = -1) {
    if (limit < 0) limit = static_cast<int>(numeric.size());
    return limit > 0 && pick(0, 2) ? numeric[pick(0, limit - 1)] : std::to_string(pick(0, 50));
  };
  auto expr = [&](int limit = -1) {
    static const char* ops[] = {" + ", " - ", " * "};
    std::string e = term(limit);
    for (int i = pick(0, 2); i > 0; --i) e += ops[pick(0, 2)] + term(limit);
    if (pick(0, 4) == 0) {
      e = "IF(" + term(limit) + " > " + term(limit) + ", " + e + ", " + term(limit) + ")";
    }
    return e;
  };
  auto cond = [&] {
    static const char* cmp[] = {" > ", " < ", " = ", " >= "};
    std::string c = term() + cmp[pick(0, 3)] + term();
    if (pick(0, 3) == 0) c += " AND " + term() + " < " + std::to_string(pick(0, 1500));
    if (pick(0, 5) == 0) c = "name IN ('desk', 'lamp')";
    return c;
  };
  std::string s = "LOAD 'lineitem.csv';\n";
  int added = 0;
  bool sorted = false, reshaped = false;
  for (int n = pick(1, 8); n > 0; --n) {
    switch (pick(0, 7)) {
      case 0: {
        std::string name = "k_" + std::to_string(added++);
        s += "ADD COLUMN " + name + (pick(0, 1) ? " AS " + expr() : std::string()) + ";\n";
        numeric.push_back(name);
        all.push_back(name);
        break;
      }
      case 1:
      case 2: {
        int target = pick(0, static_cast<int>(numeric.size()) - 1);
        s += "UPDATE " + numeric[target] + " = " + expr(target) +
             (pick(0, 1) ? " WHERE " + cond() : std::string()) + ";\n";
        break;
      }
      case 3: s += "UPDATE price = VALUE * 2 WHERE " + cond() + ";\n"; break;
      case 4:
        s += "DELETE WHERE " + cond() + ";\n";
        reshaped = true;
        break;
      case 5: {
        std::string ins = "INSERT ROW (";
        for (std::size_t i = 0; i < all.size(); ++i) {
          if (i) ins += ", ";
          ins += all[i] + " = " + (all[i] == "name" ? "'n" + std::to_string(pick(0, 9)) + "'"
                                                    : std::to_string(pick(0, 99)));
        }
        s += ins + ");\n";
        reshaped = true;
        break;
      }
      case 6:
        s += "SORT ROWS " + all[pick(0, static_cast<int>(all.size()) - 1)] +
             (pick(0, 1) ? " DESC" : "") + ";\n";
        sorted = true;
        break;
      default:
        if (!sorted && !reshaped) s += "REORDER ROWS (3, 1);\n";
        break;
    }
  }
  return s;
}

}  // namespace

TEST(Sql, LineitemQuery) {
  Script s = parse_script(vizier::read_file(vt::fixture_dir() + "/lineitem.vizual"));
  SqlQuery q = compile(s);
  std::string text = squash(q.text);
  EXPECT_NE(text.find("CASE WHEN ID = 90 THEN 1020 ELSE price * (1 - discount) END AS total"),
            std::string::npos)
      << text;
  EXPECT_NE(text.find("UNION ALL"), std::string::npos);
  EXPECT_EQ(q.sources, (std::vector<std::string>{"lineitem.csv"}));
  EXPECT_EQ(q.columns, (std::vector<std::string>{"ID", "name", "price", "discount", "total"}));
  expect_same(executor_rel(s), sql_rel(q), q.text);
  std::string manifest = manifest_json(q);
  EXPECT_NE(manifest.find("\"lineitem.csv\""), std::string::npos);
  EXPECT_NE(manifest.find("\"total\""), std::string::npos);
}

TEST(Sql, LoadOnly) {
  SqlQuery q = compile(parse_script("LOAD 'lineitem.csv';"));
  EXPECT_EQ(squash(q.text), "SELECT * FROM LOAD('lineitem.csv')");
}

TEST(Sql, CompileFormula) {
  EXPECT_EQ(compile_formula(parse_expression("price*(1-discount)", std::nullopt)),
            "price * (1 - discount)");
  EXPECT_EQ(compile_formula(Formula::literal(Value(9.5))), "9.5");
  EXPECT_EQ(compile_formula(Formula::literal(Value("it's"))), "'it''s'");
  Formula f = parse_expression("IF(qty > 3, 'big', 'small')", std::nullopt);
  std::string sql = compile_formula(f);
  EXPECT_EQ(sql, "CASE WHEN qty > 3 THEN 'big' ELSE 'small' END");

  Relation rel = run_sql("SELECT name, " + sql + " AS size FROM LOAD('stock.csv')",
                         csv_file_provider(vt::fixture_dir()));
  SheetState stock = load_csv(vt::fixture_dir() + "/stock.csv");
  ASSERT_EQ(rel.rows.size(), 4u);
  for (std::int64_t r = 0; r < 4; ++r) {
    EXPECT_EQ(rel.rows[static_cast<std::size_t>(r)][1], evaluate(f, stock, {0, r}));
  }
}

TEST(Sql, RejectsCellReferences) {
  EXPECT_EQ(compile_error(vt::kRunningSum), ErrorCode::PositionalNotCompilable);
  EXPECT_EQ(compile_error("LOAD 'people.csv'; UPDATE B = SUM(B1:B4);"),
            ErrorCode::PositionalNotCompilable);
  EXPECT_EQ(compile_error("LOAD 'people.csv' OPTIONS (HEADER = FALSE);"), ErrorCode::InvalidArgument);
  EXPECT_EQ(compile_error("LOAD 'people.csv'; SORT ROWS B; REORDER ROWS (2, 1);"),
            ErrorCode::PositionalNotCompilable);
}

TEST(Sql, RunningSumWindow) {
  Script s = parse_script(vt::kRunningSum);
  SqlQuery q = compile(s, true);
  EXPECT_NE(q.text.find("OVER (ORDER BY ROWID ROWS BETWEEN UNBOUNDED PRECEDING AND CURRENT ROW)"),
            std::string::npos)
      << q.text;
  Relation r = sql_rel(q);
  std::vector<int> want{10, 14, 22, 31};
  ASSERT_EQ(r.rows.size(), 4u);
  for (std::size_t i = 0; i < 4; ++i) EXPECT_EQ(r.rows[i][2], Value(want[i]));
  expect_same(executor_rel(s), r, q.text);
}

TEST(Sql, RunningSumNullPropagatesOnBothPaths) {
  Script s = parse_script("LOAD 'gaps.csv'; ADD COLUMN C; UPDATE [C1:C1] = B1; UPDATE [C2:C4] = B2 + C1;");
  SqlQuery q = compile(s, true);
  Relation r = sql_rel(q);
  ASSERT_EQ(r.rows.size(), 4u);
  EXPECT_EQ(r.rows[0][2], Value(1));
  for (std::size_t i = 1; i < 4; ++i) EXPECT_TRUE(r.rows[i][2].is_null()) << i;
  expect_same(executor_rel(s), r, q.text);
}

TEST(Sql, PositionalWithoutPatternMatchesPlain) {
  Script s = parse_script(vizier::read_file(vt::fixture_dir() + "/lineitem.vizual"));
  EXPECT_EQ(compile(s, true).text, compile(s).text);
}

TEST(Sql, UnsupportedCrossRowShapes) {
  EXPECT_EQ(compile_error("LOAD 'people.csv'; ADD COLUMN C; UPDATE [C1:C3] = C2 + B1;", true),
            ErrorCode::UnsupportedPattern);
  EXPECT_EQ(compile_error("LOAD 'people.csv'; ADD COLUMN C; UPDATE [C1:C1] = B1; UPDATE [C3:C4] = B3 + C1;", true),
            ErrorCode::UnsupportedPattern);
}

TEST(Sql, SortDeleteInsertDifferential) {
  for (const char* text : {
           "LOAD 'lineitem.csv'; SORT ROWS price DESC; DELETE WHERE ID = 10; INSERT ROW (ID = 5, price = 7);",
           "LOAD 'lineitem.csv'; REORDER ROWS (3, 1); UPDATE price = VALUE + 1 WHERE ID > 50;",
           "LOAD 'lineitem.csv'; INSERT ROW (ID = 1, price = 1); SORT ROWS ID;",
           "LOAD 'lineitem.csv'; ADD COLUMN t AT 1 AS price * 2; REMOVE COLUMN name; REORDER COLUMNS (price, t);",
           "LOAD 'people.csv'; UPDATE B = 0 WHERE ROWID = 2; UPDATE B = VALUE + 1 WHERE ROWID IN (1, 3);",
       }) {
    Script s = parse_script(text);
    SqlQuery q = compile(s);
    expect_same(executor_rel(s), sql_rel(q), std::string(text) + "\n" + q.text);
  }
}

TEST(Sql, RandomRowLocalDifferential) {
  std::mt19937 rng(1234);
  int compiled = 0;
  for (int i = 0; i < 50; ++i) {
    std::string text = random_row_local(rng);
    Script s = parse_script(text);
    SqlQuery q = compile(s);
    ++compiled;
    expect_same(executor_rel(s), sql_rel(q), text + "\n" + q.text);
  }
  EXPECT_EQ(compiled, 50);
}

TEST(Sql, RandomPrefixSumDifferential) {
  std::mt19937 rng(77);
  for (int i = 0; i < 30; ++i) {
    int lo = std::uniform_int_distribution<int>(2, 6)(rng);
    int hi = std::uniform_int_distribution<int>(lo, 12)(rng);
    int k = std::uniform_int_distribution<int>(1, 5)(rng);
    std::string text = "LOAD 'twelve.csv';\nADD COLUMN S;\nUPDATE [C" + std::to_string(lo - 1) +
                       ":C" + std::to_string(lo - 1) + "] = " + std::to_string(k) + ";\n" +
                       "UPDATE [C" + std::to_string(lo) + ":C" + std::to_string(hi) + "] = B" +
                       std::to_string(lo) + " * " + std::to_string(k) + " + C" +
                       std::to_string(lo - 1) + ";\n";
    if (i % 3 == 0) text += "UPDATE A = VALUE * 2 WHERE A > 6;\n";
    Script s = parse_script(text);
    SqlQuery q = compile(s, true);
    expect_same(executor_rel(s), sql_rel(q), text + "\n" + q.text);
  }
}

TEST(Sql, InterpreterBasics) {
  auto tables = csv_file_provider(vt::fixture_dir());
  Relation r = run_sql("SELECT COUNT(*) FROM LOAD('twelve.csv') WHERE A > 4", tables);
  ASSERT_EQ(r.rows.size(), 1u);
  EXPECT_EQ(r.rows[0][0], Value(8));
  r = run_sql("SELECT A FROM LOAD('twelve.csv') WHERE A < 4 ORDER BY A DESC", tables);
  ASSERT_EQ(r.rows.size(), 3u);
  EXPECT_EQ(r.rows[0][0], Value(3));
  EXPECT_EQ(r.columns, (std::vector<std::string>{"A"}));
  try {
    run_sql("SELECT FROM", tables);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::Syntax);
  }
}
