// One PASS/FAIL line per acceptance criterion. Exit status is the number of
// failed criteria.
#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <random>
#include <regex>
#include <sstream>

#include "fuzz.hpp"
#include "test_support.hpp"
#include "vizier/notebook.hpp"
#include "vizier/rewriter.hpp"
#include "vizier/sql.hpp"

using namespace vizier;

namespace {

struct Check {
  std::ostringstream why;
  bool ok = true;

  template <class A, class B>
  void eq(const A& a, const B& b, const std::string& what) {
    if (!(a == b)) fail(what);
  }
  void that(bool cond, const std::string& what) {
    if (!cond) fail(what);
  }
  void fail(const std::string& what) {
    if (ok) why << what;
    ok = false;
  }
};

using Criterion = std::function<void(Check&)>;

Value value_at(const SheetState& s, std::int64_t col, std::int64_t row) {
  return s.cell_at_checked({col, row}).value;
}

void swap_rows(Check& c) {
  SheetState s = vt::run(std::string(vt::kRunningSum) + "REORDER ROWS (3, 2);").state;
  struct Row {
    const char* name;
    int b;
    const char* formula;
    int value;
  };
  Row want[] = {{"Alice", 10, "=B1", 10},
                {"Carol", 8, "=B2+C3", 22},
                {"Bob", 4, "=B3+C1", 14},
                {"Dave", 9, "=B4+C2", 31}};
  for (int r = 0; r < 4; ++r) {
    std::string row = std::to_string(r + 1);
    c.eq(value_at(s, 0, r), Value(want[r].name), "name in row " + row);
    c.eq(value_at(s, 1, r), Value(want[r].b), "B in row " + row);
    c.eq(vt::shown(s, "C" + row), std::string(want[r].formula), "C formula in row " + row);
    c.eq(value_at(s, 2, r), Value(want[r].value), "C value in row " + row);
  }
}

void sort_rows(Check& c) {
  SheetState s = vt::run(std::string(vt::kRunningSum) + "SORT ROWS B DESC;").state;
  const char* names[] = {"Alice", "Dave", "Carol", "Bob"};
  int values[] = {10, 19, 27, 31};
  const char* formulas[] = {"=B1", "=B2+C1", "=B3+C2", "=B4+C3"};
  for (int r = 0; r < 4; ++r) {
    std::string row = std::to_string(r + 1);
    c.eq(value_at(s, 0, r), Value(names[r]), "name in row " + row);
    c.eq(value_at(s, 2, r), Value(values[r]), "C value in row " + row);
    c.eq(vt::shown(s, "C" + row), std::string(formulas[r]), "C formula in row " + row);
  }
}

void lineitem_end_to_end(Check& c) {
  Script s = parse_script(read_file(vt::fixture_dir() + "/lineitem.vizual"));
  SheetState out = replay(s, vt::fixtures()).state;
  SqlQuery q = compile_script(s, read_source_schemas(s, vt::fixture_dir()));
  Relation sql = run_sql(q.text, csv_file_provider(vt::fixture_dir()));
  Relation exec = to_relation(out);
  c.eq(sql.columns, exec.columns, "column lists differ");
  c.eq(sql.rows.size(), exec.rows.size(), "row counts differ");
  for (std::size_t r = 0; c.ok && r < exec.rows.size(); ++r) {
    for (std::size_t k = 0; k < exec.columns.size(); ++k) {
      c.eq(typed_text(sql.rows[r][k]), typed_text(exec.rows[r][k]),
           "row " + std::to_string(r + 1) + " column " + exec.columns[k]);
    }
  }
  std::string text = std::regex_replace(q.text, std::regex("\\s+"), " ");
  c.that(text.find("CASE WHEN ID = 90 THEN 1020 ELSE price * (1 - discount) END AS total") !=
             std::string::npos,
         "fused CASE form missing from: " + text);
  c.that(text.find("UNION ALL SELECT") != std::string::npos, "constant row branch missing");
}

SheetState with_policy_apply(const SheetState& s, const std::string& text) {
  return apply(s, parse_statements(text).at(0)).state;
}

void stability(Check& c) {
  std::mt19937 rng(4242);
  auto pick = [&](std::int64_t a, std::int64_t b) {
    return std::uniform_int_distribution<std::int64_t>(a, b)(rng);
  };
  int checked = 0;
  for (int trial = 0; trial < 500 && c.ok; ++trial) {
    SheetState s = vt::random_sheet(rng);
    const auto& cs = s.coords();
    std::int64_t rows = cs.row_count(), cols = cs.column_count();
    auto rowid = [&](std::int64_t r) { return std::to_string(cs.rows()[static_cast<std::size_t>(r)].value); };
    auto col = [&](std::int64_t i) { return cs.columns()[static_cast<std::size_t>(i)].name; };
    auto before = vt::values_by_id(s);

    std::vector<std::pair<std::string, std::string>> actions;
    actions.emplace_back("insert row", "INSERT ROW (A = 1) AT " + std::to_string(pick(1, rows + 1)) + ";");
    actions.emplace_back("insert column", "ADD COLUMN fresh AT " + std::to_string(pick(1, cols + 1)) + ";");
    {
      std::vector<std::string> ids;
      for (std::int64_t r = 0; r < rows; ++r) ids.push_back(rowid(r));
      std::shuffle(ids.begin(), ids.end(), rng);
      std::string list;
      for (const auto& id : ids) list += (list.empty() ? "" : ", ") + id;
      actions.emplace_back("reorder rows", "REORDER ROWS (" + list + ");");
      std::vector<std::string> names;
      for (std::int64_t i = 0; i < cols; ++i) names.push_back(col(i));
      std::shuffle(names.begin(), names.end(), rng);
      list.clear();
      for (const auto& n : names) list += (list.empty() ? "" : ", ") + n;
      actions.emplace_back("reorder columns", "REORDER COLUMNS (" + list + ");");
    }
    actions.emplace_back("delete", "DELETE WHERE ROWID = " + rowid(pick(0, rows - 1)) + ";");
    {
      std::int64_t c0 = pick(0, cols - 1), r0 = pick(0, rows - 1);
      std::int64_t w = pick(1, cols - c0), h = pick(1, rows - r0);
      std::int64_t tc = pick(0, cols - w), tr = pick(0, rows - h);
      std::string cl, rl;
      for (std::int64_t i = 0; i < w; ++i) cl += (i ? ", " : "") + col(c0 + i);
      for (std::int64_t i = 0; i < h; ++i) rl += (i ? ", " : "") + rowid(r0 + i);
      actions.emplace_back("cut/paste", "MOVE [COLUMNS (" + cl + ") ROWS (" + rl + ")] TO " + col(tc) + ", " + rowid(tr) + ";");
    }

    for (const auto& [label, text] : actions) {
      SheetState after = with_policy_apply(s, text);
      std::set<CellId> removed;
      for (const auto& [id, _] : before) {
        if (!after.coords().position_of(id)) removed.insert(id);
      }
      std::set<CellId> tainted = vt::downstream(s, removed);
      for (const auto& [id, v] : before) {
        if (removed.count(id) || tainted.count(id)) continue;
        const Cell* now = after.cell(id);
        if (!now || !(now->value == v)) {
          c.fail(label + " changed a surviving value (trial " + std::to_string(trial) + ": " + text + ")");
          break;
        }
      }
      ++checked;
    }

    std::string key = col(pick(0, cols - 1));
    std::string text = "SORT ROWS " + key + (pick(0, 1) ? " DESC;" : ";");
    SheetState sorted = with_policy_apply(s, text);
    vt::Oracle oracle(sorted);
    for (const auto& [id, cell] : sorted.cells()) {
      if (relative_normal_form(cell.formula) != relative_normal_form(s.cell(id)->formula)) {
        c.fail("sort changed a formula (trial " + std::to_string(trial) + ")");
        break;
      }
      if (!(cell.value == oracle.value_of(*sorted.coords().position_of(id)))) {
        c.fail("sort value differs from the evaluation oracle (trial " + std::to_string(trial) + ")");
        break;
      }
    }
    ++checked;
  }
  c.eq(checked, 500 * 7, "not every action ran");
}

void reroll_ten(Check& c) {
  std::string text = "LOAD 'twelve.csv';\n";
  for (int i = 1; i <= 10; ++i) text += "UPDATE A = 3 WHERE ROWID = " + std::to_string(i) + ";\n";
  Script s = parse_script(text);
  auto out = reroll(s, vt::fixtures());
  c.eq(out.size(), std::size_t{1}, "expected exactly one suggestion");
  if (!c.ok) return;
  c.eq(out[0].replacement.size(), std::size_t{1}, "replacement is not one statement");
  c.eq(render_statement(out[0].replacement.at(0)), std::string("UPDATE A = 3 WHERE ROWID BETWEEN 1 AND 10;"),
       "unexpected replacement");
  Script after = apply_suggestion(s, out[0]);
  c.eq(s.statements.size(), std::size_t{10}, "original count");
  c.eq(after.statements.size(), std::size_t{1}, "rewritten count");
  c.eq(equivalence_check(s, after, vt::fixtures()).verdict, Verdict::Equal, "not equivalent");
}

void singleton_identity(Check& c) {
  Script s = parse_script(
      "LOAD 'orders.csv';\n"
      "UPDATE total = 999 WHERE ROWID = 4;\n"
      "INSERT ROW (ID = 6, name = 'bin', qty = 3, price = 2000, total = 0) AT 2;\n"
      "SORT ROWS price DESC;\n");
  SheetState loaded = replay(Script{s.source, {}}, vt::fixtures()).state;
  std::int64_t total = *loaded.coords().column_index("total");
  CellId original = *loaded.coords().cell_for(loaded.coords().columns()[total].id, RowId{4});
  std::string first_hash;
  for (int run = 0; run < 5; ++run) {
    SheetState out = replay(s, vt::fixtures()).state;
    auto row = out.coords().row_index(RowId{4});
    c.that(row.has_value(), "row 4 vanished");
    if (!c.ok) return;
    auto tc = *out.coords().column_index("total");
    const Cell& cell = out.cell_at_checked({tc, *row});
    c.eq(cell.id, original, "updated value moved to another cell");
    c.eq(cell.value, Value(999), "updated value lost");
    c.that(*row != 3, "row 4 did not move, so the check is vacuous");
    std::string h = state_hash(out);
    if (run == 0) first_hash = h;
    c.eq(h, first_hash, "replays differ");
  }
}

void cycle_rejection(Check& c) {
  Applied a = vt::run("LOAD 'twelve.csv';\nUPDATE [A1:A1] = B1;\nUPDATE [B1:B1] = A1;\n");
  const SheetState& s = a.state;
  c.eq(value_at(s, 0, 0), Value::error(ErrorKind::Cycle), "A1 is not CYCLE");
  c.eq(value_at(s, 1, 0), Value::error(ErrorKind::Cycle), "B1 is not CYCLE");
  auto cycles = detect_cycles(s);
  c.eq(cycles.size(), std::size_t{1}, "expected one cycle");
  if (c.ok) c.eq(cycles[0].size(), std::size_t{2}, "cycle length");
  c.eq(value_at(s, 0, 1), Value(2), "unrelated cells disturbed");
  c.that(validate_state(s).empty(), "state is not self-consistent");
  c.that(!to_csv(s).empty() && !state_hash(s).empty(), "state not representable");
}

void round_trips(Check& c) {
  std::mt19937 rng(8080);
  vt::FormulaFuzzer fuzz(rng, 5);
  Position host{5, 5};
  for (int i = 0; i < 1000 && c.ok; ++i) {
    Formula f = fuzz.formula();
    std::string text = render_formula(f, host);
    try {
      c.that(parse_formula(text, host) == f, "formula round trip: " + text);
    } catch (const std::exception& e) {
      c.fail("formula parse: " + text + ": " + e.what());
    }
  }
  for (int i = 0; i < 200 && c.ok; ++i) {
    Script s = vt::random_script(rng);
    std::string text = render_script(s);
    try {
      c.that(parse_script(text) == s, "script round trip: " + text);
    } catch (const std::exception& e) {
      c.fail("script parse: " + text + ": " + e.what());
    }
  }
  Notebook nb(vt::fixture_dir());
  nb = nb.add_page(kMainBranch, "orders", parse_script(read_file(vt::fixture_dir() + "/lineitem.vizual")));
  nb = nb.add_page(kMainBranch, "sums", parse_script(vt::kRunningSum));
  nb = nb.add_page(kMainBranch, "view", parse_script("LOAD PAGE 'sums'; SORT ROWS B DESC;"));
  nb = nb.branch(kMainBranch, "orders", 2, "alt");
  std::string text = nb.serialize();
  Notebook back = Notebook::deserialize(text, "/nonexistent");
  c.eq(back.serialize(), text, "serialize is not stable across replay");
  for (const auto& b : nb.branch_names()) {
    for (std::size_t p = 0; p < nb.pages(b).size(); ++p) {
      c.eq(state_hash(back.pages(b)[p].output), state_hash(nb.pages(b)[p].output),
           "page hash differs on " + b);
    }
  }
}

}  // namespace

int main() {
  std::vector<std::pair<std::string, Criterion>> criteria = {
      {"1 swap reproduction", swap_rows},
      {"2 sort reproduction", sort_rows},
      {"3 lineitem script end-to-end through SQL", lineitem_end_to_end},
      {"4 stability property suite (500 sheets)", stability},
      {"5 re-roll of ten updates", reroll_ten},
      {"6 singleton identity", singleton_identity},
      {"7 cycle rejection", cycle_rejection},
      {"8 round trips and notebook determinism", round_trips},
  };
  int failed = 0;
  for (const auto& [name, run] : criteria) {
    Check c;
    auto t0 = std::chrono::steady_clock::now();
    try {
      run(c);
    } catch (const std::exception& e) {
      c.fail(std::string("threw: ") + e.what());
    }
    auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - t0).count();
    std::cout << (c.ok ? "PASS " : "FAIL ") << name << " (" << ms << " ms)";
    if (!c.ok) std::cout << ": " << c.why.str();
    std::cout << "\n";
    failed += c.ok ? 0 : 1;
  }
  return failed;
}
