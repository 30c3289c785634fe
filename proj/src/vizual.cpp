#include "vizier/vizual.hpp"

#include <charconv>

#include "vizier/error.hpp"
#include "vizier/lexer.hpp"

namespace vizier {

namespace {

constexpr Position kOrigin{0, 0};

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

class ScriptParser {
 public:
  explicit ScriptParser(std::string_view text) : ts_(tokenize(text)) {}

  std::vector<Statement> statements() {
    std::vector<Statement> out;
    while (!ts_.at_end()) {
      if (ts_.peek().kind == TokenKind::GroupTag) {
        ts_.next();  // a tag without a statement on its line
        continue;
      }
      if (ts_.accept_symbol(";")) continue;
      Statement s;
      s.body = statement();
      const Token& end = ts_.peek();
      if (!ts_.accept_symbol(";") && !ts_.at_end()) ts_.fail("expected ';'");
      if (ts_.peek().kind == TokenKind::GroupTag && ts_.peek().line == end.line) {
        std::from_chars(ts_.peek().text.data(), ts_.peek().text.data() + ts_.peek().text.size(),
                        s.group);
        ts_.next();
      }
      s.index = out.size();
      out.push_back(std::move(s));
    }
    return out;
  }

 private:
  Statement::Body statement() {
    const Token& t = ts_.peek();
    if (ts_.accept_keyword("LOAD")) return load();
    if (ts_.accept_keyword("UPDATE")) return update();
    if (ts_.accept_keyword("ADD")) return add_column();
    if (ts_.accept_keyword("REMOVE")) {
      ts_.expect_keyword("COLUMN");
      return stmt::RemoveColumn{name()};
    }
    if (ts_.accept_keyword("INSERT")) return insert_row();
    if (ts_.accept_keyword("DELETE")) {
      ts_.expect_keyword("WHERE");
      return stmt::Delete{expr()};
    }
    if (ts_.accept_keyword("REORDER")) return reorder();
    if (ts_.accept_keyword("SORT")) return sort();
    if (ts_.accept_keyword("MOVE")) return move();
    if (t.kind == TokenKind::End) ts_.fail("expected a statement");
    throw Error(ErrorCode::UnknownStatement, "line " + std::to_string(t.line) + ", column " +
                                                 std::to_string(t.column) +
                                                 ": unknown statement '" + t.text + "'");
  }

  Formula expr() { return parse_expression(ts_, kOrigin); }

  std::string name() {
    const Token& t = ts_.peek();
    if (t.kind == TokenKind::QuotedIdent) return ts_.next().text;
    if (t.kind == TokenKind::Identifier && !is_reserved_word(t.text)) return ts_.next().text;
    ts_.fail("expected a column name");
  }

  std::string string_literal() {
    if (ts_.peek().kind != TokenKind::String) ts_.fail("expected a quoted string");
    return ts_.next().text;
  }

  std::uint64_t unsigned_integer() {
    const Token& t = ts_.peek();
    if (t.kind != TokenKind::Integer) ts_.fail("expected an integer");
    std::uint64_t v = 0;
    std::from_chars(t.text.data(), t.text.data() + t.text.size(), v);
    ts_.next();
    return v;
  }

  std::optional<std::int64_t> at_clause() {
    if (!ts_.accept_keyword("AT")) return std::nullopt;
    const Token& t = ts_.peek();
    std::int64_t v = static_cast<std::int64_t>(unsigned_integer());
    if (v < 1) ts_.fail_at(t, "positions start at 1");
    return v;
  }

  template <class F>
  void list(F item) {
    ts_.expect_symbol("(");
    if (!ts_.is_symbol(")")) {
      do {
        item();
      } while (ts_.accept_symbol(","));
    }
    ts_.expect_symbol(")");
  }

  Statement::Body load() {
    if (ts_.accept_keyword("PAGE")) return stmt::LoadPage{string_literal()};
    stmt::Load l;
    l.path = string_literal();
    if (ts_.accept_keyword("OPTIONS")) {
      list([&] {
        bool header = false;
        if (ts_.accept_keyword("HEADER")) {
          header = true;
        } else if (!ts_.accept_keyword("INFER")) {
          ts_.fail("expected HEADER or INFER");
        }
        ts_.expect_symbol("=");
        bool v = true;
        if (ts_.accept_keyword("FALSE")) {
          v = false;
        } else if (!ts_.accept_keyword("TRUE")) {
          ts_.fail("expected TRUE or FALSE");
        }
        (header ? l.header : l.infer_types) = v;
      });
    }
    return l;
  }

  Statement::Body update() {
    if (ts_.accept_symbol("[")) {
      stmt::UpdateRegion u;
      u.region = region();
      ts_.expect_symbol("]");
      ts_.expect_symbol("=");
      u.formula = expr();
      return u;
    }
    stmt::Update u;
    u.column = name();
    ts_.expect_symbol("=");
    u.formula = expr();
    if (ts_.accept_keyword("WHERE")) u.where = expr();
    return u;
  }

  RegionTarget region() {
    RegionTarget r;
    if (ts_.is_keyword("COLUMNS") || ts_.is_keyword("ROWS")) {
      if (ts_.accept_keyword("COLUMNS")) {
        if (!ts_.accept_symbol("*")) {
          r.columns.emplace();
          list([&] { r.columns->push_back(name()); });
        }
      }
      if (ts_.accept_keyword("ROWS")) {
        if (!ts_.accept_symbol("*")) {
          r.rows.emplace();
          list([&] { r.rows->push_back(unsigned_integer()); });
        }
      }
    } else {
      r.positional = true;
      const Token& a = ts_.next();
      ts_.expect_symbol(":");
      const Token& b = ts_.next();
      if (a.kind == TokenKind::CellRef && b.kind == TokenKind::CellRef) {
        Position pa = corner(a), pb = corner(b);
        r.first_col = std::min(pa.col, pb.col);
        r.last_col = std::max(pa.col, pb.col);
        r.first_row = std::min(pa.row, pb.row);
        r.last_row = std::max(pa.row, pb.row);
      } else if (a.kind == TokenKind::Identifier && b.kind == TokenKind::Identifier) {
        auto ca = column_index_from_letters(a.text), cb = column_index_from_letters(b.text);
        if (!ca || !cb) ts_.fail_at(a, "expected a column range such as A:B");
        r.first_col = std::min(*ca, *cb);
        r.last_col = std::max(*ca, *cb);
      } else {
        ts_.fail_at(a, "expected a region such as A1:B4, A:B or COLUMNS (...) ROWS (...)");
      }
    }
    if (ts_.accept_keyword("WHERE")) r.predicate = expr();
    return r;
  }

  Position corner(const Token& t) {
    std::string_view s = t.text;
    std::size_t i = 0;
    while (i < s.size() && (s[i] == '$' || std::isalpha(static_cast<unsigned char>(s[i])))) ++i;
    std::string letters;
    for (char c : s.substr(0, i)) {
      if (c != '$') letters += c;
    }
    std::size_t d = i;
    if (d < s.size() && s[d] == '$') ++d;
    std::int64_t row = 0;
    std::from_chars(s.data() + d, s.data() + s.size(), row);
    if (row < 1) ts_.fail_at(t, "row numbers start at 1");
    return Position{*column_index_from_letters(letters), row - 1};
  }

  Statement::Body add_column() {
    ts_.expect_keyword("COLUMN");
    stmt::AddColumn a;
    a.name = name();
    a.at = at_clause();
    if (ts_.accept_keyword("AS")) a.derived = expr();
    return a;
  }

  Statement::Body insert_row() {
    ts_.expect_keyword("ROW");
    stmt::InsertRow ins;
    list([&] {
      std::string column = name();
      ts_.expect_symbol("=");
      ins.assignments.emplace_back(std::move(column), expr());
    });
    ins.at = at_clause();
    return ins;
  }

  Statement::Body reorder() {
    if (ts_.accept_keyword("COLUMNS")) {
      stmt::ReorderColumns r;
      list([&] { r.columns.push_back(name()); });
      return r;
    }
    ts_.expect_keyword("ROWS");
    stmt::ReorderRows r;
    list([&] { r.rows.push_back(unsigned_integer()); });
    return r;
  }

  Statement::Body sort() {
    ts_.expect_keyword("ROWS");
    stmt::SortRows s;
    do {
      SortKey k{name(), false};
      if (ts_.accept_keyword("DESC")) {
        k.descending = true;
      } else {
        ts_.accept_keyword("ASC");
      }
      s.keys.push_back(std::move(k));
    } while (ts_.accept_symbol(","));
    return s;
  }

  Statement::Body move() {
    stmt::MoveCells m;
    ts_.expect_symbol("[");
    ts_.expect_keyword("COLUMNS");
    list([&] { m.columns.push_back(name()); });
    ts_.expect_keyword("ROWS");
    list([&] { m.rows.push_back(unsigned_integer()); });
    ts_.expect_symbol("]");
    ts_.expect_keyword("TO");
    m.to_column = name();
    ts_.expect_symbol(",");
    m.to_row = unsigned_integer();
    return m;
  }

  TokenStream ts_;
};

std::string render_expr(const Formula& f) { return render_expression(f, kOrigin); }

template <class T, class F>
std::string joined(const std::vector<T>& items, F fn) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += ", ";
    out += fn(items[i]);
  }
  return out;
}

std::string render_region(const RegionTarget& r) {
  std::string out = "[";
  if (r.positional) {
    if (r.first_row && r.last_row) {
      out += a1_text({r.first_col, *r.first_row}) + ":" + a1_text({r.last_col, *r.last_row});
    } else {
      out += column_letters(r.first_col) + ":" + column_letters(r.last_col);
    }
  } else {
    out += "COLUMNS ";
    out += r.columns ? "(" + joined(*r.columns, quote_identifier) + ")" : "*";
    out += " ROWS ";
    out += r.rows ? "(" + joined(*r.rows, [](std::uint64_t v) { return std::to_string(v); }) + ")"
                  : "*";
  }
  if (r.predicate) out += " WHERE " + render_expr(*r.predicate);
  return out + "]";
}

std::string rowid_list(const std::vector<std::uint64_t>& rows) {
  return "(" + joined(rows, [](std::uint64_t v) { return std::to_string(v); }) + ")";
}

}  // namespace

bool operator==(const Statement& a, const Statement& b) {
  return a.body == b.body && a.group == b.group;
}

bool Statement::is_extension() const {
  return std::visit(
      overloaded{
          [](const stmt::Load& l) { return !l.header || !l.infer_types; },
          [](const stmt::LoadPage&) { return true; },
          [](const stmt::UpdateRegion&) { return true; },
          [](const stmt::AddColumn& a) { return a.at.has_value() || a.derived.has_value(); },
          [](const stmt::InsertRow& i) { return i.at.has_value(); },
          [](const stmt::MoveCells&) { return true; },
          [](const auto&) { return false; },
      },
      body);
}

std::string_view Statement::keyword() const {
  return std::visit(overloaded{
                        [](const stmt::Load&) { return "LOAD"; },
                        [](const stmt::LoadPage&) { return "LOAD PAGE"; },
                        [](const stmt::Update&) { return "UPDATE"; },
                        [](const stmt::UpdateRegion&) { return "UPDATE"; },
                        [](const stmt::AddColumn&) { return "ADD COLUMN"; },
                        [](const stmt::RemoveColumn&) { return "REMOVE COLUMN"; },
                        [](const stmt::InsertRow&) { return "INSERT ROW"; },
                        [](const stmt::Delete&) { return "DELETE"; },
                        [](const stmt::ReorderColumns&) { return "REORDER COLUMNS"; },
                        [](const stmt::ReorderRows&) { return "REORDER ROWS"; },
                        [](const stmt::SortRows&) { return "SORT ROWS"; },
                        [](const stmt::MoveCells&) { return "MOVE"; },
                    },
                    body);
}

std::vector<Statement> parse_statements(std::string_view text) {
  std::vector<Statement> out = ScriptParser(text).statements();
  for (const Statement& s : out) {
    if (s.is_source()) throw Error(ErrorCode::Syntax, "LOAD is only allowed as the first statement");
  }
  return out;
}

Script parse_script(std::string_view text) {
  std::vector<Statement> all = ScriptParser(text).statements();
  if (all.empty() || !all.front().is_source()) {
    throw Error(ErrorCode::Syntax, "a script starts with LOAD");
  }
  Script s;
  s.source = std::move(all.front());
  for (std::size_t i = 1; i < all.size(); ++i) {
    if (all[i].is_source()) {
      throw Error(ErrorCode::Syntax, "LOAD is only allowed as the first statement");
    }
    s.statements.push_back(std::move(all[i]));
  }
  renumber(s);
  return s;
}

std::string render_statement(const Statement& s) {
  std::string out = std::visit(
      overloaded{
          [](const stmt::Load& l) {
            std::string o = "LOAD " + quote_string(l.path);
            std::vector<std::string> opts;
            if (!l.header) opts.push_back("HEADER = FALSE");
            if (!l.infer_types) opts.push_back("INFER = FALSE");
            if (!opts.empty()) o += " OPTIONS (" + joined(opts, [](auto& x) { return x; }) + ")";
            return o;
          },
          [](const stmt::LoadPage& l) { return "LOAD PAGE " + quote_string(l.page); },
          [](const stmt::Update& u) {
            std::string o = "UPDATE " + quote_identifier(u.column) + " = " + render_expr(u.formula);
            if (u.where) o += " WHERE " + render_expr(*u.where);
            return o;
          },
          [](const stmt::UpdateRegion& u) {
            return "UPDATE " + render_region(u.region) + " = " + render_expr(u.formula);
          },
          [](const stmt::AddColumn& a) {
            std::string o = "ADD COLUMN " + quote_identifier(a.name);
            if (a.at) o += " AT " + std::to_string(*a.at);
            if (a.derived) o += " AS " + render_expr(*a.derived);
            return o;
          },
          [](const stmt::RemoveColumn& r) { return "REMOVE COLUMN " + quote_identifier(r.name); },
          [](const stmt::InsertRow& i) {
            std::string o = "INSERT ROW (" + joined(i.assignments, [](const auto& a) {
                              return quote_identifier(a.first) + " = " + render_expr(a.second);
                            }) + ")";
            if (i.at) o += " AT " + std::to_string(*i.at);
            return o;
          },
          [](const stmt::Delete& d) { return "DELETE WHERE " + render_expr(d.where); },
          [](const stmt::ReorderColumns& r) {
            return "REORDER COLUMNS (" + joined(r.columns, quote_identifier) + ")";
          },
          [](const stmt::ReorderRows& r) { return "REORDER ROWS " + rowid_list(r.rows); },
          [](const stmt::SortRows& s) {
            return "SORT ROWS " + joined(s.keys, [](const SortKey& k) {
                     return quote_identifier(k.column) + (k.descending ? " DESC" : "");
                   });
          },
          [](const stmt::MoveCells& m) {
            return "MOVE [COLUMNS (" + joined(m.columns, quote_identifier) + ") ROWS " +
                   rowid_list(m.rows) + "] TO " + quote_identifier(m.to_column) + ", " +
                   std::to_string(m.to_row);
          },
      },
      s.body);
  out += ';';
  if (s.group) out += " -- @group " + std::to_string(s.group);
  return out;
}

std::string render_script(const Script& script) {
  std::string out = render_statement(script.source) + "\n";
  for (const Statement& s : script.statements) out += render_statement(s) + "\n";
  return out;
}

void renumber(Script& script) {
  script.source.index = 0;
  for (std::size_t i = 0; i < script.statements.size(); ++i) script.statements[i].index = i + 1;
}

std::size_t node_count(const Statement& s) {
  std::size_t n = 1;
  auto add = [&](const Formula& f) { n += node_count(f); };
  std::visit(overloaded{
                 [&](const stmt::Update& u) {
                   add(u.formula);
                   if (u.where) add(*u.where);
                 },
                 [&](const stmt::UpdateRegion& u) {
                   add(u.formula);
                   if (u.region.predicate) add(*u.region.predicate);
                 },
                 [&](const stmt::AddColumn& a) {
                   if (a.derived) add(*a.derived);
                 },
                 [&](const stmt::InsertRow& i) {
                   for (const auto& a : i.assignments) add(a.second);
                 },
                 [&](const stmt::Delete& d) { add(d.where); },
                 [&](const auto&) {},
             },
             s.body);
  return n;
}

}  // namespace vizier
