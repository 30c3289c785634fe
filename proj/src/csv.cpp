#include <fstream>
#include <set>
#include <sstream>

#include "vizier/error.hpp"
#include "vizier/executor.hpp"

namespace vizier {

namespace {

std::vector<std::vector<std::string>> records(std::string_view text) {
  std::vector<std::vector<std::string>> out;
  std::vector<std::string> row;
  std::string field;
  bool quoted = false, any = false;
  auto end_field = [&] {
    row.push_back(std::move(field));
    field.clear();
  };
  auto end_row = [&] {
    end_field();
    out.push_back(std::move(row));
    row.clear();
    any = false;
  };
  for (std::size_t i = 0; i < text.size(); ++i) {
    char c = text[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
      continue;
    }
    any = true;
    if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      end_field();
    } else if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') {
      continue;
    } else if (c == '\n') {
      end_row();
    } else {
      field += c;
    }
  }
  if (quoted) throw Error(ErrorCode::Io, "unterminated quoted CSV field");
  if (any || !field.empty() || !row.empty()) end_row();
  return out;
}

bool needs_quotes(std::string_view s) {
  return s.find_first_of(",\"\r\n") != std::string_view::npos ||
         (!s.empty() && (s.front() == ' ' || s.back() == ' '));
}

std::string csv_field(std::string_view s) {
  if (!needs_quotes(s)) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

CsvTable parse_csv(std::string_view text, const CsvOptions& options) {
  if (text.substr(0, 3) == "\xEF\xBB\xBF") text.remove_prefix(3);
  auto recs = records(text);
  CsvTable table;
  std::size_t width = 0;
  std::size_t first = 0;
  if (options.header && !recs.empty()) {
    std::set<std::string> seen;
    for (std::size_t i = 0; i < recs[0].size(); ++i) {
      std::string name = recs[0][i].empty() ? column_letters(static_cast<std::int64_t>(i))
                                            : recs[0][i];
      std::string unique = name;
      for (int k = 2; seen.count(unique); ++k) unique = name + "_" + std::to_string(k);
      seen.insert(unique);
      table.columns.push_back(unique);
    }
    width = table.columns.size();
    first = 1;
  } else {
    for (const auto& r : recs) width = std::max(width, r.size());
    for (std::size_t i = 0; i < width; ++i) {
      table.columns.push_back(column_letters(static_cast<std::int64_t>(i)));
    }
  }
  for (std::size_t r = first; r < recs.size(); ++r) {
    auto& rec = recs[r];
    if (rec.size() == 1 && rec[0].empty()) continue;  // blank line
    if (rec.size() != width) {
      table.warnings.push_back("record " + std::to_string(r + 1) + " has " +
                               std::to_string(rec.size()) + " fields, expected " +
                               std::to_string(width));
      rec.resize(width);
    }
    std::vector<Value> values;
    values.reserve(width);
    for (const std::string& f : rec) {
      if (f.empty()) {
        values.emplace_back();
      } else {
        values.push_back(options.infer_types ? infer_literal(f) : Value(f));
      }
    }
    table.rows.push_back(std::move(values));
  }
  return table;
}

SheetState load_csv_text(std::string_view text, const CsvOptions& options,
                         std::vector<Diagnostic>* diagnostics) {
  CsvTable table = parse_csv(text, options);
  if (diagnostics) {
    for (const auto& w : table.warnings) {
      diagnostics->push_back(Diagnostic{0, Diagnostic::Severity::Warning, "ragged row: " + w});
    }
  }
  SheetState s = new_sheet(table.columns);
  std::vector<RowId> rows;
  rows.reserve(table.rows.size());
  for (std::size_t i = 0; i < table.rows.size(); ++i) rows.push_back(s.mutable_allocator().row());
  s.mutable_coords().set_row_order(rows);
  auto cols = s.coords().columns();
  std::vector<ColId> col_ids;
  for (const Column& c : cols) col_ids.push_back(c.id);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < col_ids.size(); ++c) {
      CellId id = s.create_cell();
      Value v = table.rows[r][c];
      s.set_cell(id, Formula::literal(v), v);
      s.mutable_coords().bind(col_ids[c], rows[r], id);
    }
  }
  return s;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

SheetState load_csv(const std::string& path, const CsvOptions& options,
                    std::vector<Diagnostic>* diagnostics) {
  return load_csv_text(read_file(path), options, diagnostics);
}

std::string to_csv(const SheetState& state) {
  std::string out;
  const auto& cs = state.coords();
  for (std::int64_t c = 0; c < cs.column_count(); ++c) {
    if (c) out += ',';
    out += csv_field(cs.columns()[static_cast<std::size_t>(c)].name);
  }
  out += '\n';
  for (std::int64_t r = 0; r < cs.row_count(); ++r) {
    for (std::int64_t c = 0; c < cs.column_count(); ++c) {
      if (c) out += ',';
      const Value& v = state.cell_at_checked({c, r}).value;
      if (!v.is_null()) out += csv_field(display(v));
    }
    out += '\n';
  }
  return out;
}

}  // namespace vizier
