#pragma once

#include <map>
#include <string>
#include <vector>

#include "vizier/executor.hpp"
#include "vizier/vizual.hpp"

namespace vizier {

/// Column names of each LOAD source, keyed by path.
using SourceSchemas = std::map<std::string, std::vector<std::string>>;

/// Reads the header row of every LOAD source in `script` from disk.
SourceSchemas read_source_schemas(const Script& script, const std::string& base_dir = ".");

struct SqlQuery {
  std::string text;
  std::vector<std::string> sources;  // LOAD paths the query reads
  std::vector<std::string> columns;  // output columns in order
};

/// Compiles a row-local script to one query. Cell references are rejected with
/// POSITIONAL_NOT_COMPILABLE.
SqlQuery compile_script(const Script& script, const SourceSchemas& schemas);

/// Like compile_script, but running accumulations (X at row i defined as a
/// row-local expression plus X at row i-1) become window sums.
SqlQuery compile_positional(const Script& script, const SourceSchemas& schemas);

/// SQL text for a row-local formula.
std::string compile_formula(const Formula& f);

/// Manifest sidecar: {"sources": [...], "columns": [...]} as JSON text.
std::string manifest_json(const SqlQuery& q);

struct Relation {
  std::vector<std::string> columns;
  std::vector<std::vector<Value>> rows;
};

/// Table loader for LOAD('path') in queries; a synthetic ROWID column
/// (1..n in file order) is appended.
using TableProvider = std::function<Relation(const std::string& path)>;

TableProvider csv_table_provider(const SourceResolver& resolve);
TableProvider csv_file_provider(const std::string& base_dir = ".");

/// Executes the dialect emitted by the compiler: SELECT lists with CASE,
/// CAST and arithmetic, FROM LOAD(...) or a subquery, WHERE, UNION ALL,
/// ORDER BY with NULLS LAST, COUNT(*), and the running SUM window.
Relation run_sql(std::string_view sql, const TableProvider& tables);

/// Visible grid of a sheet as a relation (for comparisons with run_sql).
Relation to_relation(const SheetState& state);

}  // namespace vizier
