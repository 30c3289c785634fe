#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "vizier/rebase.hpp"
#include "vizier/sheet.hpp"
#include "vizier/vizual.hpp"

namespace vizier {

struct CsvOptions {
  bool header = true;
  bool infer_types = true;
};

struct Diagnostic {
  enum class Severity { Info, Warning, Error };
  std::size_t statement = 0;
  Severity severity = Severity::Warning;
  std::string message;
};

std::string_view to_string(Diagnostic::Severity s);

struct CsvTable {
  std::vector<std::string> columns;
  std::vector<std::vector<Value>> rows;
  std::vector<std::string> warnings;  // ragged rows
};

/// RFC 4180 parsing. Short rows are padded with nulls, long rows truncated;
/// both are reported in `warnings`.
CsvTable parse_csv(std::string_view text, const CsvOptions& options = {});

/// Sheet with one literal cell per datum. Rows receive ids 1..n in file order.
SheetState load_csv_text(std::string_view text, const CsvOptions& options = {},
                         std::vector<Diagnostic>* diagnostics = nullptr);
SheetState load_csv(const std::string& path, const CsvOptions& options = {},
                    std::vector<Diagnostic>* diagnostics = nullptr);

std::string read_file(const std::string& path);

/// Writes the visible grid (values only) as CSV.
std::string to_csv(const SheetState& state);

enum class Action { InsertRow, InsertColumn, Reorder, Delete, Filter, CutPaste, Sort };

/// Which stability each structural action uses. Defaults follow the behavior
/// shared by mainstream spreadsheets: everything value-stable except sort.
struct StabilityPolicy {
  std::map<Action, StabilityMode> modes = {
      {Action::InsertRow, StabilityMode::ValueStable},
      {Action::InsertColumn, StabilityMode::ValueStable},
      {Action::Reorder, StabilityMode::ValueStable},
      {Action::Delete, StabilityMode::ValueStable},
      {Action::Filter, StabilityMode::ValueStable},
      {Action::CutPaste, StabilityMode::ValueStable},
      {Action::Sort, StabilityMode::FormulaStable},
  };

  StabilityMode mode(Action a) const { return modes.at(a); }
};

/// Resolves a LOAD / LOAD PAGE source to an initial sheet.
using SourceResolver = std::function<SheetState(const Statement& source)>;

/// Resolver reading LOAD paths from disk, relative to `base_dir`.
SourceResolver file_source_resolver(std::string base_dir = ".");

struct Applied {
  SheetState state;
  std::vector<Diagnostic> diagnostics;
};

/// Applies one statement. Throws vizier::Error for schema errors (unknown
/// column, unknown rowid); per-row problems become diagnostics.
Applied apply(const SheetState& state, const Statement& s,
              const StabilityPolicy& policy = {});

/// Runs a whole script from its source.
Applied replay(const Script& script, const SourceResolver& resolve,
               const StabilityPolicy& policy = {});

}  // namespace vizier
