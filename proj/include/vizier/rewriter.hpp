#pragma once

#include <string>
#include <vector>

#include "vizier/executor.hpp"
#include "vizier/vizual.hpp"

namespace vizier {

enum class RewriteKind { Reroll, Fuse, Generalize };
std::string_view to_string(RewriteKind k);

struct RewriteSuggestion {
  RewriteKind kind = RewriteKind::Reroll;
  /// Indexes into Script::statements, ascending. The replacement goes where
  /// the first replaced statement was.
  std::vector<std::size_t> replaced;
  std::vector<Statement> replacement;
  /// GENERALIZE evidence: the separating predicate and the rows it matches.
  std::string predicate;
  std::vector<std::uint64_t> rows_matched;
  /// REROLL/FUSE: replay-verified on the fixtures. GENERALIZE is never
  /// verified; it changes behavior on other data on purpose.
  bool verified = false;
  bool prioritized = false;  // built from statements of one gesture group
};

/// Script with the suggestion applied.
Script apply_suggestion(const Script& script, const RewriteSuggestion& s);

/// Unified-diff hunks turning `script` into apply_suggestion(script, s). Line 1
/// is the source statement.
std::string suggestion_diff(const Script& script, const RewriteSuggestion& s,
                            const std::string& label = "script");

/// Readability measure: (statement count, total AST nodes), compared
/// lexicographically.
std::pair<std::size_t, std::size_t> readability_cost(const Script& script);

/// Collapses families of statements identical up to one `X = literal` hole
/// into `X IN (...)`, or `ROWID BETWEEN lo AND hi` for consecutive rowids.
/// Only suggestions that pass equivalence_check on `resolve` are returned.
std::vector<RewriteSuggestion> reroll(const Script& script, const SourceResolver& resolve);

/// Fuses ADD COLUMN + unconditional UPDATE into a derived column and runs of
/// UPDATEs on one column into one conditional UPDATE.
std::vector<RewriteSuggestion> fuse(const Script& script, const SourceResolver& resolve);

/// reroll then fuse, dropping any suggestion whose replaced statements equal
/// another's and whose resulting readability_cost is strictly higher.
std::vector<RewriteSuggestion> readability_suggestions(const Script& script,
                                                       const SourceResolver& resolve);

/// Proposes predicates (at most two conjuncts of `attr = v` or
/// `attr BETWEEN lo AND hi`) that select exactly the rows targeted by
/// singleton UPDATEs on one column, plus an exact affine fit when the
/// assigned constants differ. Throws NO_CANDIDATE when nothing separates.
std::vector<RewriteSuggestion> generalize(const Script& script, const SheetState& state);

enum class Verdict { Equal, Different, Incomparable };
std::string_view to_string(Verdict v);

struct EquivalenceResult {
  Verdict verdict = Verdict::Equal;
  std::string cause;
};

/// Replays both scripts and compares {(position, value)} over the final grids.
EquivalenceResult equivalence_check(const Script& original, const Script& rewritten,
                                    const SourceResolver& resolve);

}  // namespace vizier
