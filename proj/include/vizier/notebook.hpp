#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "vizier/executor.hpp"
#include "vizier/vizual.hpp"

namespace vizier {

std::string sha256_hex(std::string_view data);

/// Content hash of a sheet: ids, layout, canonical formulas and typed values.
std::string state_hash(const SheetState& state);

struct Fixture {
  std::string content;
  std::string sha256;
};

struct Page {
  std::string name;
  Script script;
  SheetState output;
  std::vector<Diagnostic> diagnostics;
  bool dirty = false;
};

inline constexpr const char* kMainBranch = "main";

/// Pages grouped into prefix-forked branches, plus a registry of loaded files
/// snapshotted by content so replays never re-read the disk.
class Notebook {
 public:
  explicit Notebook(std::string base_dir = ".") : base_dir_(std::move(base_dir)) {
    branches_[kMainBranch];
  }

  const std::vector<Page>& pages(const std::string& branch = kMainBranch) const;
  const Page& page(const std::string& branch, const std::string& name_or_index) const;
  std::size_t page_index(const std::string& branch, const std::string& name_or_index) const;
  std::vector<std::string> branch_names() const;
  const std::map<std::string, Fixture>& fixtures() const { return fixtures_; }
  const std::string& base_dir() const { return base_dir_; }
  StabilityPolicy& policy() { return policy_; }
  const StabilityPolicy& policy() const { return policy_; }

  /// Registers file content under `path` without touching the disk.
  void add_fixture(const std::string& path, std::string content);

  /// Resolver for pages of `branch` preceding `page_index`. Unknown LOAD
  /// paths are read from base_dir and snapshotted.
  SourceResolver resolver(const std::string& branch, std::size_t page_index) const;
  /// Resolver that only serves snapshotted fixtures and earlier pages.
  SourceResolver frozen_resolver(const std::string& branch, std::size_t page_index) const;

  std::uint64_t next_group() const;

  // Each mutation works on a copy and leaves *this untouched on error.
  Notebook add_page(const std::string& branch, const std::string& name,
                    const Script& script) const;
  Notebook append_statement(const std::string& branch, const std::string& page,
                            Statement s) const;
  Notebook edit_statement(const std::string& branch, const std::string& page,
                          std::size_t index, Statement s) const;
  Notebook replace_script(const std::string& branch, const std::string& page,
                          Script script) const;
  Notebook branch(const std::string& from, const std::string& page,
                  std::size_t statement_count, const std::string& name) const;

  /// Serialized container (JSON): fixtures, pages with embedded scripts and
  /// output hashes.
  std::string serialize() const;
  /// Parses a container and replays every page. Throws REPLAY_MISMATCH when a
  /// recomputed output hash differs from the recorded one.
  static Notebook deserialize(std::string_view text, std::string base_dir = ".");

 private:
  std::vector<Page>& mutable_pages(const std::string& branch);
  void replay_from(const std::string& branch, std::size_t first);
  std::vector<std::size_t> dependents(const std::string& branch, std::size_t page) const;
  SourceResolver make_resolver(const std::string& branch, std::size_t page_index,
                               bool allow_disk) const;

  std::string base_dir_;
  std::map<std::string, std::vector<Page>> branches_;
  mutable std::map<std::string, Fixture> fixtures_;
  StabilityPolicy policy_;
};

}  // namespace vizier
