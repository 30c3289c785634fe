#include "vizier/notebook.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <filesystem>
#include <set>

#include <json.hpp>

#include "vizier/error.hpp"

namespace vizier {

std::string sha256_hex(std::string_view data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw Error(ErrorCode::Io, "sha256 failed");
  }
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[digest[i] >> 4];
    out += hex[digest[i] & 15];
  }
  return out;
}

std::string state_hash(const SheetState& state) {
  const auto& cs = state.coords();
  std::string text = "columns";
  for (const Column& c : cs.columns()) text += " " + std::to_string(c.id.value) + ":" + c.name;
  text += "\nrows";
  for (RowId r : cs.rows()) text += " " + std::to_string(r.value);
  text += '\n';
  for (std::int64_t r = 0; r < cs.row_count(); ++r) {
    for (std::int64_t c = 0; c < cs.column_count(); ++c) {
      const Cell& cell = state.cell_at_checked({c, r});
      text += std::to_string(cell.id.value) + "\t" + render_formula(cell.formula, {c, r}) + "\t" +
              typed_text(cell.value) + "\n";
    }
  }
  return sha256_hex(text);
}

const std::vector<Page>& Notebook::pages(const std::string& branch) const {
  auto it = branches_.find(branch);
  if (it == branches_.end()) throw Error(ErrorCode::UnknownBranch, "unknown branch '" + branch + "'");
  return it->second;
}

std::vector<Page>& Notebook::mutable_pages(const std::string& branch) {
  auto it = branches_.find(branch);
  if (it == branches_.end()) throw Error(ErrorCode::UnknownBranch, "unknown branch '" + branch + "'");
  return it->second;
}

std::size_t Notebook::page_index(const std::string& branch, const std::string& name_or_index) const {
  const auto& ps = pages(branch);
  for (std::size_t i = 0; i < ps.size(); ++i) {
    if (ps[i].name == name_or_index) return i;
  }
  if (!name_or_index.empty() &&
      std::all_of(name_or_index.begin(), name_or_index.end(), ::isdigit)) {
    std::size_t i = std::stoul(name_or_index);
    if (i < ps.size()) return i;
  }
  throw Error(ErrorCode::UnknownPage, "unknown page '" + name_or_index + "'");
}

const Page& Notebook::page(const std::string& branch, const std::string& name_or_index) const {
  return pages(branch)[page_index(branch, name_or_index)];
}

std::vector<std::string> Notebook::branch_names() const {
  std::vector<std::string> out;
  for (const auto& [name, _] : branches_) out.push_back(name);
  return out;
}

void Notebook::add_fixture(const std::string& path, std::string content) {
  std::string hash = sha256_hex(content);
  fixtures_[path] = Fixture{std::move(content), std::move(hash)};
}

SourceResolver Notebook::resolver(const std::string& branch, std::size_t page_index) const {
  return make_resolver(branch, page_index, true);
}

SourceResolver Notebook::frozen_resolver(const std::string& branch, std::size_t page_index) const {
  return make_resolver(branch, page_index, false);
}

SourceResolver Notebook::make_resolver(const std::string& branch, std::size_t page_index,
                                       bool allow_disk) const {
  return [this, branch, page_index, allow_disk](const Statement& s) -> SheetState {
    if (auto* l = s.as<stmt::Load>()) {
      auto it = fixtures_.find(l->path);
      if (it == fixtures_.end()) {
        if (!allow_disk) throw Error(ErrorCode::Io, "no snapshot of '" + l->path + "'");
        std::filesystem::path p(l->path);
        if (p.is_relative()) p = std::filesystem::path(base_dir_) / p;
        std::string content = read_file(p.string());
        std::string hash = sha256_hex(content);
        it = fixtures_.emplace(l->path, Fixture{std::move(content), std::move(hash)}).first;
      }
      return load_csv_text(it->second.content, CsvOptions{l->header, l->infer_types});
    }
    if (auto* l = s.as<stmt::LoadPage>()) {
      const auto& ps = pages(branch);
      for (std::size_t i = 0; i < page_index && i < ps.size(); ++i) {
        if (ps[i].name == l->page) return ps[i].output;
      }
      throw Error(ErrorCode::UnknownPage, "no earlier page named '" + l->page + "'");
    }
    throw Error(ErrorCode::Syntax, "script source must be LOAD or LOAD PAGE");
  };
}

std::uint64_t Notebook::next_group() const {
  std::uint64_t g = 0;
  for (const auto& [_, ps] : branches_) {
    for (const Page& p : ps) {
      for (const Statement& s : p.script.statements) g = std::max(g, s.group);
    }
  }
  return g + 1;
}

std::vector<std::size_t> Notebook::dependents(const std::string& branch, std::size_t page) const {
  const auto& ps = pages(branch);
  std::set<std::string> changed{ps[page].name};
  std::vector<std::size_t> out;
  for (std::size_t i = page + 1; i < ps.size(); ++i) {
    auto* l = ps[i].script.source.as<stmt::LoadPage>();
    if (l && changed.count(l->page)) {
      out.push_back(i);
      changed.insert(ps[i].name);
    }
  }
  return out;
}

void Notebook::replay_from(const std::string& branch, std::size_t first) {
  std::vector<std::size_t> todo{first};
  for (std::size_t d : dependents(branch, first)) todo.push_back(d);
  auto& ps = mutable_pages(branch);
  for (std::size_t i : todo) ps[i].dirty = true;
  for (std::size_t i : todo) {
    Page& p = ps[i];
    try {
      Applied a = vizier::replay(p.script, resolver(branch, i), policy_);
      p.output = std::move(a.state);
      p.diagnostics = std::move(a.diagnostics);
    } catch (const Error& e) {
      throw Error(e.code(), "page '" + p.name + "': " + e.what());
    }
    p.dirty = false;
  }
}

Notebook Notebook::add_page(const std::string& branch, const std::string& name,
                            const Script& script) const {
  Notebook nb = *this;
  auto& ps = nb.mutable_pages(branch);
  if (name.empty()) throw Error(ErrorCode::InvalidArgument, "page name is empty");
  for (const Page& p : ps) {
    if (p.name == name) throw Error(ErrorCode::InvalidArgument, "page '" + name + "' exists");
  }
  Page p;
  p.name = name;
  p.script = script;
  renumber(p.script);
  ps.push_back(std::move(p));
  nb.replay_from(branch, ps.size() - 1);
  return nb;
}

Notebook Notebook::append_statement(const std::string& branch, const std::string& page,
                                    Statement s) const {
  Notebook nb = *this;
  std::size_t i = nb.page_index(branch, page);
  auto& ps = nb.mutable_pages(branch);
  Page& p = ps[i];
  p.script.statements.push_back(std::move(s));
  renumber(p.script);
  try {
    Applied a = apply(p.output, p.script.statements.back(), policy_);
    p.output = std::move(a.state);
    for (auto& d : a.diagnostics) {
      d.statement = p.script.statements.size();
      p.diagnostics.push_back(std::move(d));
    }
  } catch (const Error& e) {
    throw Error(e.code(), "page '" + p.name + "', statement " +
                              std::to_string(p.script.statements.size()) + ": " + e.what());
  }
  for (std::size_t d : nb.dependents(branch, i)) nb.replay_from(branch, d);
  return nb;
}

Notebook Notebook::edit_statement(const std::string& branch, const std::string& page,
                                  std::size_t index, Statement s) const {
  Notebook nb = *this;
  std::size_t i = nb.page_index(branch, page);
  auto& script = nb.mutable_pages(branch)[i].script;
  if (index >= script.statements.size()) {
    throw Error(ErrorCode::InvalidArgument, "statement index " + std::to_string(index) +
                                                " is out of range");
  }
  script.statements[index] = std::move(s);
  renumber(script);
  nb.replay_from(branch, i);
  return nb;
}

Notebook Notebook::replace_script(const std::string& branch, const std::string& page,
                                  Script script) const {
  Notebook nb = *this;
  std::size_t i = nb.page_index(branch, page);
  renumber(script);
  nb.mutable_pages(branch)[i].script = std::move(script);
  nb.replay_from(branch, i);
  return nb;
}

Notebook Notebook::branch(const std::string& from, const std::string& page,
                          std::size_t statement_count, const std::string& name) const {
  if (branches_.count(name)) {
    throw Error(ErrorCode::DuplicateBranchName, "branch '" + name + "' exists");
  }
  if (name.empty()) throw Error(ErrorCode::InvalidArgument, "branch name is empty");
  Notebook nb = *this;
  std::size_t i = nb.page_index(from, page);
  std::vector<Page> ps(nb.pages(from).begin(), nb.pages(from).begin() + static_cast<long>(i) + 1);
  if (statement_count > ps.back().script.statements.size()) {
    throw Error(ErrorCode::InvalidArgument, "branch point past the end of page '" + page + "'");
  }
  ps.back().script.statements.resize(statement_count);
  nb.branches_[name] = std::move(ps);
  nb.replay_from(name, i);
  return nb;
}

std::string Notebook::serialize() const {
  nlohmann::ordered_json j;
  j["format"] = "vizier-notebook";
  j["version"] = 1;
  nlohmann::ordered_json fx = nlohmann::ordered_json::object();
  for (const auto& [path, f] : fixtures_) {
    fx[path] = {{"sha256", f.sha256}, {"content", f.content}};
  }
  j["fixtures"] = fx;
  nlohmann::ordered_json br = nlohmann::ordered_json::object();
  for (const auto& [name, ps] : branches_) {
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (const Page& p : ps) {
      arr.push_back({{"name", p.name},
                     {"script", render_script(p.script)},
                     {"output_sha256", state_hash(p.output)}});
    }
    br[name] = arr;
  }
  j["branches"] = br;
  return j.dump(2) + "\n";
}

Notebook Notebook::deserialize(std::string_view text, std::string base_dir) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::Syntax, std::string("notebook file: ") + e.what());
  }
  if (j.value("format", "") != "vizier-notebook") {
    throw Error(ErrorCode::Syntax, "not a vizier notebook file");
  }
  Notebook nb(std::move(base_dir));
  for (const auto& [path, f] : j.at("fixtures").items()) {
    nb.add_fixture(path, f.at("content").get<std::string>());
    if (nb.fixtures_.at(path).sha256 != f.at("sha256").get<std::string>()) {
      throw Error(ErrorCode::ReplayMismatch, "fixture '" + path + "' does not match its hash");
    }
  }
  nb.branches_.clear();
  for (const auto& [name, arr] : j.at("branches").items()) {
    auto& ps = nb.branches_[name];
    for (std::size_t i = 0; i < arr.size(); ++i) {
      Page p;
      p.name = arr[i].at("name").get<std::string>();
      p.script = parse_script(arr[i].at("script").get<std::string>());
      p.dirty = true;
      ps.push_back(std::move(p));
      try {
        Applied a = vizier::replay(ps.back().script, nb.frozen_resolver(name, i), nb.policy_);
        ps.back().output = std::move(a.state);
        ps.back().diagnostics = std::move(a.diagnostics);
      } catch (const Error& e) {
        throw Error(e.code(), "page '" + ps.back().name + "': " + e.what());
      }
      ps.back().dirty = false;
      std::string expected = arr[i].at("output_sha256").get<std::string>();
      if (state_hash(ps.back().output) != expected) {
        throw Error(ErrorCode::ReplayMismatch, "branch '" + name + "', page '" + ps.back().name +
                                                   "': replayed output does not match its hash");
      }
    }
  }
  if (!nb.branches_.count(kMainBranch)) nb.branches_[kMainBranch];
  return nb;
}

}  // namespace vizier
