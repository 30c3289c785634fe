#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "vizier/error.hpp"
#include "vizier/notebook.hpp"
#include "vizier/rewriter.hpp"
#include "vizier/service.hpp"
#include "vizier/sql.hpp"

namespace fs = std::filesystem;
using namespace vizier;

namespace {

std::string parent_dir(const std::string& path) {
  fs::path p = fs::path(path).parent_path();
  return p.empty() ? "." : p.string();
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path);
}

int compile_cmd(const std::string& script_path, std::string base, std::string out,
                bool positional) {
  if (base.empty()) base = parent_dir(script_path);
  Script s = parse_script(read_file(script_path));
  SourceSchemas schemas = read_source_schemas(s, base);
  SqlQuery q = positional ? compile_positional(s, schemas) : compile_script(s, schemas);
  if (out.empty()) out = fs::path(script_path).replace_extension(".sql").string();
  if (out == "-") {
    std::cout << q.text << "\n";
    return 0;
  }
  write_text(out, q.text + "\n");
  write_text(out + ".manifest.json", manifest_json(q) + "\n");
  std::cerr << "wrote " << out << " and " << out << ".manifest.json\n";
  return 0;
}

int rewrite_cmd(const std::string& script_path, std::string base, bool with_generalize) {
  if (base.empty()) base = parent_dir(script_path);
  Script s = parse_script(read_file(script_path));
  SourceResolver resolve = file_source_resolver(base);
  std::vector<RewriteSuggestion> all = readability_suggestions(s, resolve);
  if (with_generalize) {
    try {
      for (auto& g : generalize(s, replay(s, resolve).state)) all.push_back(std::move(g));
    } catch (const Error& e) {
      if (e.code() != ErrorCode::NoCandidate) throw;
      std::cerr << "generalize: " << e.what() << "\n";
    }
  }
  std::string label = fs::path(script_path).filename().string();
  auto cost = readability_cost(s);
  for (const auto& sug : all) {
    auto after = readability_cost(apply_suggestion(s, sug));
    std::cout << "# " << to_string(sug.kind) << (sug.verified ? " verified" : " unverified")
              << (sug.prioritized ? " gesture-group" : "") << "  cost (" << cost.first << ", "
              << cost.second << ") -> (" << after.first << ", " << after.second << ")";
    if (!sug.predicate.empty()) std::cout << "  predicate: " << sug.predicate;
    std::cout << "\n" << suggestion_diff(s, sug, label);
  }
  if (all.empty()) std::cerr << "no suggestions\n";
  return 0;
}

int run_cmd(const std::string& path, std::string base) {
  if (base.empty()) base = parent_dir(path);
  Notebook nb = Notebook::deserialize(read_file(path), base);
  for (const auto& b : nb.branch_names()) {
    for (const Page& p : nb.pages(b)) {
      std::cout << b << "/" << p.name << ": " << p.output.coords().row_count() << " rows x "
                << p.output.coords().column_count() << " columns, "
                << state_hash(p.output).substr(0, 16) << " ok\n";
      for (const Diagnostic& d : p.diagnostics) {
        std::cout << "  statement " << d.statement << " " << to_string(d.severity) << ": "
                  << d.message << "\n";
      }
    }
  }
  return 0;
}

int replay_cmd(const std::string& script_path, std::string base) {
  if (base.empty()) base = parent_dir(script_path);
  Applied a = replay(parse_script(read_file(script_path)), file_source_resolver(base));
  for (const Diagnostic& d : a.diagnostics) {
    std::cerr << "statement " << d.statement << " " << to_string(d.severity) << ": " << d.message
              << "\n";
  }
  std::cout << to_csv(a.state);
  return 0;
}

int pack_cmd(const std::vector<std::string>& scripts, std::string base, const std::string& out) {
  if (base.empty()) base = parent_dir(scripts.front());
  Notebook nb(base);
  for (const auto& path : scripts) {
    nb = nb.add_page(kMainBranch, fs::path(path).stem().string(), parse_script(read_file(path)));
  }
  write_text(out, nb.serialize());
  std::cerr << "wrote " << out << " (" << scripts.size() << " pages)\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"vizier: spreadsheet scripts, SQL compilation and rewrites"};
  app.require_subcommand(1);

  std::string script, base, out, notebook, data_dir, host = "127.0.0.1";
  bool positional = false, with_generalize = false;
  int port = 8080;
  std::vector<std::string> scripts;

  auto* compile = app.add_subcommand("compile", "compile a script to SQL plus a manifest");
  compile->add_option("script", script, "VizUAL script")->required()->check(CLI::ExistingFile);
  compile->add_option("-o,--out", out, "SQL output path ('-' for stdout)");
  compile->add_option("--base-dir", base, "directory for LOAD paths (default: script dir)");
  compile->add_flag("--positional", positional, "compile running sums as window functions");

  auto* rewrite = app.add_subcommand("rewrite", "print rewrite suggestions as diffs");
  rewrite->add_option("script", script, "VizUAL script")->required()->check(CLI::ExistingFile);
  rewrite->add_option("--base-dir", base, "directory for LOAD paths");
  rewrite->add_flag("--generalize", with_generalize, "also propose predicate generalizations");

  auto* run = app.add_subcommand("run", "replay a notebook and verify its recorded outputs");
  run->add_option("notebook", notebook, "notebook file")->required()->check(CLI::ExistingFile);
  run->add_option("--base-dir", base, "directory for LOAD paths");

  auto* replay_sub = app.add_subcommand("replay", "replay a script and print the sheet as CSV");
  replay_sub->add_option("script", script, "VizUAL script")->required()->check(CLI::ExistingFile);
  replay_sub->add_option("--base-dir", base, "directory for LOAD paths");

  auto* pack = app.add_subcommand("pack", "build a notebook file, one page per script");
  pack->add_option("scripts", scripts, "VizUAL scripts")->required()->check(CLI::ExistingFile);
  pack->add_option("-o,--out", out, "notebook path")->required();
  pack->add_option("--base-dir", base, "directory for LOAD paths");

  auto* serve = app.add_subcommand("serve", "serve notebooks over HTTP/JSON");
  serve->add_option("--port", port, "port")->check(CLI::Range(1, 65535));
  serve->add_option("--data-dir", data_dir, "notebook and data directory")->required();
  serve->add_option("--host", host, "bind address");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*compile) return compile_cmd(script, base, out, positional);
    if (*rewrite) return rewrite_cmd(script, base, with_generalize);
    if (*run) return run_cmd(notebook, base);
    if (*replay_sub) return replay_cmd(script, base);
    if (*pack) return pack_cmd(scripts, base, out);
    if (*serve) {
      fs::create_directories(data_dir);
      Service service(data_dir);
      std::cerr << "listening on " << host << ":" << port << "\n";
      serve_http(service, host, port);
      return 0;
    }
  } catch (const Error& e) {
    std::cerr << "error [" << to_string(e.code()) << "]: " << e.what() << "\n";
    return e.code() == ErrorCode::ReplayMismatch ? 3 : 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
