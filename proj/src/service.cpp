#include "vizier/service.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>

#include <httplib.h>
#include <json.hpp>

#include "vizier/error.hpp"
#include "vizier/gesture.hpp"
#include "vizier/lexer.hpp"
#include "vizier/rewriter.hpp"
#include "vizier/sql.hpp"

namespace vizier {

using json = nlohmann::ordered_json;
namespace fs = std::filesystem;

int http_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::UnknownPage:
    case ErrorCode::UnknownBranch: return 404;
    case ErrorCode::Syntax:
    case ErrorCode::MissingHost:
    case ErrorCode::UnknownStatement:
    case ErrorCode::EmptyTarget: return 422;
    default: return 409;
  }
}

namespace {

struct HttpError {
  int status;
  std::string code;
  std::string message;
};

[[noreturn]] void fail(int status, const std::string& code, const std::string& message) {
  throw HttpError{status, code, message};
}

HttpResponse reply(int status, const json& body) { return {status, body.dump()}; }

HttpResponse error_reply(int status, const std::string& code, const std::string& message) {
  return reply(status, json{{"error", {{"code", code}, {"message", message}}}});
}

std::vector<std::string> split_path(const std::string& path) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : path) {
    if (c == '/') {
      if (!cur.empty()) out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

json parse_body(const std::string& body) {
  if (body.empty()) return json::object();
  try {
    json j = json::parse(body);
    if (!j.is_object()) fail(422, "SYNTAX", "request body must be a JSON object");
    return j;
  } catch (const json::exception& e) {
    fail(422, "SYNTAX", std::string("malformed JSON: ") + e.what());
  }
}

template <class T>
T field(const json& j, const char* name) {
  if (!j.contains(name)) fail(422, "SYNTAX", std::string("missing field '") + name + "'");
  try {
    return j.at(name).get<T>();
  } catch (const json::exception&) {
    fail(422, "SYNTAX", std::string("field '") + name + "' has the wrong type");
  }
}

json value_json(const Value& v) {
  json out;
  switch (v.type()) {
    case ValueType::Null: out = {{"type", "null"}, {"value", nullptr}}; break;
    case ValueType::Int: out = {{"type", "int"}, {"value", v.as_int()}}; break;
    case ValueType::Float: out = {{"type", "float"}, {"value", v.as_float()}}; break;
    case ValueType::String: out = {{"type", "string"}, {"value", v.as_string()}}; break;
    case ValueType::Bool: out = {{"type", "bool"}, {"value", v.as_bool()}}; break;
    case ValueType::Error:
      out = {{"type", "error"}, {"value", std::string(to_string(v.error_kind()))}};
      break;
  }
  out["text"] = display(v);
  return out;
}

json statement_json(const Statement& s, std::size_t position) {
  return json{{"index", position}, {"text", render_statement(s)}, {"group", s.group}};
}

json diagnostics_json(const std::vector<Diagnostic>& ds) {
  json out = json::array();
  for (const Diagnostic& d : ds) {
    out.push_back({{"statement", d.statement},
                   {"severity", std::string(to_string(d.severity))},
                   {"message", d.message}});
  }
  return out;
}

std::string script_hash(const Script& s) { return sha256_hex(render_script(s)); }

json script_json(const Page& p) {
  json statements = json::array();
  for (std::size_t i = 0; i < p.script.statements.size(); ++i) {
    statements.push_back(statement_json(p.script.statements[i], i));
  }
  return json{{"page", p.name},
              {"source", render_statement(p.script.source)},
              {"text", render_script(p.script)},
              {"script_hash", script_hash(p.script)},
              {"statements", statements}};
}

Position position_json(const json& j) {
  return Position{field<std::int64_t>(j, "col"), field<std::int64_t>(j, "row")};
}

Rect rect_json(const json& j) {
  return Rect{position_json(field<json>(j, "first")), position_json(field<json>(j, "last"))};
}

CastType cast_json(const std::string& s) {
  for (auto t : {CastType::Int, CastType::Float, CastType::String, CastType::Bool}) {
    if (iequals(s, to_string(t))) return t;
  }
  fail(422, "SYNTAX", "unknown cast type '" + s + "'");
}

Gesture gesture_json(const json& j) {
  std::string type = field<std::string>(j, "type");
  if (type == "edit_cell") {
    return gesture::EditCell{position_json(field<json>(j, "at")), field<std::string>(j, "text")};
  }
  if (type == "typecast") {
    return gesture::Typecast{rect_json(field<json>(j, "region")),
                             cast_json(field<std::string>(j, "cast"))};
  }
  if (type == "copy_paste") {
    return gesture::CopyPaste{rect_json(field<json>(j, "source")),
                              rect_json(field<json>(j, "target"))};
  }
  if (type == "fill") {
    return gesture::Fill{rect_json(field<json>(j, "source")), rect_json(field<json>(j, "target"))};
  }
  if (type == "cut_paste") {
    return gesture::CutPaste{rect_json(field<json>(j, "source")),
                             position_json(field<json>(j, "target"))};
  }
  if (type == "drag_rows") {
    return gesture::DragRows{field<std::vector<std::uint64_t>>(j, "rows"),
                             field<std::int64_t>(j, "destination")};
  }
  if (type == "drag_columns") {
    return gesture::DragColumns{field<std::vector<std::string>>(j, "columns"),
                                field<std::int64_t>(j, "destination")};
  }
  if (type == "insert_row") {
    return gesture::InsertRow{j.value("after", false), field<std::int64_t>(j, "index")};
  }
  if (type == "insert_column") {
    return gesture::InsertColumn{j.value("after", false), field<std::int64_t>(j, "index"),
                                 j.value("name", std::string())};
  }
  if (type == "delete_rows") return gesture::DeleteRows{rect_json(field<json>(j, "region"))};
  if (type == "sort") {
    gesture::Sort s;
    for (const json& k : field<json>(j, "keys")) {
      s.keys.push_back(SortKey{field<std::string>(k, "column"), k.value("descending", false)});
    }
    return s;
  }
  if (type == "filter") return gesture::Filter{field<std::string>(j, "predicate")};
  fail(422, "SYNTAX", "unknown gesture type '" + type + "'");
}

std::pair<std::int64_t, std::int64_t> range_param(const HttpRequest& r, const std::string& name,
                                                  std::int64_t total) {
  auto it = r.query.find(name);
  if (it == r.query.end() || it->second.empty()) return {0, total};
  auto colon = it->second.find(':');
  try {
    std::int64_t lo = std::stoll(it->second.substr(0, colon));
    std::int64_t hi = colon == std::string::npos ? total : std::stoll(it->second.substr(colon + 1));
    if (lo < 0 || hi < 0) fail(422, "INVALID_ARGUMENT", name + " must be non-negative");
    lo = std::min(lo, total);
    hi = std::clamp(hi, lo, total);
    return {lo, hi};
  } catch (const std::logic_error&) {
    fail(422, "SYNTAX", name + " must look like start:end");
  }
}

json window_json(const SheetState& st, std::pair<std::int64_t, std::int64_t> cols,
                 std::pair<std::int64_t, std::int64_t> rows) {
  const auto& cs = st.coords();
  json columns = json::array();
  for (std::int64_t c = cols.first; c < cols.second; ++c) {
    const Column& col = cs.columns()[static_cast<std::size_t>(c)];
    columns.push_back({{"name", col.name}, {"id", col.id.value}, {"position", c}});
  }
  json row_list = json::array();
  json cells = json::array();
  for (std::int64_t r = rows.first; r < rows.second; ++r) {
    row_list.push_back({{"rowid", cs.rows()[static_cast<std::size_t>(r)].value}, {"position", r}});
    json line = json::array();
    for (std::int64_t c = cols.first; c < cols.second; ++c) {
      const Cell& cell = st.cell_at_checked({c, r});
      json v = value_json(cell.value);
      v["cell"] = cell.id.value;
      v["formula"] = render_formula(cell.formula, {c, r});
      v["display"] = render_formula(cell.formula, {c, r}, &cs, RenderMode::Display);
      line.push_back(std::move(v));
    }
    cells.push_back(std::move(line));
  }
  return json{{"columns", columns},
              {"rows", row_list},
              {"cells", cells},
              {"col_range", {cols.first, cols.second}},
              {"row_range", {rows.first, rows.second}},
              {"total_columns", cs.column_count()},
              {"total_rows", cs.row_count()}};
}

std::string suggestion_id(const Script& script, const RewriteSuggestion& s) {
  std::string key = render_script(script) + "\n" + std::string(to_string(s.kind));
  for (std::size_t i : s.replaced) key += " " + std::to_string(i);
  for (const Statement& r : s.replacement) key += "\n" + render_statement(r);
  return sha256_hex(key).substr(0, 16);
}

std::vector<RewriteSuggestion> all_suggestions(const Notebook& nb, const std::string& branch,
                                               std::size_t page) {
  const Page& p = nb.pages(branch)[page];
  SourceResolver resolve = nb.resolver(branch, page);
  std::vector<RewriteSuggestion> out = readability_suggestions(p.script, resolve);
  try {
    for (auto& s : generalize(p.script, p.output)) out.push_back(std::move(s));
  } catch (const Error& e) {
    if (e.code() != ErrorCode::NoCandidate) throw;
  }
  return out;
}

json suggestion_json(const Script& script, const RewriteSuggestion& s) {
  json replacement = json::array();
  for (const Statement& r : s.replacement) replacement.push_back(render_statement(r));
  json out{{"id", suggestion_id(script, s)},
           {"kind", std::string(to_string(s.kind))},
           {"replaced", s.replaced},
           {"replacement", replacement},
           {"verified", s.verified},
           {"prioritized", s.prioritized},
           {"diff", suggestion_diff(script, s)}};
  if (s.kind == RewriteKind::Generalize) {
    out["predicate"] = s.predicate;
    out["rows_matched"] = s.rows_matched;
  }
  return out;
}

std::string branch_of(const HttpRequest& r, const json& body) {
  if (body.contains("branch")) return field<std::string>(body, "branch");
  auto it = r.query.find("branch");
  return it == r.query.end() ? std::string(kMainBranch) : it->second;
}

}  // namespace

Service::Service(std::string data_dir, bool persist)
    : data_dir_(std::move(data_dir)), persist_(persist) {
  if (!persist_) return;
  fs::path dir = fs::path(data_dir_) / "notebooks";
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) return;
  for (const auto& f : fs::directory_iterator(dir)) {
    if (f.path().extension() != ".vznb") continue;
    try {
      auto e = std::make_shared<Entry>();
      e->current = std::make_shared<const Notebook>(
          Notebook::deserialize(read_file(f.path().string()), data_dir_));
      notebooks_[f.path().stem().string()] = e;
    } catch (const std::exception& ex) {
      std::cerr << "skipping " << f.path() << ": " << ex.what() << "\n";
    }
  }
}

std::shared_ptr<Service::Entry> Service::entry(const std::string& id) const {
  std::lock_guard lock(registry_);
  auto it = notebooks_.find(id);
  if (it == notebooks_.end()) fail(404, "UNKNOWN_NOTEBOOK", "unknown notebook '" + id + "'");
  return it->second;
}

std::shared_ptr<const Notebook> Service::read(const Entry& e) const {
  std::lock_guard lock(e.publish);
  return e.current;
}

std::shared_ptr<const Notebook> Service::snapshot(const std::string& id) const {
  return read(*entry(id));
}

void Service::publish(const std::string& id, Entry& e, Notebook nb) {
  auto next = std::make_shared<const Notebook>(std::move(nb));
  if (persist_) {
    fs::path dir = fs::path(data_dir_) / "notebooks";
    fs::create_directories(dir);
    fs::path tmp = dir / (id + ".vznb.tmp");
    {
      std::ofstream out(tmp, std::ios::binary);
      out << next->serialize();
      if (!out) throw Error(ErrorCode::Io, "cannot write " + tmp.string());
    }
    fs::rename(tmp, dir / (id + ".vznb"));
  }
  std::lock_guard lock(e.publish);
  e.current = std::move(next);
}

std::string Service::create(const std::string& requested_id, Notebook nb) {
  std::string id = requested_id;
  auto e = std::make_shared<Entry>();
  {
    std::lock_guard lock(registry_);
    if (id.empty()) {
      do {
        id = "nb" + std::to_string(next_id_++);
      } while (notebooks_.count(id));
    } else if (notebooks_.count(id)) {
      fail(409, "DUPLICATE_NOTEBOOK", "notebook '" + id + "' exists");
    }
    for (char c : id) {
      if (!std::isalnum(static_cast<unsigned char>(c)) && c != '-' && c != '_') {
        fail(422, "INVALID_ARGUMENT", "notebook ids use letters, digits, '-' and '_'");
      }
    }
    notebooks_[id] = e;
  }
  std::lock_guard w(e->write);
  publish(id, *e, std::move(nb));
  return id;
}

HttpResponse Service::handle(const HttpRequest& request) {
  try {
    return route(request);
  } catch (const HttpError& e) {
    return error_reply(e.status, e.code, e.message);
  } catch (const Error& e) {
    return error_reply(http_status(e.code()), std::string(to_string(e.code())), e.what());
  } catch (const std::exception& e) {
    return error_reply(500, "INTERNAL", e.what());
  }
}

HttpResponse Service::route(const HttpRequest& r) {
  auto seg = split_path(r.path);
  if (seg.empty() || seg[0] != "notebooks") fail(404, "NOT_FOUND", "no route for " + r.path);
  bool get = r.method == "GET";
  bool post = r.method == "POST";

  if (seg.size() == 1) {
    if (get) {
      std::lock_guard lock(registry_);
      json ids = json::array();
      for (const auto& [id, _] : notebooks_) ids.push_back(id);
      return reply(200, json{{"notebooks", ids}});
    }
    if (post) {
      json body = parse_body(r.body);
      Notebook nb(data_dir_);
      if (body.contains("fixtures")) {
        for (const auto& [path, content] : body["fixtures"].items()) {
          nb.add_fixture(path, content.get<std::string>());
        }
      }
      if (body.contains("pages")) {
        for (const json& p : body["pages"]) {
          Script s;
          try {
            s = parse_script(field<std::string>(p, "script"));
          } catch (const Error& e) {
            fail(422, std::string(to_string(e.code())), e.what());
          }
          nb = nb.add_page(kMainBranch, field<std::string>(p, "name"), s);
        }
      }
      std::string id = create(body.value("id", std::string()), std::move(nb));
      return reply(201, json{{"id", id}});
    }
    fail(405, "METHOD_NOT_ALLOWED", r.method + " " + r.path);
  }

  const std::string& id = seg[1];
  auto e = entry(id);

  if (seg.size() == 2 && get) {
    auto nb = read(*e);
    json branches = json::object();
    for (const auto& b : nb->branch_names()) {
      json names = json::array();
      for (const Page& p : nb->pages(b)) names.push_back(p.name);
      branches[b] = names;
    }
    return reply(200, json{{"id", id}, {"branches", branches}});
  }
  if (seg.size() == 3 && seg[2] == "export" && get) {
    return {200, read(*e)->serialize()};
  }
  if (seg.size() == 3 && seg[2] == "branches" && post) {
    json body = parse_body(r.body);
    std::lock_guard w(e->write);
    Notebook next = read(*e)->branch(body.value("from", std::string(kMainBranch)),
                                     field<std::string>(body, "page"),
                                     field<std::size_t>(body, "statements"),
                                     field<std::string>(body, "name"));
    publish(id, *e, std::move(next));
    return reply(201, json{{"branch", body["name"]}});
  }
  if (seg.size() == 3 && seg[2] == "pages" && post) {
    json body = parse_body(r.body);
    Script s;
    try {
      s = parse_script(field<std::string>(body, "script"));
    } catch (const Error& ex) {
      fail(422, std::string(to_string(ex.code())), ex.what());
    }
    std::string branch = branch_of(r, body);
    std::lock_guard w(e->write);
    Notebook next = read(*e)->add_page(branch, field<std::string>(body, "name"), s);
    const Page& p = next.pages(branch).back();
    json out = script_json(p);
    out["diagnostics"] = diagnostics_json(p.diagnostics);
    publish(id, *e, std::move(next));
    return reply(201, out);
  }
  if (seg.size() != 5 || seg[2] != "pages") fail(404, "NOT_FOUND", "no route for " + r.path);

  const std::string& page = seg[3];
  const std::string& action = seg[4];
  json body = post ? parse_body(r.body) : json::object();
  std::string branch = branch_of(r, body);

  if (get) {
    auto nb = read(*e);
    std::size_t pi = nb->page_index(branch, page);
    const Page& p = nb->pages(branch)[pi];
    if (action == "statements" || action == "script") {
      json out = script_json(p);
      out["diagnostics"] = diagnostics_json(p.diagnostics);
      return reply(200, out);
    }
    if (action == "window") {
      const auto& cs = p.output.coords();
      json out = window_json(p.output, range_param(r, "cols", cs.column_count()),
                             range_param(r, "rows", cs.row_count()));
      out["state_hash"] = state_hash(p.output);
      return reply(200, out);
    }
    if (action == "sql") {
      if (!p.script.source.as<stmt::Load>()) {
        fail(409, "INVALID_ARGUMENT", "only pages that LOAD a file compile to SQL");
      }
      Statement src = p.script.source;
      SourceSchemas schemas;
      schemas[src.as<stmt::Load>()->path] = nb->resolver(branch, pi)(src).column_names();
      auto pos = r.query.find("positional");
      bool positional = pos != r.query.end() && (pos->second == "1" || pos->second == "true");
      SqlQuery q = positional ? compile_positional(p.script, schemas)
                              : compile_script(p.script, schemas);
      return reply(200, json{{"sql", q.text},
                             {"manifest", json::parse(manifest_json(q))}});
    }
    if (action == "suggestions") {
      json list = json::array();
      for (const auto& s : all_suggestions(*nb, branch, pi)) {
        list.push_back(suggestion_json(p.script, s));
      }
      return reply(200, json{{"script_hash", script_hash(p.script)}, {"suggestions", list}});
    }
    fail(404, "NOT_FOUND", "no route for " + r.path);
  }
  if (!post) fail(405, "METHOD_NOT_ALLOWED", r.method + " " + r.path);

  std::lock_guard w(e->write);
  auto nb = read(*e);
  std::size_t pi = nb->page_index(branch, page);
  const Page& before = nb->pages(branch)[pi];
  std::size_t old_size = before.script.statements.size();
  std::size_t old_diags = before.diagnostics.size();
  Notebook next = *nb;

  if (action == "statements") {
    std::vector<Statement> parsed;
    try {
      parsed = parse_statements(field<std::string>(body, "text"));
    } catch (const Error& ex) {
      fail(422, std::string(to_string(ex.code())), ex.what());
    }
    if (body.contains("index")) {
      if (parsed.size() != 1) fail(422, "SYNTAX", "an edit replaces exactly one statement");
      next = next.edit_statement(branch, page, field<std::size_t>(body, "index"), parsed[0]);
      old_diags = 0;
    } else {
      for (Statement& s : parsed) next = next.append_statement(branch, page, std::move(s));
    }
  } else if (action == "gestures") {
    json list = body.contains("gestures") ? field<json>(body, "gestures") : json::array({body});
    if (!list.is_array()) fail(422, "SYNTAX", "'gestures' must be an array");
    for (const json& g : list) {
      Gesture gesture = gesture_json(g);
      std::vector<Statement> stmts;
      try {
        stmts = gesture_to_statements(gesture, next.pages(branch)[pi].output, next.next_group());
      } catch (const Error& ex) {
        fail(422, std::string(to_string(ex.code())), ex.what());
      }
      for (Statement& s : stmts) next = next.append_statement(branch, page, std::move(s));
    }
  } else if (action == "suggestions") {
    std::string wanted = field<std::string>(body, "id");
    const RewriteSuggestion* chosen = nullptr;
    auto current = all_suggestions(*nb, branch, pi);
    for (const auto& s : current) {
      if (suggestion_id(before.script, s) == wanted) chosen = &s;
    }
    if (!chosen) {
      fail(409, "STALE_SUGGESTION", "suggestion '" + wanted + "' does not apply to the current script");
    }
    next = next.replace_script(branch, page, apply_suggestion(before.script, *chosen));
    old_size = 0;
    old_diags = 0;
  } else {
    fail(404, "NOT_FOUND", "no route for " + r.path);
  }

  const Page& after = next.pages(branch)[pi];
  json applied = json::array();
  // Edits and accepted suggestions rewrite the script; report all of it.
  std::size_t from = action == "statements" && body.contains("index") ? 0 : old_size;
  for (std::size_t i = from; i < after.script.statements.size(); ++i) {
    applied.push_back(statement_json(after.script.statements[i], i));
  }
  json out = script_json(after);
  out["applied"] = applied;
  std::vector<Diagnostic> fresh(after.diagnostics.begin() +
                                    static_cast<long>(std::min(old_diags, after.diagnostics.size())),
                                after.diagnostics.end());
  out["diagnostics"] = diagnostics_json(fresh);
  publish(id, *e, std::move(next));
  return reply(200, out);
}

struct HttpServer::Impl {
  httplib::Server server;
};

HttpServer::HttpServer(Service& service) : impl_(std::make_unique<Impl>()) {
  auto handler = [&service](const httplib::Request& req, httplib::Response& res) {
    HttpRequest r;
    r.method = req.method;
    r.path = req.path;
    for (const auto& [k, v] : req.params) r.query[k] = v;
    r.body = req.body;
    HttpResponse out = service.handle(r);
    res.status = out.status;
    res.set_content(out.body, "application/json");
  };
  impl_->server.Get(".*", handler);
  impl_->server.Post(".*", handler);
}

HttpServer::~HttpServer() = default;

int HttpServer::bind(const std::string& host, int port) {
  int bound = port == 0 ? impl_->server.bind_to_any_port(host)
                        : (impl_->server.bind_to_port(host, port) ? port : -1);
  if (bound < 0) throw Error(ErrorCode::Io, "cannot listen on " + host + ":" + std::to_string(port));
  return bound;
}

void HttpServer::run() {
  if (!impl_->server.listen_after_bind()) throw Error(ErrorCode::Io, "HTTP server failed");
}

void HttpServer::stop() { impl_->server.stop(); }

void serve_http(Service& service, const std::string& host, int port) {
  HttpServer server(service);
  server.bind(host, port);
  server.run();
}

}  // namespace vizier
