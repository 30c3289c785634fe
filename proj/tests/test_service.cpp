#include <gtest/gtest.h>

#include <filesystem>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "test_support.hpp"
#include "vizier/service.hpp"

using namespace vizier;
using nlohmann::json;

namespace {

struct Client {
  Service& svc;

  std::pair<int, json> call(const std::string& method, const std::string& path, const json& body = nullptr,
                            std::map<std::string, std::string> query = {}) {
    HttpResponse r = svc.handle({method, path, std::move(query), body.is_null() ? "" : body.dump()});
    return {r.status, json::parse(r.body)};
  }
  json get(const std::string& path, std::map<std::string, std::string> query = {}) {
    auto [status, body] = call("GET", path, nullptr, std::move(query));
    EXPECT_EQ(status, 200) << path << " " << body.dump();
    return body;
  }
  json post(const std::string& path, const json& body, int want = 200) {
    auto [status, out] = call("POST", path, body);
    EXPECT_EQ(status, want) << path << " " << out.dump();
    return out;
  }
};

std::string running_sum_script() { return vt::kRunningSum; }

}  // namespace

TEST(Service, CreateListAndWindow) {
  Service svc(vt::fixture_dir(), false);
  Client c{svc};
  json made = c.post("/notebooks", {{"id", "rs"}, {"pages", {{{"name", "p"}, {"script", running_sum_script()}}}}}, 201);
  EXPECT_EQ(made["id"], "rs");
  EXPECT_EQ(c.get("/notebooks")["notebooks"], json::array({"rs"}));
  EXPECT_EQ(c.get("/notebooks/rs")["branches"]["main"], json::array({"p"}));

  json w = c.get("/notebooks/rs/pages/p/window");
  EXPECT_EQ(w["columns"].size(), 3u);
  EXPECT_EQ(w["rows"].size(), 4u);
  std::vector<std::string> display{"=B1", "=B2+C1", "=B3+C2", "=B4+C3"};
  std::vector<int> values{10, 14, 22, 31};
  for (int r = 0; r < 4; ++r) {
    EXPECT_EQ(w["cells"][r][2]["display"], display[r]);
    EXPECT_EQ(w["cells"][r][2]["value"], values[r]);
    EXPECT_EQ(w["rows"][r]["rowid"], r + 1);
  }
  EXPECT_EQ(w["cells"][0][0]["value"], "Alice");

  json empty = c.get("/notebooks/rs/pages/p/window", {{"cols", "1:1"}});
  EXPECT_TRUE(empty["columns"].empty());
  EXPECT_EQ(empty["rows"].size(), 4u);
  EXPECT_TRUE(empty["cells"][0].empty());

  json clamped = c.get("/notebooks/rs/pages/p/window", {{"rows", "2:99"}});
  EXPECT_EQ(clamped["row_range"], json::array({2, 4}));
  EXPECT_EQ(clamped["total_rows"], 4);
}

TEST(Service, ErrorsMapToStatus) {
  Service svc(vt::fixture_dir(), false);
  Client c{svc};
  c.post("/notebooks", {{"id", "n"}, {"pages", {{{"name", "p"}, {"script", running_sum_script()}}}}}, 201);
  EXPECT_EQ(c.call("GET", "/notebooks/zzz").first, 404);
  EXPECT_EQ(c.call("GET", "/notebooks/n/pages/q/window").first, 404);
  EXPECT_EQ(c.call("GET", "/elsewhere").first, 404);
  EXPECT_EQ(c.call("GET", "/notebooks/n/pages/p/window", nullptr, {{"branch", "x"}}).first, 404);
  auto [bad, body] = c.call("POST", "/notebooks/n/pages/p/statements", {{"text", "UPDATE = ;"}});
  EXPECT_EQ(bad, 422);
  EXPECT_EQ(body["error"]["code"], "SYNTAX");
  auto [conflict, cbody] = c.call("POST", "/notebooks/n/pages/p/statements", {{"text", "UPDATE nope = 1;"}});
  EXPECT_EQ(conflict, 409);
  EXPECT_EQ(cbody["error"]["code"], "UNKNOWN_COLUMN");
  EXPECT_EQ(c.call("POST", "/notebooks", {{"id", "n"}}).first, 409);
  HttpResponse raw = svc.handle({"POST", "/notebooks/n/pages/p/statements", {}, "{not json"});
  EXPECT_EQ(raw.status, 422);
  EXPECT_EQ(http_status(ErrorCode::UnknownPage), 404);
  EXPECT_EQ(http_status(ErrorCode::MissingHost), 422);
  EXPECT_EQ(http_status(ErrorCode::ReplayMismatch), 409);
}

TEST(Service, EditGestureAppendsSingletonUpdate) {
  Service svc(vt::fixture_dir(), false);
  Client c{svc};
  c.post("/notebooks", {{"id", "li"}, {"pages", {{{"name", "p"}, {"script", "LOAD 'lineitem.csv';\nADD COLUMN total;"}}}}}, 201);
  json before = c.get("/notebooks/li/pages/p/statements");
  json out = c.post("/notebooks/li/pages/p/gestures",
                    {{"type", "edit_cell"}, {"at", {{"col", 4}, {"row", 1}}}, {"text", "1020"}});
  ASSERT_EQ(out["applied"].size(), 1u);
  EXPECT_EQ(out["applied"][0]["text"], "UPDATE total = 1020 WHERE ROWID = 2; -- @group 1");
  EXPECT_NE(out["script_hash"], before["script_hash"]);

  json none = c.post("/notebooks/li/pages/p/gestures", {{"gestures", json::array()}});
  EXPECT_EQ(none["script_hash"], out["script_hash"]);
  EXPECT_TRUE(none["applied"].empty());

  json paste = c.post("/notebooks/li/pages/p/gestures",
                      {{"type", "copy_paste"},
                       {"source", {{"first", {{"col", 2}, {"row", 0}}}, {"last", {{"col", 2}, {"row", 0}}}}},
                       {"target", {{"first", {{"col", 4}, {"row", 0}}}, {"last", {{"col", 4}, {"row", 2}}}}}});
  ASSERT_EQ(paste["applied"].size(), 3u);
  EXPECT_EQ(paste["applied"][0]["group"], paste["applied"][2]["group"]);
  EXPECT_EQ(paste["applied"][0]["group"], 2);
}

TEST(Service, ScriptEditAndSql) {
  Service svc(vt::fixture_dir(), false);
  Client c{svc};
  c.post("/notebooks", {{"id", "f2"}, {"pages", {{{"name", "orders"}, {"script", vizier::read_file(vt::fixture_dir() + "/lineitem.vizual")}}}}}, 201);
  json sql = c.get("/notebooks/f2/pages/orders/sql");
  EXPECT_NE(sql["sql"].get<std::string>().find("CASE WHEN ID = 90 THEN 1020 ELSE price * (1 - discount) END AS total"),
            std::string::npos);
  EXPECT_EQ(sql["manifest"]["sources"], json::array({"lineitem.csv"}));

  json edited = c.post("/notebooks/f2/pages/orders/statements", {{"index", 2}, {"text", "UPDATE total = 1 WHERE ID = 90;"}});
  EXPECT_EQ(edited["statements"][2]["text"], "UPDATE total = 1 WHERE ID = 90;");
  json w = c.get("/notebooks/f2/pages/orders/window", {{"cols", "4:5"}, {"rows", "1:2"}});
  EXPECT_EQ(w["cells"][0][0]["value"], 1);
}

TEST(Service, RerollSuggestionAcceptAndRefetch) {
  Service svc(vt::fixture_dir(), false);
  Client c{svc};
  std::string text = "LOAD 'twelve.csv';\n";
  for (int i = 1; i <= 10; ++i) text += "UPDATE A = 3 WHERE ROWID = " + std::to_string(i) + ";\n";
  c.post("/notebooks", {{"id", "r"}, {"pages", {{{"name", "p"}, {"script", text}}}}}, 201);
  json before = c.get("/notebooks/r/pages/p/window");
  json list = c.get("/notebooks/r/pages/p/suggestions");
  json s;
  for (const auto& sug : list["suggestions"]) {
    EXPECT_NE(sug["kind"], "FUSE");
    if (sug["kind"] == "REROLL") s = sug;
  }
  ASSERT_FALSE(s.is_null());
  EXPECT_TRUE(s["verified"].get<bool>());

  json accepted = c.post("/notebooks/r/pages/p/suggestions", {{"id", s["id"]}});
  ASSERT_EQ(accepted["statements"].size(), 1u);
  EXPECT_EQ(accepted["statements"][0]["text"], "UPDATE A = 3 WHERE ROWID BETWEEN 1 AND 10;");
  json after = c.get("/notebooks/r/pages/p/window");
  EXPECT_EQ(after["cells"], before["cells"]);
  for (const auto& sug : c.get("/notebooks/r/pages/p/suggestions")["suggestions"]) {
    EXPECT_NE(sug["kind"], "REROLL");
  }

  auto [stale, body] = c.call("POST", "/notebooks/r/pages/p/suggestions", {{"id", s["id"]}});
  EXPECT_EQ(stale, 409);
  EXPECT_EQ(body["error"]["code"], "STALE_SUGGESTION");
}

TEST(Service, BranchesAndPages) {
  Service svc(vt::fixture_dir(), false);
  Client c{svc};
  c.post("/notebooks", {{"id", "b"}, {"pages", {{{"name", "p"}, {"script", "LOAD 'twelve.csv'; UPDATE A = 0;"}}}}}, 201);
  c.post("/notebooks/b/pages", {{"name", "q"}, {"script", "LOAD PAGE 'p'; DELETE WHERE B > 50;"}}, 201);
  c.post("/notebooks/b/branches", {{"page", "p"}, {"statements", 0}, {"name", "raw"}}, 201);
  EXPECT_EQ(c.get("/notebooks/b")["branches"]["raw"], json::array({"p"}));
  json w = c.get("/notebooks/b/pages/p/window", {{"branch", "raw"}, {"rows", "0:1"}, {"cols", "0:1"}});
  EXPECT_EQ(w["cells"][0][0]["value"], 1);
  json q = c.get("/notebooks/b/pages/q/window");
  EXPECT_EQ(q["total_rows"], 5);
  c.post("/notebooks/b/pages/p/statements", {{"text", "DELETE WHERE B < 30;"}});
  EXPECT_EQ(c.get("/notebooks/b/pages/q/window")["total_rows"], 3);
}

TEST(Service, PersistsAcrossRestarts) {
  auto dir = std::filesystem::temp_directory_path() / ("vizier_svc_" + std::to_string(::getpid()));
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  std::string hash;
  {
    Service svc(dir.string());
    Client c{svc};
    c.post("/notebooks", {{"id", "keep"},
                          {"fixtures", {{"people.csv", vizier::read_file(vt::fixture_dir() + "/people.csv")}}},
                          {"pages", {{{"name", "p"}, {"script", running_sum_script()}}}}},
           201);
    c.post("/notebooks/keep/pages/p/gestures", {{"type", "drag_rows"}, {"rows", {3}}, {"destination", 1}});
    hash = c.get("/notebooks/keep/pages/p/window")["state_hash"];
  }
  Service again(dir.string());
  Client c{again};
  json w = c.get("/notebooks/keep/pages/p/window");
  EXPECT_EQ(w["state_hash"], hash);
  EXPECT_EQ(w["cells"][1][2]["display"], "=B2+C3");
  std::filesystem::remove_all(dir);
}

TEST(Service, ConcurrentReadersSeeSnapshots) {
  Service svc(vt::fixture_dir(), false);
  Client c{svc};
  c.post("/notebooks", {{"id", "cc"}, {"pages", {{{"name", "p"}, {"script", "LOAD 'twelve.csv';"}}}}}, 201);
  std::atomic<bool> done{false};
  std::atomic<int> bad{0};
  std::thread reader([&] {
    while (!done) {
      HttpResponse r = svc.handle({"GET", "/notebooks/cc/pages/p/window", {}, ""});
      if (r.status != 200) ++bad;
    }
  });
  for (int i = 0; i < 20; ++i) {
    c.post("/notebooks/cc/pages/p/statements", {{"text", "UPDATE A = VALUE + 1;"}});
  }
  done = true;
  reader.join();
  EXPECT_EQ(bad, 0);
  EXPECT_EQ(svc.snapshot("cc")->pages()[0].script.statements.size(), 20u);
}

TEST(Service, HttpRoundTrip) {
  Service svc(vt::fixture_dir(), false);
  HttpServer server(svc);
  int port = server.bind("127.0.0.1", 0);
  std::thread t([&] { server.run(); });
  httplib::Client client("127.0.0.1", port);
  json body = {{"id", "h"}, {"pages", {{{"name", "p"}, {"script", running_sum_script()}}}}};
  auto created = client.Post("/notebooks", body.dump(), "application/json");
  ASSERT_TRUE(created);
  EXPECT_EQ(created->status, 201);
  auto w = client.Get("/notebooks/h/pages/p/window?cols=2:3&rows=3:4");
  ASSERT_TRUE(w);
  EXPECT_EQ(w->status, 200);
  EXPECT_EQ(json::parse(w->body)["cells"][0][0]["value"], 31);
  auto missing = client.Get("/notebooks/none");
  ASSERT_TRUE(missing);
  EXPECT_EQ(missing->status, 404);
  server.stop();
  t.join();
}
