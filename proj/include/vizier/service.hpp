#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <string>

#include "vizier/error.hpp"
#include "vizier/notebook.hpp"

namespace vizier {

struct HttpRequest {
  std::string method;  // GET, POST
  std::string path;    // /notebooks/{id}/...
  std::map<std::string, std::string> query;
  std::string body;    // JSON
};

struct HttpResponse {
  int status = 200;
  std::string body;  // JSON
};

/// HTTP status for a module error: 404 unknown notebook/page/branch, 422 bad
/// payload, 409 everything raised while applying.
int http_status(ErrorCode code);

/// Transport-free request handler. Thread-safe: mutations of one notebook are
/// serialized, readers work on the last published snapshot.
class Service {
 public:
  /// Notebooks persist as <data_dir>/notebooks/<id>.vznb; LOAD paths resolve
  /// against data_dir.
  explicit Service(std::string data_dir, bool persist = true);

  HttpResponse handle(const HttpRequest& request);

  std::shared_ptr<const Notebook> snapshot(const std::string& id) const;

 private:
  struct Entry {
    std::mutex write;                 // one mutation at a time
    mutable std::mutex publish;       // guards `current`
    std::shared_ptr<const Notebook> current;
  };

  std::shared_ptr<Entry> entry(const std::string& id) const;
  std::shared_ptr<const Notebook> read(const Entry& e) const;
  void publish(const std::string& id, Entry& e, Notebook nb);
  std::string create(const std::string& requested_id, Notebook nb);

  HttpResponse route(const HttpRequest& request);

  std::string data_dir_;
  bool persist_;
  mutable std::mutex registry_;
  std::map<std::string, std::shared_ptr<Entry>> notebooks_;
  std::uint64_t next_id_ = 1;
};

/// HTTP transport for a Service.
class HttpServer {
 public:
  explicit HttpServer(Service& service);
  ~HttpServer();

  /// Returns the bound port; port 0 picks a free one.
  int bind(const std::string& host, int port);
  /// Blocks until stop().
  void run();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// Blocks serving `service` over HTTP.
void serve_http(Service& service, const std::string& host, int port);

}  // namespace vizier
