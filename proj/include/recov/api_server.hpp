#pragma once

#include <map>
#include <memory>
#include <string>

#include "recov/session.hpp"

namespace recov {

struct ApiResponse {
  int status = 200;
  std::string body;  // JSON
};

// Routes of the exploration API, independent of the transport:
//   GET  /api/trace/meta
//   GET  /api/steps?from=&to=
//   GET  /api/var/{var_id}
//   POST /api/slice    {step_id, path, estimator?, adaptive_context?}
//   POST /api/recover  {step_id, path, estimator?}
// Errors come back as {"error": {"code", "message"}}.
class ApiService {
 public:
  ApiService(std::shared_ptr<Session> session, EstimatorSettings defaults, bool adaptive_context = true);

  ApiResponse handle(const std::string& method, const std::string& path,
                     const std::map<std::string, std::string>& params, const std::string& body);

 private:
  ApiResponse meta();
  ApiResponse steps(const std::map<std::string, std::string>& params);
  ApiResponse variable(const std::string& id_text);
  ApiResponse slice_query(const std::string& body, bool recover_only);

  std::shared_ptr<Session> session_;
  EstimatorSettings defaults_;
  bool adaptive_context_;
};

std::string error_body(const std::string& code, const std::string& message);
std::string graph_to_json(const ObjectGraph& graph);

// HTTP front end over ApiService. Requests are served concurrently.
class HttpServer {
 public:
  explicit HttpServer(std::shared_ptr<ApiService> service);
  ~HttpServer();
  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  // Binds and returns the port; port 0 picks a free one.
  int bind(const std::string& host, int port);
  void run();  // blocks until stop()
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace recov
