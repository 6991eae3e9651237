#include "recov/api_server.hpp"

#include <httplib.h>

#include "json.hpp"

namespace recov {

namespace {

using json = nlohmann::ordered_json;

json var_json(const VariableInstance& v) {
  json j;
  j["var_id"] = v.var_id.value;
  j["name"] = v.name;
  j["type"] = v.type_name;
  j["content"] = v.content;
  j["location"] = {{"kind", v.location.kind == MemoryLocation::Kind::recorded ? "recorded" : "synthetic"},
                   {"token", v.location.token}};
  j["children"] = json::array();
  for (const auto& c : v.children) j["children"].push_back({{"label", c.label}, {"var_id", c.var_id.value}});
  return j;
}

json node_json(const GraphNode& n) {
  json j;
  j["name"] = n.name;
  j["type"] = n.type_name;
  j["value"] = n.value;
  j["children"] = json::array();
  for (const auto& c : n.children) j["children"].push_back(node_json(c));
  return j;
}

ApiResponse fail(int status, const std::string& code, const std::string& message) {
  return {status, error_body(code, message)};
}

std::optional<std::uint64_t> parse_id(const std::string& text) {
  if (text.empty() || text.size() > 18) return std::nullopt;
  for (char c : text)
    if (c < '0' || c > '9') return std::nullopt;
  return std::stoull(text);
}

int status_for(const std::string& code) {
  if (code == "InvalidQuery" || code == "PathSyntaxError" || code == "UnknownEstimator" || code == "BadRequest")
    return 400;
  if (code == "UnknownStep" || code == "DanglingReference") return 404;
  if (code == "RecoveryFailed") return 422;
  if (code == "BackendUnavailable") return 503;
  return 500;
}

}  // namespace

std::string error_body(const std::string& code, const std::string& message) {
  json j;
  j["error"] = {{"code", code}, {"message", message}};
  return j.dump();
}

std::string graph_to_json(const ObjectGraph& graph) {
  json j;
  j["root_name"] = graph.root_name;
  j["root"] = node_json(graph.root);
  return j.dump(2);
}

ApiService::ApiService(std::shared_ptr<Session> session, EstimatorSettings defaults, bool adaptive_context)
    : session_(std::move(session)), defaults_(std::move(defaults)), adaptive_context_(adaptive_context) {}

ApiResponse ApiService::handle(const std::string& method, const std::string& path,
                               const std::map<std::string, std::string>& params, const std::string& body) {
  try {
    auto only = [&](const char* m) { return method == m; };
    if (path == "/api/trace/meta") return only("GET") ? meta() : fail(405, "MethodNotAllowed", "use GET");
    if (path == "/api/steps") return only("GET") ? steps(params) : fail(405, "MethodNotAllowed", "use GET");
    if (path.rfind("/api/var/", 0) == 0)
      return only("GET") ? variable(path.substr(9)) : fail(405, "MethodNotAllowed", "use GET");
    if (path == "/api/slice") return only("POST") ? slice_query(body, false) : fail(405, "MethodNotAllowed", "use POST");
    if (path == "/api/recover")
      return only("POST") ? slice_query(body, true) : fail(405, "MethodNotAllowed", "use POST");
    return fail(404, "NotFound", "no route for " + path);
  } catch (const Error& e) {
    return fail(status_for(e.code()), e.code(), e.what());
  } catch (const std::exception& e) {
    return fail(500, "InternalError", e.what());
  }
}

ApiResponse ApiService::meta() {
  const Trace& t = session_->trace();
  json j;
  j["step_count"] = t.step_count();
  j["files"] = t.partition().instrumented_files;
  j["completeness"] = to_string(t.completeness());
  j["uninstrumented_routines"] = t.partition().uninstrumented_routines;
  return {200, j.dump(2)};
}

ApiResponse ApiService::steps(const std::map<std::string, std::string>& params) {
  const Trace& t = session_->trace();
  auto get = [&](const char* key, std::uint64_t fallback) -> std::optional<std::uint64_t> {
    auto it = params.find(key);
    if (it == params.end()) return fallback;
    return parse_id(it->second);
  };
  auto from = get("from", 1);
  if (!from || *from < 1) return fail(400, "BadRequest", "'from' must be a positive integer");
  auto to = get("to", std::min<std::uint64_t>(t.step_count(), *from + 99));
  if (!to) return fail(400, "BadRequest", "'to' must be a positive integer");
  if (*to < *from && t.step_count() >= *from) return fail(400, "BadRequest", "'to' is before 'from'");
  json j;
  j["from"] = *from;
  j["to"] = std::min<std::uint64_t>(*to, t.step_count());
  j["step_count"] = t.step_count();
  j["steps"] = json::array();
  for (const auto& s : t.steps()) {
    if (s.step_id.value < *from || s.step_id.value > *to) continue;
    json sj;
    sj["step_id"] = s.step_id.value;
    sj["file"] = s.instruction.file_id;
    sj["line"] = s.instruction.line;
    sj["code"] = s.instruction.code_text;
    sj["order"] = s.order;
    sj["is_call_site"] = s.instruction.is_call_site;
    sj["caller_step"] = s.caller_step ? json(s.caller_step->value) : json(nullptr);
    sj["reads"] = json::array();
    for (VarId id : s.reads) sj["reads"].push_back(var_json(t.variable(id)));
    sj["writes"] = json::array();
    for (VarId id : s.writes) sj["writes"].push_back(var_json(t.variable(id)));
    j["steps"].push_back(std::move(sj));
  }
  return {200, j.dump(2)};
}

ApiResponse ApiService::variable(const std::string& id_text) {
  auto id = parse_id(id_text);
  if (!id) return fail(400, "BadRequest", "variable id must be a non-negative integer");
  const auto* v = session_->trace().find_variable(VarId{*id});
  if (!v) return fail(404, "UnknownVariable", "no variable instance " + id_text);
  return {200, var_json(*v).dump(2)};
}

ApiResponse ApiService::slice_query(const std::string& body, bool recover_only) {
  json req;
  try {
    req = json::parse(body);
  } catch (const json::exception& e) {
    return fail(400, "BadRequest", std::string("body is not JSON: ") + e.what());
  }
  if (!req.is_object() || !req.contains("step_id") || !req["step_id"].is_number_unsigned() ||
      !req.contains("path") || !req["path"].is_string())
    return fail(400, "BadRequest", "body needs an unsigned 'step_id' and a string 'path'");
  SliceQuery query{StepId{req["step_id"].get<std::uint64_t>()}, parse_path(req["path"].get<std::string>())};
  EstimatorSettings settings = defaults_;
  if (req.contains("estimator")) {
    if (!req["estimator"].is_string()) return fail(400, "BadRequest", "'estimator' must be a string");
    settings.kind = req["estimator"].get<std::string>();
  }
  SliceOptions opts;
  opts.adaptive_context = adaptive_context_;
  if (req.contains("adaptive_context")) {
    if (!req["adaptive_context"].is_boolean()) return fail(400, "BadRequest", "'adaptive_context' must be a boolean");
    opts.adaptive_context = req["adaptive_context"].get<bool>();
  }
  opts.class_structures = session_->class_structures();
  auto est = session_->estimator(settings);
  if (recover_only) {
    auto graph = recover_query_root(session_->trace(), query, *est, opts);
    return {200, graph_to_json(graph.value)};
  }
  return {200, serialize_slice_result(slice(session_->trace(), query, *est, opts))};
}

struct HttpServer::Impl {
  std::shared_ptr<ApiService> service;
  httplib::Server server;
};

HttpServer::HttpServer(std::shared_ptr<ApiService> service) : impl_(std::make_unique<Impl>()) {
  impl_->service = std::move(service);
  auto handler = [this](const httplib::Request& req, httplib::Response& res) {
    std::map<std::string, std::string> params;
    for (const auto& [k, v] : req.params) params[k] = v;
    ApiResponse r = impl_->service->handle(req.method, req.path, params, req.body);
    res.status = r.status;
    res.set_content(r.body, "application/json; charset=utf-8");
  };
  impl_->server.Get(R"(/api/.*)", handler);
  impl_->server.Post(R"(/api/.*)", handler);
  impl_->server.Put(R"(/api/.*)", handler);
  impl_->server.Delete(R"(/api/.*)", handler);
  impl_->server.set_default_headers({{"Access-Control-Allow-Origin", "*"}});
}

HttpServer::~HttpServer() { stop(); }

int HttpServer::bind(const std::string& host, int port) {
  if (port == 0) return impl_->server.bind_to_any_port(host);
  if (!impl_->server.bind_to_port(host, port)) throw Error("BindFailed", "cannot bind " + host + ":" + std::to_string(port));
  return port;
}

void HttpServer::run() { impl_->server.listen_after_bind(); }

void HttpServer::stop() {
  if (impl_ && impl_->server.is_running()) impl_->server.stop();
}

}  // namespace recov
