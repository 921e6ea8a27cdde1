#include "hnc/app/service.hpp"

#include <fstream>
#include <regex>

#include <fmt/format.h>

#include "httplib.h"

#include "hnc/cad/json_io.hpp"
#include "hnc/gen/workflows.hpp"
#include "hnc/geometry/export.hpp"
#include "hnc/geometry/mesh.hpp"

namespace hnc::app {

namespace fs = std::filesystem;
using nlohmann::json;

struct Service::Server {
  httplib::Server http;
};

namespace {

HttpResponse json_response(int status, const json& body) { return {status, "application/json", body.dump() + "\n"}; }

HttpResponse error(int status, const std::string& message, json extra = json::object()) {
  extra["error"] = message;
  return json_response(status, extra);
}

json parse_body(const std::string& body) {
  if (body.empty()) return json::object();
  auto j = json::parse(body);  // json::parse_error -> 400
  if (!j.is_object()) throw std::invalid_argument("request body must be a JSON object");
  return j;
}

}  // namespace

Service::Service(const ServiceConfig& cfg) : cfg_(cfg), server_(std::make_shared<Server>()) {
  if (cfg_.generator) cascade_ = std::make_unique<gen::Cascade<float>>(gen::Cascade<float>::load(*cfg_.generator));
  if (cfg_.dataset) {
    const auto ds = hierarchy::load_dataset(*cfg_.dataset);
    for (std::size_t i = 0; i < ds.models.size(); ++i) models_[ds.models[i].id] = ds.retained[i];
  }
  if (cfg_.codes) {
    for (const char* level : {"loop", "profile", "solid"}) {
      std::ifstream in(*cfg_.codes / fmt::format("clusters_{}.jsonl", level));
      if (!in) continue;
      json rows = json::array();
      for (std::string line; std::getline(in, line);) {
        if (!line.empty()) rows.push_back(json::parse(line));
      }
      clusters_[level] = std::move(rows);
    }
  }
}

const gen::Cascade<float>& Service::cascade() const {
  if (!cascade_) throw std::runtime_error("no generator checkpoint loaded");
  return *cascade_;
}

json Service::health() const {
  auto path_or_null = [](const std::optional<fs::path>& p) { return p ? json(p->string()) : json(); };
  json levels = json::array();
  for (const auto& [level, _] : clusters_) levels.push_back(level);
  return {{"status", "ok"},
          {"checkpoints",
           {{"generator", path_or_null(cfg_.generator)},
            {"dataset", path_or_null(cfg_.dataset)},
            {"codes", path_or_null(cfg_.codes)},
            {"models", models_.size()},
            {"cluster_levels", levels}}},
          {"vocab", cascade_ ? cascade_->config().vocab.to_json() : json()}};
}

HttpResponse Service::handle(const std::string& method, const std::string& path, const std::string& body) const {
  static const std::regex model_re("^/model/([^/]+)$"), mesh_re("^/mesh/([^/]+)$"),
      clusters_re("^/codebook/([^/]+)/clusters$");
  std::smatch m;
  try {
    if (method == "GET") {
      if (path == "/health") return json_response(200, health());
      if (path == "/spec") return json_response(200, openapi());
      if (std::regex_match(path, m, model_re)) return model(m[1]);
      if (std::regex_match(path, m, mesh_re)) return mesh(m[1]);
      if (std::regex_match(path, m, clusters_re)) return clusters(m[1]);
    } else if (method == "POST") {
      if (path == "/generate") return generate(parse_body(body));
      if (path == "/autocomplete") return autocomplete(parse_body(body));
      if (path == "/codes/edit") return edit_codes(parse_body(body));
      if (path == "/regenerate") return regenerate(parse_body(body));
      if (path == "/mesh") {
        const auto model = cad::model_from_json(parse_body(body));
        return {200, "text/plain", geometry::to_obj(geometry::mesh_model(model))};
      }
    }
    return error(404, fmt::format("no route for {} {}", method, path));
  } catch (...) {
    return map_error(std::current_exception());
  }
}

HttpResponse Service::map_error(const std::exception_ptr& ep) {
  try {
    std::rethrow_exception(ep);
  } catch (const gen::CodeTreeError& e) {
    return error(e.kind() == gen::CodeTreeError::Kind::LevelMismatch ? 409 : 400, e.what());
  } catch (const gen::DecodeError& e) {
    return error(500, e.what(), {{"dropped", e.dropped()}});
  } catch (const json::exception& e) {
    return error(400, std::string("malformed request: ") + e.what());
  } catch (const cad::ValidationError& e) {
    return error(400, e.what(), {{"reason", cad::reason_code(e.reason())}});
  } catch (const std::invalid_argument& e) {
    return error(400, e.what());
  } catch (const std::exception& e) {
    return error(500, e.what());
  } catch (...) {
    return error(500, "unknown error");
  }
}

HttpResponse Service::generate(const json& body) const {
  const auto req = gen::GenerationRequest::from_json(body);
  const auto g = gen::run_request(cascade(), req);
  if (g.models.empty() && g.dropped > 0) throw gen::DecodeError("no variant decoded to a valid model", g.dropped);
  return json_response(200, gen::to_json(g));
}

HttpResponse Service::autocomplete(const json& body) const {
  json b = body;
  b["mode"] = "autocomplete";
  if (!b.contains("n")) b["n"] = 5;
  return generate(b);
}

HttpResponse Service::edit_codes(const json& body) const {
  const auto& vocab = cascade().config().vocab;
  const auto codes = body.at("codes").get<gen::CodeTreeSequence>();
  const auto path = gen::SlotPath::from_json(body.at("path"));
  int token;
  if (body.contains("token")) {
    token = body["token"].get<int>();
  } else {
    const auto level = body.contains("level") ? hierarchy::level_from_name(body["level"].get<std::string>())
                                              : gen::level_of(path.kind);
    token = vocab.token(level, body.at("code").get<int>());
  }
  return json_response(200, {{"codes", gen::edit_code_tree(codes, vocab, path, token)}});
}

HttpResponse Service::regenerate(const json& body) const {
  json b = body;
  b["mode"] = "edit";  // partial is optional here
  return generate(b);
}

HttpResponse Service::model(const std::string& id) const {
  const auto it = models_.find(id);
  if (it == models_.end()) return error(404, "unknown model " + id);
  return json_response(200, {{"id", id}, {"model", cad::to_json(it->second)}});
}

HttpResponse Service::mesh(const std::string& id) const {
  const auto it = models_.find(id);
  if (it == models_.end()) return error(404, "unknown model " + id);
  return {200, "text/plain", geometry::to_obj(geometry::mesh_model(it->second))};
}

HttpResponse Service::clusters(const std::string& level) const {
  const auto it = clusters_.find(level);
  if (it == clusters_.end()) return error(404, "no clusters for level " + level);
  return json_response(200, it->second);
}

json Service::openapi() {
  auto op = [](const char* summary, const char* body_schema = nullptr) {
    json o{{"summary", summary}, {"responses", {{"200", {{"description", "ok"}}}}}};
    if (body_schema) o["requestBody"] = {{"description", body_schema}};
    return o;
  };
  const json errors{{"400", {{"description", "malformed request"}}},
                    {"404", {{"description", "unknown id"}}},
                    {"409", {{"description", "code level does not match the slot"}}},
                    {"500", {{"description", "decode failure; body carries the dropped count"}}}};
  json paths{
      {"/health", {{"get", op("service status and loaded checkpoints")}}},
      {"/spec", {{"get", op("this document")}}},
      {"/model/{id}", {{"get", op("dataset model as JSON")}}},
      {"/mesh/{id}", {{"get", op("dataset model as OBJ text")}}},
      {"/mesh", {{"post", op("OBJ text for a posted model", "CadModel JSON")}}},
      {"/codebook/{level}/clusters", {{"get", op("cluster members per code; level is loop, profile or solid")}}},
      {"/generate",
       {{"post", op("run a generation request",
                    "{mode: unconditional|autocomplete|edit|regenerate, partial?, codes?, p, seed, n}")}}},
      {"/autocomplete", {{"post", op("code trees sampled from the partial, models decoded greedily",
                                     "{partial, n=5, p, seed}")}}},
      {"/codes/edit", {{"post", op("replace one code of a code tree",
                                   "{codes, path: {kind, profile, loop}, token | code [, level]}")}}},
      {"/regenerate", {{"post", op("greedy decode from a partial and a code tree", "{partial?, codes}")}}},
  };
  for (auto& [_, item] : paths.items()) {
    for (auto& [__, o] : item.items()) o["responses"].update(errors);
  }
  return {{"openapi", "3.0.3"},
          {"info", {{"title", "hnc generation service"}, {"version", "1"}}},
          {"paths", paths}};
}

bool Service::listen(const std::string& host, int port) {
  auto& http = server_->http;
  const int threads = std::max(1, cfg_.threads);
  http.new_task_queue = [threads] { return new httplib::ThreadPool(static_cast<std::size_t>(threads)); };
  auto route = [this](const httplib::Request& req, httplib::Response& res) {
    const auto r = handle(req.method, req.path, req.body);
    res.status = r.status;
    res.set_content(r.body, r.content_type);
  };
  http.Get(R"(/.*)", route);
  http.Post(R"(/.*)", route);
  if (port == 0) {
    port_ = http.bind_to_any_port(host);
    if (port_ < 0) return false;
  } else {
    if (!http.bind_to_port(host, port)) return false;
    port_ = port;
  }
  return http.listen_after_bind();
}

void Service::stop() { server_->http.stop(); }

}  // namespace hnc::app
