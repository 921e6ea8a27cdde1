#pragma once

#include <atomic>
#include <exception>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>

#include "json.hpp"

#include "hnc/gen/cascade.hpp"
#include "hnc/hierarchy/dataset.hpp"

namespace hnc::app {

struct ServiceConfig {
  std::optional<std::filesystem::path> generator;  // Cascade::save directory
  std::optional<std::filesystem::path> dataset;    // preprocess output
  std::optional<std::filesystem::path> codes;      // encode-codes output
  int threads = 1;
};

struct HttpResponse {
  int status = 200;
  std::string content_type = "application/json";
  std::string body;
};

// Read-only after construction; handle() is safe to call concurrently.
class Service {
 public:
  explicit Service(const ServiceConfig& cfg);

  HttpResponse handle(const std::string& method, const std::string& path, const std::string& body) const;
  nlohmann::json health() const;
  static nlohmann::json openapi();
  // Status and JSON body for an exception raised by a handler.
  static HttpResponse map_error(const std::exception_ptr& ep);

  // Blocks until stop() or a fatal socket error.
  bool listen(const std::string& host, int port);
  void stop();
  int bound_port() const { return port_; }

 private:
  HttpResponse generate(const nlohmann::json& body) const;
  HttpResponse autocomplete(const nlohmann::json& body) const;
  HttpResponse edit_codes(const nlohmann::json& body) const;
  HttpResponse regenerate(const nlohmann::json& body) const;
  HttpResponse model(const std::string& id) const;
  HttpResponse mesh(const std::string& id) const;
  HttpResponse clusters(const std::string& level) const;
  const gen::Cascade<float>& cascade() const;

  ServiceConfig cfg_;
  std::unique_ptr<gen::Cascade<float>> cascade_;
  std::map<std::string, cad::CadModel> models_;
  std::map<std::string, nlohmann::json> clusters_;  // level name -> array
  struct Server;
  std::shared_ptr<Server> server_;
  std::atomic<int> port_{0};
};

}  // namespace hnc::app
