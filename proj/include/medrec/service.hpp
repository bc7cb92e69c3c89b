#pragma once

#include <memory>
#include <mutex>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "medrec/model.hpp"

namespace httplib {
class Server;
}

namespace medrec {

/// Holds the currently served model. Readers take a snapshot; swap() replaces
/// it atomically so each request sees one coherent model.
class ModelHandle {
 public:
  struct Snapshot {
    std::shared_ptr<const Model> model;
    std::string built_at;
  };

  Snapshot get() const;
  void swap(std::shared_ptr<const Model> model, std::string built_at);

 private:
  mutable std::mutex mutex_;
  Snapshot current_;
};

struct ApiResponse {
  int status = 200;
  std::string body;  // UTF-8 JSON
};

/// Endpoint logic, independent of the transport.
class Api {
 public:
  explicit Api(const ModelHandle& handle) : handle_(handle) {}

  /// GET /symptoms?q=&limit=
  ApiResponse search(const std::string& q, const std::optional<std::string>& limit) const;
  /// POST /recommend
  ApiResponse recommend(const std::string& body) const;
  /// GET /health
  ApiResponse health() const;

 private:
  const ModelHandle& handle_;
};

/// Error body: {"error": {"code", "message", "details"}}.
std::string error_body(const std::string& code, const std::string& message,
                       const nlohmann::json& details = nlohmann::json::object());

/// Registers GET /symptoms, POST /recommend, GET /health and CORS preflight.
void register_routes(httplib::Server& server, const Api& api);

}  // namespace medrec
