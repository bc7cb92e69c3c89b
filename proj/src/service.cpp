#include "medrec/service.hpp"

#include <charconv>

#include <httplib.h>

#include "medrec/recommender.hpp"

namespace medrec {

ModelHandle::Snapshot ModelHandle::get() const {
  std::lock_guard lock(mutex_);
  return current_;
}

void ModelHandle::swap(std::shared_ptr<const Model> model, std::string built_at) {
  Snapshot next{std::move(model), std::move(built_at)};
  std::lock_guard lock(mutex_);
  std::swap(current_, next);
}

std::string error_body(const std::string& code, const std::string& message, const nlohmann::json& details) {
  return nlohmann::json{{"error", {{"code", code}, {"message", message}, {"details", details}}}}.dump();
}

namespace {

constexpr std::size_t kDefaultSearchLimit = 10;
constexpr std::size_t kMaxSearchLimit = 1000;

ApiResponse no_model() { return {503, error_body("no_model", "no model is loaded")}; }

ApiResponse bad_request(const std::string& code, const std::string& message,
                        const nlohmann::json& details = nlohmann::json::object()) {
  return {400, error_body(code, message, details)};
}

}  // namespace

ApiResponse Api::search(const std::string& q, const std::optional<std::string>& limit) const {
  const auto snapshot = handle_.get();
  if (!snapshot.model) return no_model();
  std::size_t n = kDefaultSearchLimit;
  if (limit) {
    auto [ptr, ec] = std::from_chars(limit->data(), limit->data() + limit->size(), n);
    if (ec != std::errc() || ptr != limit->data() + limit->size() || n == 0 || n > kMaxSearchLimit) {
      return bad_request("invalid_limit", "limit must be an integer in [1, 1000]", {{"limit", *limit}});
    }
  }
  auto out = nlohmann::json::array();
  for (const auto& s : search_symptoms(snapshot.model->corpus(), q, n)) out.push_back({{"syd", s.syd}, {"name", s.name}});
  return {200, out.dump()};
}

ApiResponse Api::recommend(const std::string& body) const {
  const auto snapshot = handle_.get();
  if (!snapshot.model) return no_model();

  Query query;
  try {
    const auto j = nlohmann::json::parse(body);
    if (!j.is_object() || !j.contains("symptom_ids") || !j["symptom_ids"].is_array()) {
      return bad_request("invalid_body", "body must be an object with a symptom_ids array");
    }
    for (const auto& id : j["symptom_ids"]) {
      if (!id.is_number_integer()) return bad_request("invalid_body", "symptom_ids must hold integers");
      query.symptom_ids.push_back(id.get<SymptomId>());
    }
    if (j.contains("n")) {
      if (!j["n"].is_number_unsigned() || j["n"].get<std::size_t>() == 0) {
        return bad_request("invalid_n", "n must be a positive integer");
      }
      query.n = j["n"].get<std::size_t>();
    }
  } catch (const nlohmann::json::exception& e) {
    return bad_request("invalid_json", e.what());
  }

  try {
    return {200, to_json(medrec::recommend(query, *snapshot.model)).dump()};
  } catch (const QueryError& e) {
    nlohmann::json details = nlohmann::json::object();
    if (!e.offenders().empty()) details["unknown_symptom_ids"] = e.offenders();
    return bad_request(e.code(), e.what(), details);
  }
}

ApiResponse Api::health() const {
  const auto snapshot = handle_.get();
  if (!snapshot.model) {
    return {200, nlohmann::json{{"status", "empty"}, {"model_hash", nullptr}, {"corpus_counts", nullptr}}.dump()};
  }
  const auto& corpus = snapshot.model->corpus();
  nlohmann::json counts = {{"symptoms", corpus.symptoms().size()},
                           {"diseases", corpus.diseases().size()},
                           {"triples", corpus.triples().size()},
                           {"remedies", corpus.remedies().size()}};
  return {200, nlohmann::json{{"status", "ready"},
                              {"model_hash", snapshot.model->model_hash()},
                              {"corpus_hash", snapshot.model->corpus_hash()},
                              {"built_at", snapshot.built_at},
                              {"corpus_counts", counts}}
                   .dump()};
}

void register_routes(httplib::Server& server, const Api& api) {
  server.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                              {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"},
                              {"Access-Control-Allow-Headers", "Content-Type"}});
  auto send = [](httplib::Response& res, const ApiResponse& out) {
    res.status = out.status;
    res.set_content(out.body, "application/json; charset=utf-8");
  };
  server.Get("/symptoms", [&api, send](const httplib::Request& req, httplib::Response& res) {
    std::optional<std::string> limit;
    if (req.has_param("limit")) limit = req.get_param_value("limit");
    send(res, api.search(req.get_param_value("q"), limit));
  });
  server.Post("/recommend", [&api, send](const httplib::Request& req, httplib::Response& res) {
    send(res, api.recommend(req.body));
  });
  server.Get("/health", [&api, send](const httplib::Request&, httplib::Response& res) { send(res, api.health()); });
  server.Options(R"(/.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });
}

}  // namespace medrec
