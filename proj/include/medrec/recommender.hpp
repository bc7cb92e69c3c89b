#pragma once

#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "medrec/model.hpp"

namespace medrec {

struct Query {
  std::vector<SymptomId> symptom_ids;
  std::size_t n = 4;
};

enum class RankBy {
  cosine,   // latent fold-in, cosine against U diag(S) rows
  raw_sum,  // sum of raw weights over the queried symptoms (debug comparison)
};

std::string_view to_string(RankBy rank_by);
RankBy parse_rank_by(std::string_view name);

struct Recommendation {
  DiseaseId did = 0;
  std::string disease;
  double score = 0.0;
  std::vector<std::string> remedies;  // empty means no recorded treatment
  bool has_treatment() const { return !remedies.empty(); }
};

struct RecommendationResponse {
  Query query;
  RankBy rank_by = RankBy::cosine;
  std::vector<Recommendation> results;  // score descending, then did ascending
  std::string scheme;
  std::size_t rank = 0;
  std::string corpus_hash;
  std::string model_hash;
  std::size_t excluded_diseases = 0;
};

/// Invalid query input: empty symptom set, unknown symptom ids, n == 0.
class QueryError : public std::invalid_argument {
 public:
  QueryError(std::string code, const std::string& message, std::vector<SymptomId> offenders = {})
      : std::invalid_argument(message), code_(std::move(code)), offenders_(std::move(offenders)) {}
  const std::string& code() const { return code_; }
  const std::vector<SymptomId>& offenders() const { return offenders_; }

 private:
  std::string code_;
  std::vector<SymptomId> offenders_;
};

/// Sum of the symptom latent columns of V for the queried symptoms.
std::vector<double> fold_in(std::span<const SymptomId> symptom_ids, const Model& model);

/// (a . b) / (|a| |b|). Throws std::invalid_argument on a length mismatch or
/// a zero-norm operand.
double cosine_similarity(std::span<const double> a, std::span<const double> b);

/// Ranks every eligible disease against the query. Scores are rounded to
/// 1e-12 before ordering so that rounding noise cannot reorder ties.
RecommendationResponse recommend(const Query& query, const Model& model, RankBy rank_by = RankBy::cosine);

/// Case-insensitive substring search over symptom names, ordered by match
/// position then name.
std::vector<SymptomRecord> search_symptoms(const Corpus& corpus, std::string_view text, std::size_t limit);

/// Scores are written rounded to six decimal places.
nlohmann::json to_json(const RecommendationResponse& response);

}  // namespace medrec
