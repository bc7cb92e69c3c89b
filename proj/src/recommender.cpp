#include "medrec/recommender.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <set>

#include <fmt/format.h>
#include <fmt/ranges.h>

namespace medrec {

std::string_view to_string(RankBy rank_by) { return rank_by == RankBy::cosine ? "cosine" : "raw-sum"; }

RankBy parse_rank_by(std::string_view name) {
  if (name == "cosine") return RankBy::cosine;
  if (name == "raw-sum" || name == "raw_sum") return RankBy::raw_sum;
  throw std::invalid_argument("unknown ranking mode '" + std::string(name) + "'");
}

namespace {

std::vector<std::size_t> resolve(std::span<const SymptomId> ids, const Corpus& corpus) {
  if (ids.empty()) throw QueryError("empty_query", "query must name at least one symptom");
  std::set<SymptomId> unique(ids.begin(), ids.end());
  std::vector<SymptomId> unknown;
  std::vector<std::size_t> columns;
  for (SymptomId id : unique) {
    if (auto col = corpus.symptom_index().dense(id)) {
      columns.push_back(*col);
    } else {
      unknown.push_back(id);
    }
  }
  if (!unknown.empty()) {
    throw QueryError("unknown_symptom", fmt::format("unknown symptom id(s): {}", fmt::join(unknown, ", ")), unknown);
  }
  return columns;
}

double round_score(double x) { return std::round(x * 1e12) / 1e12; }

double round6(double x) { return std::round(x * 1e6) / 1e6; }

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
  return out;
}

}  // namespace

std::vector<double> fold_in(std::span<const SymptomId> symptom_ids, const Model& model) {
  const auto columns = resolve(symptom_ids, model.corpus());
  const auto& f = model.factorization();
  std::vector<double> q(f.rank(), 0.0);
  for (std::size_t col : columns)
    for (std::size_t k = 0; k < q.size(); ++k) q[k] += f.v(k, col);
  return q;
}

double cosine_similarity(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw std::invalid_argument("cosine_similarity: vectors differ in length");
  const double na = norm2(a);
  const double nb = norm2(b);
  if (na == 0.0 || nb == 0.0) throw std::invalid_argument("cosine_similarity: zero-norm vector");
  return std::clamp(dot(a, b) / (na * nb), -1.0, 1.0);
}

RecommendationResponse recommend(const Query& query, const Model& model, RankBy rank_by) {
  if (query.n == 0) throw QueryError("invalid_n", "n must be at least 1");
  const auto& corpus = model.corpus();
  const auto columns = resolve(query.symptom_ids, corpus);

  struct Scored {
    std::size_t row;
    double score;
  };
  std::vector<Scored> scored;
  const std::size_t m = corpus.diseases().size();
  if (rank_by == RankBy::cosine) {
    const auto q = fold_in(query.symptom_ids, model);
    if (norm2(q) <= kZeroLatentTolerance) {
      throw QueryError("degenerate_query", "query symptoms fall outside the retained latent space");
    }
    for (std::size_t i = 0; i < m; ++i) {
      if (!model.eligible(i)) continue;
      scored.push_back({i, round_score(cosine_similarity(model.latents().row(i), q))});
    }
  } else {
    const auto& csr = model.raw_matrix().csr();
    for (std::size_t i = 0; i < m; ++i) {
      double sum = 0.0;
      for (std::size_t col : columns) sum += csr.at(i, col);
      if (sum > 0.0) scored.push_back({i, sum});
    }
  }
  if (scored.empty()) throw QueryError("no_eligible_disease", "no disease is eligible for ranking");

  // Rows are in ascending did order, so a stable sort on score keeps did ascending within ties.
  const std::size_t take = std::min(query.n, scored.size());
  std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(take), scored.end(),
                    [](const Scored& a, const Scored& b) {
                      if (a.score != b.score) return a.score > b.score;
                      return a.row < b.row;
                    });

  RecommendationResponse response;
  response.query = query;
  response.rank_by = rank_by;
  response.scheme = std::string(to_string(model.params().weighting.scheme));
  response.rank = model.factorization().rank();
  response.corpus_hash = model.corpus_hash();
  response.model_hash = model.model_hash();
  response.excluded_diseases = model.excluded_count();
  for (std::size_t k = 0; k < take; ++k) {
    const auto& disease = corpus.disease_at(scored[k].row);
    response.results.push_back({disease.did, disease.name, scored[k].score, corpus.treatments(disease.did)});
  }
  return response;
}

std::vector<SymptomRecord> search_symptoms(const Corpus& corpus, std::string_view text, std::size_t limit) {
  const std::string needle = lower(text);
  struct Hit {
    std::size_t position;
    const SymptomRecord* record;
  };
  std::vector<Hit> hits;
  for (const auto& s : corpus.symptoms()) {
    const auto pos = lower(s.name).find(needle);
    if (pos != std::string::npos) hits.push_back({pos, &s});
  }
  std::sort(hits.begin(), hits.end(), [](const Hit& a, const Hit& b) {
    if (a.position != b.position) return a.position < b.position;
    if (a.record->name != b.record->name) return a.record->name < b.record->name;
    return a.record->syd < b.record->syd;
  });
  std::vector<SymptomRecord> out;
  for (std::size_t k = 0; k < hits.size() && k < limit; ++k) out.push_back(*hits[k].record);
  return out;
}

nlohmann::json to_json(const RecommendationResponse& response) {
  auto results = nlohmann::json::array();
  for (const auto& r : response.results) {
    results.push_back({{"did", r.did},
                       {"disease", r.disease},
                       {"score", round6(r.score)},
                       {"remedies", r.remedies},
                       {"treatment_recorded", r.has_treatment()}});
  }
  return {{"query", {{"symptom_ids", response.query.symptom_ids}, {"n", response.query.n}}},
          {"rank_by", to_string(response.rank_by)},
          {"results", results},
          {"model",
           {{"scheme", response.scheme},
            {"rank", response.rank},
            {"corpus_hash", response.corpus_hash},
            {"model_hash", response.model_hash},
            {"excluded_diseases", response.excluded_diseases}}}};
}

}  // namespace medrec
