#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "medrec/model.hpp"

namespace medrec {

/// Per-disease stratified halving of weight triples: each disease's triples
/// are shuffled with the seed and dealt alternately to the two halves.
struct SplitSpec {
  std::uint64_t seed = 0;
};

struct SplitResult {
  Corpus half_a;
  Corpus half_b;
  std::vector<DiseaseId> single_sided;  // diseases whose only triple landed in one half
  std::size_t odd_diseases = 0;         // diseases with an odd triple count
};

/// Throws std::invalid_argument when no disease has two or more triples.
SplitResult split_half(const Corpus& corpus, const SplitSpec& spec);

/// Cosine similarities between disease latents, in the order of `dids`.
struct SimilarityMatrix {
  std::vector<DiseaseId> dids;
  DenseMatrix values;
};

/// Entry (i, j) is the Euclidean distance between row i of one similarity
/// matrix and row j of another.
struct DistanceMatrix {
  std::vector<DiseaseId> dids;
  DenseMatrix values;
};

struct SanityVerdict {
  double mean_diag = 0.0;
  double mean_offdiag = 0.0;
  double ratio = 0.0;
  double threshold = 0.25;
  bool pass = false;
};

inline constexpr double kSanityThreshold = 0.25;

/// Diseases eligible in every model, ascending by did.
std::vector<DiseaseId> shared_diseases(std::span<const Model* const> models);

/// Throws std::invalid_argument when a did is unknown or not eligible in the model.
SimilarityMatrix similarity_matrix(const Model& model, std::span<const DiseaseId> dids);

/// Throws std::invalid_argument when the two matrices disagree on shape or order.
DistanceMatrix distance_matrix(const SimilarityMatrix& a, const SimilarityMatrix& b);

/// Needs at least two diseases.
SanityVerdict sanity_verdict(const DistanceMatrix& d, double threshold = kSanityThreshold);

enum class SanityControl {
  none,
  identical_halves,  // both halves are the full corpus
  shuffled_labels,   // disease rows of half B are permuted before comparison
};

struct SanityReport {
  std::uint64_t seed = 0;
  SanityControl control = SanityControl::none;
  std::size_t triples_a = 0;
  std::size_t triples_b = 0;
  std::vector<DiseaseId> single_sided;
  DistanceMatrix full_vs_half;  // full corpus vs half A
  DistanceMatrix half_vs_half;  // half A vs half B
  SanityVerdict full_vs_half_verdict;
  SanityVerdict half_vs_half_verdict;

  bool pass() const { return full_vs_half_verdict.pass && half_vs_half_verdict.pass; }
  /// Verdicts plus the leading corner of each distance matrix.
  nlohmann::json to_json(std::size_t corner = 4) const;
};

/// Trains the half models with the full model's parameters and compares
/// disease-similarity profiles.
SanityReport sanity_check(const Model& full, const SplitSpec& spec, SanityControl control = SanityControl::none,
                          double threshold = kSanityThreshold);
SanityReport sanity_check(const Corpus& corpus, const SplitSpec& spec, const ModelParams& params,
                          SanityControl control = SanityControl::none, double threshold = kSanityThreshold);

void write_distance_csv(const DistanceMatrix& d, const std::filesystem::path& path);

struct RegressionOptions {
  std::size_t samples = 100;
  std::size_t n = 4;
  std::uint64_t seed = 0;
  std::size_t min_symptoms = 2;
  std::size_t max_symptoms = 3;
};

struct RegressionQuery {
  std::vector<SymptomId> symptoms;
  std::vector<DiseaseId> predicted;
  std::vector<DiseaseId> expected;
  std::size_t hits = 0;
};

struct RegressionReport {
  std::size_t n = 0;
  std::vector<RegressionQuery> queries;
  double mean_hits = 0.0;
  double hit_rate = 0.0;  // mean_hits / n

  nlohmann::json to_json() const;
};

/// Top-n diseases by summed raw weight over the symptoms (ties by ascending
/// did); diseases with zero sum are never expected.
std::vector<DiseaseId> expected_by_raw_weight(const Model& model, std::span<const SymptomId> symptoms, std::size_t n);

/// Symptom sets drawn from the training triples: a disease with at least
/// `min_symptoms` symptoms is picked, then a random subset of its symptoms.
std::vector<std::vector<SymptomId>> sample_queries(const Corpus& corpus, const RegressionOptions& options);

RegressionReport regression_check(const Model& model, std::span<const std::vector<SymptomId>> queries, std::size_t n);
RegressionReport regression_check(const Model& model, const RegressionOptions& options);

}  // namespace medrec
