#pragma once

#include <filesystem>
#include <memory>
#include <string>

#include <nlohmann/json.hpp>

#include "medrec/corpus.hpp"
#include "medrec/factorization.hpp"
#include "medrec/weighting.hpp"

namespace medrec {

/// Latent vectors shorter than this fraction of the leading singular value
/// count as zero: they lie outside the retained subspace up to rounding.
inline constexpr double kZeroLatentTolerance = 1e-10;

struct ModelParams {
  WeightingConfig weighting;
  SvdOptions svd;
};

/// A trained recommender: corpus, raw matrix, factorization and the derived
/// disease latents. Immutable and safe to share across threads.
class Model {
 public:
  /// Builds the matrix, applies the weighting scheme and factorizes.
  /// Throws std::invalid_argument when the rank exceeds the matrix shape.
  static Model train(std::shared_ptr<const Corpus> corpus, const ModelParams& params);

  /// Reassembles a model from a stored factorization. Throws
  /// std::invalid_argument when the corpus hash or shapes disagree.
  static Model assemble(std::shared_ptr<const Corpus> corpus, const ModelParams& params,
                        Factorization factorization, const std::string& expected_corpus_hash);

  const Corpus& corpus() const { return *corpus_; }
  std::shared_ptr<const Corpus> corpus_ptr() const { return corpus_; }
  const ModelParams& params() const { return params_; }
  const SparseWeightMatrix& raw_matrix() const { return raw_; }
  const Factorization& factorization() const { return factorization_; }
  const DenseMatrix& latents() const { return latents_; }

  /// A disease can be ranked when its latent vector is nonzero.
  bool eligible(std::size_t row) const { return eligible_.at(row); }
  std::size_t excluded_count() const { return excluded_; }

  const std::string& corpus_hash() const { return corpus_->content_hash(); }
  /// Digest of the corpus hash and every training parameter.
  const std::string& model_hash() const { return model_hash_; }

 private:
  Model(std::shared_ptr<const Corpus> corpus, const ModelParams& params, SparseWeightMatrix raw,
        Factorization factorization);

  std::shared_ptr<const Corpus> corpus_;
  ModelParams params_;
  SparseWeightMatrix raw_;
  Factorization factorization_;
  DenseMatrix latents_;
  std::vector<bool> eligible_;
  std::size_t excluded_ = 0;
  std::string model_hash_;
};

std::string model_hash(const std::string& corpus_hash, const ModelParams& params);

inline constexpr int kModelSchemaVersion = 1;

/// Header of a stored model file.
struct ModelHeader {
  int schema_version = kModelSchemaVersion;
  std::size_t m = 0;
  std::size_t n = 0;
  std::size_t r = 0;
  ModelParams params;
  std::string corpus_hash;
  std::string model_hash;
  std::string built_at;  // ISO-8601; the only field that varies between identical builds
};

nlohmann::json model_to_json(const Model& model, const std::string& built_at);
void save_model(const Model& model, const std::filesystem::path& path, const std::string& built_at);

struct StoredModel {
  ModelHeader header;
  Factorization factorization;
};

/// Throws DatasetError when the file is missing or malformed.
StoredModel read_model(const std::filesystem::path& path);

/// Reads a stored model and binds it to `corpus`, checking the content hash.
Model load_model(const std::filesystem::path& path, std::shared_ptr<const Corpus> corpus);

/// Current UTC time as ISO-8601.
std::string utc_timestamp();

}  // namespace medrec
