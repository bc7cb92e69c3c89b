#pragma once

#include <string_view>
#include <vector>

#include "medrec/sparse.hpp"

namespace medrec {

enum class Scheme { raw, tfidf, bm25 };

std::string_view to_string(Scheme scheme);
/// Throws std::invalid_argument for an unknown name.
Scheme parse_scheme(std::string_view name);

/// Okapi BM25 free parameters. k1 controls term-frequency saturation, b the
/// strength of document-length normalization.
struct Bm25Params {
  double k1 = 1.2;
  double b = 0.75;
  bool idf_floor = false;  // clamp negative IDF at zero

  /// Throws std::invalid_argument when k1 < 0 or b is outside [0, 1].
  void validate() const;
};

struct WeightingConfig {
  Scheme scheme = Scheme::bm25;
  Bm25Params bm25;
};

/// Collection statistics with symptoms as terms and diseases as documents.
struct CorpusStats {
  std::size_t documents = 0;            // N
  std::vector<std::size_t> doc_freq;    // n_t per symptom
  std::vector<double> doc_len;          // |D| per disease: sum of raw weights
  double avg_doc_len = 0.0;             // avg(dl)
};

/// Real-valued matrix with the same sparsity pattern as its raw input.
/// Entries may be negative under BM25 without an IDF floor.
struct WeightedMatrix {
  CsrMatrix entries;
  Scheme scheme = Scheme::raw;

  std::size_t rows() const { return entries.rows; }
  std::size_t cols() const { return entries.cols; }
};

/// Throws std::invalid_argument on an empty or all-zero matrix.
CorpusStats compute_stats(const SparseWeightMatrix& matrix);

/// f(k1 + 1) / (f + k1(1 - b + b |D| / avgdl))
double bm25_tf(double f, double doc_len, double avg_doc_len, const Bm25Params& params);

/// ln((N - n_t + 0.5) / (n_t + 0.5)), optionally floored at zero.
double bm25_idf(std::size_t documents, std::size_t doc_freq, bool floor_at_zero);

WeightedMatrix bm25_weight(const SparseWeightMatrix& matrix, const Bm25Params& params);

/// f ln(N / n_t)
WeightedMatrix tfidf_weight(const SparseWeightMatrix& matrix);

WeightedMatrix raw_weight(const SparseWeightMatrix& matrix);

WeightedMatrix apply_weighting(const SparseWeightMatrix& matrix, const WeightingConfig& config);

}  // namespace medrec
