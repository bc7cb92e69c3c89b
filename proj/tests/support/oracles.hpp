#pragma once

// Independent reference computations. Nothing here calls into the factorizer,
// the weighting module or the recommender.

#include <optional>
#include <vector>

#include "medrec/corpus.hpp"
#include "medrec/dense.hpp"
#include "medrec/weighting.hpp"

namespace medrec::testing {

struct EigenDecomposition {
  std::vector<double> values;  // descending
  DenseMatrix vectors;         // row k is the eigenvector of values[k]
};

/// Two-sided cyclic Jacobi on a symmetric matrix.
EigenDecomposition jacobi_eigen(DenseMatrix symmetric);

/// Square roots of the eigenvalues of the smaller Gram matrix, descending.
std::vector<double> oracle_singular_values(const DenseMatrix& a);

/// Dense raw matrix from triples by direct summation.
DenseMatrix naive_raw_matrix(const Corpus& corpus);

/// Double-loop evaluation of the BM25 and TF-IDF formulas on a dense matrix.
DenseMatrix naive_bm25(const DenseMatrix& raw, double k1, double b, bool idf_floor);
DenseMatrix naive_tfidf(const DenseMatrix& raw);
DenseMatrix naive_weighting(const DenseMatrix& raw, const WeightingConfig& config);

/// Oracle SVD + exhaustive cosine. Returns nullopt when the query vector
/// vanishes in the retained subspace.
std::optional<std::vector<DiseaseId>> brute_force_ranking(const Corpus& corpus, const WeightingConfig& config,
                                                          std::size_t rank, const std::vector<SymptomId>& query,
                                                          std::size_t n);

/// Diseases by summed raw weight over the query symptoms, by a plain scan of the triples.
std::vector<DiseaseId> brute_force_expected(const Corpus& corpus, const std::vector<SymptomId>& query, std::size_t n);

}  // namespace medrec::testing
