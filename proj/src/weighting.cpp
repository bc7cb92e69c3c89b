#include "medrec/weighting.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace medrec {

std::string_view to_string(Scheme scheme) {
  switch (scheme) {
    case Scheme::raw: return "raw";
    case Scheme::tfidf: return "tfidf";
    case Scheme::bm25: return "bm25";
  }
  return "unknown";
}

Scheme parse_scheme(std::string_view name) {
  if (name == "raw") return Scheme::raw;
  if (name == "tfidf") return Scheme::tfidf;
  if (name == "bm25") return Scheme::bm25;
  throw std::invalid_argument("unknown weighting scheme '" + std::string(name) + "'");
}

void Bm25Params::validate() const {
  if (!(k1 >= 0.0) || !std::isfinite(k1)) throw std::invalid_argument("BM25 k1 must be a finite value >= 0");
  if (!(b >= 0.0 && b <= 1.0)) throw std::invalid_argument("BM25 b must lie in [0, 1]");
}

CorpusStats compute_stats(const SparseWeightMatrix& matrix) {
  if (matrix.rows() == 0 || matrix.cols() == 0) throw std::invalid_argument("matrix has no rows or columns");
  const auto& csr = matrix.csr();
  CorpusStats stats;
  stats.documents = matrix.rows();
  stats.doc_freq.assign(matrix.cols(), 0);
  stats.doc_len.assign(matrix.rows(), 0.0);
  double total = 0.0;
  for (std::size_t i = 0; i < csr.rows; ++i) {
    auto cols = csr.row_cols(i);
    auto vals = csr.row_values(i);
    for (std::size_t k = 0; k < cols.size(); ++k) {
      if (vals[k] > 0.0) ++stats.doc_freq[cols[k]];
      stats.doc_len[i] += vals[k];
    }
    total += stats.doc_len[i];
  }
  if (total <= 0.0) throw std::invalid_argument("all-zero matrix: average document length is undefined");
  stats.avg_doc_len = total / static_cast<double>(stats.documents);
  return stats;
}

double bm25_tf(double f, double doc_len, double avg_doc_len, const Bm25Params& params) {
  const double norm = 1.0 - params.b + params.b * doc_len / avg_doc_len;
  return f * (params.k1 + 1.0) / (f + params.k1 * norm);
}

double bm25_idf(std::size_t documents, std::size_t doc_freq, bool floor_at_zero) {
  const double n = static_cast<double>(documents);
  const double df = static_cast<double>(doc_freq);
  const double idf = std::log((n - df + 0.5) / (df + 0.5));
  return floor_at_zero ? std::max(0.0, idf) : idf;
}

namespace {

template <typename Fn>
WeightedMatrix transform(const SparseWeightMatrix& matrix, Scheme scheme, Fn&& fn) {
  WeightedMatrix out{matrix.csr(), scheme};
  auto& csr = out.entries;
  for (std::size_t i = 0; i < csr.rows; ++i) {
    for (std::size_t k = csr.row_ptr[i]; k < csr.row_ptr[i + 1]; ++k) {
      const double f = csr.values[k];
      csr.values[k] = f == 0.0 ? 0.0 : fn(i, csr.col_idx[k], f);
    }
  }
  return out;
}

}  // namespace

WeightedMatrix bm25_weight(const SparseWeightMatrix& matrix, const Bm25Params& params) {
  params.validate();
  const auto stats = compute_stats(matrix);
  std::vector<double> idf(matrix.cols());
  for (std::size_t j = 0; j < idf.size(); ++j) idf[j] = bm25_idf(stats.documents, stats.doc_freq[j], params.idf_floor);
  return transform(matrix, Scheme::bm25, [&](std::size_t i, std::size_t j, double f) {
    return bm25_tf(f, stats.doc_len[i], stats.avg_doc_len, params) * idf[j];
  });
}

WeightedMatrix tfidf_weight(const SparseWeightMatrix& matrix) {
  const auto stats = compute_stats(matrix);
  const double n = static_cast<double>(stats.documents);
  return transform(matrix, Scheme::tfidf, [&](std::size_t, std::size_t j, double f) {
    return f * std::log(n / static_cast<double>(stats.doc_freq[j]));
  });
}

WeightedMatrix raw_weight(const SparseWeightMatrix& matrix) {
  if (matrix.nnz() == 0) throw std::invalid_argument("all-zero matrix");
  return WeightedMatrix{matrix.csr(), Scheme::raw};
}

WeightedMatrix apply_weighting(const SparseWeightMatrix& matrix, const WeightingConfig& config) {
  switch (config.scheme) {
    case Scheme::bm25: return bm25_weight(matrix, config.bm25);
    case Scheme::tfidf: return tfidf_weight(matrix);
    case Scheme::raw: return raw_weight(matrix);
  }
  throw std::invalid_argument("unknown weighting scheme");
}

}  // namespace medrec
