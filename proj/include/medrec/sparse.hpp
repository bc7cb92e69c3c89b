#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace medrec {

/// Compressed sparse row storage. Column indices are sorted within each row.
struct CsrMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::size_t> row_ptr{0};
  std::vector<std::uint32_t> col_idx;
  std::vector<double> values;

  std::size_t nnz() const { return values.size(); }

  std::span<const std::uint32_t> row_cols(std::size_t i) const {
    return {col_idx.data() + row_ptr[i], row_ptr[i + 1] - row_ptr[i]};
  }
  std::span<const double> row_values(std::size_t i) const {
    return {values.data() + row_ptr[i], row_ptr[i + 1] - row_ptr[i]};
  }

  /// Value at (i, j); zero when the entry is not stored.
  double at(std::size_t i, std::size_t j) const;

  double sum() const;
};

/// Disease x symptom matrix of raw, non-negative symptom weights.
/// Only strictly positive weights are stored.
class SparseWeightMatrix {
 public:
  SparseWeightMatrix() = default;
  /// Throws std::invalid_argument on a negative or non-finite value, or a
  /// malformed layout.
  explicit SparseWeightMatrix(CsrMatrix csr);

  const CsrMatrix& csr() const { return csr_; }
  std::size_t rows() const { return csr_.rows; }
  std::size_t cols() const { return csr_.cols; }
  std::size_t nnz() const { return csr_.nnz(); }
  double at(std::size_t i, std::size_t j) const { return csr_.at(i, j); }
  double density() const;

  /// Row indices whose rows hold no weight.
  std::vector<std::size_t> empty_rows() const;

 private:
  CsrMatrix csr_;
};

}  // namespace medrec
