#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "medrec/sparse.hpp"

namespace medrec {

/// Row-major dense matrix of doubles.
class DenseMatrix {
 public:
  DenseMatrix() = default;
  DenseMatrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  static DenseMatrix identity(std::size_t n);
  static DenseMatrix from_csr(const CsrMatrix& csr);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  std::span<double> row(std::size_t i) { return {data_.data() + i * cols_, cols_}; }
  std::span<const double> row(std::size_t i) const { return {data_.data() + i * cols_, cols_}; }

  std::span<const double> data() const { return data_; }

  DenseMatrix transposed() const;

  bool operator==(const DenseMatrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

DenseMatrix multiply(const DenseMatrix& a, const DenseMatrix& b);

/// a * b^T; rows of both operands are contiguous, so this is the cache-friendly
/// product for Gram-style computations.
DenseMatrix multiply_transposed(const DenseMatrix& a, const DenseMatrix& b);

double dot(std::span<const double> a, std::span<const double> b);
double norm2(std::span<const double> a);

double frobenius_norm(const DenseMatrix& a);

/// Largest absolute entry of a - b.
double max_abs_difference(const DenseMatrix& a, const DenseMatrix& b);

}  // namespace medrec
