#include "medrec/sparse.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace medrec {

double CsrMatrix::at(std::size_t i, std::size_t j) const {
  auto cols_i = row_cols(i);
  auto it = std::lower_bound(cols_i.begin(), cols_i.end(), static_cast<std::uint32_t>(j));
  if (it == cols_i.end() || *it != j) return 0.0;
  return values[row_ptr[i] + static_cast<std::size_t>(it - cols_i.begin())];
}

double CsrMatrix::sum() const { return std::accumulate(values.begin(), values.end(), 0.0); }

SparseWeightMatrix::SparseWeightMatrix(CsrMatrix csr) : csr_(std::move(csr)) {
  if (csr_.row_ptr.size() != csr_.rows + 1 || csr_.row_ptr.back() != csr_.values.size() ||
      csr_.col_idx.size() != csr_.values.size()) {
    throw std::invalid_argument("malformed CSR layout");
  }
  for (std::size_t i = 0; i < csr_.rows; ++i) {
    auto cols = csr_.row_cols(i);
    if (!std::is_sorted(cols.begin(), cols.end()) ||
        std::adjacent_find(cols.begin(), cols.end()) != cols.end()) {
      throw std::invalid_argument("CSR row columns must be strictly increasing");
    }
    if (!cols.empty() && cols.back() >= csr_.cols) throw std::invalid_argument("CSR column out of range");
  }
  for (double v : csr_.values) {
    if (!std::isfinite(v) || v < 0.0) throw std::invalid_argument("symptom weights must be finite and non-negative");
  }
}

double SparseWeightMatrix::density() const {
  if (rows() == 0 || cols() == 0) return 0.0;
  return static_cast<double>(nnz()) / (static_cast<double>(rows()) * static_cast<double>(cols()));
}

std::vector<std::size_t> SparseWeightMatrix::empty_rows() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < rows(); ++i) {
    auto vals = csr_.row_values(i);
    if (std::all_of(vals.begin(), vals.end(), [](double v) { return v == 0.0; })) out.push_back(i);
  }
  return out;
}

}  // namespace medrec
