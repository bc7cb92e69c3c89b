#pragma once

#include <cstdint>
#include <stdexcept>
#include <string_view>
#include <vector>

#include "medrec/dense.hpp"
#include "medrec/weighting.hpp"

namespace medrec {

enum class SvdMethod {
  jacobi,      // Householder QR followed by one-sided Jacobi on the triangular factor
  randomized,  // seeded subspace iteration, Jacobi on the projected matrix
};

std::string_view to_string(SvdMethod method);
SvdMethod parse_svd_method(std::string_view name);

struct SvdOptions {
  std::size_t rank = 50;
  SvdMethod method = SvdMethod::jacobi;
  std::uint64_t seed = 0;
  std::size_t oversampling = 10;
  std::size_t power_iterations = 4;
  std::size_t max_sweeps = 300;
};

class ConvergenceError : public std::runtime_error {
 public:
  ConvergenceError(std::size_t sweeps, double residual);
  std::size_t sweeps() const { return sweeps_; }
  /// Largest remaining normalized column inner product.
  double residual() const { return residual_; }

 private:
  std::size_t sweeps_;
  double residual_;
};

/// Rank-r truncated SVD, R ~= U diag(S) V with V stored r x n.
struct Factorization {
  DenseMatrix u;                // m x r, orthonormal columns
  std::vector<double> s;        // r, non-increasing, non-negative
  DenseMatrix v;                // r x n, orthonormal rows
  std::vector<bool> zero_rows;  // input rows holding no weight; kept as zero rows of u

  std::size_t rank() const { return s.size(); }
  std::size_t rows() const { return u.rows(); }
  std::size_t cols() const { return v.cols(); }

  /// U diag(S) V.
  DenseMatrix reconstruct() const;
};

/// Throws std::invalid_argument for a rank outside [1, min(m, n)] or an
/// all-zero matrix, ConvergenceError when Jacobi exceeds the sweep cap.
Factorization truncated_svd(const DenseMatrix& matrix, const SvdOptions& options);
Factorization truncated_svd(const WeightedMatrix& matrix, const SvdOptions& options);

/// Row i is U[i, :] scaled elementwise by S.
DenseMatrix disease_latents(const Factorization& f);

/// Column j of V.
std::vector<double> symptom_latent(const Factorization& f, std::size_t column);

}  // namespace medrec
