#include "medrec/factorization.hpp"

#include <algorithm>
#include <cfloat>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

#include <fmt/format.h>

namespace medrec {

std::string_view to_string(SvdMethod method) {
  return method == SvdMethod::jacobi ? "jacobi" : "randomized";
}

SvdMethod parse_svd_method(std::string_view name) {
  if (name == "jacobi" || name == "dense") return SvdMethod::jacobi;
  if (name == "randomized") return SvdMethod::randomized;
  throw std::invalid_argument("unknown SVD method '" + std::string(name) + "'");
}

ConvergenceError::ConvergenceError(std::size_t sweeps, double residual)
    : std::runtime_error(fmt::format("Jacobi SVD did not converge after {} sweeps (residual {:.3e})", sweeps, residual)),
      sweeps_(sweeps),
      residual_(residual) {}

DenseMatrix Factorization::reconstruct() const {
  DenseMatrix scaled = u;
  for (std::size_t i = 0; i < scaled.rows(); ++i)
    for (std::size_t k = 0; k < s.size(); ++k) scaled(i, k) *= s[k];
  return multiply(scaled, v);
}

namespace {

// Singular triplets with vectors stored as rows: u_rows is k x m, v_rows is k x n.
struct Triplets {
  DenseMatrix u_rows;
  std::vector<double> s;
  DenseMatrix v_rows;
};

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

/// Orthonormalizes `candidate` against the first `count` rows of `basis`
/// (two Gram-Schmidt passes). Returns false when it collapses.
bool orthonormalize_against(const DenseMatrix& basis, std::size_t count, std::span<double> candidate) {
  const double initial = norm2(candidate);
  if (initial == 0.0) return false;
  for (int pass = 0; pass < 2; ++pass) {
    for (std::size_t k = 0; k < count; ++k) axpy(-dot(basis.row(k), candidate), basis.row(k), candidate);
  }
  const double remaining = norm2(candidate);
  if (remaining <= 1e-10 * initial) return false;
  for (double& x : candidate) x /= remaining;
  return true;
}

/// Householder QR of a tall matrix given as columns (n rows of length m, m >= n).
struct HouseholderQr {
  std::vector<std::vector<double>> reflectors;  // v_k, length m - k, with unit first entry scaled by tau
  std::vector<double> tau;
  DenseMatrix r_cols;  // n x n; row j holds column j of R

  explicit HouseholderQr(DenseMatrix cols) {
    const std::size_t n = cols.rows();
    const std::size_t m = cols.cols();
    reflectors.resize(n);
    tau.assign(n, 0.0);
    for (std::size_t k = 0; k < n; ++k) {
      auto x = cols.row(k).subspan(k);
      const double alpha = norm2(x);
      std::vector<double> v(x.begin(), x.end());
      if (alpha == 0.0) {
        reflectors[k] = std::move(v);
        continue;
      }
      const double beta = x[0] >= 0.0 ? -alpha : alpha;
      v[0] -= beta;
      const double vnorm2 = dot(v, v);
      tau[k] = vnorm2 > 0.0 ? 2.0 / vnorm2 : 0.0;
      for (std::size_t j = k; j < n; ++j) {
        auto col = cols.row(j).subspan(k);
        const double proj = tau[k] * dot(v, col);
        axpy(-proj, v, col);
      }
      reflectors[k] = std::move(v);
    }
    r_cols = DenseMatrix(n, n);
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t i = 0; i <= j && i < m; ++i) r_cols(j, i) = cols(j, i);
  }

  /// Q applied to a length-n vector padded with zeros to length m.
  std::vector<double> apply_q(std::span<const double> small, std::size_t m) const {
    std::vector<double> x(m, 0.0);
    std::copy(small.begin(), small.end(), x.begin());
    for (std::size_t k = reflectors.size(); k-- > 0;) {
      if (tau[k] == 0.0) continue;
      std::span<double> tail(x.data() + k, m - k);
      const double proj = tau[k] * dot(reflectors[k], tail);
      axpy(-proj, reflectors[k], tail);
    }
    return x;
  }
};

/// Column norms at or below this are rounding noise left by exact linear
/// dependence; Jacobi leaves them alone and the SVD treats them as null.
double negligible_norm(const DenseMatrix& w) {
  return frobenius_norm(w) * static_cast<double>(std::max<std::size_t>(w.rows(), 1)) * DBL_EPSILON;
}

/// One-sided Jacobi on the columns of a square matrix. `w` holds columns as
/// rows and is overwritten with W V; `v` accumulates V (as columns stored in rows).
void one_sided_jacobi(DenseMatrix& w, DenseMatrix& v, std::size_t max_sweeps) {
  const std::size_t n = w.rows();
  const double tol = static_cast<double>(std::max<std::size_t>(n, 1)) * DBL_EPSILON;
  const double floor = negligible_norm(w);
  const double floor2 = floor * floor;
  double residual = 0.0;
  for (std::size_t sweep = 0; sweep < max_sweeps; ++sweep) {
    residual = 0.0;
    bool rotated = false;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        auto wp = w.row(p);
        auto wq = w.row(q);
        const double alpha = dot(wp, wp);
        const double beta = dot(wq, wq);
        const double gamma = dot(wp, wq);
        if (alpha <= floor2 || beta <= floor2) continue;
        const double off = std::abs(gamma) / std::sqrt(alpha * beta);
        residual = std::max(residual, off);
        if (off <= tol) continue;
        rotated = true;
        const double zeta = (beta - alpha) / (2.0 * gamma);
        const double t = std::copysign(1.0, zeta) / (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = c * t;
        for (std::size_t i = 0; i < wp.size(); ++i) {
          const double a = wp[i];
          const double b = wq[i];
          wp[i] = c * a - s * b;
          wq[i] = s * a + c * b;
        }
        auto vp = v.row(p);
        auto vq = v.row(q);
        for (std::size_t i = 0; i < vp.size(); ++i) {
          const double a = vp[i];
          const double b = vq[i];
          vp[i] = c * a - s * b;
          vq[i] = s * a + c * b;
        }
      }
    }
    if (!rotated) return;
  }
  throw ConvergenceError(max_sweeps, residual);
}

/// Leading `rank` singular triplets of a tall matrix given as columns (n x m, m >= n).
Triplets tall_svd(const DenseMatrix& cols, std::size_t rank, std::size_t max_sweeps) {
  const std::size_t n = cols.rows();
  const std::size_t m = cols.cols();
  HouseholderQr qr(cols);
  DenseMatrix w = qr.r_cols;
  DenseMatrix v = DenseMatrix::identity(n);
  one_sided_jacobi(w, v, max_sweeps);

  std::vector<double> sigma(n);
  for (std::size_t k = 0; k < n; ++k) sigma[k] = norm2(w.row(k));
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return sigma[a] > sigma[b]; });

  const double sigma_max = sigma[order[0]];
  const double cutoff = std::max(sigma_max * static_cast<double>(std::max(m, n)) * DBL_EPSILON, negligible_norm(w));

  // Left vectors of R (length n); numerically null directions are completed
  // to an orthonormal set afterwards.
  DenseMatrix small(rank, n);
  Triplets out{DenseMatrix(rank, m), std::vector<double>(rank, 0.0), DenseMatrix(rank, n)};
  std::vector<bool> missing(rank, false);
  for (std::size_t k = 0; k < rank; ++k) {
    const std::size_t src = order[k];
    auto vr = v.row(src);
    std::copy(vr.begin(), vr.end(), out.v_rows.row(k).begin());
    if (sigma[src] > cutoff) {
      out.s[k] = sigma[src];
      auto wr = w.row(src);
      auto dst = small.row(k);
      for (std::size_t i = 0; i < n; ++i) dst[i] = wr[i] / sigma[src];
    } else {
      missing[k] = true;
    }
  }
  std::size_t basis_probe = 0;
  for (std::size_t k = 0; k < rank; ++k) {
    if (!missing[k]) continue;
    // Gram-Schmidt against every filled row; rows still missing are zero.
    for (;; ++basis_probe) {
      if (basis_probe >= n) throw std::logic_error("orthonormal completion failed");
      std::vector<double> e(n, 0.0);
      e[basis_probe] = 1.0;
      if (orthonormalize_against(small, rank, e)) {
        std::copy(e.begin(), e.end(), small.row(k).begin());
        ++basis_probe;
        break;
      }
    }
  }
  for (std::size_t k = 0; k < rank; ++k) {
    auto full = qr.apply_q(small.row(k), m);
    std::copy(full.begin(), full.end(), out.u_rows.row(k).begin());
  }
  return out;
}

/// Leading `rank` singular triplets of any matrix.
Triplets dense_svd(const DenseMatrix& a, std::size_t rank, std::size_t max_sweeps) {
  if (a.rows() >= a.cols()) {
    return tall_svd(a.transposed(), rank, max_sweeps);
  }
  // Wide: decompose the transpose, whose columns are the rows of a.
  Triplets t = tall_svd(a, rank, max_sweeps);
  std::swap(t.u_rows, t.v_rows);
  return t;
}

std::vector<double> gaussian_block(std::mt19937_64& rng, std::size_t count) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> out(count);
  for (double& x : out) x = normal(rng);
  return out;
}

/// Orthonormal rows spanning the rows of `block`; collapsed rows are replaced
/// by fresh Gaussian directions.
void orthonormalize_rows(DenseMatrix& block, std::mt19937_64& rng) {
  for (std::size_t k = 0; k < block.rows(); ++k) {
    auto row = block.row(k);
    while (!orthonormalize_against(block, k, row)) {
      auto fresh = gaussian_block(rng, row.size());
      std::copy(fresh.begin(), fresh.end(), row.begin());
    }
  }
}

/// rows(out) = (a^T applied to rows of q): out[k] = q[k] * a  (q is l x m, result l x n).
DenseMatrix left_apply(const DenseMatrix& q, const DenseMatrix& a) { return multiply(q, a); }

/// out[k] = a * z[k]  (z is l x n, result l x m).
DenseMatrix right_apply(const DenseMatrix& a, const DenseMatrix& z) { return multiply_transposed(z, a); }

Triplets randomized_svd(const DenseMatrix& a, const SvdOptions& options) {
  const std::size_t m = a.rows();
  const std::size_t n = a.cols();
  const std::size_t l = std::min(options.rank + options.oversampling, std::min(m, n));
  std::mt19937_64 rng(options.seed);

  DenseMatrix omega(l, n);
  for (std::size_t k = 0; k < l; ++k) {
    auto g = gaussian_block(rng, n);
    std::copy(g.begin(), g.end(), omega.row(k).begin());
  }
  DenseMatrix y = right_apply(a, omega);  // l x m, rows are A * omega_k
  orthonormalize_rows(y, rng);
  for (std::size_t it = 0; it < options.power_iterations; ++it) {
    DenseMatrix z = left_apply(y, a);  // l x n, rows are A^T q_k
    orthonormalize_rows(z, rng);
    y = right_apply(a, z);
    orthonormalize_rows(y, rng);
  }
  DenseMatrix b = left_apply(y, a);  // l x n, B = Q^T A
  Triplets small = dense_svd(b, options.rank, options.max_sweeps);
  // U = Q * U_B: u_rows[k] = sum_j U_B[j, k] * q_j.
  Triplets out{DenseMatrix(options.rank, m), small.s, small.v_rows};
  for (std::size_t k = 0; k < options.rank; ++k) {
    auto dst = out.u_rows.row(k);
    auto coeffs = small.u_rows.row(k);
    for (std::size_t j = 0; j < l; ++j) axpy(coeffs[j], y.row(j), dst);
  }
  return out;
}

std::vector<bool> zero_rows_of(const DenseMatrix& a) {
  std::vector<bool> out(a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto row = a.row(i);
    out[i] = std::all_of(row.begin(), row.end(), [](double x) { return x == 0.0; });
  }
  return out;
}

}  // namespace

Factorization truncated_svd(const DenseMatrix& matrix, const SvdOptions& options) {
  const std::size_t m = matrix.rows();
  const std::size_t n = matrix.cols();
  if (options.rank == 0 || options.rank > std::min(m, n)) {
    throw std::invalid_argument(fmt::format("rank {} outside [1, {}]", options.rank, std::min(m, n)));
  }
  auto zero_rows = zero_rows_of(matrix);
  if (std::all_of(zero_rows.begin(), zero_rows.end(), [](bool z) { return z; })) {
    throw std::invalid_argument("cannot factorize an all-zero matrix");
  }
  for (double x : matrix.data()) {
    if (!std::isfinite(x)) throw std::invalid_argument("matrix holds a non-finite value");
  }

  // Empty rows are factorized out so that every left vector, including the
  // completion of a null space, vanishes on them.
  std::vector<std::size_t> kept;
  for (std::size_t i = 0; i < m; ++i) {
    if (!zero_rows[i]) kept.push_back(i);
  }
  DenseMatrix compact(kept.size(), n);
  for (std::size_t c = 0; c < kept.size(); ++c) {
    auto src = matrix.row(kept[c]);
    std::copy(src.begin(), src.end(), compact.row(c).begin());
  }
  SvdOptions inner = options;
  inner.rank = std::min(options.rank, kept.size());
  Triplets t = options.method == SvdMethod::jacobi ? dense_svd(compact, inner.rank, inner.max_sweeps)
                                                   : randomized_svd(compact, inner);

  // Sign convention: the largest-magnitude entry of each right vector is positive.
  for (std::size_t k = 0; k < inner.rank; ++k) {
    auto vr = t.v_rows.row(k);
    std::size_t arg = 0;
    for (std::size_t j = 1; j < vr.size(); ++j) {
      if (std::abs(vr[j]) > std::abs(vr[arg])) arg = j;
    }
    if (vr[arg] < 0.0) {
      for (double& x : vr) x = -x;
      for (double& x : t.u_rows.row(k)) x = -x;
    }
  }

  Factorization f;
  f.u = DenseMatrix(m, options.rank);
  f.s.assign(options.rank, 0.0);
  f.v = DenseMatrix(options.rank, n);
  for (std::size_t k = 0; k < inner.rank; ++k) {
    f.s[k] = t.s[k];
    for (std::size_t c = 0; c < kept.size(); ++c) f.u(kept[c], k) = t.u_rows(k, c);
    auto src = t.v_rows.row(k);
    std::copy(src.begin(), src.end(), f.v.row(k).begin());
  }
  // A rank above the number of nonempty rows leaves null directions, which
  // are spanned by the empty rows on the left and any completion on the right.
  std::size_t left_probe = 0, right_probe = 0;
  for (std::size_t k = inner.rank; k < options.rank; ++k) {
    while (!zero_rows[left_probe]) ++left_probe;
    f.u(left_probe++, k) = 1.0;
    for (;; ++right_probe) {
      if (right_probe >= n) throw std::logic_error("orthonormal completion failed");
      std::vector<double> e(n, 0.0);
      e[right_probe] = 1.0;
      if (orthonormalize_against(f.v, k, e)) {
        std::copy(e.begin(), e.end(), f.v.row(k).begin());
        ++right_probe;
        break;
      }
    }
  }
  f.zero_rows = std::move(zero_rows);
  return f;
}

Factorization truncated_svd(const WeightedMatrix& matrix, const SvdOptions& options) {
  return truncated_svd(DenseMatrix::from_csr(matrix.entries), options);
}

DenseMatrix disease_latents(const Factorization& f) {
  DenseMatrix out = f.u;
  for (std::size_t i = 0; i < out.rows(); ++i)
    for (std::size_t k = 0; k < f.s.size(); ++k) out(i, k) *= f.s[k];
  return out;
}

std::vector<double> symptom_latent(const Factorization& f, std::size_t column) {
  if (column >= f.cols()) throw std::out_of_range("symptom column out of range");
  std::vector<double> out(f.rank());
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = f.v(k, column);
  return out;
}

}  // namespace medrec
