#include "adgnn/matrix.hpp"

#include <algorithm>
#include <cmath>

namespace adgnn {

LuFactorization::LuFactorization(Matrix a) : n_(a.rows()), lu_(std::move(a)) {
  if (lu_.rows() != lu_.cols())
    throw std::invalid_argument("LuFactorization: matrix must be square");
  pivots_.resize(static_cast<std::size_t>(n_));
  for (Index k = 0; k < n_; ++k) {
    Index piv = k;
    double best = std::abs(lu_(k, k));
    for (Index i = k + 1; i < n_; ++i) {
      const double v = std::abs(lu_(i, k));
      if (v > best) {
        best = v;
        piv = i;
      }
    }
    if (best == 0.0) throw NumericError("LuFactorization: singular matrix");
    pivots_[static_cast<std::size_t>(k)] = piv;
    if (piv != k) {
      double* rk = lu_.row(k);
      double* rp = lu_.row(piv);
      for (Index j = 0; j < n_; ++j) std::swap(rk[j], rp[j]);
    }
    const double inv = 1.0 / lu_(k, k);
    const double* pivot_row = lu_.row(k);
    parallel_for(n_ - k - 1, [&](Index lo, Index hi) {
      for (Index r = lo; r < hi; ++r) {
        const Index i = k + 1 + r;
        double* row = lu_.row(i);
        const double m = row[k] * inv;
        row[k] = m;
        if (m == 0.0) continue;
        for (Index j = k + 1; j < n_; ++j) row[j] -= m * pivot_row[j];
      }
    });
  }
}

Matrix LuFactorization::solve(const Matrix& rhs) const {
  if (rhs.rows() != n_)
    throw std::invalid_argument("LuFactorization::solve: rhs row count mismatch");
  Matrix x = rhs;
  const Index m = x.cols();
  // Apply the row permutation.
  for (Index k = 0; k < n_; ++k) {
    const Index p = pivots_[static_cast<std::size_t>(k)];
    if (p != k) {
      double* a = x.row(k);
      double* b = x.row(p);
      for (Index j = 0; j < m; ++j) std::swap(a[j], b[j]);
    }
  }
  // Column blocks are independent systems; substitution order per column
  // is fixed, so the result is identical for any thread count.
  const Index block = 16;
  const Index nblocks = (m + block - 1) / block;
  parallel_for(nblocks, [&](Index blo, Index bhi) {
    for (Index b = blo; b < bhi; ++b) {
      const Index j0 = b * block;
      const Index j1 = std::min(m, j0 + block);
      // Forward substitution with unit-diagonal L.
      for (Index i = 1; i < n_; ++i) {
        const double* lrow = lu_.row(i);
        double* xi = x.row(i);
        for (Index k = 0; k < i; ++k) {
          const double l = lrow[k];
          if (l == 0.0) continue;
          const double* xk = x.row(k);
          for (Index j = j0; j < j1; ++j) xi[j] -= l * xk[j];
        }
      }
      // Back substitution with U.
      for (Index i = n_ - 1; i >= 0; --i) {
        const double* urow = lu_.row(i);
        double* xi = x.row(i);
        for (Index k = i + 1; k < n_; ++k) {
          const double u = urow[k];
          if (u == 0.0) continue;
          const double* xk = x.row(k);
          for (Index j = j0; j < j1; ++j) xi[j] -= u * xk[j];
        }
        const double inv = 1.0 / urow[i];
        for (Index j = j0; j < j1; ++j) xi[j] *= inv;
      }
    }
  });
  return x;
}

}  // namespace adgnn
