#pragma once

#include <vector>

#include "adgnn/common.hpp"
#include "adgnn/matrix.hpp"

namespace adgnn {

struct Triplet {
  Index row;
  Index col;
  double value;
};

// CSR matrix in canonical form: column indices strictly increasing within
// each row, duplicates merged, exact zeros dropped. Values are always
// 64-bit; immutable after construction.
class SparseOperator {
 public:
  SparseOperator() = default;

  static SparseOperator from_triplets(Index rows, Index cols,
                                      std::vector<Triplet> triplets);
  static SparseOperator identity(Index n);
  static SparseOperator diagonal(const std::vector<double>& diag);

  Index rows() const { return rows_; }
  Index cols() const { return cols_; }
  Index nnz() const { return static_cast<Index>(values_.size()); }
  bool square() const { return rows_ == cols_; }

  const std::vector<Index>& row_offsets() const { return row_offsets_; }
  const std::vector<Index>& col_indices() const { return col_indices_; }
  const std::vector<double>& values() const { return values_; }

  std::vector<double> row_sums() const;
  double entry(Index i, Index j) const;  // 0.0 when absent

  // Scales every row by the given factor (returns a new operator).
  SparseOperator scale_rows(const std::vector<double>& factors) const;

 private:
  Index rows_ = 0;
  Index cols_ = 0;
  std::vector<Index> row_offsets_{0};
  std::vector<Index> col_indices_;
  std::vector<double> values_;
};

// out = op * dense. Accumulation runs in CSR order per output row and in
// double regardless of T, so results are bit-identical across runs and
// thread counts.
template <class T>
Mat<T> spmm(const SparseOperator& op, const Mat<T>& dense) {
  if (op.cols() != dense.rows())
    throw std::invalid_argument("spmm: dimension mismatch");
  Mat<T> out(op.rows(), dense.cols());
  const Index m = dense.cols();
  const auto& offsets = op.row_offsets();
  const auto& cols = op.col_indices();
  const auto& vals = op.values();
  parallel_for(op.rows(), [&](Index lo, Index hi) {
    std::vector<double> acc(static_cast<std::size_t>(m));
    for (Index i = lo; i < hi; ++i) {
      std::fill(acc.begin(), acc.end(), 0.0);
      for (Index e = offsets[static_cast<std::size_t>(i)];
           e < offsets[static_cast<std::size_t>(i) + 1]; ++e) {
        const double v = vals[static_cast<std::size_t>(e)];
        const T* src = dense.row(cols[static_cast<std::size_t>(e)]);
        for (Index j = 0; j < m; ++j) acc[static_cast<std::size_t>(j)] += v * static_cast<double>(src[j]);
      }
      T* dst = out.row(i);
      for (Index j = 0; j < m; ++j) dst[j] = static_cast<T>(acc[static_cast<std::size_t>(j)]);
    }
  });
  return out;
}

// Sparse-sparse product in canonical form (SMMP-style row accumulation,
// then a per-row column sort).
SparseOperator sparse_matmul(const SparseOperator& a, const SparseOperator& b);

// Dense copy, used by the dense factorization path and small-scale checks.
Matrix to_dense(const SparseOperator& op);

}  // namespace adgnn
