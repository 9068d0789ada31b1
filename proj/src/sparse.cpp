#include "adgnn/sparse.hpp"

#include <algorithm>
#include <cmath>

namespace adgnn {

SparseOperator SparseOperator::from_triplets(Index rows, Index cols,
                                             std::vector<Triplet> triplets) {
  if (rows < 0 || cols < 0)
    throw std::invalid_argument("SparseOperator: negative shape");
  for (const auto& t : triplets) {
    if (t.row < 0 || t.row >= rows || t.col < 0 || t.col >= cols)
      throw std::invalid_argument("SparseOperator: triplet index out of range");
  }
  std::sort(triplets.begin(), triplets.end(), [](const Triplet& a, const Triplet& b) {
    return a.row != b.row ? a.row < b.row : a.col < b.col;
  });
  SparseOperator op;
  op.rows_ = rows;
  op.cols_ = cols;
  op.row_offsets_.assign(static_cast<std::size_t>(rows) + 1, 0);
  op.col_indices_.reserve(triplets.size());
  op.values_.reserve(triplets.size());
  std::size_t i = 0;
  for (Index r = 0; r < rows; ++r) {
    while (i < triplets.size() && triplets[i].row == r) {
      const Index c = triplets[i].col;
      double v = triplets[i].value;
      ++i;
      while (i < triplets.size() && triplets[i].row == r && triplets[i].col == c) {
        v += triplets[i].value;
        ++i;
      }
      if (v != 0.0) {
        op.col_indices_.push_back(c);
        op.values_.push_back(v);
      }
    }
    op.row_offsets_[static_cast<std::size_t>(r) + 1] =
        static_cast<Index>(op.col_indices_.size());
  }
  return op;
}

SparseOperator SparseOperator::identity(Index n) {
  std::vector<Triplet> t;
  t.reserve(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) t.push_back({i, i, 1.0});
  return from_triplets(n, n, std::move(t));
}

SparseOperator SparseOperator::diagonal(const std::vector<double>& diag) {
  const Index n = static_cast<Index>(diag.size());
  std::vector<Triplet> t;
  t.reserve(diag.size());
  for (Index i = 0; i < n; ++i)
    t.push_back({i, i, diag[static_cast<std::size_t>(i)]});
  return from_triplets(n, n, std::move(t));
}

std::vector<double> SparseOperator::row_sums() const {
  std::vector<double> sums(static_cast<std::size_t>(rows_), 0.0);
  for (Index r = 0; r < rows_; ++r) {
    double s = 0.0;
    for (Index e = row_offsets_[static_cast<std::size_t>(r)];
         e < row_offsets_[static_cast<std::size_t>(r) + 1]; ++e)
      s += values_[static_cast<std::size_t>(e)];
    sums[static_cast<std::size_t>(r)] = s;
  }
  return sums;
}

double SparseOperator::entry(Index i, Index j) const {
  const auto begin = col_indices_.begin() + row_offsets_[static_cast<std::size_t>(i)];
  const auto end = col_indices_.begin() + row_offsets_[static_cast<std::size_t>(i) + 1];
  const auto it = std::lower_bound(begin, end, j);
  if (it == end || *it != j) return 0.0;
  return values_[static_cast<std::size_t>(it - col_indices_.begin())];
}

SparseOperator SparseOperator::scale_rows(const std::vector<double>& factors) const {
  if (static_cast<Index>(factors.size()) != rows_)
    throw std::invalid_argument("scale_rows: factor count mismatch");
  SparseOperator out = *this;
  for (Index r = 0; r < rows_; ++r) {
    const double f = factors[static_cast<std::size_t>(r)];
    for (Index e = row_offsets_[static_cast<std::size_t>(r)];
         e < row_offsets_[static_cast<std::size_t>(r) + 1]; ++e)
      out.values_[static_cast<std::size_t>(e)] *= f;
  }
  return out;
}

SparseOperator sparse_matmul(const SparseOperator& a, const SparseOperator& b) {
  if (a.cols() != b.rows())
    throw std::invalid_argument("sparse_matmul: dimension mismatch");
  std::vector<Triplet> out;
  std::vector<double> acc(static_cast<std::size_t>(b.cols()), 0.0);
  std::vector<Index> mask(static_cast<std::size_t>(b.cols()), -1);
  std::vector<Index> touched;
  for (Index i = 0; i < a.rows(); ++i) {
    touched.clear();
    for (Index ea = a.row_offsets()[static_cast<std::size_t>(i)];
         ea < a.row_offsets()[static_cast<std::size_t>(i) + 1]; ++ea) {
      const Index k = a.col_indices()[static_cast<std::size_t>(ea)];
      const double va = a.values()[static_cast<std::size_t>(ea)];
      for (Index eb = b.row_offsets()[static_cast<std::size_t>(k)];
           eb < b.row_offsets()[static_cast<std::size_t>(k) + 1]; ++eb) {
        const Index j = b.col_indices()[static_cast<std::size_t>(eb)];
        if (mask[static_cast<std::size_t>(j)] != i) {
          mask[static_cast<std::size_t>(j)] = i;
          acc[static_cast<std::size_t>(j)] = 0.0;
          touched.push_back(j);
        }
        acc[static_cast<std::size_t>(j)] += va * b.values()[static_cast<std::size_t>(eb)];
      }
    }
    std::sort(touched.begin(), touched.end());
    for (const Index j : touched)
      out.push_back({i, j, acc[static_cast<std::size_t>(j)]});
  }
  return SparseOperator::from_triplets(a.rows(), b.cols(), std::move(out));
}

Matrix to_dense(const SparseOperator& op) {
  Matrix d(op.rows(), op.cols());
  for (Index r = 0; r < op.rows(); ++r) {
    for (Index e = op.row_offsets()[static_cast<std::size_t>(r)];
         e < op.row_offsets()[static_cast<std::size_t>(r) + 1]; ++e)
      d(r, op.col_indices()[static_cast<std::size_t>(e)]) =
          op.values()[static_cast<std::size_t>(e)];
  }
  return d;
}

}  // namespace adgnn
