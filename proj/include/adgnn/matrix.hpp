#pragma once

#include <cmath>
#include <cstring>
#include <span>
#include <stdexcept>
#include <vector>

#include "adgnn/common.hpp"

namespace adgnn {

// Dense row-major matrix. Graph operators and the verification suites use
// Mat<double>; the training pipeline may run on Mat<float>.
template <class T>
class Mat {
 public:
  Mat() = default;
  Mat(Index rows, Index cols)
      : rows_(rows), cols_(cols),
        data_(static_cast<std::size_t>(rows * cols), T(0)) {
    if (rows < 0 || cols < 0) throw std::invalid_argument("Mat: negative shape");
  }

  Index rows() const { return rows_; }
  Index cols() const { return cols_; }
  bool empty() const { return rows_ == 0 || cols_ == 0; }

  T& operator()(Index i, Index j) {
    return data_[static_cast<std::size_t>(i * cols_ + j)];
  }
  T operator()(Index i, Index j) const {
    return data_[static_cast<std::size_t>(i * cols_ + j)];
  }

  T* row(Index i) { return data_.data() + i * cols_; }
  const T* row(Index i) const { return data_.data() + i * cols_; }

  T* data() { return data_.data(); }
  const T* data() const { return data_.data(); }
  std::size_t size() const { return data_.size(); }

  void fill(T v) { std::fill(data_.begin(), data_.end(), v); }
  void set_zero() { fill(T(0)); }

  bool same_shape(const Mat& o) const {
    return rows_ == o.rows_ && cols_ == o.cols_;
  }

  bool all_finite() const {
    for (const T v : data_)
      if (!std::isfinite(static_cast<double>(v))) return false;
    return true;
  }

  template <class U>
  Mat<U> cast() const {
    Mat<U> out(rows_, cols_);
    for (std::size_t i = 0; i < data_.size(); ++i)
      out.data()[i] = static_cast<U>(data_[i]);
    return out;
  }

 private:
  Index rows_ = 0;
  Index cols_ = 0;
  std::vector<T> data_;
};

using Matrix = Mat<double>;

namespace detail {
inline void require(bool ok, const char* msg) {
  if (!ok) throw std::invalid_argument(msg);
}
}  // namespace detail

// out = A * B. Skips zero entries of A, which makes sparse 0/1 feature
// matrices cheap without a separate code path. Row-parallel, and each
// output row accumulates in a fixed k order, so results are bit-identical
// across thread counts.
template <class T>
Mat<T> matmul(const Mat<T>& a, const Mat<T>& b) {
  detail::require(a.cols() == b.rows(), "matmul: inner dimensions differ");
  Mat<T> out(a.rows(), b.cols());
  const Index m = b.cols();
  parallel_for(a.rows(), [&](Index lo, Index hi) {
    for (Index i = lo; i < hi; ++i) {
      T* dst = out.row(i);
      const T* arow = a.row(i);
      for (Index k = 0; k < a.cols(); ++k) {
        const T v = arow[k];
        if (v == T(0)) continue;
        const T* brow = b.row(k);
        for (Index j = 0; j < m; ++j) dst[j] += v * brow[j];
      }
    }
  });
  return out;
}

// out = A^T * B, with A of shape n x k and B of shape n x m.
template <class T>
Mat<T> matmul_tn(const Mat<T>& a, const Mat<T>& b) {
  detail::require(a.rows() == b.rows(), "matmul_tn: row counts differ");
  Mat<T> out(a.cols(), b.cols());
  const Index m = b.cols();
  for (Index n = 0; n < a.rows(); ++n) {
    const T* arow = a.row(n);
    const T* brow = b.row(n);
    for (Index k = 0; k < a.cols(); ++k) {
      const T v = arow[k];
      if (v == T(0)) continue;
      T* dst = out.row(k);
      for (Index j = 0; j < m; ++j) dst[j] += v * brow[j];
    }
  }
  return out;
}

// out = A * B^T, with A of shape n x k and B of shape m x k.
template <class T>
Mat<T> matmul_nt(const Mat<T>& a, const Mat<T>& b) {
  detail::require(a.cols() == b.cols(), "matmul_nt: column counts differ");
  Mat<T> out(a.rows(), b.rows());
  parallel_for(a.rows(), [&](Index lo, Index hi) {
    for (Index i = lo; i < hi; ++i) {
      const T* arow = a.row(i);
      T* dst = out.row(i);
      for (Index j = 0; j < b.rows(); ++j) {
        const T* brow = b.row(j);
        T acc = T(0);
        for (Index k = 0; k < a.cols(); ++k) acc += arow[k] * brow[k];
        dst[j] = acc;
      }
    }
  });
  return out;
}

template <class T>
void add_in_place(Mat<T>& a, const Mat<T>& b) {
  detail::require(a.same_shape(b), "add_in_place: shape mismatch");
  for (std::size_t i = 0; i < a.size(); ++i) a.data()[i] += b.data()[i];
}

// a += s * b
template <class T>
void axpy(Mat<T>& a, T s, const Mat<T>& b) {
  detail::require(a.same_shape(b), "axpy: shape mismatch");
  for (std::size_t i = 0; i < a.size(); ++i) a.data()[i] += s * b.data()[i];
}

template <class T>
void scale_in_place(Mat<T>& a, T s) {
  for (std::size_t i = 0; i < a.size(); ++i) a.data()[i] *= s;
}

template <class T>
double frobenius_norm(const Mat<T>& a) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double v = static_cast<double>(a.data()[i]);
    acc += v * v;
  }
  return std::sqrt(acc);
}

template <class T>
double max_abs_diff(const Mat<T>& a, const Mat<T>& b) {
  detail::require(a.same_shape(b), "max_abs_diff: shape mismatch");
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = std::abs(static_cast<double>(a.data()[i]) -
                              static_cast<double>(b.data()[i]));
    if (d > m) m = d;
  }
  return m;
}

template <class T>
double frobenius_diff(const Mat<T>& a, const Mat<T>& b) {
  detail::require(a.same_shape(b), "frobenius_diff: shape mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = static_cast<double>(a.data()[i]) -
                     static_cast<double>(b.data()[i]);
    acc += d * d;
  }
  return std::sqrt(acc);
}

// LU factorization with partial pivoting, PA = LU, stored packed.
// Used to apply (I - delta*A_hat)^{-1} and the energy-minimizer solves
// without ever materializing an inverse.
class LuFactorization {
 public:
  explicit LuFactorization(Matrix a);

  Index size() const { return n_; }

  // Solves A X = rhs for dense multi-column rhs. Columns are independent,
  // so the column-blocked parallelism is bit-deterministic.
  Matrix solve(const Matrix& rhs) const;

 private:
  Index n_ = 0;
  Matrix lu_;
  std::vector<Index> pivots_;
};

}  // namespace adgnn
